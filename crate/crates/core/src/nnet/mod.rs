//! Sparse feed-forward networks.
//!
//! A [`Network`] is a chain of sparse [`AffineStep`]s with a single
//! activation applied componentwise between steps (never after the last
//! one). Connectivity counts the stored nonzero edge and node weights.

mod activation;
mod json;

pub use activation::{
    verify_sigmoidal, ActivationKind, ActivationSpec, ProbeGrid, SigmoidalConstants, RELU_TAIL_EXPONENT, SigmoidalReport, Table,
};
pub use json::{network_from_json, network_to_json};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("input shape error: expected {expected} inputs, got {got}")]
    InputShape { expected: usize, got: usize },
    #[error("overflow: non-finite value after layer {layer}")]
    Overflow { layer: usize },
    #[error("composition error: {0}")]
    Composition(String),
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("builder error: {0}")]
    Builder(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("format error: {0}")]
    Format(#[from] serde_json::Error),
}

/// One sparse affine map `y = A x + b`.
///
/// Entries are kept sorted by `(row, col)` and zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineStep {
    in_dim: usize,
    out_dim: usize,
    edges: Vec<(usize, usize, f64)>,
    nodes: Vec<(usize, f64)>,
}

impl AffineStep {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        mut edges: Vec<(usize, usize, f64)>,
        mut nodes: Vec<(usize, f64)>,
    ) -> Result<Self, NetError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(NetError::Invalid("affine step dimensions must be positive".into()));
        }
        for &(r, c, v) in &edges {
            if r >= out_dim || c >= in_dim {
                return Err(NetError::Invalid(format!("edge ({r},{c}) outside {out_dim}x{in_dim}")));
            }
            if !v.is_finite() {
                return Err(NetError::Invalid(format!("edge ({r},{c}) has non-finite weight")));
            }
        }
        for &(r, v) in &nodes {
            if r >= out_dim {
                return Err(NetError::Invalid(format!("node weight row {r} outside {out_dim}")));
            }
            if !v.is_finite() {
                return Err(NetError::Invalid(format!("node weight row {r} is non-finite")));
            }
        }
        edges.retain(|e| e.2 != 0.0);
        nodes.retain(|n| n.1 != 0.0);
        edges.sort_by_key(|e| (e.0, e.1));
        nodes.sort_by_key(|n| n.0);
        if edges.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(NetError::Invalid("duplicate edge entry".into()));
        }
        if nodes.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(NetError::Invalid("duplicate node weight".into()));
        }
        Ok(Self { in_dim, out_dim, edges, nodes })
    }

    /// `y = scale * x`, coordinatewise.
    pub fn diagonal(dim: usize, scale: f64) -> Self {
        Self::new(dim, dim, (0..dim).map(|i| (i, i, scale)).collect(), vec![]).expect("valid diagonal")
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn nodes(&self) -> &[(usize, f64)] {
        &self.nodes
    }

    pub fn nonzeros(&self) -> usize {
        self.edges.len() + self.nodes.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.out_dim];
        for &(r, v) in &self.nodes {
            y[r] = v;
        }
        for &(r, c, v) in &self.edges {
            y[r] += v * x[c];
        }
        y
    }

    fn dense_bias(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.out_dim];
        for &(r, v) in &self.nodes {
            b[r] = v;
        }
        b
    }

    /// `self ∘ inner`: the affine map `x ↦ self(inner(x))`.
    ///
    /// Entries that cancel to exactly `0.0` are dropped.
    pub fn compose_after(&self, inner: &AffineStep) -> Result<AffineStep, NetError> {
        if self.in_dim != inner.out_dim {
            return Err(NetError::Composition(format!(
                "cannot fuse {}-input step after {}-output step",
                self.in_dim, inner.out_dim
            )));
        }
        // rows of inner indexed for the sparse product
        let mut inner_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inner.out_dim];
        for &(r, c, v) in &inner.edges {
            inner_rows[r].push((c, v));
        }
        let inner_bias = inner.dense_bias();
        let mut acc = vec![0.0; inner.in_dim];
        let mut touched = vec![false; inner.in_dim];
        let mut edges = Vec::new();
        let mut nodes = Vec::new();
        let mut row_start = 0;
        let outer_bias = self.dense_bias();
        for row in 0..self.out_dim {
            let mut bias = outer_bias[row];
            let mut cols = Vec::new();
            while row_start < self.edges.len() && self.edges[row_start].0 == row {
                let (_, mid, w) = self.edges[row_start];
                bias += w * inner_bias[mid];
                for &(c, v) in &inner_rows[mid] {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += w * v;
                }
                row_start += 1;
            }
            cols.sort_unstable();
            for c in cols {
                if acc[c] != 0.0 {
                    edges.push((row, c, acc[c]));
                }
                acc[c] = 0.0;
                touched[c] = false;
            }
            if bias != 0.0 {
                nodes.push((row, bias));
            }
        }
        AffineStep::new(inner.in_dim, self.out_dim, edges, nodes)
    }
}

/// Layered sparse network `W_L ρ(W_{L-1} ρ(… ρ(W_1 x)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    steps: Vec<AffineStep>,
    activation: ActivationSpec,
}

impl Network {
    pub fn new(input_dim: usize, steps: Vec<AffineStep>, activation: ActivationSpec) -> Result<Self, NetError> {
        if steps.len() < 2 {
            return Err(NetError::Invalid(format!("a network needs at least 2 affine steps, got {}", steps.len())));
        }
        if steps[0].in_dim != input_dim {
            return Err(NetError::Invalid(format!(
                "first step takes {} inputs but the network has input dimension {input_dim}",
                steps[0].in_dim
            )));
        }
        for (l, w) in steps.windows(2).enumerate() {
            if w[1].in_dim != w[0].out_dim {
                return Err(NetError::Invalid(format!(
                    "step {} outputs {} values but step {} takes {}",
                    l,
                    w[0].out_dim,
                    l + 1,
                    w[1].in_dim
                )));
            }
        }
        Ok(Self { input_dim, steps, activation })
    }

    /// Scalar network `x ↦ out * ρ(inner * x + bias)`.
    pub fn single_unit(activation: ActivationSpec, inner: f64, bias: f64, out: f64) -> Result<Self, NetError> {
        let first = AffineStep::new(1, 1, vec![(0, 0, inner)], vec![(0, bias)])?;
        let second = AffineStep::new(1, 1, vec![(0, 0, out)], vec![])?;
        Network::new(1, vec![first, second], activation)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.steps.last().map(|s| s.out_dim).unwrap_or(0)
    }

    /// Number of affine steps `L`.
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[AffineStep] {
        &self.steps
    }

    pub fn activation(&self) -> &ActivationSpec {
        &self.activation
    }

    /// Stored nonzero edge plus node weights.
    pub fn connectivity(&self) -> usize {
        self.steps.iter().map(AffineStep::nonzeros).sum()
    }

    /// Number of hidden units `Σ_{ℓ<L} N_ℓ` plus inputs and outputs.
    pub fn neurons(&self) -> usize {
        self.input_dim + self.steps.iter().map(|s| s.out_dim).sum::<usize>()
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// Every stored weight, step by step, edges before nodes.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps
            .iter()
            .flat_map(|s| s.edges.iter().map(|e| e.2).chain(s.nodes.iter().map(|n| n.1)))
    }

    /// Rebuild with every weight passed through `f`; zeros are dropped.
    pub fn map_weights(&self, mut f: impl FnMut(f64) -> f64) -> Result<Network, NetError> {
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let edges = s.edges.iter().map(|&(r, c, v)| (r, c, f(v))).collect();
                let nodes = s.nodes.iter().map(|&(r, v)| (r, f(v))).collect();
                AffineStep::new(s.in_dim, s.out_dim, edges, nodes)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Network::new(self.input_dim, steps, self.activation.clone())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::InputShape { expected: self.input_dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NetError::Invalid("non-finite input".into()));
        }
        let last = self.steps.len() - 1;
        let mut h = x.to_vec();
        for (l, step) in self.steps.iter().enumerate() {
            h = step.apply(&h);
            if l < last {
                for v in h.iter_mut() {
                    *v = self.activation.eval(*v);
                }
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(NetError::Overflow { layer: l + 1 });
            }
        }
        Ok(h)
    }

    /// Convenience for scalar networks.
    pub fn eval_scalar(&self, x: f64) -> Result<f64, NetError> {
        Ok(self.evaluate(&[x])?[0])
    }

    /// `x ↦ self(scale * x + shift)`, folded into the first step.
    pub fn precompose_affine(&self, scale: f64, shift: f64) -> Result<Network, NetError> {
        let first = &self.steps[0];
        let mut row_sums = vec![0.0; first.out_dim];
        for &(r, _, v) in &first.edges {
            row_sums[r] += v;
        }
        let mut bias = first.dense_bias();
        for (b, s) in bias.iter_mut().zip(&row_sums) {
            *b += s * shift;
        }
        let edges = first.edges.iter().map(|&(r, c, v)| (r, c, v * scale)).collect();
        let nodes = bias.into_iter().enumerate().collect();
        let mut steps = self.steps.clone();
        steps[0] = AffineStep::new(first.in_dim, first.out_dim, edges, nodes)?;
        Network::new(self.input_dim, steps, self.activation.clone())
    }

    /// `x ↦ scale * self(x) + shift`, folded into the last step.
    pub fn postcompose_affine(&self, scale: f64, shift: f64) -> Result<Network, NetError> {
        let last = self.steps.last().expect("depth >= 2");
        let edges = last.edges.iter().map(|&(r, c, v)| (r, c, v * scale)).collect();
        let nodes = last
            .dense_bias()
            .into_iter()
            .map(|b| b * scale + shift)
            .enumerate()
            .collect();
        let mut steps = self.steps.clone();
        let n = steps.len();
        steps[n - 1] = AffineStep::new(last.in_dim, last.out_dim, edges, nodes)?;
        Network::new(self.input_dim, steps, self.activation.clone())
    }
}

/// `x ↦ second(first(x))` without an extra layer.
///
/// The last step of `first` and the first step of `second` are fused into
/// their product, so the depth is `L₁ + L₂ − 1`.
pub fn serial_compose(first: &Network, second: &Network) -> Result<Network, NetError> {
    if !first.activation.same_function(&second.activation) {
        return Err(NetError::Composition(format!(
            "activation mismatch: {} order {} vs {} order {}",
            first.activation.kind.name(),
            first.activation.order,
            second.activation.kind.name(),
            second.activation.order
        )));
    }
    if second.input_dim != first.output_dim() {
        return Err(NetError::Composition(format!(
            "second network takes {} inputs but first produces {}",
            second.input_dim,
            first.output_dim()
        )));
    }
    let l1 = first.steps.len();
    let mut steps: Vec<AffineStep> = first.steps[..l1 - 1].to_vec();
    steps.push(second.steps[0].compose_after(&first.steps[l1 - 1])?);
    steps.extend(second.steps[1..].iter().cloned());
    Network::new(first.input_dim, steps, first.activation.clone())
}

/// `x ↦ Σ coeffs[i] · nets[i](x + shifts[i])`.
///
/// The nets run side by side (block-diagonal hidden steps). Shifts land in
/// the first step as node weights; the coefficients are folded into the
/// shared output step, which therefore adds no layer and no extra weights.
/// Nets with a zero coefficient are dropped.
pub fn parallel_compose(nets: &[Network], coeffs: &[f64], shifts: &[f64]) -> Result<Network, NetError> {
    if nets.is_empty() {
        return Err(NetError::Composition("parallel composition of zero networks".into()));
    }
    if nets.len() != coeffs.len() || nets.len() != shifts.len() {
        return Err(NetError::Composition(format!(
            "{} networks, {} coefficients, {} shifts",
            nets.len(),
            coeffs.len(),
            shifts.len()
        )));
    }
    let head = &nets[0];
    for (i, n) in nets.iter().enumerate() {
        if n.depth() != head.depth() {
            return Err(NetError::Composition(format!(
                "ragged depths: net 0 has {} steps, net {i} has {}",
                head.depth(),
                n.depth()
            )));
        }
        if n.input_dim != head.input_dim || n.output_dim() != head.output_dim() {
            return Err(NetError::Composition(format!("net {i} has mismatched input/output dimensions")));
        }
        if !n.activation.same_function(&head.activation) {
            return Err(NetError::Composition(format!("net {i} uses a different activation")));
        }
    }
    let live: Vec<(Network, f64)> = nets
        .iter()
        .zip(coeffs.iter().zip(shifts))
        .filter(|(_, (c, _))| **c != 0.0)
        .map(|(n, (&c, &s))| Ok((if s != 0.0 { n.precompose_affine(1.0, s)? } else { n.clone() }, c)))
        .collect::<Result<_, NetError>>()?;
    if live.is_empty() {
        return Err(NetError::Composition("all combining coefficients are zero".into()));
    }
    let depth = head.depth();
    let d = head.input_dim;
    let q = head.output_dim();
    let mut steps = Vec::with_capacity(depth);
    for l in 0..depth {
        let last = l == depth - 1;
        let mut edges = Vec::new();
        let mut nodes: Vec<(usize, f64)> = Vec::new();
        let mut out_bias = vec![0.0; q];
        let (mut row_off, mut col_off) = (0, 0);
        for (net, c) in &live {
            let s = &net.steps[l];
            if last {
                for &(r, col, v) in &s.edges {
                    edges.push((r, col_off + col, c * v));
                }
                for &(r, v) in &s.nodes {
                    out_bias[r] += c * v;
                }
            } else {
                let coff = if l == 0 { 0 } else { col_off };
                for &(r, col, v) in &s.edges {
                    edges.push((row_off + r, coff + col, v));
                }
                for &(r, v) in &s.nodes {
                    nodes.push((row_off + r, v));
                }
            }
            row_off += s.out_dim;
            col_off += s.in_dim;
        }
        if last {
            nodes = out_bias.into_iter().enumerate().collect();
            steps.push(AffineStep::new(col_off, q, edges, nodes)?);
        } else {
            let in_dim = if l == 0 { d } else { col_off };
            steps.push(AffineStep::new(in_dim, row_off, edges, nodes)?);
        }
    }
    Network::new(d, steps, head.activation.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relu() -> ActivationSpec {
        ActivationSpec::relu_power(1)
    }

    fn plus() -> Network {
        Network::single_unit(relu(), 1.0, 0.0, 1.0).unwrap()
    }

    fn identity2(act: ActivationSpec) -> Network {
        // x = x_+ - (-x)_+
        let first = AffineStep::new(1, 2, vec![(0, 0, 1.0), (1, 0, -1.0)], vec![]).unwrap();
        let second = AffineStep::new(2, 1, vec![(0, 0, 1.0), (0, 1, -1.0)], vec![]).unwrap();
        Network::new(1, vec![first, second], act).unwrap()
    }

    #[test]
    fn relu_kills_negatives() {
        assert_eq!(plus().eval_scalar(-3.0).unwrap(), 0.0);
        assert_eq!(plus().eval_scalar(2.0).unwrap(), 2.0);
    }

    #[test]
    fn connectivity_of_single_edges() {
        assert_eq!(plus().connectivity(), 2);
        assert_eq!(plus().depth(), 2);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(plus().evaluate(&[1.0, 2.0]), Err(NetError::InputShape { expected: 1, got: 2 })));
        assert!(AffineStep::new(1, 1, vec![(1, 0, 1.0)], vec![]).is_err());
        assert!(AffineStep::new(1, 1, vec![(0, 0, 1.0), (0, 0, 2.0)], vec![]).is_err());
        assert!(AffineStep::new(1, 1, vec![(0, 0, f64::NAN)], vec![]).is_err());
        let s = AffineStep::new(1, 1, vec![(0, 0, 1.0)], vec![]).unwrap();
        assert!(Network::new(1, vec![s], relu()).is_err());
    }

    #[test]
    fn zeros_are_not_stored() {
        let s = AffineStep::new(2, 2, vec![(0, 0, 0.0), (1, 1, 2.0)], vec![(0, 0.0)]).unwrap();
        assert_eq!(s.nonzeros(), 1);
    }

    #[test]
    fn overflow_names_the_layer() {
        let act = ActivationSpec::relu_power(3);
        let n = Network::single_unit(act, 1e120, 0.0, 1.0).unwrap();
        match n.evaluate(&[1e2]) {
            Err(NetError::Overflow { layer }) => assert_eq!(layer, 1),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn serial_compose_depth_and_values() {
        let p = plus();
        let pp = serial_compose(&p, &p).unwrap();
        assert_eq!(pp.depth(), 3);
        let id = identity2(relu());
        let comp = serial_compose(&p, &id).unwrap();
        for i in 0..1000 {
            let x = -5.0 + 10.0 * i as f64 / 999.0;
            assert_eq!(comp.eval_scalar(x).unwrap(), p.eval_scalar(x).unwrap());
        }
    }

    #[test]
    fn fused_junction_matches_dense_product() {
        // 2x2 case against an explicit matrix product
        let a1 = [[1.5, -2.0], [0.0, 0.5]];
        let b1 = [0.25, -1.0];
        let a2 = [[2.0, 4.0], [-1.0, 0.0]];
        let b2 = [0.0, 3.0];
        let s1 = AffineStep::new(
            2,
            2,
            vec![(0, 0, a1[0][0]), (0, 1, a1[0][1]), (1, 1, a1[1][1])],
            vec![(0, b1[0]), (1, b1[1])],
        )
        .unwrap();
        let s2 = AffineStep::new(2, 2, vec![(0, 0, a2[0][0]), (0, 1, a2[0][1]), (1, 0, a2[1][0])], vec![(1, b2[1])])
            .unwrap();
        let fused = s2.compose_after(&s1).unwrap();
        let mut dense = [[0.0; 2]; 2];
        let mut bias = [0.0; 2];
        for i in 0..2 {
            for j in 0..2 {
                for m in 0..2 {
                    dense[i][j] += a2[i][m] * a1[m][j];
                }
            }
            bias[i] = b2[i] + a2[i][0] * b1[0] + a2[i][1] * b1[1];
        }
        let nz = dense.iter().flatten().filter(|v| **v != 0.0).count() + bias.iter().filter(|v| **v != 0.0).count();
        assert_eq!(fused.nonzeros(), nz);
        assert!(fused.nonzeros() <= 2 * 2 + 2);
        for &(r, c, v) in fused.edges() {
            assert_eq!(v, dense[r][c]);
        }
        for &(r, v) in fused.nodes() {
            assert_eq!(v, bias[r]);
        }
    }

    #[test]
    fn fused_junction_drops_cancellations() {
        let s1 = AffineStep::new(1, 2, vec![(0, 0, 1.0), (1, 0, 1.0)], vec![]).unwrap();
        let s2 = AffineStep::new(2, 1, vec![(0, 0, 1.0), (0, 1, -1.0)], vec![]).unwrap();
        assert_eq!(s2.compose_after(&s1).unwrap().nonzeros(), 0);
    }

    #[test]
    fn serial_compose_rejects_activation_mismatch() {
        let other = Network::single_unit(ActivationSpec::relu_power(2), 1.0, 0.0, 1.0).unwrap();
        assert!(matches!(serial_compose(&plus(), &other), Err(NetError::Composition(_))));
    }

    #[test]
    fn parallel_single_net_is_identity_operation() {
        let n = plus();
        let p = parallel_compose(std::slice::from_ref(&n), &[1.0], &[0.0]).unwrap();
        for x in [-2.0, -0.1, 0.0, 0.7, 3.0] {
            assert_eq!(p.eval_scalar(x).unwrap(), n.eval_scalar(x).unwrap());
        }
    }

    #[test]
    fn parallel_recovers_identity_from_two_relus() {
        let pos = plus();
        let neg = plus().precompose_affine(-1.0, 0.0).unwrap();
        let p = parallel_compose(&[pos, neg], &[1.0, -1.0], &[0.0, 0.0]).unwrap();
        for i in 0..=100 {
            let x = -3.0 + 0.06 * i as f64;
            assert!((p.eval_scalar(x).unwrap() - x).abs() < 1e-15);
        }
    }

    #[test]
    fn parallel_builds_the_hat_function() {
        let n = plus();
        let hat = parallel_compose(&[n.clone(), n.clone(), n], &[1.0, -2.0, 1.0], &[0.0, -1.0, -2.0]).unwrap();
        assert_eq!(hat.depth(), 2);
        for i in 0..=400 {
            let x = -1.0 + 4.0 * i as f64 / 400.0;
            let want = if (0.0..=1.0).contains(&x) {
                x
            } else if (1.0..=2.0).contains(&x) {
                2.0 - x
            } else {
                0.0
            };
            assert!((hat.eval_scalar(x).unwrap() - want).abs() < 1e-14, "x={x}");
        }
        // 3 nets * 2 weights + 2 shift node weights
        assert_eq!(hat.connectivity(), 8);
    }

    #[test]
    fn parallel_rejects_ragged_depths() {
        let deep = serial_compose(&plus(), &plus()).unwrap();
        assert!(matches!(
            parallel_compose(&[plus(), deep], &[1.0, 1.0], &[0.0, 0.0]),
            Err(NetError::Composition(_))
        ));
    }

    #[test]
    fn pre_and_post_affine() {
        let n = plus().precompose_affine(2.0, 1.0).unwrap().postcompose_affine(3.0, -1.0).unwrap();
        // 3*(2x+1)_+ - 1
        assert_eq!(n.eval_scalar(1.0).unwrap(), 8.0);
        assert_eq!(n.eval_scalar(-1.0).unwrap(), -1.0);
    }
}

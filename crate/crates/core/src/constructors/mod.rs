//! Explicit networks for truncated powers, monomials, ReLU and B-splines.
//!
//! Everything is assembled from one unit `P(x) = (δ/B)^k ρ(Bx/δ)`, which
//! approximates `x₊^k` on `[-1, 1]` once
//! `δ = (ε / (2^{k+1} C))^{1/k}` and `B = max{1, (C/ε)^{1/a}}`.
//! Every builder returns a [`BuildReport`] carrying the claimed depth and
//! connectivity bound; [`certify`] measures the actual error.

mod certify;
mod vandermonde;

pub use certify::{certify, l2_error, simpson, sup_error, uniform_grid, Certificate, ErrorNorm, SIMPSON_PANELS, SLACK, SUP_GRID_POINTS};
pub use vandermonde::{monomial_level, solve_dense, vandermonde_a, vandermonde_alpha, ALPHA_MAX_ORDER, MONOMIAL_MAX_POWER};

use crate::nnet::{parallel_compose, serial_compose, ActivationKind, ActivationSpec, NetError, Network};
use crate::splines::BSpline;
use vandermonde::binomial;

/// Function a build approximates.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// `x₊^p`
    PlusPower(u32),
    /// `x^p`
    Power(u32),
    /// `x₊`
    Relu,
    /// `x₊^p`, the monomial stage of the B-spline construction
    PlusMonomial(u32),
    /// `N_m`
    BSpline(usize),
    /// `Σ c_i N_{m_i}`
    Expansion(Vec<(f64, usize)>),
}

impl Target {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Target::PlusPower(p) | Target::PlusMonomial(p) => x.max(0.0).powi(*p as i32),
            Target::Power(p) => x.powi(*p as i32),
            Target::Relu => x.max(0.0),
            Target::BSpline(m) => BSpline::new(*m).map(|s| s.eval(x)).unwrap_or(0.0),
            Target::Expansion(terms) => terms
                .iter()
                .map(|&(c, m)| c * BSpline::new(m).map(|s| s.eval(x)).unwrap_or(0.0))
                .sum(),
        }
    }

    pub fn norm(&self) -> ErrorNorm {
        match self {
            Target::BSpline(_) | Target::Expansion(_) => ErrorNorm::L2,
            _ => ErrorNorm::Sup,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Target::PlusPower(p) => format!("x_+^{p}"),
            Target::Power(p) => format!("x^{p}"),
            Target::Relu => "x_+".into(),
            Target::PlusMonomial(p) => format!("x_+^{p}"),
            Target::BSpline(m) => format!("N_{m}"),
            Target::Expansion(t) => t.iter().map(|(c, m)| format!("{c}*N_{m}")).collect::<Vec<_>>().join(" + "),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildReport {
    pub network: Network,
    pub target: Target,
    pub claimed_depth: usize,
    pub claimed_connectivity_bound: usize,
    pub epsilon: f64,
    pub domain_half_width: f64,
    pub internal_constants: Vec<(String, f64)>,
}

impl BuildReport {
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.internal_constants.iter().find(|(n, _)| n == name).map(|p| p.1)
    }

    fn checked(self) -> Result<Self, NetError> {
        if self.network.depth() != self.claimed_depth {
            return Err(NetError::Builder(format!(
                "built depth {} differs from the claimed {}",
                self.network.depth(),
                self.claimed_depth
            )));
        }
        if self.network.connectivity() > self.claimed_connectivity_bound {
            return Err(NetError::Builder(format!(
                "connectivity {} exceeds the claimed bound {}",
                self.network.connectivity(),
                self.claimed_connectivity_bound
            )));
        }
        for (name, v) in &self.internal_constants {
            if !(v.is_finite() && *v > 0.0) {
                return Err(NetError::Precision(format!("internal constant {name} = {v:e} is not finite and positive")));
            }
        }
        Ok(self)
    }
}

fn check_inputs(eps: f64, d: f64) -> Result<(), NetError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(NetError::Builder(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(NetError::Builder(format!("D must be positive and finite, got {d}")));
    }
    Ok(())
}

fn usable(name: &str, v: f64) -> Result<f64, NetError> {
    if v.is_finite() && v >= f64::MIN_POSITIVE {
        Ok(v)
    } else {
        Err(NetError::Precision(format!("{name} = {v:e} is outside the floating-point range; use a larger eps")))
    }
}

/// `(δ, B)` of the unit `P_{1,1,ε}`.
fn unit_constants(spec: &ActivationSpec, eps: f64) -> Result<(f64, f64), NetError> {
    let c = spec.require_constants()?;
    let k = spec.order as f64;
    let delta = usable("delta", (eps / (2f64.powf(k + 1.0) * c.c)).powf(1.0 / k))?;
    let big_b = usable("B", (c.c / eps).powf(1.0 / c.a).max(1.0))?;
    Ok((delta, big_b))
}

/// `P_{1,D,ε}(x) = D^k P_{1,1,D^{-k}ε}(x/D)` as a single unit.
fn unit(spec: &ActivationSpec, eps: f64, d: f64) -> Result<(Network, f64, f64), NetError> {
    let k = spec.order as i32;
    let (delta, big_b) = unit_constants(spec, usable("eps", eps * d.powi(-k))?)?;
    let inner = usable("inner weight", big_b / (d * delta))?;
    let out = usable("output weight", (d * delta / big_b).powi(k))?;
    Ok((Network::single_unit(spec.clone(), inner, 0.0, out)?, delta, big_b))
}

/// `P_{ℓ,1,ε} = P_{1,1,ε/2} ∘ P_{ℓ-1,1,η}` approximating `x₊^{k^ℓ}` on `[-1, 1]`.
fn chain(spec: &ActivationSpec, level: u32, eps: f64, consts: &mut Vec<(String, f64)>) -> Result<Network, NetError> {
    if level == 1 {
        let (net, delta, big_b) = unit(spec, eps, 1.0)?;
        if consts.is_empty() {
            consts.push(("delta".into(), delta));
            consts.push(("B".into(), big_b));
        }
        return Ok(net);
    }
    let c = spec.require_constants()?;
    let k = spec.order as f64;
    let (outer, delta, big_b) = unit(spec, eps / 2.0, 1.0)?;
    let eta = usable(
        "eta",
        eps / (2f64.powf(c.b + 1.0) * c.c) * (big_b / delta).powf(k - 1.0 - c.b).min(1.0),
    )?;
    if consts.is_empty() {
        consts.push(("delta".into(), delta));
        consts.push(("B".into(), big_b));
        consts.push(("eta".into(), eta));
    }
    let inner = chain(spec, level - 1, eta, consts)?;
    serial_compose(&inner, &outer)
}

fn power_exponent(k: u32, level: u32) -> Result<u32, NetError> {
    k.checked_pow(level)
        .filter(|p| *p <= 1024)
        .ok_or_else(|| NetError::Builder(format!("exponent {k}^{level} is too large")))
}

fn plus_power_net(spec: &ActivationSpec, level: u32, eps: f64, d: f64, consts: &mut Vec<(String, f64)>) -> Result<Network, NetError> {
    if level == 0 {
        return Err(NetError::Builder("power level L must be at least 1".into()));
    }
    let p = power_exponent(spec.order, level)?;
    let scale = usable("D^(k^L)", d.powi(p as i32))?;
    let net = chain(spec, level, usable("eps", eps / scale)?, consts)?;
    net.precompose_affine(1.0 / d, 0.0)?.postcompose_affine(scale, 0.0)
}

/// `x₊^{k^L}` on `[-D, D]`; depth `L+1`, connectivity `L+1`.
pub fn build_plus_power(level: u32, eps: f64, d: f64, spec: &ActivationSpec) -> Result<BuildReport, NetError> {
    check_inputs(eps, d)?;
    let mut consts = Vec::new();
    let network = plus_power_net(spec, level, eps, d, &mut consts)?;
    BuildReport {
        network,
        target: Target::PlusPower(power_exponent(spec.order, level)?),
        claimed_depth: level as usize + 1,
        claimed_connectivity_bound: level as usize + 1,
        epsilon: eps,
        domain_half_width: d,
        internal_constants: consts,
    }
    .checked()
}

/// `x₊^k` on `[-D, D]` from a single unit; depth 2, connectivity 2.
pub fn build_p1(eps: f64, d: f64, spec: &ActivationSpec) -> Result<BuildReport, NetError> {
    build_plus_power(1, eps, d, spec)
}

fn power_net(spec: &ActivationSpec, level: u32, eps: f64, d: f64, consts: &mut Vec<(String, f64)>) -> Result<Network, NetError> {
    let plus = plus_power_net(spec, level, eps / 2.0, d, consts)?;
    let mirrored = plus.precompose_affine(-1.0, 0.0)?;
    let sign = if power_exponent(spec.order, level)? % 2 == 0 { 1.0 } else { -1.0 };
    parallel_compose(&[plus, mirrored], &[1.0, sign], &[0.0, 0.0])
}

/// `x^{k^L} = x₊^{k^L} + (-1)^{k^L} (-x)₊^{k^L}` on `[-D, D]`; connectivity `2L+2`.
pub fn build_power(level: u32, eps: f64, d: f64, spec: &ActivationSpec) -> Result<BuildReport, NetError> {
    check_inputs(eps, d)?;
    let mut consts = Vec::new();
    let network = power_net(spec, level, eps, d, &mut consts)?;
    BuildReport {
        network,
        target: Target::Power(power_exponent(spec.order, level)?),
        claimed_depth: level as usize + 1,
        claimed_connectivity_bound: 2 * level as usize + 2,
        epsilon: eps,
        domain_half_width: d,
        internal_constants: consts,
    }
    .checked()
}

/// `Ψ(x) = Σ_μ N^{k-1} α_μ P_{1,D+1,η}(x + μ/N)`.
fn relu_net(spec: &ActivationSpec, eps: f64, d: f64, consts: &mut Vec<(String, f64)>) -> Result<Network, NetError> {
    let k = spec.order;
    let alpha = vandermonde_alpha(k)?;
    let sum_abs: f64 = alpha.iter().map(|a| a.abs()).sum();
    let kf = k as f64;
    let n = (2.0 * kf.powf(kf) * sum_abs / eps).max(kf).ceil();
    let eta = usable("eta", eps / (2.0 * n.powf(kf - 1.0) * sum_abs))?;
    let (p, delta, big_b) = unit(spec, eta, d + 1.0)?;
    consts.extend([
        ("N".to_string(), n),
        ("eta".to_string(), eta),
        ("delta".to_string(), delta),
        ("B".to_string(), big_b),
    ]);
    let coeffs: Vec<f64> = alpha.iter().map(|a| n.powf(kf - 1.0) * a).collect();
    let shifts: Vec<f64> = (0..=k).map(|mu| mu as f64 / n).collect();
    parallel_compose(&vec![p; k as usize + 1], &coeffs, &shifts)
}

/// `x₊` on `[-D, D]`; depth 2, connectivity `3(k+1)`.
pub fn build_relu(eps: f64, d: f64, spec: &ActivationSpec) -> Result<BuildReport, NetError> {
    check_inputs(eps, d)?;
    let mut consts = Vec::new();
    let network = relu_net(spec, eps, d, &mut consts)?;
    BuildReport {
        network,
        target: Target::Relu,
        claimed_depth: 2,
        claimed_connectivity_bound: 3 * (spec.order as usize + 1),
        epsilon: eps,
        domain_half_width: d,
        internal_constants: consts,
    }
    .checked()
}

/// Network, claimed depth and claimed connectivity of a monomial stage.
struct Stage {
    network: Network,
    depth: usize,
    bound: usize,
}

/// `R_{D,m,ε} = D^{m-1} R_{1,m,D^{1-m}ε}(x/D)` with
/// `R_1(x) = Σ_i a_i Φ_{η,k^L+2}(Ψ_{+,η,1}(x) + i)`.
fn plus_monomial_stage(
    spec: &ActivationSpec,
    m: usize,
    level: u32,
    eps: f64,
    d: f64,
    consts: &mut Vec<(String, f64)>,
) -> Result<Stage, NetError> {
    let k = spec.order;
    let n = power_exponent(k, level)? as usize;
    let a = vandermonde_a(m, k, level)?;
    let sum_abs: f64 = a.iter().map(|v| v.abs()).sum();
    let scale = usable("D^(m-1)", d.powi(m as i32 - 1))?;
    let eps1 = eps / scale;
    let nf = n as f64;
    let eta = usable("eta", eps1 / (2.0 * nf * (nf + 2.0).powi(n as i32 - 1) * sum_abs))?;
    consts.push(("k^L".into(), nf));
    consts.push(("monomial_eta".into(), eta));
    let mut inner_consts = Vec::new();
    let psi = relu_net(spec, eta, 1.0, &mut inner_consts)?;
    let r1 = if n == 1 {
        psi.postcompose_affine(a[0], 0.0)?
    } else {
        let phi = power_net(spec, level, eta, nf + 2.0, &mut inner_consts)?;
        let shifts: Vec<f64> = (0..=n).map(|i| i as f64).collect();
        let combo = parallel_compose(&vec![phi; n + 1], &a, &shifts)?;
        serial_compose(&psi, &combo)?
    };
    let network = r1.precompose_affine(1.0 / d, 0.0)?.postcompose_affine(scale, 0.0)?;
    let l = level as usize;
    Ok(Stage { network, depth: l + 2, bound: (n + 1) * (3 * k as usize + 2 * l + 8) })
}

/// Piecewise-linear interpolant of `x₊^p` on `[-D, D]` from shifted ReLU
/// units; only for the exact ReLU (`relu_power`, `k = 1`).
fn linear_interpolant_stage(spec: &ActivationSpec, p: u32, eps: f64, d: f64, consts: &mut Vec<(String, f64)>) -> Result<Stage, NetError> {
    if spec.kind != ActivationKind::ReluPower || spec.order != 1 {
        return Err(NetError::Builder(format!(
            "no level L with m-1 ≤ k^L for {} of order {}",
            spec.kind.name(),
            spec.order
        )));
    }
    let pf = p as f64;
    let curvature = pf * (pf - 1.0) * d.powi(p as i32 - 2);
    let h_max = (8.0 * eps / curvature).sqrt();
    let pieces = (d / h_max).ceil().max(1.0) as usize;
    if pieces > 1_000_000 {
        return Err(NetError::Precision(format!("linear interpolant needs {pieces} pieces; use a larger eps")));
    }
    let h = d / pieces as f64;
    let g = |x: f64| x.max(0.0).powi(p as i32);
    let slopes: Vec<f64> = (0..pieces).map(|i| (g((i + 1) as f64 * h) - g(i as f64 * h)) / h).collect();
    let units: Vec<Network> = (0..pieces)
        .map(|i| Network::single_unit(spec.clone(), 1.0, -(i as f64) * h, 1.0))
        .collect::<Result<_, _>>()?;
    let coeffs: Vec<f64> = (0..pieces).map(|i| if i == 0 { slopes[0] } else { slopes[i] - slopes[i - 1] }).collect();
    let network = parallel_compose(&units, &coeffs, &vec![0.0; pieces])?;
    consts.push(("h".into(), h));
    Ok(Stage { network, depth: 2, bound: 3 * pieces })
}

fn monomial_stage(
    spec: &ActivationSpec,
    m: usize,
    level: Option<u32>,
    eps: f64,
    d: f64,
    consts: &mut Vec<(String, f64)>,
) -> Result<Stage, NetError> {
    if m < 2 {
        return Err(NetError::Builder(format!("monomial degree needs m ≥ 2, got {m}")));
    }
    spec.require_constants()?;
    match level.or_else(|| monomial_level(m, spec.order)) {
        Some(l) => plus_monomial_stage(spec, m, l, eps, d, consts),
        None => linear_interpolant_stage(spec, m as u32 - 1, eps, d, consts),
    }
}

/// `x₊^{m-1}` on `[-D, D]`; depth `L+2`, connectivity `(k^L+1)(3k+2L+8)`
/// with `L` the smallest level such that `m-1 ≤ k^L`.
///
/// For the exact ReLU and `m ≥ 3` no such level exists; the stage is then a
/// piecewise-linear interpolant with depth 2 and its own unit count as bound.
pub fn build_plus_monomial(m: usize, eps: f64, d: f64, spec: &ActivationSpec) -> Result<BuildReport, NetError> {
    check_inputs(eps, d)?;
    let mut consts = Vec::new();
    let stage = monomial_stage(spec, m, None, eps, d, &mut consts)?;
    BuildReport {
        network: stage.network,
        target: Target::PlusMonomial(m as u32 - 1),
        claimed_depth: stage.depth,
        claimed_connectivity_bound: stage.bound,
        epsilon: eps,
        domain_half_width: d,
        internal_constants: consts,
    }
    .checked()
}

/// `b_j = (-1)^j C(m,j) / (m-1)!`.
pub fn bspline_coefficients(m: usize) -> Vec<f64> {
    let fact: f64 = (1..m).map(|v| v as f64).product();
    (0..=m)
        .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(m, j) / fact)
        .collect()
}

fn bspline_net(
    spec: &ActivationSpec,
    m: usize,
    level: Option<u32>,
    eps: f64,
    d: f64,
    consts: &mut Vec<(String, f64)>,
) -> Result<Stage, NetError> {
    let fact: f64 = (1..m).map(|v| v as f64).product();
    let eta = usable("eta", eps * fact / (2f64.powi(m as i32) * (2.0 * d).sqrt()))?;
    consts.push(("bspline_eta".into(), eta));
    let stage = monomial_stage(spec, m, level, eta, d + m as f64, consts)?;
    let b = bspline_coefficients(m);
    let shifts: Vec<f64> = (0..=m).map(|j| -(j as f64)).collect();
    let network = parallel_compose(&vec![stage.network; m + 1], &b, &shifts)?;
    Ok(Stage { network, depth: stage.depth, bound: (m + 1) * stage.bound })
}

/// `N_m` on `[-D, D]` in `L²`; connectivity `(m+1)(k^L+1)(3k+2L+8)`.
pub fn build_bspline_net(m: usize, eps: f64, d: f64, spec: &ActivationSpec) -> Result<BuildReport, NetError> {
    build_bspline_net_at_level(m, eps, d, spec, None)
}

/// [`build_bspline_net`] with an explicit level `L` (any `L` with `m-1 ≤ k^L`).
pub fn build_bspline_net_at_level(
    m: usize,
    eps: f64,
    d: f64,
    spec: &ActivationSpec,
    level: Option<u32>,
) -> Result<BuildReport, NetError> {
    check_inputs(eps, d)?;
    let mut consts = Vec::new();
    let stage = bspline_net(spec, m, level, eps, d, &mut consts)?;
    BuildReport {
        network: stage.network,
        target: Target::BSpline(m),
        claimed_depth: stage.depth,
        claimed_connectivity_bound: stage.bound,
        epsilon: eps,
        domain_half_width: d,
        internal_constants: consts,
    }
    .checked()
}

/// `Σ c_i N_{m_i}` in `L²` on `[-D, D]`.
///
/// Every term is built at budget `eps / max{1, 2Σ|c_i|}` and at a common
/// level so that the depths agree before the parallel combination.
pub fn transfer_expansion(terms: &[(f64, usize)], eps: f64, d: f64, spec: &ActivationSpec) -> Result<BuildReport, NetError> {
    check_inputs(eps, d)?;
    if terms.is_empty() {
        return Err(NetError::Builder("expansion has no terms".into()));
    }
    let sum_abs: f64 = terms.iter().map(|t| t.0.abs()).sum();
    if !(sum_abs > 0.0 && sum_abs.is_finite()) {
        return Err(NetError::Builder("expansion coefficients must be finite and not all zero".into()));
    }
    let eta = eps / (2.0 * sum_abs).max(1.0);
    let level = terms.iter().filter_map(|&(_, m)| monomial_level(m, spec.order)).max();
    let level = if spec.order == 1 { None } else { level };
    let mut consts = vec![("term_eta".to_string(), eta)];
    let mut nets = Vec::with_capacity(terms.len());
    let mut bound = terms.len();
    let mut depth = 0;
    for &(_, m) in terms {
        let mut inner = Vec::new();
        let stage = bspline_net(spec, m, level, eta, d, &mut inner)?;
        bound += stage.bound;
        depth = stage.depth;
        nets.push(stage.network);
    }
    if let Some(l) = level {
        consts.push(("k^L".into(), power_exponent(spec.order, l)? as f64));
    }
    let coeffs: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let network = parallel_compose(&nets, &coeffs, &vec![0.0; terms.len()])?;
    BuildReport {
        network,
        target: Target::Expansion(terms.to_vec()),
        claimed_depth: depth,
        claimed_connectivity_bound: bound,
        epsilon: eps,
        domain_half_width: d,
        internal_constants: consts,
    }
    .checked()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relu(k: u32) -> ActivationSpec {
        ActivationSpec::relu_power(k)
    }

    fn measured(r: &BuildReport) -> f64 {
        certify(r).unwrap().measured_error
    }

    #[test]
    fn p1_examples() {
        let r = build_p1(0.1, 1.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 1e-12);
        assert_eq!(r.network.connectivity(), 2);
        assert_eq!(r.claimed_connectivity_bound, 2);
        let r = build_p1(0.01, 1.0, &relu(2)).unwrap();
        assert!(measured(&r) <= 0.01);
        assert!(build_p1(1.5, 1.0, &relu(2)).is_err());
        let t = crate::nnet::Table::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(build_p1(0.1, 1.0, &ActivationSpec::tabulated(1, t)), Err(NetError::Builder(_))));
    }

    #[test]
    fn plus_power_examples() {
        let r = build_plus_power(1, 0.1, 2.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 1e-10);
        let r = build_plus_power(2, 0.05, 1.0, &relu(2)).unwrap();
        assert_eq!(r.network.depth(), 3);
        assert!(r.network.connectivity() <= 3);
        assert!(measured(&r) <= 0.05);
    }

    #[test]
    fn power_examples() {
        let r = build_power(1, 0.1, 3.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 1e-10);
        let r = build_power(1, 0.02, 1.0, &relu(2)).unwrap();
        assert!(r.network.connectivity() <= 4);
        assert!(measured(&r) <= 0.02);
        let r = build_power(2, 0.05, 1.5, &relu(3)).unwrap();
        assert!(measured(&r) <= 0.05);
    }

    #[test]
    fn relu_examples() {
        let r = build_relu(0.1, 1.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 1e-12);
        let r = build_relu(0.05, 1.0, &relu(2)).unwrap();
        assert!(r.network.connectivity() <= 9);
        assert!(measured(&r) <= 0.05);
        assert!(r.constant("N").unwrap() >= 2.0);
    }

    #[test]
    fn monomial_examples() {
        let r = build_plus_monomial(2, 0.1, 1.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 1e-12);
        let r = build_plus_monomial(3, 0.1, 1.0, &relu(2)).unwrap();
        assert!(r.network.connectivity() <= 48);
        assert_eq!(r.network.depth(), 3);
        assert!(measured(&r) <= 0.1);
        let r = build_plus_monomial(4, 0.01, 2.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 0.01);
    }

    #[test]
    fn bspline_examples() {
        let r = build_bspline_net(2, 0.1, 3.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 1e-10);
        assert!((r.network.eval_scalar(1.0).unwrap() - 1.0).abs() <= 1e-12);
        let r = build_bspline_net(3, 0.05, 4.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 0.05);
        let r = build_bspline_net(3, 0.05, 2.0, &relu(2)).unwrap();
        assert!(r.network.connectivity() <= 4 * 3 * (6 + 2 + 8));
        assert!(measured(&r) <= 0.05);
    }

    #[test]
    fn logistic_activation_builds_meet_their_claims() {
        let spec = ActivationSpec::logistic_power(2);
        for r in [
            build_p1(0.1, 1.0, &spec).unwrap(),
            build_power(1, 0.1, 1.0, &spec).unwrap(),
            build_relu(0.1, 1.0, &spec).unwrap(),
        ] {
            let c = certify(&r).unwrap();
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn expansion_examples() {
        let single = transfer_expansion(&[(1.0, 2)], 0.1, 3.0, &relu(1)).unwrap();
        let direct = build_bspline_net(2, 0.05, 3.0, &relu(1)).unwrap();
        for x in uniform_grid(3.0, 101) {
            let a = single.network.eval_scalar(x).unwrap();
            let b = direct.network.eval_scalar(x).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        let r = transfer_expansion(&[(1.0, 2), (0.5, 3)], 0.1, 4.0, &relu(1)).unwrap();
        assert!(measured(&r) <= 0.1);
        let r = transfer_expansion(&[(1.0, 2), (-0.5, 3), (0.25, 4)], 0.1, 2.0, &relu(2)).unwrap();
        assert!(measured(&r) <= 0.1);
        assert!(transfer_expansion(&[], 0.1, 1.0, &relu(1)).is_err());
        assert!(transfer_expansion(&[(0.0, 2)], 0.1, 1.0, &relu(1)).is_err());
    }
}

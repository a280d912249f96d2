//! Rounding network weights onto the grid `η^m ℤ ∩ [-η^{-k}, η^{-k}]`.
//!
//! A weight `w` becomes `q η^m` with `q = sign(r) ⌈|r| - 1/2⌉`, `r = w/η^m`,
//! so ties go toward zero. Each code fits in
//! `⌈(k+m) log₂(1/η)⌉ + 1` bits, one of them for the sign.

use serde::Serialize;
use thiserror::Error;

use crate::constructors::uniform_grid;
use crate::nnet::{NetError, Network};

pub const MAX_M: u32 = 64;

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition error: weight {weight:e} exceeds the bound η^-k = {bound:e}")]
    Precondition { weight: f64, bound: f64 },
    #[error("search exhausted: no m ≤ {max_m} reaches error ≤ {eta} (best {best:e})")]
    SearchExhausted { max_m: u32, eta: f64, best: f64 },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// `η ∈ (0, 1/2]`; the closed end keeps `η = 1/2` usable for bit accounting.
fn check_eta(eta: f64) -> Result<(), QuantError> {
    if eta > 0.0 && eta <= 0.5 {
        Ok(())
    } else {
        Err(QuantError::Domain(format!("eta must lie in (0, 1/2], got {eta}")))
    }
}

/// `⌈(k+m) log₂(1/η)⌉ + 1`.
pub fn bits_per_weight(eta: f64, k: u32, m: u32) -> Result<u32, QuantError> {
    check_eta(eta)?;
    let raw = (k + m) as f64 * (1.0 / eta).log2();
    // absorb roundoff in log2 of exact powers of two
    let nearest = raw.round();
    let magnitude = if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) { nearest } else { raw.ceil() };
    Ok(magnitude as u32 + 1)
}

/// Grid code of a single weight as an integer-valued float; ties round toward zero.
///
/// Codes can exceed every machine integer type once `m` is large, so they
/// stay in `f64`, where values beyond `2^53` are integers automatically.
pub fn weight_code(w: f64, eta: f64, m: u32) -> f64 {
    let r = w / eta.powi(m as i32);
    let q = (r.abs() - 0.5).ceil().max(0.0);
    if r < 0.0 {
        -q
    } else {
        q
    }
}

/// Round every weight onto `η^m ℤ`; zeros are dropped, so connectivity never grows.
pub fn quantize_weights(net: &Network, eta: f64, k: u32, m: u32) -> Result<Network, QuantError> {
    check_eta(eta)?;
    if k == 0 || m == 0 {
        return Err(QuantError::Domain("k and m must be positive".into()));
    }
    let bound = eta.powi(-(k as i32));
    if let Some(w) = net.weights().find(|w| w.abs() > bound) {
        return Err(QuantError::Precondition { weight: w, bound });
    }
    let step = eta.powi(m as i32);
    let max_code = (bound / step).floor();
    Ok(net.map_weights(|w| weight_code(w, eta, m).clamp(-max_code, max_code) * step)?)
}

/// Smallest `k` with every `|w| ≤ η^{-k}`.
pub fn minimal_k(net: &Network, eta: f64) -> u32 {
    let w = net.max_abs_weight();
    let mut k = 1;
    while eta.powi(-(k as i32)) < w && k < 1024 {
        k += 1;
    }
    k
}

/// Why a weight fails the storability check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unstorable {
    pub weight: f64,
    pub code: f64,
    pub bits: u32,
}

/// Check that every weight is `q η^m` with integer `|q| < 2^{bits-1}`, i.e.
/// fits in sign-magnitude with `bits_per_weight` bits.
pub fn check_storable(net: &Network, eta: f64, k: u32, m: u32) -> Result<Vec<Unstorable>, QuantError> {
    let bits = bits_per_weight(eta, k, m)?;
    let step = eta.powi(m as i32);
    let limit = 2f64.powi(bits as i32 - 1) - 1.0;
    Ok(net
        .weights()
        .filter_map(|w| {
            let code = (w / step).round();
            let on_grid = (w - code * step).abs() <= 4.0 * f64::EPSILON * w.abs().max(step);
            (!on_grid || code.abs() > limit).then_some(Unstorable { weight: w, code, bits })
        })
        .collect())
}

fn grid_points(d: f64, grid: usize, dim: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = uniform_grid(d, grid).collect();
    match dim {
        1 => axis.into_iter().map(|x| vec![x]).collect(),
        _ => {
            let mut pts = vec![vec![]];
            for _ in 0..dim {
                pts = pts
                    .into_iter()
                    .flat_map(|p| axis.iter().map(move |&x| p.iter().copied().chain([x]).collect::<Vec<_>>()))
                    .collect();
            }
            pts
        }
    }
}

/// Sup of `|a - b|` over a tensor grid on `[-D, D]^d`; overflow counts as infinite.
pub fn sup_distance(a: &Network, b: &Network, d: f64, grid: usize) -> Result<f64, QuantError> {
    let mut worst: f64 = 0.0;
    for p in grid_points(d, grid, a.input_dim()) {
        let va = a.evaluate(&p)?;
        let vb = match b.evaluate(&p) {
            Ok(v) => v,
            Err(NetError::Overflow { .. }) => return Ok(f64::INFINITY),
            Err(e) => return Err(e.into()),
        };
        for (x, y) in va.iter().zip(&vb) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

/// Smallest `m ≤ 64` whose quantized net stays within `η` of `net` on the grid.
pub fn find_min_m(net: &Network, eta: f64, k: u32, d: f64, grid: usize) -> Result<u32, QuantError> {
    let mut best = f64::INFINITY;
    for m in 1..=MAX_M {
        let q = quantize_weights(net, eta, k, m)?;
        let err = sup_distance(net, &q, d, grid)?;
        if err <= eta {
            return Ok(m);
        }
        best = best.min(err);
    }
    Err(QuantError::SearchExhausted { max_m: MAX_M, eta, best })
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantReport {
    pub eta: f64,
    pub k: u32,
    pub m: u32,
    pub bits_per_weight: u32,
    pub weights: usize,
    pub total_bits: u64,
    pub measured_error: f64,
    pub unstorable: usize,
}

/// Quantize at a fixed or searched `m` and account for the storage cost.
pub fn quantize_with_report(net: &Network, eta: f64, k: u32, m: Option<u32>, d: f64, grid: usize) -> Result<(Network, QuantReport), QuantError> {
    let m = match m {
        Some(m) => m,
        None => find_min_m(net, eta, k, d, grid)?,
    };
    let q = quantize_weights(net, eta, k, m)?;
    let bits = bits_per_weight(eta, k, m)?;
    let report = QuantReport {
        eta,
        k,
        m,
        bits_per_weight: bits,
        weights: q.connectivity(),
        total_bits: q.connectivity() as u64 * bits as u64,
        measured_error: sup_distance(net, &q, d, grid)?,
        unstorable: check_storable(&q, eta, k, m)?.len(),
    };
    Ok((q, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::ActivationSpec;

    fn relu_net() -> Network {
        Network::single_unit(ActivationSpec::relu_power(1), 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn rounding_examples() {
        let net = Network::single_unit(ActivationSpec::relu_power(1), 0.1234, 0.015, 1.0).unwrap();
        let q = quantize_weights(&net, 0.1, 1, 2).unwrap();
        let w: Vec<f64> = q.weights().collect();
        assert!((w[0] - 0.12).abs() < 1e-15);
        assert!((w[1] - 0.01).abs() < 1e-15, "tie goes toward zero, got {}", w[1]);
        assert_eq!(weight_code(-0.015, 0.1, 2), -1.0);
        assert_eq!(weight_code(0.025, 0.5, 1), 0.0);
    }

    #[test]
    fn relu_net_is_a_fixed_point() {
        for (eta, m) in [(0.1, 1), (0.25, 3), (0.01, 2)] {
            assert_eq!(quantize_weights(&relu_net(), eta, 1, m).unwrap(), relu_net());
        }
        assert_eq!(find_min_m(&relu_net(), 0.1, 1, 1.0, 1000).unwrap(), 1);
    }

    #[test]
    fn bit_counts() {
        assert_eq!(bits_per_weight(0.5, 1, 1).unwrap(), 3);
        assert_eq!(bits_per_weight(0.25, 1, 2).unwrap(), 7);
        assert_eq!(bits_per_weight(0.1, 2, 3).unwrap(), 18);
        assert!(bits_per_weight(0.7, 1, 1).is_err());
    }

    #[test]
    fn precondition_is_enforced() {
        let net = Network::single_unit(ActivationSpec::relu_power(1), 50.0, 0.0, 1.0).unwrap();
        assert!(matches!(quantize_weights(&net, 0.1, 1, 1), Err(QuantError::Precondition { .. })));
        assert_eq!(minimal_k(&net, 0.1), 2);
        assert!(quantize_weights(&net, 0.1, 2, 1).is_ok());
    }

    #[test]
    fn tiny_weights_round_to_zero_and_are_dropped() {
        let net = Network::single_unit(ActivationSpec::relu_power(1), 1.0, 0.001, 1.0).unwrap();
        let q = quantize_weights(&net, 0.1, 1, 1).unwrap();
        assert_eq!(q.connectivity(), 2);
    }

    #[test]
    fn dyadic_boundary_code_needs_an_extra_bit() {
        // |w| = η^{-k} exactly with dyadic η gives |q| = 2^{bits-1}
        let net = Network::single_unit(ActivationSpec::relu_power(1), 2.0, 0.0, 1.0).unwrap();
        let q = quantize_weights(&net, 0.5, 1, 1).unwrap();
        let bad = check_storable(&q, 0.5, 1, 1).unwrap();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].code, 4.0);
        let q = quantize_weights(&net, 0.5, 2, 1).unwrap();
        assert!(check_storable(&q, 0.5, 2, 1).unwrap().is_empty());
    }
}

//! Numerical certificates: sup error on a uniform grid and L² error by
//! composite Simpson quadrature.

use serde::Serialize;

use super::BuildReport;
use crate::nnet::{NetError, Network};

pub const SUP_GRID_POINTS: usize = 10_000;
pub const SIMPSON_PANELS: usize = 2048;
/// Allowed ratio of measured to claimed error.
pub const SLACK: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorNorm {
    Sup,
    L2,
}

/// `points` equally spaced abscissae covering `[-d, d]` including both ends.
pub fn uniform_grid(d: f64, points: usize) -> impl Iterator<Item = f64> {
    let n = points.max(2);
    (0..n).map(move |i| -d + 2.0 * d * i as f64 / (n - 1) as f64)
}

pub fn sup_error(net: &Network, f: impl Fn(f64) -> f64, d: f64, points: usize) -> Result<f64, NetError> {
    let mut worst: f64 = 0.0;
    for x in uniform_grid(d, points) {
        worst = worst.max((net.eval_scalar(x)? - f(x)).abs());
    }
    Ok(worst)
}

/// Composite Simpson rule on `[lo, hi]` with an even number of panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let n = (panels.max(2) + 1) & !1;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

pub fn l2_error(net: &Network, f: impl Fn(f64) -> f64, d: f64, panels: usize) -> Result<f64, NetError> {
    let n = (panels.max(2) + 1) & !1;
    let h = 2.0 * d / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let x = -d + i as f64 * h;
        let e = net.eval_scalar(x)? - f(x);
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * e * e;
    }
    Ok((s * h / 3.0).max(0.0).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub target: String,
    pub norm: ErrorNorm,
    pub claimed_error: f64,
    pub measured_error: f64,
    pub domain_half_width: f64,
    pub depth: usize,
    pub claimed_depth: usize,
    pub connectivity: usize,
    pub claimed_connectivity_bound: usize,
    pub max_abs_weight: f64,
    pub internal_constants: Vec<(String, f64)>,
}

impl Certificate {
    pub fn error_ok(&self) -> bool {
        self.measured_error <= SLACK * self.claimed_error
    }

    pub fn structure_ok(&self) -> bool {
        self.depth == self.claimed_depth && self.connectivity <= self.claimed_connectivity_bound
    }

    pub fn passed(&self) -> bool {
        self.error_ok() && self.structure_ok()
    }
}

/// Measure a report against its target on its declared norm.
pub fn certify(report: &BuildReport) -> Result<Certificate, NetError> {
    let target = &report.target;
    let d = report.domain_half_width;
    let measured = match target.norm() {
        ErrorNorm::Sup => sup_error(&report.network, |x| target.eval(x), d, SUP_GRID_POINTS)?,
        ErrorNorm::L2 => l2_error(&report.network, |x| target.eval(x), d, SIMPSON_PANELS)?,
    };
    Ok(Certificate {
        target: target.describe(),
        norm: target.norm(),
        claimed_error: report.epsilon,
        measured_error: measured,
        domain_half_width: d,
        depth: report.network.depth(),
        claimed_depth: report.claimed_depth,
        connectivity: report.network.connectivity(),
        claimed_connectivity_bound: report.claimed_connectivity_bound,
        max_abs_weight: report.network.max_abs_weight(),
        internal_constants: report.internal_constants.clone(),
    })
}

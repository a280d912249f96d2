//! Activation functions tagged with their sigmoidal order.
//!
//! A function `ρ` is sigmoidal of order `k` when `ρ(x)/x^k → 0` as
//! `x → -∞`, `ρ(x)/x^k → 1` as `x → +∞` and `|ρ(x)| ≤ C(1+|x|)^k`. The
//! strong variant quantifies the tails with constants `(C, a, b)`:
//!
//! ```text
//! |ρ(x)/x^k|     ≤ C|x|^-a   for x < 0
//! |ρ(x)/x^k - 1| ≤ C x^-a    for x ≥ 0
//! |ρ(x)|         ≤ C(1+|x|)^k
//! |ρ'(x)|        ≤ C|x|^b
//! ```
//!
//! Constructors read `(C, a, b)` from the spec, so the constants are
//! declared up front and checked numerically by [`verify_sigmoidal`].

use serde::{Deserialize, Serialize};

use super::NetError;

/// Constants of a strongly sigmoidal activation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidalConstants {
    #[serde(rename = "C")]
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

/// Piecewise-linear activation given by knots, extrapolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub knots: Vec<(f64, f64)>,
}

impl Table {
    pub fn new(mut knots: Vec<(f64, f64)>) -> Result<Self, NetError> {
        if knots.len() < 2 {
            return Err(NetError::Invalid("tabulated activation needs at least two knots".into()));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(NetError::Invalid("tabulated activation has non-finite knots".into()));
        }
        knots.sort_by(|p, q| p.0.total_cmp(&q.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(NetError::Invalid("tabulated activation has repeated abscissae".into()));
        }
        Ok(Self { knots })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|p| p.0.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn slope(&self, i: usize) -> f64 {
        let (x0, y0) = self.knots[i];
        let (x1, y1) = self.knots[i + 1];
        (y1 - y0) / (x1 - x0)
    }

    fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, y0) = self.knots[i];
        y0 + self.slope(i) * (x - x0)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.slope(self.segment(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActivationKind {
    /// `max(0, x)^k`
    ReluPower,
    /// `x^k / (1 + e^-x)`
    LogisticPower,
    Tabulated(Table),
}

impl ActivationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::ReluPower => "relu_power",
            ActivationKind::LogisticPower => "logistic_power",
            ActivationKind::Tabulated(_) => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub order: u32,
    pub constants: Option<SigmoidalConstants>,
}

/// Declared tail exponent `a` of [`ActivationSpec::relu_power`].
pub const RELU_TAIL_EXPONENT: f64 = 64.0;

impl ActivationSpec {
    /// `max(0,x)^k` with `C = k`, `a = 64`, `b = max(k-1, 1)`.
    ///
    /// The tail inequalities hold with zero residual for every `a > 0`. A
    /// large `a` keeps `B = max{1, (C/ε)^{1/a}}` near 1 in the constructors,
    /// so unit weights do not spread over dozens of orders of magnitude;
    /// use [`ActivationSpec::with_constants`] to declare a different one.
    pub fn relu_power(order: u32) -> Self {
        assert!(order >= 1, "sigmoidal order must be positive");
        let k = order as f64;
        Self {
            kind: ActivationKind::ReluPower,
            order,
            constants: Some(SigmoidalConstants { c: k, a: RELU_TAIL_EXPONENT, b: (k - 1.0).max(1.0) }),
        }
    }

    /// `x^k σ(x)` with `C = 1` for `k = 1` and `C = k+1` otherwise,
    /// `a = 1`, `b = max(k-1, 1)`.
    pub fn logistic_power(order: u32) -> Self {
        assert!(order >= 1, "sigmoidal order must be positive");
        let k = order as f64;
        let c = if order == 1 { 1.0 } else { k + 1.0 };
        Self {
            kind: ActivationKind::LogisticPower,
            order,
            constants: Some(SigmoidalConstants { c, a: 1.0, b: (k - 1.0).max(1.0) }),
        }
    }

    pub fn tabulated(order: u32, table: Table) -> Self {
        Self { kind: ActivationKind::Tabulated(table), order, constants: None }
    }

    pub fn with_constants(mut self, constants: SigmoidalConstants) -> Self {
        self.constants = Some(constants);
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.order as i32;
        match &self.kind {
            ActivationKind::ReluPower => {
                if x > 0.0 {
                    x.powi(k)
                } else {
                    0.0
                }
            }
            ActivationKind::LogisticPower => {
                if x >= 0.0 {
                    x.powi(k) / (1.0 + (-x).exp())
                } else {
                    // e^x underflows to 0 before x^k overflows
                    let e = x.exp();
                    if e == 0.0 {
                        0.0
                    } else {
                        x.powi(k) * e / (1.0 + e)
                    }
                }
            }
            ActivationKind::Tabulated(t) => t.eval(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let k = self.order as i32;
        match &self.kind {
            ActivationKind::ReluPower => {
                if x > 0.0 {
                    k as f64 * x.powi(k - 1)
                } else {
                    0.0
                }
            }
            ActivationKind::LogisticPower => {
                let s = logistic(x);
                k as f64 * x.powi(k - 1) * s + x.powi(k) * s * (1.0 - s)
            }
            ActivationKind::Tabulated(t) => t.derivative(x),
        }
    }

    /// Whether two specs describe the same function (constants may differ).
    pub fn same_function(&self, other: &Self) -> bool {
        self.kind == other.kind && self.order == other.order
    }

    pub(crate) fn require_constants(&self) -> Result<SigmoidalConstants, NetError> {
        if let ActivationKind::Tabulated(_) = self.kind {
            return Err(NetError::Builder("tabulated activations cannot be used by constructors".into()));
        }
        let c = self
            .constants
            .ok_or_else(|| NetError::Builder("activation has no declared (C, a, b)".into()))?;
        if !(c.c > 0.0 && c.a > 0.0 && c.b > 0.0) || !(c.c.is_finite() && c.a.is_finite() && c.b.is_finite()) {
            return Err(NetError::Builder(format!("sigmoidal constants must be finite and positive, got {c:?}")));
        }
        Ok(c)
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Symmetric log-spaced probe on `x_min ≤ |x| ≤ x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self { x_min: 1.0, x_max: 1e3, points: 2001 }
    }
}

impl ProbeGrid {
    pub fn magnitudes(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let (lo, hi) = (self.x_min.ln(), self.x_max.ln());
        (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect()
    }
}

/// Largest violation of each strong-sigmoidality inequality on a probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmoidalReport {
    pub negative_tail: f64,
    pub positive_tail: f64,
    pub growth: f64,
    pub derivative: f64,
    /// `|ρ(x)/x^k|` at the most negative probe point.
    pub negative_ratio_at_max: f64,
    /// `|ρ(x)/x^k - 1|` at the most positive probe point.
    pub positive_ratio_at_max: f64,
    pub tolerance: f64,
}

impl SigmoidalReport {
    pub fn max_violation(&self) -> f64 {
        self.negative_tail.max(self.positive_tail).max(self.growth).max(self.derivative)
    }

    pub fn passed(&self) -> bool {
        self.max_violation() <= self.tolerance
    }
}

/// Check the declared `(C, a, b)` against the four inequalities on `probe`.
///
/// Violations are reported as `max(0, lhs - rhs)` so a clean activation
/// reports exact zeros. Specs without constants report infinite violations.
pub fn verify_sigmoidal(spec: &ActivationSpec, probe: &ProbeGrid, tolerance: f64) -> SigmoidalReport {
    let Some(SigmoidalConstants { c, a, b }) = spec.constants else {
        return SigmoidalReport {
            negative_tail: f64::INFINITY,
            positive_tail: f64::INFINITY,
            growth: f64::INFINITY,
            derivative: f64::INFINITY,
            negative_ratio_at_max: f64::NAN,
            positive_ratio_at_max: f64::NAN,
            tolerance,
        };
    };
    let k = spec.order as i32;
    let mut rep = SigmoidalReport {
        negative_tail: 0.0,
        positive_tail: 0.0,
        growth: 0.0,
        derivative: 0.0,
        negative_ratio_at_max: 0.0,
        positive_ratio_at_max: 0.0,
        tolerance,
    };
    let mags = probe.magnitudes();
    for &t in &mags {
        let (xn, xp) = (-t, t);
        let rn = (spec.eval(xn) / xn.powi(k)).abs();
        let rp = (spec.eval(xp) / xp.powi(k) - 1.0).abs();
        rep.negative_tail = rep.negative_tail.max(rn - c * t.powf(-a));
        rep.positive_tail = rep.positive_tail.max(rp - c * t.powf(-a));
        for x in [xn, xp] {
            let bound = c * (1.0 + x.abs()).powi(k);
            rep.growth = rep.growth.max(spec.eval(x).abs() - bound);
            rep.derivative = rep.derivative.max(spec.derivative(x).abs() - c * x.abs().powf(b));
        }
    }
    if let Some(&t) = mags.last() {
        rep.negative_ratio_at_max = (spec.eval(-t) / (-t).powi(k)).abs();
        rep.positive_ratio_at_max = (spec.eval(t) / t.powi(k) - 1.0).abs();
    }
    rep
}

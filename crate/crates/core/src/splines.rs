//! Cardinal B-splines `N_m`, the `m`-fold convolution of `χ_[0,1]`.
//!
//! [`bspline_closed`] evaluates the truncated-power closed form
//! `N_m(x) = 1/(m-1)! Σ_j C(m,j)(-1)^j (x-j)_+^{m-1}`, rewritten per unit
//! interval as a polynomial in the local coordinate and evaluated by Horner.
//! [`ConvolutionOracle`] rebuilds the same functions from the recursion
//! `N_m(x) = ∫_0^1 N_{m-1}(x-t) dt` with composite Simpson quadrature and is
//! only meant as an independent check.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplineError {
    #[error("domain error: B-spline order must be at least {min}, got {got}")]
    Order { min: usize, got: usize },
    #[error("domain error: quadrature needs at least 32 points, got {0}")]
    Quadrature(usize),
}

/// Largest order whose local coefficients stay exact in `i128`.
pub const MAX_ORDER: usize = 20;

/// Local polynomial coefficients of `N_m` on `[i, i+1]`, lowest degree first,
/// in the coordinate `t = x - i`.
pub fn local_coefficients(m: usize) -> Vec<Vec<f64>> {
    assert!((1..=MAX_ORDER).contains(&m));
    let deg = m - 1;
    let fact: f64 = (1..=deg).map(|v| v as f64).product();
    (0..m)
        .map(|i| {
            (0..=deg)
                .map(|p| {
                    // Σ_{j≤i} C(m,j)(-1)^j C(deg,p)(i-j)^{deg-p}
                    let mut acc: i128 = 0;
                    for j in 0..=i {
                        let sign = if j % 2 == 0 { 1 } else { -1 };
                        acc += sign * binom(m, j) * binom(deg, p) * ((i - j) as i128).pow((deg - p) as u32);
                    }
                    acc as f64 / fact
                })
                .collect()
        })
        .collect()
}

fn binom(n: usize, k: usize) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: i128 = 1;
    for i in 0..k {
        r = r * (n - i) as i128 / (i + 1) as i128;
    }
    r
}

/// Piecewise-polynomial evaluator for a fixed order.
#[derive(Debug, Clone)]
pub struct BSpline {
    order: usize,
    pieces: Vec<Vec<f64>>,
}

impl BSpline {
    pub fn new(order: usize) -> Result<Self, SplineError> {
        if order < 1 {
            return Err(SplineError::Order { min: 1, got: order });
        }
        if order > MAX_ORDER {
            return Err(SplineError::Order { min: 1, got: order });
        }
        Ok(Self { order, pieces: local_coefficients(order) })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.order as f64;
        if !(0.0..=m).contains(&x) {
            return 0.0;
        }
        // N_1 is 1 on the closed interval [0, 1]
        let i = (x.floor() as usize).min(self.order - 1);
        let t = x - i as f64;
        self.pieces[i].iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// `N_m(x)` from the closed form; zero outside `[0, m]`.
pub fn bspline_closed(m: usize, x: f64) -> Result<f64, SplineError> {
    Ok(BSpline::new(m)?.eval(x))
}

/// `|Σ_{n=-m..m} N_m(x+n) - 1|`.
///
/// With the closed-endpoint convention for `N_1` the sum double counts at
/// integer `x` when `m = 1`; every other case tiles exactly.
pub fn partition_of_unity_residual(m: usize, x: f64) -> Result<f64, SplineError> {
    let s = BSpline::new(m)?;
    let mi = m as i64;
    let sum: f64 = (-mi..=mi).map(|n| s.eval(x + n as f64)).sum();
    Ok((sum - 1.0).abs())
}

/// Numerical B-splines built from the convolution recursion.
///
/// For every order `k ≤ max_order` the oracle tabulates `N_k` on each unit
/// interval at spacing `1/quad_points`. Level `k` integrates level `k-1`
/// over `[x-1, x]` split at the integer breakpoint, with composite Simpson
/// on each piece; off-lattice integrand values come from Lagrange
/// interpolation inside the piece's unit interval, where `N_{k-1}` is a
/// polynomial of degree `k-2`.
#[derive(Debug, Clone)]
pub struct ConvolutionOracle {
    quad_points: usize,
    // tables[k-1][u][j] = N_k(u + j/quad_points)
    tables: Vec<Vec<Vec<f64>>>,
}

impl ConvolutionOracle {
    pub fn new(max_order: usize, quad_points: usize) -> Result<Self, SplineError> {
        if max_order < 1 {
            return Err(SplineError::Order { min: 1, got: max_order });
        }
        if quad_points < 32 {
            return Err(SplineError::Quadrature(quad_points));
        }
        let q = quad_points + quad_points % 2;
        let mut oracle = Self { quad_points: q, tables: vec![vec![vec![1.0; q + 1]]] };
        for k in 2..=max_order {
            let table: Vec<Vec<f64>> = (0..k)
                .map(|u| (0..=q).map(|j| oracle.integrate_previous(k, u as f64 + j as f64 / q as f64)).collect())
                .collect();
            oracle.tables.push(table);
        }
        Ok(oracle)
    }

    pub fn max_order(&self) -> usize {
        self.tables.len()
    }

    /// `N_k(x)` evaluated by one more level of quadrature over the table of `N_{k-1}`.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        assert!(k >= 1 && k <= self.max_order());
        if k == 1 {
            return if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
        }
        self.integrate_previous(k, x)
    }

    fn integrate_previous(&self, k: usize, x: f64) -> f64 {
        let (a, b) = (x - 1.0, x);
        let c = b.floor();
        let mut total = 0.0;
        for (lo, hi) in [(a, c.max(a)), (c.max(a), b)] {
            if hi - lo <= 0.0 {
                continue;
            }
            let u = ((lo + hi) * 0.5).floor();
            total += self.simpson_on_piece(k - 1, u, lo, hi);
        }
        total
    }

    fn simpson_on_piece(&self, level: usize, unit: f64, lo: f64, hi: f64) -> f64 {
        if unit < 0.0 || unit >= level as f64 {
            return 0.0;
        }
        let table = &self.tables[level - 1][unit as usize];
        let q = self.quad_points;
        let mut panels = ((hi - lo) * q as f64).ceil() as usize;
        panels = panels.max(2);
        panels += panels % 2;
        let h = (hi - lo) / panels as f64;
        let mut s = 0.0;
        for i in 0..=panels {
            let t = lo + i as f64 * h - unit;
            let w = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * lagrange_on_table(table, q, t, level + 2);
        }
        s * h / 3.0
    }
}

/// Interpolate the tabulated polynomial at local coordinate `t ∈ [0,1]`
/// using `nodes` consecutive table points nearest to `t`.
fn lagrange_on_table(table: &[f64], q: usize, t: f64, nodes: usize) -> f64 {
    let nodes = nodes.min(q + 1);
    let pos = t * q as f64;
    let centre = pos.round() as i64;
    let start = (centre - (nodes as i64) / 2).clamp(0, (q + 1 - nodes) as i64) as usize;
    let mut sum = 0.0;
    for i in start..start + nodes {
        let mut w = 1.0;
        for j in start..start + nodes {
            if j != i {
                w *= (pos - j as f64) / (i as f64 - j as f64);
            }
        }
        sum += w * table[i];
    }
    sum
}

/// Single-shot oracle evaluation; prefer [`ConvolutionOracle`] for many points.
pub fn bspline_convolve_oracle(m: usize, x: f64, quad_points: usize) -> Result<f64, SplineError> {
    if m < 2 {
        return Err(SplineError::Order { min: 2, got: m });
    }
    Ok(ConvolutionOracle::new(m, quad_points)?.eval(m, x))
}


#[cfg(test)]
mod oracle_agreement {
    use super::*;

    #[test]
    fn oracle_matches_closed_form_up_to_order_six() {
        let oracle = ConvolutionOracle::new(6, 256).unwrap();
        let mut worst: f64 = 0.0;
        for m in 2..=6 {
            let s = BSpline::new(m).unwrap();
            for i in 0..=1000 {
                let x = -0.5 + (m as f64 + 1.0) * i as f64 / 1000.0;
                worst = worst.max((oracle.eval(m, x) - s.eval(x)).abs());
            }
        }
        assert!(worst <= 1e-8, "worst = {worst:e}");
    }
}

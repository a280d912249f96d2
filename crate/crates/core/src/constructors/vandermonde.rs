//! Coefficients that recombine shifted powers into lower-degree monomials.
//!
//! Both systems have the form `Σ_i c_i i^{n-v} = r_v` for `v = 0..=n`, so
//! that `Σ_i c_i (x+i)^n = Σ_v C(n,v) r_v x^v`.

use crate::nnet::NetError;

/// Largest `k` accepted by [`vandermonde_alpha`].
pub const ALPHA_MAX_ORDER: u32 = 12;
/// Largest power `k^L` accepted by [`vandermonde_a`].
pub const MONOMIAL_MAX_POWER: u64 = 16;

/// Solve `A x = b` by Gaussian elimination with partial pivoting and one
/// step of iterative refinement.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, NetError> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(NetError::Invalid("solve_dense needs a square system".into()));
    }
    let x = eliminate(a, b)?;
    let residual: Vec<f64> = (0..n)
        .map(|i| b[i] - a[i].iter().zip(&x).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    let dx = eliminate(a, &residual)?;
    Ok(x.iter().zip(&dx).map(|(p, q)| p + q).collect())
}

fn eliminate(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, NetError> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &v)| r.iter().copied().chain([v]).collect()).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty range");
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return Err(NetError::Conditioning(format!("singular pivot in column {col}")));
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Ok(x)
}

fn shifted_power_system(n: usize, rhs_index: usize, rhs: f64) -> Result<Vec<f64>, NetError> {
    // row v: Σ_i c_i i^{n-v}; 0^0 = 1
    let a: Vec<Vec<f64>> = (0..=n)
        .map(|v| (0..=n).map(|i| (i as f64).powi((n - v) as i32)).collect())
        .collect();
    let mut b = vec![0.0; n + 1];
    b[rhs_index] = rhs;
    solve_dense(&a, &b)
}

/// `α_0..α_k` with `Σ_μ α_μ (x+μ)^k = x`.
pub fn vandermonde_alpha(k: u32) -> Result<Vec<f64>, NetError> {
    if k == 0 {
        return Err(NetError::Invalid("order must be at least 1".into()));
    }
    if k > ALPHA_MAX_ORDER {
        return Err(NetError::Conditioning(format!("order {k} exceeds the guard {ALPHA_MAX_ORDER}")));
    }
    shifted_power_system(k as usize, 1, 1.0 / k as f64)
}

/// Smallest `L ≥ 0` with `m - 1 ≤ k^L`; `None` when `k = 1` and `m > 2`.
pub fn monomial_level(m: usize, k: u32) -> Option<u32> {
    if m < 2 {
        return None;
    }
    let target = (m - 1) as u64;
    if k == 1 {
        return (target == 1).then_some(0);
    }
    let mut level = 0;
    let mut p: u64 = 1;
    while p < target {
        p *= k as u64;
        level += 1;
    }
    Some(level)
}

/// `a_0..a_{k^L}` with `Σ_i a_i (x+i)^{k^L} = x^{m-1}`.
pub fn vandermonde_a(m: usize, k: u32, level: u32) -> Result<Vec<f64>, NetError> {
    if m < 2 {
        return Err(NetError::Invalid(format!("monomial degree needs m ≥ 2, got {m}")));
    }
    let n = (k as u64).checked_pow(level).unwrap_or(u64::MAX);
    if n > MONOMIAL_MAX_POWER {
        return Err(NetError::Conditioning(format!("power k^L = {n} exceeds the guard {MONOMIAL_MAX_POWER}")));
    }
    let n = n as usize;
    if m - 1 > n {
        return Err(NetError::Invalid(format!("degree {} exceeds k^L = {n}", m - 1)));
    }
    shifted_power_system(n, m - 1, 1.0 / binomial(n, m - 1))
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn exact_solve(n: usize, rhs_index: usize, rhs: BigRational) -> Vec<BigRational> {
        let zero = BigRational::from_integer(BigInt::from(0));
        let mut m: Vec<Vec<BigRational>> = (0..=n)
            .map(|v| {
                let mut row: Vec<BigRational> = (0..=n)
                    .map(|i| BigRational::from_integer(BigInt::from(i).pow((n - v) as u32)))
                    .collect();
                row.push(if v == rhs_index { rhs.clone() } else { zero.clone() });
                row
            })
            .collect();
        let size = n + 1;
        for col in 0..size {
            let piv = (col..size).find(|&r| m[r][col] != zero).unwrap();
            m.swap(col, piv);
            for r in 0..size {
                if r != col && m[r][col] != zero {
                    let f = &m[r][col] / &m[col][col];
                    for c in col..=size {
                        let t = &f * &m[col][c];
                        m[r][c] -= t;
                    }
                }
            }
        }
        (0..size).map(|r| &m[r][size] / &m[r][r]).collect()
    }

    fn to_f64(q: &BigRational) -> f64 {
        let n: f64 = q.numer().to_string().parse().unwrap();
        let d: f64 = q.denom().to_string().parse().unwrap();
        n / d
    }

    #[test]
    fn alpha_small_cases() {
        assert_eq!(vandermonde_alpha(1).unwrap(), vec![1.0, 0.0]);
        let a = vandermonde_alpha(2).unwrap();
        let want = [-0.75, 1.0, -0.25];
        for (x, w) in a.iter().zip(want) {
            assert!((x - w).abs() < 1e-14);
        }
        let exact = exact_solve(2, 1, BigRational::new(BigInt::from(1), BigInt::from(2)));
        for (x, q) in a.iter().zip(&exact) {
            assert!((x - to_f64(q)).abs() < 1e-14);
        }
    }

    #[test]
    fn alpha_reproduces_identity() {
        for k in 1..=ALPHA_MAX_ORDER {
            let a = vandermonde_alpha(k).unwrap();
            for x in [-1.0, 0.3, 2.0] {
                let s: f64 = a.iter().enumerate().map(|(mu, c)| c * (x + mu as f64).powi(k as i32)).sum();
                let scale: f64 = a.iter().enumerate().map(|(mu, c)| (c * (x + mu as f64).powi(k as i32)).abs()).sum();
                assert!((s - x).abs() <= 1e-10 * scale.max(1.0), "k={k} x={x} residual {}", (s - x).abs());
            }
        }
        assert!(matches!(vandermonde_alpha(13), Err(NetError::Conditioning(_))));
    }

    #[test]
    fn alpha_matches_exact_fractions() {
        for k in 1..=8u32 {
            let exact = exact_solve(k as usize, 1, BigRational::new(BigInt::from(1), BigInt::from(k)));
            let a = vandermonde_alpha(k).unwrap();
            for (x, q) in a.iter().zip(&exact) {
                let w = to_f64(q);
                assert!((x - w).abs() <= 1e-9 * w.abs().max(1.0), "k={k}");
            }
        }
    }

    #[test]
    fn levels() {
        assert_eq!(monomial_level(2, 1), Some(0));
        assert_eq!(monomial_level(3, 1), None);
        assert_eq!(monomial_level(2, 2), Some(0));
        assert_eq!(monomial_level(3, 2), Some(1));
        assert_eq!(monomial_level(4, 2), Some(2));
        assert_eq!(monomial_level(5, 2), Some(2));
        assert_eq!(monomial_level(4, 3), Some(1));
        assert_eq!(monomial_level(5, 3), Some(2));
    }

    #[test]
    fn monomial_coefficients() {
        assert_eq!(vandermonde_a(2, 1, 0).unwrap(), vec![1.0, 0.0]);
        let a = vandermonde_a(3, 2, 1).unwrap();
        let exact = exact_solve(2, 2, BigRational::from_integer(BigInt::from(1)));
        for (x, q) in a.iter().zip(&exact) {
            assert!((x - to_f64(q)).abs() < 1e-12);
        }
        for x in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            let s: f64 = a.iter().enumerate().map(|(i, c)| c * (x + i as f64).powi(2)).sum();
            assert!((s - x * x).abs() <= 1e-10);
        }
        let a = vandermonde_a(4, 2, 2).unwrap();
        assert_eq!(a.len(), 5);
        for x in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            let s: f64 = a.iter().enumerate().map(|(i, c)| c * (x + i as f64).powi(4)).sum();
            assert!((s - x.powi(3)).abs() <= 1e-8);
        }
        assert!(matches!(vandermonde_a(4, 5, 2), Err(NetError::Conditioning(_))));
    }

    #[test]
    fn monomial_identity_up_to_guard() {
        for (k, level) in [(2u32, 4u32), (4, 2), (3, 2), (16, 1)] {
            let n = k.pow(level) as usize;
            for m in 2..=n + 1 {
                let a = vandermonde_a(m, k, level).unwrap();
                for x in [-1.0, 0.0, 0.5, 1.0, 2.0] {
                    let terms: Vec<f64> = a.iter().enumerate().map(|(i, c)| c * (x + i as f64).powi(n as i32)).collect();
                    let s: f64 = terms.iter().sum();
                    let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
                    let want = x.powi(m as i32 - 1);
                    assert!((s - want).abs() <= 1e-8 * scale, "k={k} L={level} m={m} x={x}");
                }
            }
        }
    }
}

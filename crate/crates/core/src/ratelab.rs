//! Error measurement, log-log rate fits, the Hamming covering oracle and
//! code-length experiments.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cartoon::{make_hypercube, rasterize, unit_vertex, vertex_function, CartoonError, Raster, StarFunction};
use crate::constructors::{build_bspline_net, certify, l2_error, sup_error};
use crate::nnet::{ActivationSpec, NetError, Network};
use crate::quantizer::{minimal_k, quantize_with_report, QuantError};
use crate::wedgelet::{decode, encode, encode_on, render, Dictionary, DictionaryParams, FitStats, WedgeCode, WedgeError};

#[derive(Debug, Error)]
pub enum RateError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution mismatch: {0} vs {1}")]
    Resolution(usize, usize),
    #[error("instance too large: {0}")]
    Size(String),
    #[error("unreachable: best error {best:e} exceeds {target:e}")]
    Unreachable { target: f64, best: f64 },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error(transparent)]
    Wedge(#[from] WedgeError),
    #[error(transparent)]
    Cartoon(#[from] CartoonError),
}

/// How an error is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    /// Max over `points` equispaced abscissae of `[-d, d]`.
    SupGrid { half_width: f64, points: usize },
    /// Composite Simpson on `[-d, d]`.
    L2Quad { half_width: f64, panels: usize },
    /// `L²([0,1]²)` of piecewise-constant pixel arrays.
    L2Pixels,
}

pub enum Candidate<'a> {
    Net(&'a Network),
    Array(&'a Raster),
}

pub enum Reference<'a> {
    Function(&'a dyn Fn(f64) -> f64),
    Array(&'a Raster),
}

/// `L²` distance of two pixel arrays of equal resolution.
pub fn l2_pixels(a: &Raster, b: &Raster) -> Result<f64, RateError> {
    if a.n != b.n {
        return Err(RateError::Resolution(a.n, b.n));
    }
    Ok(a.sub(b).norm())
}

pub fn measure_error(candidate: Candidate, reference: Reference, norm: Norm) -> Result<f64, RateError> {
    match (candidate, reference, norm) {
        (Candidate::Net(net), Reference::Function(f), Norm::SupGrid { half_width, points }) => {
            Ok(sup_error(net, f, half_width, points)?)
        }
        (Candidate::Net(net), Reference::Function(f), Norm::L2Quad { half_width, panels }) => {
            Ok(l2_error(net, f, half_width, panels)?)
        }
        (Candidate::Array(a), Reference::Array(b), Norm::L2Pixels) => l2_pixels(a, b),
        _ => Err(RateError::Domain("candidate, reference and norm do not match".into())),
    }
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// `R² = 1` when `y` is constant (nothing left to explain).
pub fn affine_fit(xs: &[f64], ys: &[f64]) -> Result<AffineFit, RateError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(RateError::Domain("need at least two paired samples".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(RateError::Domain("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sst: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if sst == 0.0 { 1.0 } else { 1.0 - sse / sst };
    Ok(AffineFit { slope, intercept, r_squared })
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const BOOTSTRAP_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub samples: Vec<(f64, f64)>,
    pub fitted_slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 2.5% and 97.5% bootstrap percentiles of the slope.
    pub slope_interval: (f64, f64),
}

/// OLS on `(ln size, ln error)`; errors scale like `size^slope`.
pub fn fit_rate(samples: &[(f64, f64)]) -> Result<RateReport, RateError> {
    fit_rate_seeded(samples, BOOTSTRAP_SEED)
}

pub fn fit_rate_seeded(samples: &[(f64, f64)], seed: u64) -> Result<RateReport, RateError> {
    if samples.len() < 3 {
        return Err(RateError::Domain(format!("need at least 3 samples, got {}", samples.len())));
    }
    if let Some(&(s, e)) = samples.iter().find(|(s, e)| !(*e > 0.0) || !(*s > 0.0)) {
        return Err(RateError::Domain(format!("sizes and errors must be positive, got ({s}, {e})")));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(RateError::Domain("sizes must be strictly increasing".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let fit = affine_fit(&xs, &ys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    while slopes.len() < BOOTSTRAP_RESAMPLES {
        let idx: Vec<usize> = (0..xs.len()).map(|_| rng.gen_range(0..xs.len())).collect();
        let bx: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
        let by: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
        if let Ok(f) = affine_fit(&bx, &by) {
            slopes.push(f.slope);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let pick = |q: f64| slopes[((q * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    Ok(RateReport {
        samples: samples.to_vec(),
        fitted_slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        slope_interval: (pick(0.025), pick(0.975)),
    })
}

/// Average over all `2^m` words of the distance to the nearest codeword.
fn average_distortion(m: u32, codebook: &[u32]) -> f64 {
    let total: u64 = (0..1u32 << m).map(|w| codebook.iter().map(|c| (w ^ c).count_ones()).min().unwrap_or(m) as u64).sum();
    total as f64 / (1u64 << m) as f64
}

pub const EXACT_MAX_M: u32 = 4;
pub const EXACT_MAX_R: u32 = 3;
pub const GREEDY_MAX_M: u32 = 24;

/// Minimum average Hamming distortion over all `binom(2^m, 2^R)` codebooks.
pub fn covering_distortion_exact(m: u32, r: u32) -> Result<f64, RateError> {
    if m > EXACT_MAX_M || r > EXACT_MAX_R {
        return Err(RateError::Size(format!("exhaustive search needs m ≤ {EXACT_MAX_M}, R ≤ {EXACT_MAX_R}; use the greedy search")));
    }
    if r > m {
        return Err(RateError::Domain(format!("2^R = {} exceeds 2^m = {}", 1 << r, 1 << m)));
    }
    let words = 1u32 << m;
    let size = 1usize << r;
    let mut best = f64::INFINITY;
    let mut pick: Vec<u32> = (0..size as u32).collect();
    loop {
        best = best.min(average_distortion(m, &pick));
        // next combination in lexicographic order
        let Some(i) = (0..size).rev().find(|&i| pick[i] < words - (size - i) as u32) else { break };
        pick[i] += 1;
        for k in i + 1..size {
            pick[k] = pick[k - 1] + 1;
        }
    }
    Ok(best)
}

/// Nearest-codeword cells followed by bitwise-majority updates until the
/// distortion stops falling. Never increases the distortion.
fn lloyd(m: u32, codebook: &mut [u32]) -> f64 {
    let words = 1u32 << m;
    let mut current = average_distortion(m, codebook);
    loop {
        let mut counts = vec![vec![0u32; m as usize]; codebook.len()];
        let mut sizes = vec![0u32; codebook.len()];
        for w in 0..words {
            let (k, _) = codebook.iter().enumerate().map(|(k, c)| (k, (w ^ c).count_ones())).min_by_key(|&(_, d)| d).expect("nonempty codebook");
            sizes[k] += 1;
            for (b, cnt) in counts[k].iter_mut().enumerate() {
                *cnt += w >> b & 1;
            }
        }
        let updated: Vec<u32> = codebook
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if sizes[k] == 0 {
                    return c;
                }
                (0..m).fold(0u32, |acc, b| {
                    let ones = counts[k][b as usize];
                    let bit = match (2 * ones).cmp(&sizes[k]) {
                        std::cmp::Ordering::Greater => 1,
                        std::cmp::Ordering::Less => 0,
                        std::cmp::Ordering::Equal => c >> b & 1,
                    };
                    acc | bit << b
                })
            })
            .collect();
        let next = average_distortion(m, &updated);
        if next < current {
            codebook.copy_from_slice(&updated);
            current = next;
        } else {
            return current;
        }
    }
}

/// Try replacing each codeword by each word; only for small cubes.
fn swap_refine(m: u32, codebook: &mut [u32], mut current: f64) -> f64 {
    if m > 8 {
        return current;
    }
    let mut improved = true;
    while improved {
        improved = false;
        for k in 0..codebook.len() {
            for w in 0..1u32 << m {
                if codebook.contains(&w) {
                    continue;
                }
                let old = codebook[k];
                codebook[k] = w;
                let d = average_distortion(m, codebook);
                if d < current {
                    current = d;
                    improved = true;
                } else {
                    codebook[k] = old;
                }
            }
        }
    }
    current
}

/// Best-of-restarts upper bound on the covering distortion.
///
/// Codebooks are grown one rate at a time: the best codebook at rate `r-1`
/// plus `2^{r-1}` random words seeds every restart at rate `r`. The chain
/// for `R` extends the chain for `R-1`, so the result never increases in `R`.
pub fn covering_distortion_greedy(m: u32, r: u32, restarts: usize, seed: u64) -> Result<f64, RateError> {
    if m == 0 || m > GREEDY_MAX_M {
        return Err(RateError::Size(format!("greedy search needs 1 ≤ m ≤ {GREEDY_MAX_M}, got {m}")));
    }
    if r > m {
        return Err(RateError::Domain(format!("2^R = {} exceeds 2^m = {}", 1u64 << r, 1u64 << m)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_book = vec![rng.gen_range(0..1u32 << m)];
    let mut best = lloyd(m, &mut best_book);
    best = swap_refine(m, &mut best_book, best);
    for level in 1..=r {
        if level == m {
            return Ok(0.0);
        }
        let mut level_best: Option<(f64, Vec<u32>)> = None;
        for _ in 0..restarts.max(1) {
            let mut book = best_book.clone();
            while book.len() < 1 << level {
                let w = rng.gen_range(0..1u32 << m);
                if !book.contains(&w) {
                    book.push(w);
                }
            }
            let mut d = lloyd(m, &mut book);
            d = swap_refine(m, &mut book, d);
            if level_best.as_ref().is_none_or(|(b, _)| d < *b) {
                level_best = Some((d, book));
            }
        }
        let (d, book) = level_best.expect("at least one restart");
        best = d.min(best);
        best_book = book;
    }
    Ok(best)
}

/// Penalty scale in `λ = λ₀ n^{-(β+1)}` for the rate experiments.
pub const RATE_LAMBDA0: f64 = 100.0;
pub const RATE_M_CAP: u32 = 32;
pub const RATE_SUPERSAMPLE: usize = 8;
pub const RATE_SCALES: [u32; 4] = [5, 6, 7, 8];

/// The disc `f₀` and three petal vertices (`e₁`, alternating, all ones) of
/// the `δ = 1/16`, `β = 2`, `C = 1` hypercube.
pub fn star_test_set() -> Result<Vec<(String, StarFunction)>, RateError> {
    let spec = make_hypercube(0.0625, 2.0, 1.0)?;
    let m = spec.m;
    let alternating: Vec<bool> = (0..m).map(|i| i % 2 == 0).collect();
    Ok(vec![
        ("disc".to_string(), spec.f0.clone()),
        ("petal-e1".to_string(), vertex_function(&spec, &unit_vertex(m, 1))?),
        ("petal-alternating".to_string(), vertex_function(&spec, &alternating)?),
        ("petal-ones".to_string(), vertex_function(&spec, &vec![true; m])?),
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct CodecSample {
    pub n: usize,
    pub l2_error: f64,
    pub total_bits: u64,
    pub pieces: usize,
    pub runtime_ms: f64,
}

/// Encode `f` rasterized at `n = 2^J` for each `J` with `λ = λ₀ n^{-(β+1)}`.
pub fn wedge_rate_samples(f: &StarFunction, scales: &[u32], lambda0: f64, m_cap: u32) -> Result<Vec<CodecSample>, RateError> {
    scales
        .iter()
        .map(|&j| {
            let start = Instant::now();
            let n = 1usize << j;
            let img = rasterize(f, n, RATE_SUPERSAMPLE)?;
            let params = DictionaryParams::new(j, 0, Some(m_cap))?;
            let lambda = lambda0 * (n as f64).powf(-(f.beta + 1.0));
            let (_, report) = encode(&img, params, lambda)?;
            Ok(CodecSample {
                n,
                l2_error: report.l2_error,
                total_bits: report.total_bits,
                pieces: report.pieces,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect()
}

/// Piecewise-constant upsampling of an `n`-array to resolution `target`.
pub fn upsample(a: &Raster, target: usize) -> Result<Raster, RateError> {
    if target < a.n || !target.is_multiple_of(a.n) {
        return Err(RateError::Resolution(a.n, target));
    }
    let f = target / a.n;
    let data = (0..target * target).map(|p| a.get(p / target / f, p % target / f)).collect();
    Ok(Raster { n: target, data })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxReport {
    /// Largest code length over the test set at the chosen knob.
    pub bits: u64,
    /// Chosen resolution; 0 for the header-only code.
    pub n: usize,
    pub max_error: f64,
}

/// Header length in bits of an empty wedgelet code.
pub const HEADER_BITS: u64 = 104;

/// Penalties scanned per resolution by [`empirical_minimax_length`]:
/// `10^{-11}, 10^{-10.75}, …, 10^{-1}`.
pub fn minimax_lambda_grid() -> Vec<f64> {
    (0..=40).map(|i| 10f64.powf(-11.0 + 0.25 * i as f64)).collect()
}

/// Smallest `max_f ℓ(f)` over the knob sweep (resolutions `scales` times
/// [`minimax_lambda_grid`]) whose worst error stays within `eps`. Errors
/// compare the code rendered at `reference_n` (a power of two) with the
/// rasterization of `f` there.
pub fn empirical_minimax_length(functions: &[StarFunction], scales: &[u32], reference_n: usize, eps: f64) -> Result<MinimaxReport, RateError> {
    if !(eps > 0.0) {
        return Err(RateError::Domain(format!("eps must be positive, got {eps}")));
    }
    if !reference_n.is_power_of_two() || scales.iter().any(|&j| 1usize << j > reference_n) {
        return Err(RateError::Domain(format!("reference resolution {reference_n} must be a power of two above the sweep")));
    }
    let j_ref = reference_n.trailing_zeros();
    let refs: Vec<Raster> = functions.iter().map(|f| rasterize(f, reference_n, RATE_SUPERSAMPLE)).collect::<Result<_, _>>()?;
    let trivial = refs.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if trivial <= eps {
        return Ok(MinimaxReport { bits: HEADER_BITS, n: 0, max_error: trivial });
    }
    let lambdas = minimax_lambda_grid();
    let mut best: Option<MinimaxReport> = None;
    let mut closest = f64::INFINITY;
    for &j in scales {
        let n = 1usize << j;
        let params = DictionaryParams::new(j, 0, Some(RATE_M_CAP))?;
        let dict = Dictionary::new(params)?;
        // per λ: (longest code, worst error) over the test set
        let mut per_lambda = vec![(0u64, 0.0f64); lambdas.len()];
        for (f, reference) in functions.iter().zip(&refs) {
            let img = rasterize(f, n, RATE_SUPERSAMPLE)?;
            let stats = FitStats::compute(&img, &dict)?;
            for (slot, &lambda) in per_lambda.iter_mut().zip(&lambdas) {
                let code = encode_on(&img, &stats.select(lambda).partition)?;
                let err = render(&code, j_ref)?.sub(reference).norm();
                *slot = (slot.0.max(code.total_bits()), slot.1.max(err));
            }
        }
        for &(bits, err) in &per_lambda {
            closest = closest.min(err);
            if err <= eps && best.as_ref().is_none_or(|b| bits < b.bits) {
                best = Some(MinimaxReport { bits, n, max_error: err });
            }
        }
    }
    best.ok_or(RateError::Unreachable { target: eps, best: closest })
}

/// One CSV row of a rate experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub knob: String,
    pub size: f64,
    pub error: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    BsplineNet,
    Quantize,
    WedgeDisc,
    WedgePetals,
    Hamming,
}

impl std::str::FromStr for Experiment {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "bspline-net" => Experiment::BsplineNet,
            "quantize" => Experiment::Quantize,
            "wedge-disc" => Experiment::WedgeDisc,
            "wedge-petals" => Experiment::WedgePetals,
            "hamming" => Experiment::Hamming,
            _ => return Err(RateError::Domain(format!("unknown experiment {s}"))),
        })
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T, RateError>) -> Result<(T, f64), RateError> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64() * 1e3))
}

/// Run one experiment; rows come out in a fixed order.
pub fn run_experiment(kind: Experiment, seed: u64) -> Result<Vec<ExperimentRow>, RateError> {
    let mut rows = Vec::new();
    match kind {
        Experiment::BsplineNet => {
            for e in 1..=8 {
                let eps = (-(e as f64)).exp2();
                let ((size, err), ms) = timed(|| {
                    let r = build_bspline_net(3, eps, 4.0, &ActivationSpec::relu_power(2))?;
                    let c = certify(&r)?;
                    Ok((c.connectivity as f64, c.measured_error))
                })?;
                rows.push(ExperimentRow { knob: format!("{eps}"), size, error: err, runtime_ms: ms });
            }
        }
        Experiment::Quantize => {
            let report = build_bspline_net(2, 0.01, 4.0, &ActivationSpec::relu_power(2))?;
            for eta in [0.5, 0.25, 0.1, 0.05, 0.01] {
                let ((size, err), ms) = timed(|| {
                    let k = minimal_k(&report.network, eta);
                    let (_, q) = quantize_with_report(&report.network, eta, k, None, 4.0, 2001)?;
                    Ok((q.total_bits as f64, q.measured_error))
                })?;
                rows.push(ExperimentRow { knob: format!("{eta}"), size, error: err, runtime_ms: ms });
            }
        }
        Experiment::WedgeDisc | Experiment::WedgePetals => {
            let set = star_test_set()?;
            let chosen: Vec<_> = if kind == Experiment::WedgeDisc { set.into_iter().take(1).collect() } else { set.into_iter().skip(1).collect() };
            for (name, f) in chosen {
                for s in wedge_rate_samples(&f, &RATE_SCALES, RATE_LAMBDA0, RATE_M_CAP)? {
                    rows.push(ExperimentRow { knob: format!("{name}/{}", s.n), size: s.total_bits as f64, error: s.l2_error, runtime_ms: s.runtime_ms });
                }
            }
        }
        Experiment::Hamming => {
            for m in [8u32, 12, 16, 20] {
                let (d, ms) = timed(|| covering_distortion_greedy(m, m / 4, 4, seed))?;
                rows.push(ExperimentRow { knob: format!("{m}"), size: (m / 4) as f64, error: d, runtime_ms: ms });
            }
        }
    }
    Ok(rows)
}

/// Decoded array of a stored code at its own resolution.
pub fn decode_array(code: &WedgeCode) -> Result<Raster, RateError> {
    Ok(decode(code)?.array)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0, 16.0].iter().map(|&m| (m, m.powi(-2))).collect();
        let r = fit_rate(&s).unwrap();
        assert!((r.fitted_slope + 2.0).abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
        assert!((r.slope_interval.0 + 2.0).abs() < 1e-9 && (r.slope_interval.1 + 2.0).abs() < 1e-9);
        let c: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&m| (m, 0.3)).collect();
        assert_eq!(fit_rate(&c).unwrap().fitted_slope, 0.0);
    }

    #[test]
    fn fit_rate_rejects_bad_input() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (1.0, 0.5), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn scaling_errors_shifts_intercept_only() {
        let s = [(2.0, 0.3), (4.0, 0.2), (8.0, 0.07), (16.0, 0.05)];
        let a = fit_rate(&s).unwrap();
        let scaled: Vec<_> = s.iter().map(|&(x, y)| (x, 7.0 * y)).collect();
        let b = fit_rate(&scaled).unwrap();
        assert!((a.fitted_slope - b.fitted_slope).abs() < 1e-12);
        assert!((b.intercept - a.intercept - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn covering_examples() {
        assert_eq!(covering_distortion_exact(1, 1).unwrap(), 0.0);
        assert_eq!(covering_distortion_exact(2, 1).unwrap(), 0.5);
        assert_eq!(covering_distortion_exact(3, 3).unwrap(), 0.0);
        assert!(matches!(covering_distortion_exact(5, 1), Err(RateError::Size(_))));
        assert!(covering_distortion_exact(2, 3).is_err());
    }

    #[test]
    fn exact_zero_only_at_full_rate() {
        for m in 1..=3 {
            for r in 0..=m {
                let d = covering_distortion_exact(m, r).unwrap();
                assert_eq!(d == 0.0, r == m, "m={m} r={r}");
            }
        }
    }

    #[test]
    fn greedy_matches_exact_and_is_monotone() {
        let exact = covering_distortion_exact(4, 2).unwrap();
        assert_eq!(covering_distortion_greedy(4, 2, 8, 1).unwrap(), exact);
        for m in [4, 8] {
            let d: Vec<f64> = (0..=4).map(|r| covering_distortion_greedy(m, r, 4, 3).unwrap()).collect();
            assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
        }
    }

    #[test]
    fn pixel_errors() {
        let one = Raster { n: 4, data: vec![1.0; 16] };
        let zero = Raster::zeros(4);
        assert_eq!(measure_error(Candidate::Array(&one), Reference::Array(&zero), Norm::L2Pixels).unwrap(), 1.0);
        assert_eq!(measure_error(Candidate::Array(&one), Reference::Array(&one), Norm::L2Pixels).unwrap(), 0.0);
        assert!(matches!(l2_pixels(&one, &Raster::zeros(8)), Err(RateError::Resolution(4, 8))));
    }

    #[test]
    fn upsampling() {
        let a = Raster { n: 2, data: vec![1.0, 2.0, 3.0, 4.0] };
        let u = upsample(&a, 4).unwrap();
        assert_eq!(u.get(0, 0), 1.0);
        assert_eq!(u.get(1, 3), 2.0);
        assert_eq!(u.get(3, 0), 3.0);
        assert!((u.mean() - a.mean()).abs() < 1e-15);
        assert!(upsample(&a, 3).is_err());
    }

    #[test]
    fn minimax_length_grows_as_eps_shrinks() {
        let disc = vec![StarFunction::disc((0.5, 0.5), 0.25, 2.0, 1.0)];
        let loose = empirical_minimax_length(&disc, &[4, 5], 64, 1.0).unwrap();
        assert_eq!((loose.bits, loose.n), (HEADER_BITS, 0));
        let coarse = empirical_minimax_length(&disc, &[4, 5], 64, 0.1).unwrap();
        let fine = empirical_minimax_length(&disc, &[4, 5], 64, 0.05).unwrap();
        assert!(coarse.max_error <= 0.1 && fine.max_error <= 0.05);
        assert!(HEADER_BITS < coarse.bits && coarse.bits <= fine.bits);
        assert!(matches!(empirical_minimax_length(&disc, &[4], 64, 1e-6), Err(RateError::Unreachable { .. })));
        assert!(empirical_minimax_length(&disc, &[7], 64, 0.1).is_err());
    }
}

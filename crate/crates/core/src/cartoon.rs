//! Star-shaped cartoon images `χ_{B(ρ)}` and the flower-petal hypercube.
//!
//! A star set is given by a centre `b₀` and a `2π`-periodic polar radius
//! `ρ`. The hypercube perturbs the disc of radius `1/4` by `m` disjoint
//! petals `φ_{i,m}(θ) = A m^{-β} φ(mθ - 2πi)`; every vertex `ξ ∈ {0,1}^m`
//! selects a subset of them.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CartoonError {
    #[error("range error: {0}")]
    Range(String),
    #[error("length mismatch: expected {expected} bits, got {got}")]
    Length { expected: usize, got: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Petal shape `φ` on `[0, 2π]`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PetalProfile {
    /// `sin(θ/2)`; `φ'` jumps by `±1/2` at the petal ends.
    HalfSine,
    /// `sin²(θ/2)`; continuously differentiable when glued to zero.
    RaisedCosine,
}

impl PetalProfile {
    pub fn eval(self, t: f64) -> f64 {
        if !(0.0..=TAU).contains(&t) {
            return 0.0;
        }
        match self {
            PetalProfile::HalfSine => (t / 2.0).sin(),
            PetalProfile::RaisedCosine => (t / 2.0).sin().powi(2),
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        if !(0.0..=TAU).contains(&t) {
            return 0.0;
        }
        match self {
            PetalProfile::HalfSine => 0.5 * (t / 2.0).cos(),
            PetalProfile::RaisedCosine => 0.5 * t.sin(),
        }
    }

    /// `‖φ‖_{L¹}`.
    pub fn l1_norm(self) -> f64 {
        match self {
            PetalProfile::HalfSine => 4.0,
            PetalProfile::RaisedCosine => PI,
        }
    }

    /// `‖φ²‖_{L¹}`.
    pub fn l2_norm_sq(self) -> f64 {
        match self {
            PetalProfile::HalfSine => PI,
            PetalProfile::RaisedCosine => 0.75 * PI,
        }
    }

    /// `‖φ‖_{Λ̇β}` estimated by [`holder_seminorm`] on `[0, 2π]`.
    pub fn seminorm(self, beta: f64) -> f64 {
        holder_seminorm_of(|t| self.derivative(t), beta, DEFAULT_HOLDER_GRID)
    }
}

/// One petal `A m^{-β} φ(mθ - 2πi)`, supported on `[2πi/m, 2π(i+1)/m]` mod `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Petal {
    pub i: usize,
    pub m: usize,
    pub amplitude: f64,
    pub beta: f64,
}

impl Petal {
    fn height(&self) -> f64 {
        self.amplitude * (self.m as f64).powf(-self.beta)
    }

    fn local(&self, theta: f64) -> Option<f64> {
        let m = self.m as f64;
        let t = (m * theta - TAU * self.i as f64).rem_euclid(TAU * m);
        (t <= TAU).then_some(t)
    }

    pub fn eval(&self, profile: PetalProfile, theta: f64) -> f64 {
        self.local(theta).map_or(0.0, |t| self.height() * profile.eval(t))
    }

    pub fn derivative(&self, profile: PetalProfile, theta: f64) -> f64 {
        self.local(theta)
            .map_or(0.0, |t| self.height() * self.m as f64 * profile.derivative(t))
    }
}

/// Polar radius `ρ(θ)`, `2π`-periodic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RadiusFunction {
    Disc { r0: f64 },
    PetalSum { r0: f64, petals: Vec<Petal>, profile: PetalProfile },
    /// Values on the uniform grid `θ_j = 2πj/len`, optionally with `ρ'`.
    Sampled { values: Vec<f64>, derivatives: Option<Vec<f64>> },
}

fn periodic_lerp(values: &[f64], theta: f64) -> f64 {
    let n = values.len();
    let pos = theta.rem_euclid(TAU) / TAU * n as f64;
    let j = (pos.floor() as usize).min(n - 1);
    let f = pos - j as f64;
    values[j] * (1.0 - f) + values[(j + 1) % n] * f
}

impl RadiusFunction {
    pub fn eval(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(TAU);
        match self {
            RadiusFunction::Disc { r0 } => *r0,
            RadiusFunction::PetalSum { r0, petals, profile } => {
                r0 + petals.iter().map(|p| p.eval(*profile, theta)).sum::<f64>()
            }
            RadiusFunction::Sampled { values, .. } => periodic_lerp(values, theta),
        }
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(TAU);
        match self {
            RadiusFunction::Disc { .. } => 0.0,
            RadiusFunction::PetalSum { petals, profile, .. } => {
                petals.iter().map(|p| p.derivative(*profile, theta)).sum()
            }
            RadiusFunction::Sampled { derivatives: Some(d), .. } => periodic_lerp(d, theta),
            RadiusFunction::Sampled { values, derivatives: None } => {
                let n = values.len() as f64;
                let h = TAU / n;
                (periodic_lerp(values, theta + h) - periodic_lerp(values, theta - h)) / (2.0 * h)
            }
        }
    }

    /// `(min ρ, max ρ)` over a fine grid, petal peaks included.
    pub fn range(&self) -> (f64, f64) {
        match self {
            RadiusFunction::Disc { r0 } => (*r0, *r0),
            _ => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut visit = |theta: f64| {
                    let r = self.eval(theta);
                    lo = lo.min(r);
                    hi = hi.max(r);
                };
                let n = 1 << 14;
                for j in 0..n {
                    visit(TAU * j as f64 / n as f64);
                }
                if let RadiusFunction::PetalSum { petals, .. } = self {
                    for p in petals {
                        visit(TAU * (p.i as f64 + 0.5) / p.m as f64);
                    }
                }
                (lo, hi)
            }
        }
    }
}

/// `χ_{B(ρ)}` with centre `b₀` and regularity class `(β, C)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarFunction {
    pub center: (f64, f64),
    pub radius: RadiusFunction,
    pub beta: f64,
    pub holder_c: f64,
}

impl StarFunction {
    pub fn disc(center: (f64, f64), r0: f64, beta: f64, holder_c: f64) -> Self {
        Self { center, radius: RadiusFunction::Disc { r0 }, beta, holder_c }
    }

    /// Exact inside test in polar coordinates around the centre.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        let r = dx.hypot(dy);
        r <= self.radius.eval(dy.atan2(dx))
    }
}

pub const DEFAULT_HOLDER_GRID: usize = 4096;
const HOLDER_GAPS: usize = 256;

/// Grid lower bound on `sup |ρ'(θ₁) - ρ'(θ₂)| / |θ₁ - θ₂|^{β-1}`.
///
/// Pairs are stratified by gap: 256 log-spaced gaps in `[2π·10⁻⁵, 2π)`,
/// each with `grid` left endpoints spread over `[0, 2π - gap]`. Distances
/// are measured on the line, not the circle.
pub fn holder_seminorm(radius: &RadiusFunction, beta: f64, grid: usize) -> f64 {
    holder_seminorm_of(|t| radius.derivative(t), beta, grid)
}

/// [`holder_seminorm`] for an arbitrary derivative on `[0, 2π]`.
pub fn holder_seminorm_of(derivative: impl Fn(f64) -> f64, beta: f64, grid: usize) -> f64 {
    let grid = grid.max(2);
    let exponent = beta - 1.0;
    let (g_lo, g_hi) = ((TAU * 1e-5).ln(), (TAU * (1.0 - 1e-6)).ln());
    let mut best: f64 = 0.0;
    for g in 0..HOLDER_GAPS {
        let gap = (g_lo + (g_hi - g_lo) * g as f64 / (HOLDER_GAPS - 1) as f64).exp();
        let span = TAU - gap;
        let denom = gap.powf(exponent);
        for j in 0..grid {
            let t1 = span * j as f64 / (grid - 1) as f64;
            let t2 = t1 + gap;
            let d = (derivative(t1) - derivative(t2)).abs();
            best = best.max(d / denom);
        }
    }
    best
}

/// Tolerance factor on `C` in [`star_membership`].
pub const MEMBERSHIP_SLACK: f64 = 1.05;

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub radius_min: f64,
    pub radius_max: f64,
    pub radius_ok: bool,
    /// `(x_min, x_max, y_min, y_max)` of the boundary curve.
    pub bbox: (f64, f64, f64, f64),
    pub containment_ok: bool,
    pub seminorm: f64,
    pub seminorm_ok: bool,
}

impl MembershipReport {
    pub fn passed(&self) -> bool {
        self.radius_ok && self.containment_ok && self.seminorm_ok
    }
}

/// Check `1/10 ≤ ρ ≤ 1/2`, `B(ρ) ⊂ [1/10, 9/10]²` and `‖ρ‖_{Λ̇β} ≤ C`.
pub fn star_membership(f: &StarFunction) -> MembershipReport {
    let (lo, hi) = f.radius.range();
    let n = 1 << 14;
    let mut bbox = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..n {
        let theta = TAU * j as f64 / n as f64;
        let r = f.radius.eval(theta);
        let x = f.center.0 + r * theta.cos();
        let y = f.center.1 + r * theta.sin();
        bbox = (bbox.0.min(x), bbox.1.max(x), bbox.2.min(y), bbox.3.max(y));
    }
    let seminorm = holder_seminorm(&f.radius, f.beta, DEFAULT_HOLDER_GRID);
    let eps = 1e-12;
    MembershipReport {
        radius_min: lo,
        radius_max: hi,
        radius_ok: lo >= 0.1 - eps && hi <= 0.5 + eps,
        bbox,
        containment_ok: bbox.0 >= 0.1 - eps && bbox.1 <= 0.9 + eps && bbox.2 >= 0.1 - eps && bbox.3 <= 0.9 + eps,
        seminorm,
        seminorm_ok: seminorm <= MEMBERSHIP_SLACK * f.holder_c,
    }
}

/// How the petal amplitude is tied to `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// `A = δ² m^{β+1} / ‖φ‖_{L¹}`: the petal's angular integral is `δ²`.
    AngularIntegral,
    /// The petal's planar area `∫ (r₀ h + h²/2) dθ` is exactly `δ²`.
    AreaExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HypercubeOptions {
    pub profile: PetalProfile,
    pub normalization: Normalization,
}

impl Default for HypercubeOptions {
    fn default() -> Self {
        Self { profile: PetalProfile::RaisedCosine, normalization: Normalization::AreaExact }
    }
}

impl HypercubeOptions {
    /// Half-sine petals with the angular-integral normalization.
    pub fn angular_half_sine() -> Self {
        Self { profile: PetalProfile::HalfSine, normalization: Normalization::AngularIntegral }
    }
}

pub const BASE_RADIUS: f64 = 0.25;
pub const BASE_CENTER: (f64, f64) = (0.5, 0.5);

#[derive(Debug, Clone, Serialize)]
pub struct HypercubeSpec {
    pub delta: f64,
    pub m: usize,
    pub amplitude: f64,
    pub f0: StarFunction,
    pub holder_c: f64,
    pub beta: f64,
    pub options: HypercubeOptions,
    pub profile_l1: f64,
    pub profile_seminorm: f64,
    /// `m δ^{2/(β+1)}`, the constant in `m ≥ C₀ δ^{-2/(β+1)}`.
    pub c0: f64,
}

impl HypercubeSpec {
    /// Peak petal height `A m^{-β}`.
    pub fn petal_height(&self) -> f64 {
        self.amplitude * (self.m as f64).powf(-self.beta)
    }
}

fn check_class(beta: f64, c: f64) -> Result<(), CartoonError> {
    if !(beta > 1.0 && beta <= 2.0) {
        return Err(CartoonError::Range(format!("beta must lie in (1, 2], got {beta}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(CartoonError::Range(format!("C must be positive, got {c}")));
    }
    Ok(())
}

/// `m(δ) = ⌊K δ^{-2/(β+1)}⌋`; returns `K`.
fn dimension_constant(beta: f64, c: f64, options: HypercubeOptions, seminorm: f64) -> f64 {
    let l1 = options.profile.l1_norm();
    let scale = match options.normalization {
        Normalization::AngularIntegral => seminorm / (c * l1),
        Normalization::AreaExact => seminorm / (c * BASE_RADIUS * l1),
    };
    scale.powf(-1.0 / (beta + 1.0))
}

pub fn make_hypercube(delta: f64, beta: f64, c: f64) -> Result<HypercubeSpec, CartoonError> {
    make_hypercube_with(delta, beta, c, HypercubeOptions::default())
}

pub fn make_hypercube_with(delta: f64, beta: f64, c: f64, options: HypercubeOptions) -> Result<HypercubeSpec, CartoonError> {
    check_class(beta, c)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CartoonError::Range(format!("delta must be positive, got {delta}")));
    }
    let seminorm = options.profile.seminorm(beta);
    let k = dimension_constant(beta, c, options, seminorm);
    let m = (k * delta.powf(-2.0 / (beta + 1.0))).floor() as usize;
    if m == 0 {
        return Err(CartoonError::Range(format!("delta = {delta} leaves no room for a single petal")));
    }
    let mf = m as f64;
    let l1 = options.profile.l1_norm();
    let height = match options.normalization {
        Normalization::AngularIntegral => delta * delta * mf / l1,
        Normalization::AreaExact => {
            // r₀ h ‖φ‖₁/m + h² ‖φ²‖₁/(2m) = δ²
            let qa = options.profile.l2_norm_sq() / (2.0 * mf);
            let qb = BASE_RADIUS * l1 / mf;
            let qc = -delta * delta;
            2.0 * -qc / (qb + (qb * qb - 4.0 * qa * qc).sqrt())
        }
    };
    if height > 0.25 {
        return Err(CartoonError::Range(format!(
            "petal height A·m^-β = {height:.4} exceeds 1/4; choose a smaller delta"
        )));
    }
    Ok(HypercubeSpec {
        delta,
        m,
        amplitude: height * mf.powf(beta),
        f0: StarFunction::disc(BASE_CENTER, BASE_RADIUS, beta, c),
        holder_c: c,
        beta,
        options,
        profile_l1: l1,
        profile_seminorm: seminorm,
        c0: mf * delta.powf(2.0 / (beta + 1.0)),
    })
}

/// A `δ` whose hypercube has exactly `m` petals, for consecutive dimensions.
pub fn delta_for_dimension(m: usize, beta: f64, c: f64, options: HypercubeOptions) -> Result<f64, CartoonError> {
    check_class(beta, c)?;
    if m == 0 {
        return Err(CartoonError::Range("dimension must be positive".into()));
    }
    let k = dimension_constant(beta, c, options, options.profile.seminorm(beta));
    Ok((k / (m as f64 + 0.5)).powf((beta + 1.0) / 2.0))
}

/// `r_ξ = 1/4 + Σ ξ_i φ_{i,m}`.
pub fn vertex_function(spec: &HypercubeSpec, xi: &[bool]) -> Result<StarFunction, CartoonError> {
    if xi.len() != spec.m {
        return Err(CartoonError::Length { expected: spec.m, got: xi.len() });
    }
    let petals: Vec<Petal> = xi
        .iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .map(|(j, _)| Petal { i: j + 1, m: spec.m, amplitude: spec.amplitude, beta: spec.beta })
        .collect();
    let radius = if petals.is_empty() {
        RadiusFunction::Disc { r0: BASE_RADIUS }
    } else {
        RadiusFunction::PetalSum { r0: BASE_RADIUS, petals, profile: spec.options.profile }
    };
    Ok(StarFunction { center: BASE_CENTER, radius, beta: spec.beta, holder_c: spec.holder_c })
}

/// Unit vector `e_i` (1-based) of length `m`.
pub fn unit_vertex(m: usize, i: usize) -> Vec<bool> {
    (1..=m).map(|j| j == i).collect()
}

/// Vertices checked for membership: all `2^m` when `m ≤ 10`; otherwise
/// zeros, ones, every unit vector and 32 seeded random vertices.
pub fn membership_vertices(m: usize, seed: u64) -> Vec<Vec<bool>> {
    if m <= 10 {
        return (0..1u32 << m).map(|bits| (0..m).map(|j| bits >> j & 1 == 1).collect()).collect();
    }
    let mut out = vec![vec![false; m], vec![true; m]];
    out.extend((1..=m).map(|i| unit_vertex(m, i)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.extend((0..32).map(|_| (0..m).map(|_| rng.gen::<bool>()).collect()));
    out
}

/// Square array of pixel averages; row `i` covers `y ∈ [i/n, (i+1)/n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `L²([0,1]²)` inner product of the piecewise-constant images.
    pub fn inner(&self, other: &Raster) -> f64 {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>() / (self.n * self.n) as f64
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sub(&self, other: &Raster) -> Raster {
        assert_eq!(self.n, other.n);
        Raster { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// Binary PGM (P5, maxval 255); the top image row is the largest `y`.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<(), CartoonError> {
        write!(w, "P5\n{} {}\n255\n", self.n, self.n)?;
        let mut bytes = Vec::with_capacity(self.n * self.n);
        for i in (0..self.n).rev() {
            bytes.extend((0..self.n).map(|j| (self.get(i, j).clamp(0.0, 1.0) * 255.0).round() as u8));
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Two little-endian `u32` dimensions (width, height), then `f64` LE row-major.
    pub fn write_raw(&self, mut w: impl Write) -> Result<(), CartoonError> {
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn from_raw(bytes: &[u8]) -> Result<Raster, CartoonError> {
        if bytes.len() < 8 {
            return Err(CartoonError::Format("raw image shorter than its header".into()));
        }
        let w = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
        let h = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        if w != h {
            return Err(CartoonError::Format(format!("image must be square, got {w}x{h}")));
        }
        if bytes.len() != 8 + 8 * w * h {
            return Err(CartoonError::Format(format!("expected {} payload bytes, got {}", 8 * w * h, bytes.len() - 8)));
        }
        let data = bytes[8..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Raster { n: w, data })
    }
}

/// Pixel averages from `s²` centred sub-samples per pixel.
///
/// Pixels wholly inside the inscribed or outside the circumscribed disc of
/// `B(ρ)` are filled without sampling.
pub fn rasterize(f: &StarFunction, n: usize, s: usize) -> Result<Raster, CartoonError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(CartoonError::Format(format!("n must be a power of two, got {n}")));
    }
    if s < 4 {
        return Err(CartoonError::Range(format!("supersampling must be at least 4, got {s}")));
    }
    let (rmin, rmax) = f.radius.range();
    // margin covers the sampled estimate of the extremes
    let (rmin, rmax) = (rmin - 1e-9, rmax + 1e-9);
    let px = 1.0 / n as f64;
    let mut out = Raster::zeros(n);
    let (cx, cy) = f.center;
    for i in 0..n {
        let y0 = i as f64 * px;
        for j in 0..n {
            let x0 = j as f64 * px;
            let near_x = (cx - x0).clamp(0.0, px);
            let near_y = (cy - y0).clamp(0.0, px);
            let dmin = (x0 + near_x - cx).hypot(y0 + near_y - cy);
            let far_x = if cx - x0 > px / 2.0 { 0.0 } else { px };
            let far_y = if cy - y0 > px / 2.0 { 0.0 } else { px };
            let dmax = (x0 + far_x - cx).hypot(y0 + far_y - cy);
            let v = if dmin > rmax {
                0.0
            } else if dmax < rmin {
                1.0
            } else {
                let mut hits = 0usize;
                for a in 0..s {
                    let y = y0 + (a as f64 + 0.5) * px / s as f64;
                    for b in 0..s {
                        let x = x0 + (b as f64 + 0.5) * px / s as f64;
                        hits += f.contains(x, y) as usize;
                    }
                }
                hits as f64 / (s * s) as f64
            };
            out.data[i * n + j] = v;
        }
    }
    Ok(out)
}

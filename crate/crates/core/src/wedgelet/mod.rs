//! Edgelet-decorated recursive dyadic partitions (ED-RDPs) of `n × n` arrays.
//!
//! Pixel row `i` covers `y ∈ [i/n, (i+1)/n]` and column `j` covers
//! `x ∈ [j/n, (j+1)/n]`, as in [`crate::cartoon::Raster`]. Every dyadic square
//! carries `M_j` boundary vertices placed clockwise from its upper-left
//! corner; an edgelet joins two of them and splits the square into two
//! wedgelets.

mod codec;
mod fit;

pub use codec::{decode, encode, encode_on, encode_target, encode_target_with, reencode, render, Decoded, EncodeReport, WedgeCode, FORMAT_VERSION, MAGIC};
pub use fit::{fit_rdp, project, Dictionary, FitResult, FitStats, Projection};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WedgeError {
    #[error("parameter error: {0}")]
    Params(String),
    #[error("degenerate wedge: {0}")]
    Degenerate(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("target unreachable: best error {best:e} exceeds {target:e}")]
    Unreachable { target: f64, best: f64 },
}

/// Largest `J + K` accepted; keeps vertex counts inside `u64`.
pub const MAX_LEVELS: u32 = 40;
/// Vertex cap used by the command line when none is given.
pub const DEFAULT_M_CAP: u32 = 32;

/// `J` (with `n = 2^J`), the refinement `K` (vertex spacing `2^{-J-K}`) and
/// the per-square vertex cap (`None` means uncapped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DictionaryParams {
    pub j_max: u32,
    pub k: u32,
    pub m_cap: Option<u32>,
}

impl DictionaryParams {
    pub fn new(j_max: u32, k: u32, m_cap: Option<u32>) -> Result<Self, WedgeError> {
        if j_max > 15 {
            return Err(WedgeError::Params(format!("J = {j_max} exceeds 15")));
        }
        if j_max + k > MAX_LEVELS {
            return Err(WedgeError::Params(format!("J + K = {} exceeds {MAX_LEVELS}", j_max + k)));
        }
        if let Some(c) = m_cap {
            if c < 4 || !c.is_power_of_two() || c > u16::MAX as u32 {
                return Err(WedgeError::Params(format!("M_cap must be a power of two in [4, 32768], got {c}")));
            }
        }
        Ok(Self { j_max, k, m_cap })
    }

    pub fn n(&self) -> usize {
        1 << self.j_max
    }

    /// `M_j = min(4·2^{J+K-j}, M_cap)`.
    pub fn vertex_count(&self, j: u32) -> u64 {
        let full = 4u64 << (self.j_max + self.k - j);
        self.m_cap.map_or(full, |c| full.min(c as u64))
    }

    /// `binom(M_j, 2)`.
    pub fn local_edgelets(&self, j: u32) -> u64 {
        let m = self.vertex_count(j);
        m * (m - 1) / 2
    }

    /// `η = n^{-2}`, the coefficient grid step.
    pub fn eta(&self) -> f64 {
        let n = self.n() as f64;
        1.0 / (n * n)
    }
}

/// `Σ_{j=0}^{J} 4^j binom(M_j, 2)`.
pub fn edgelet_count(j_max: u32, k: u32, m_cap: Option<u32>) -> Result<u128, WedgeError> {
    let p = DictionaryParams::new(j_max, k, m_cap)?;
    Ok((0..=j_max).map(|j| (1u128 << (2 * j)) * p.local_edgelets(j) as u128).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DyadicSquare {
    pub j: u32,
    pub ix: u32,
    pub iy: u32,
}

impl DyadicSquare {
    pub const ROOT: DyadicSquare = DyadicSquare { j: 0, ix: 0, iy: 0 };

    pub fn new(j: u32, ix: u32, iy: u32) -> Result<Self, WedgeError> {
        if j > 31 || ix >= 1 << j || iy >= 1 << j {
            return Err(WedgeError::Params(format!("no dyadic square ({j}, {ix}, {iy})")));
        }
        Ok(Self { j, ix, iy })
    }

    pub fn side(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }

    /// Children in the order lower-left, lower-right, upper-left, upper-right.
    pub fn children(&self) -> [DyadicSquare; 4] {
        let (j, x, y) = (self.j + 1, 2 * self.ix, 2 * self.iy);
        [
            DyadicSquare { j, ix: x, iy: y },
            DyadicSquare { j, ix: x + 1, iy: y },
            DyadicSquare { j, ix: x, iy: y + 1 },
            DyadicSquare { j, ix: x + 1, iy: y + 1 },
        ]
    }

    /// `(first row, first column, side)` of the pixel block at resolution `2^J`.
    pub fn pixel_block(&self, j_max: u32) -> (usize, usize, usize) {
        let size = 1usize << (j_max - self.j);
        (self.iy as usize * size, self.ix as usize * size, size)
    }
}

/// Point on the perimeter of `[0, s]²` at clockwise arc position `4p/m`
/// (in side lengths) from the upper-left corner.
fn perimeter_point(s: f64, p: u64, m: u64) -> (f64, f64) {
    let side = 4 * p / m;
    let frac = (4 * p % m) as f64 / m as f64 * s;
    match side {
        0 => (frac, s),
        1 => (s, s - frac),
        2 => (s - frac, 0.0),
        _ => (0.0, frac),
    }
}

/// Sides (0 top, 1 right, 2 bottom, 3 left) a vertex lies on.
fn vertex_sides(p: u64, m: u64) -> [u64; 2] {
    let side = 4 * p / m;
    if (4 * p).is_multiple_of(m) {
        [side, (side + 3) % 4]
    } else {
        [side, side]
    }
}

/// Both endpoints on one side of the square: one wedgelet has zero area.
pub fn is_degenerate(v1: u64, v2: u64, m: u64) -> bool {
    let (a, b) = (vertex_sides(v1, m), vertex_sides(v2, m));
    v1 == v2 || a.iter().any(|s| b.contains(s))
}

pub fn enumerate_vertices(square: DyadicSquare, params: &DictionaryParams) -> Result<Vec<(f64, f64)>, WedgeError> {
    if square.j > params.j_max {
        return Err(WedgeError::Params(format!("square scale {} exceeds J = {}", square.j, params.j_max)));
    }
    let m = params.vertex_count(square.j);
    let s = square.side();
    let (x0, y0) = (square.ix as f64 * s, square.iy as f64 * s);
    Ok((0..m).map(|p| perimeter_point(s, p, m)).map(|(x, y)| (x0 + x, y0 + y)).collect())
}

/// Colex rank of `v1 < v2` among `binom(M, 2)` pairs.
pub fn edgelet_index(v1: u64, v2: u64) -> u64 {
    v2 * (v2 - 1) / 2 + v1
}

/// Inverse of [`edgelet_index`].
pub fn edgelet_from_index(idx: u64) -> (u64, u64) {
    let mut v2 = (((8 * idx + 1) as f64).sqrt() as u64).div_ceil(2);
    while v2 * (v2 - 1) / 2 > idx {
        v2 -= 1;
    }
    while (v2 + 1) * v2 / 2 <= idx {
        v2 += 1;
    }
    (idx - v2 * (v2 - 1) / 2, v2)
}

/// One side of an edgelet: `side = 0` is the region counter-clockwise
/// (to the left) of the directed segment `v1 → v2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Wedge {
    pub v1: u32,
    pub v2: u32,
    pub side: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdRdpLeaf {
    pub square: DyadicSquare,
    pub split: Option<Wedge>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdRdp {
    pub params: DictionaryParams,
    pub leaves: Vec<EdRdpLeaf>,
}

impl EdRdp {
    pub fn trivial(params: DictionaryParams) -> Self {
        Self { params, leaves: vec![EdRdpLeaf { square: DyadicSquare::ROOT, split: None }] }
    }

    /// Number of distinct leaf squares.
    pub fn square_count(&self) -> usize {
        let mut squares: Vec<_> = self.leaves.iter().map(|l| l.square).collect();
        squares.dedup();
        squares.len()
    }

    /// Leaf squares tile `[0,1]²` and every split square has both wedgelets.
    pub fn validate(&self) -> Result<(), WedgeError> {
        let n = self.params.n();
        let mut cover = vec![0u8; n * n];
        let mut i = 0;
        while i < self.leaves.len() {
            let leaf = self.leaves[i];
            if leaf.square.j > self.params.j_max {
                return Err(WedgeError::Partition(format!("square scale {} exceeds J", leaf.square.j)));
            }
            let group = match leaf.split {
                None => 1,
                Some(w) => {
                    let next = self.leaves.get(i + 1);
                    let pair = next.is_some_and(|l| {
                        l.square == leaf.square && l.split.is_some_and(|o| (o.v1, o.v2) == (w.v1, w.v2) && o.side != w.side)
                    });
                    if !pair {
                        return Err(WedgeError::Partition(format!("wedgelet of {:?} lacks its partner", leaf.square)));
                    }
                    2
                }
            };
            let (r0, c0, size) = leaf.square.pixel_block(self.params.j_max);
            for r in r0..r0 + size {
                for c in c0..c0 + size {
                    cover[r * n + c] += 1;
                }
            }
            i += group;
        }
        match cover.iter().position(|&c| c != 1) {
            Some(p) => Err(WedgeError::Partition(format!("pixel ({}, {}) covered {} times", p / n, p % n, cover[p]))),
            None => Ok(()),
        }
    }
}

/// Dense coverage of a leaf over its square's pixel block.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub row0: usize,
    pub col0: usize,
    pub size: usize,
    pub values: Vec<f64>,
}

impl Mask {
    /// `Σ a²` over pixels.
    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|a| a * a).sum()
    }

    pub fn dot(&self, other: &Mask) -> f64 {
        if (self.row0, self.col0, self.size) != (other.row0, other.col0, other.size) {
            return 0.0;
        }
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    /// Scatter `scale · mask` into an `n × n` row-major array.
    pub fn add_to(&self, out: &mut [f64], n: usize, scale: f64) {
        for r in 0..self.size {
            let row = &mut out[(self.row0 + r) * n + self.col0..][..self.size];
            for (o, a) in row.iter_mut().zip(&self.values[r * self.size..][..self.size]) {
                *o += scale * a;
            }
        }
    }

    pub fn dot_array(&self, f: &[f64], n: usize) -> f64 {
        (0..self.size)
            .map(|r| {
                f[(self.row0 + r) * n + self.col0..][..self.size]
                    .iter()
                    .zip(&self.values[r * self.size..][..self.size])
                    .map(|(x, a)| x * a)
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Area of the unit pixel `[x0, x0+1] × [y0, y0+1]` left of `a → b`.
fn pixel_left_area(x0: f64, y0: f64, a: (f64, f64), d: (f64, f64)) -> f64 {
    let g = |x: f64, y: f64| d.0 * (y - a.1) - d.1 * (x - a.0);
    let corners = [(x0, y0), (x0 + 1.0, y0), (x0 + 1.0, y0 + 1.0), (x0, y0 + 1.0)];
    let vals = corners.map(|(x, y)| g(x, y));
    if vals.iter().all(|&v| v >= 0.0) {
        return 1.0;
    }
    if vals.iter().all(|&v| v <= 0.0) {
        return 0.0;
    }
    let mut poly: Vec<(f64, f64)> = Vec::with_capacity(6);
    for i in 0..4 {
        let (p, q) = (corners[i], corners[(i + 1) % 4]);
        let (gp, gq) = (vals[i], vals[(i + 1) % 4]);
        if gp >= 0.0 {
            poly.push(p);
        }
        if (gp > 0.0 && gq < 0.0) || (gp < 0.0 && gq > 0.0) {
            let t = gp / (gp - gq);
            poly.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    let twice: f64 = (0..poly.len())
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            p.0 * q.1 - q.0 * p.1
        })
        .sum();
    (0.5 * twice).clamp(0.0, 1.0)
}

/// Exact coverage of each pixel of an `s × s` block by the region left of
/// `a → b` (local pixel units, row `r` covering `y ∈ [r, r+1]`).
pub(crate) fn block_coverage(s: usize, a: (f64, f64), b: (f64, f64)) -> Vec<f64> {
    let d = (b.0 - a.0, b.1 - a.1);
    let mut out = Vec::with_capacity(s * s);
    for r in 0..s {
        for c in 0..s {
            out.push(pixel_left_area(c as f64, r as f64, a, d));
        }
    }
    out
}

/// Local endpoints of edgelet `(v1, v2)` in pixel units of an `s`-pixel square.
pub(crate) fn local_endpoints(s: usize, v1: u64, v2: u64, m: u64) -> ((f64, f64), (f64, f64)) {
    (perimeter_point(s as f64, v1, m), perimeter_point(s as f64, v2, m))
}

/// Pixel-average indicator of a leaf, confined to its square.
pub fn wedge_mask(leaf: &EdRdpLeaf, params: &DictionaryParams) -> Result<Mask, WedgeError> {
    wedge_mask_at(leaf, params, params.j_max)
}

/// [`wedge_mask`] on the finer pixel grid of resolution `2^{j_render}`;
/// vertex positions still come from `params`.
pub fn wedge_mask_at(leaf: &EdRdpLeaf, params: &DictionaryParams, j_render: u32) -> Result<Mask, WedgeError> {
    let sq = leaf.square;
    if sq.j > params.j_max {
        return Err(WedgeError::Params(format!("square scale {} exceeds J = {}", sq.j, params.j_max)));
    }
    if j_render < params.j_max || j_render > 15 {
        return Err(WedgeError::Params(format!("render scale {j_render} must lie in [J, 15]")));
    }
    let (row0, col0, size) = sq.pixel_block(j_render);
    let values = match leaf.split {
        None => vec![1.0; size * size],
        Some(w) => {
            let m = params.vertex_count(sq.j);
            let (v1, v2) = (w.v1 as u64, w.v2 as u64);
            if v1 >= v2 || v2 >= m || w.side > 1 {
                return Err(WedgeError::Params(format!("bad edgelet ({v1}, {v2}, side {}) for M = {m}", w.side)));
            }
            if is_degenerate(v1, v2, m) {
                return Err(WedgeError::Degenerate(format!("edgelet ({v1}, {v2}) runs along one side of {sq:?}")));
            }
            let (a, b) = local_endpoints(size, v1, v2, m);
            let left = block_coverage(size, a, b);
            if w.side == 0 {
                left
            } else {
                left.into_iter().map(|v| 1.0 - v).collect()
            }
        }
    };
    Ok(Mask { row0, col0, size, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(edgelet_count(1, 1, None).unwrap(), 232);
        assert_eq!(edgelet_count(0, 0, None).unwrap(), 6);
        assert_eq!(edgelet_count(1, 1, Some(8)).unwrap(), 140);
        for (j, k) in [(2, 0), (3, 1), (4, 2)] {
            let delta_inv = 1u128 << (j + k);
            assert!(edgelet_count(j, k, None).unwrap() <= 8 * (j as u128 + 1) * delta_inv * delta_inv);
        }
    }

    #[test]
    fn vertices_clockwise_from_upper_left() {
        let p = DictionaryParams::new(0, 0, None).unwrap();
        let v = enumerate_vertices(DyadicSquare::ROOT, &p).unwrap();
        assert_eq!(v, vec![(0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (0.0, 0.0)]);
        let p = DictionaryParams::new(2, 1, None).unwrap();
        assert_eq!(p.vertex_count(0), 32);
        let sq = DyadicSquare::new(1, 1, 0).unwrap();
        let v = enumerate_vertices(sq, &p).unwrap();
        assert_eq!(v.len(), 16);
        assert_eq!(v[0], (0.5, 0.5));
        for w in v.windows(2) {
            let d = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            assert!((d - 0.5 * 4.0 / 16.0).abs() < 1e-15);
        }
        let capped = DictionaryParams::new(2, 1, Some(8)).unwrap();
        assert_eq!(capped.vertex_count(0), 8);
    }

    #[test]
    fn colex_round_trip() {
        let mut idx = 0;
        for v2 in 1..40u64 {
            for v1 in 0..v2 {
                assert_eq!(edgelet_index(v1, v2), idx);
                assert_eq!(edgelet_from_index(idx), (v1, v2));
                idx += 1;
            }
        }
    }

    #[test]
    fn degeneracy() {
        // M = 8: corners 0, 2, 4, 6; midpoints 1, 3, 5, 7
        assert!(is_degenerate(0, 1, 8));
        assert!(is_degenerate(0, 2, 8));
        assert!(is_degenerate(0, 6, 8));
        assert!(is_degenerate(6, 7, 8));
        assert!(!is_degenerate(0, 4, 8));
        assert!(!is_degenerate(1, 5, 8));
        assert!(!is_degenerate(1, 3, 8));
    }

    #[test]
    fn masks() {
        let p = DictionaryParams::new(2, 0, None).unwrap();
        let whole = wedge_mask(&EdRdpLeaf { square: DyadicSquare::ROOT, split: None }, &p).unwrap();
        assert!(whole.values.iter().all(|&v| v == 1.0) && whole.values.len() == 16);

        let p = DictionaryParams::new(7, 0, None).unwrap();
        let m = p.vertex_count(0);
        // upper-left (0) to lower-right (m/2): the upper-right triangle is on the left
        let leaf = |side| EdRdpLeaf { square: DyadicSquare::ROOT, split: Some(Wedge { v1: 0, v2: (m / 2) as u32, side }) };
        let a = wedge_mask(&leaf(0), &p).unwrap();
        let b = wedge_mask(&leaf(1), &p).unwrap();
        let n2 = (p.n() * p.n()) as f64;
        let mean = a.values.iter().sum::<f64>() / n2;
        assert!((mean - 0.5).abs() <= 2.0 / p.n() as f64);
        assert_eq!((a.values[0], a.values[a.values.len() - 1]), (0.0, 1.0));
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x + y - 1.0).abs() < 1e-15);
        }
        let bad = EdRdpLeaf { square: DyadicSquare::ROOT, split: Some(Wedge { v1: 0, v2: 1, side: 0 }) };
        assert!(matches!(wedge_mask(&bad, &p), Err(WedgeError::Degenerate(_))));
    }

    #[test]
    fn partition_validation() {
        let p = DictionaryParams::new(2, 0, None).unwrap();
        assert!(EdRdp::trivial(p).validate().is_ok());
        let quad = EdRdp {
            params: p,
            leaves: DyadicSquare::ROOT.children().iter().map(|&s| EdRdpLeaf { square: s, split: None }).collect(),
        };
        assert!(quad.validate().is_ok());
        let mut overlap = quad.clone();
        overlap.leaves.push(EdRdpLeaf { square: DyadicSquare::ROOT, split: None });
        assert!(overlap.validate().is_err());
        let mut hole = quad;
        hole.leaves.pop();
        assert!(hole.validate().is_err());
    }
}

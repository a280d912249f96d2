//! Penalized least-squares selection of an ED-RDP and projection onto its
//! leaf masks.
//!
//! Errors are squared `L²([0,1]²)` norms of piecewise-constant images, so a
//! pixel residual `r` contributes `r²/n²`. The penalty is `λ` per piece: an
//! unsplit square is one piece, an edgelet-split square two.

use super::{
    block_coverage, edgelet_from_index, is_degenerate, local_endpoints, wedge_mask, DictionaryParams, DyadicSquare, EdRdp, EdRdpLeaf, Mask,
    Wedge, WedgeError,
};
use crate::cartoon::Raster;

/// Largest `binom(M_j, 2)` a fitting dictionary will tabulate.
pub const MAX_LOCAL_EDGELETS: u64 = 1 << 16;

/// Coverage of one edgelet's left side in a square of `s × s` pixels, stored
/// per row as a run of full pixels plus the fractional pixels.
#[derive(Debug, Clone)]
struct EdgeRuns {
    /// `(full_lo, full_hi, frac_start, frac_end)` per row.
    rows: Vec<(u32, u32, u32, u32)>,
    frac: Vec<(u32, f64)>,
    a1: f64,
    /// `N / (N Σa² - (Σa)²)`; the Gram factor of the centred two-piece fit.
    gram: f64,
}

impl EdgeRuns {
    fn new(s: usize, cover: &[f64]) -> Option<Self> {
        let mut rows = Vec::with_capacity(s);
        let mut frac = Vec::new();
        let (mut a1, mut aa) = (0.0, 0.0);
        for r in 0..s {
            let row = &cover[r * s..][..s];
            let start = frac.len() as u32;
            let (mut lo, mut hi) = (0u32, 0u32);
            for (c, &v) in row.iter().enumerate() {
                if v == 1.0 {
                    if hi == lo {
                        lo = c as u32;
                    }
                    hi = c as u32 + 1;
                } else if v > 0.0 {
                    frac.push((c as u32, v));
                }
                a1 += v;
                aa += v * v;
            }
            debug_assert!(row[lo as usize..hi as usize].iter().all(|&v| v == 1.0));
            rows.push((lo, hi, start, frac.len() as u32));
        }
        let n = (s * s) as f64;
        let det = n * aa - a1 * a1;
        (det > 1e-12 * n * aa).then(|| EdgeRuns { rows, frac, a1, gram: n / det })
    }
}

/// Tabulated edgelet coverages for every scale `j < J` of a dictionary.
pub struct Dictionary {
    params: DictionaryParams,
    scales: Vec<Vec<Option<EdgeRuns>>>,
}

impl Dictionary {
    pub fn new(params: DictionaryParams) -> Result<Self, WedgeError> {
        let mut scales = Vec::with_capacity(params.j_max as usize);
        for j in 0..params.j_max {
            let count = params.local_edgelets(j);
            if count > MAX_LOCAL_EDGELETS {
                return Err(WedgeError::Params(format!(
                    "{count} edgelets per square at scale {j}; set a vertex cap"
                )));
            }
            let m = params.vertex_count(j);
            let s = 1usize << (params.j_max - j);
            let table = (0..count)
                .map(|idx| {
                    let (v1, v2) = edgelet_from_index(idx);
                    if is_degenerate(v1, v2, m) {
                        return None;
                    }
                    let (a, b) = local_endpoints(s, v1, v2, m);
                    EdgeRuns::new(s, &block_coverage(s, a, b))
                })
                .collect();
            scales.push(table);
        }
        Ok(Self { params, scales })
    }

    pub fn params(&self) -> &DictionaryParams {
        &self.params
    }
}

#[derive(Debug, Clone, Copy)]
struct SquareStats {
    unsplit: f64,
    wedge: Option<(f64, u32)>,
}

/// Per-square best fits of one image; independent of `λ`.
pub struct FitStats {
    params: DictionaryParams,
    levels: Vec<Vec<SquareStats>>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub partition: EdRdp,
    /// `error_sq + λ · pieces`.
    pub cost: f64,
    pub error_sq: f64,
    pub pieces: usize,
}

fn check_size(f: &Raster, params: &DictionaryParams) -> Result<(), WedgeError> {
    if f.n != params.n() {
        return Err(WedgeError::Params(format!("array is {0}x{0} but J gives n = {1}", f.n, params.n())));
    }
    Ok(())
}

impl FitStats {
    pub fn compute(f: &Raster, dict: &Dictionary) -> Result<Self, WedgeError> {
        let params = dict.params;
        check_size(f, &params)?;
        let n = f.n;
        let scale = 1.0 / (n * n) as f64;
        let mut prefix = vec![0.0; n * (n + 1)];
        for r in 0..n {
            for c in 0..n {
                prefix[r * (n + 1) + c + 1] = prefix[r * (n + 1) + c] + f.data[r * n + c];
            }
        }
        let mut levels = Vec::with_capacity(params.j_max as usize + 1);
        for j in 0..=params.j_max {
            let per_side = 1u32 << j;
            let mut level = Vec::with_capacity((per_side * per_side) as usize);
            for iy in 0..per_side {
                for ix in 0..per_side {
                    let (r0, c0, s) = DyadicSquare { j, ix, iy }.pixel_block(params.j_max);
                    let count = (s * s) as f64;
                    let sum: f64 = (r0..r0 + s).map(|r| prefix[r * (n + 1) + c0 + s] - prefix[r * (n + 1) + c0]).sum();
                    let mean = sum / count;
                    let unsplit: f64 = (r0..r0 + s)
                        .flat_map(|r| f.data[r * n + c0..][..s].iter())
                        .map(|v| (v - mean) * (v - mean))
                        .sum();
                    let mut wedge: Option<(f64, u32)> = None;
                    if let Some(table) = dict.scales.get(j as usize) {
                        for (idx, runs) in table.iter().enumerate() {
                            let Some(e) = runs else { continue };
                            let mut s_a = 0.0;
                            for (r, &(lo, hi, fs, fe)) in e.rows.iter().enumerate() {
                                let base = (r0 + r) * (n + 1) + c0;
                                s_a += prefix[base + hi as usize] - prefix[base + lo as usize];
                                let row = &f.data[(r0 + r) * n + c0..];
                                s_a += e.frac[fs as usize..fe as usize].iter().map(|&(c, a)| a * row[c as usize]).sum::<f64>();
                            }
                            let b = s_a - mean * e.a1;
                            let err = (unsplit - b * b * e.gram).max(0.0);
                            if wedge.is_none_or(|(w, _)| err < w) {
                                wedge = Some((err, idx as u32));
                            }
                        }
                    }
                    level.push(SquareStats { unsplit: unsplit * scale, wedge: wedge.map(|(e, i)| (e * scale, i)) });
                }
            }
            levels.push(level);
        }
        Ok(Self { params, levels })
    }

    /// Bottom-up dynamic program over the quadtree.
    ///
    /// Ties prefer the unsplit square, then the edgelet split (smallest
    /// index already wins inside [`FitStats::compute`]), then the quad split.
    pub fn select(&self, lambda: f64) -> FitResult {
        #[derive(Clone, Copy)]
        enum Choice {
            Leaf,
            Wedge(u32),
            Quad,
        }
        let jm = self.params.j_max as usize;
        let mut cost: Vec<Vec<(f64, f64, usize)>> = vec![Vec::new(); jm + 1];
        let mut choice: Vec<Vec<Choice>> = vec![Vec::new(); jm + 1];
        for j in (0..=jm).rev() {
            let per_side = 1usize << j;
            for (k, st) in self.levels[j].iter().enumerate() {
                let mut best = (st.unsplit + lambda, st.unsplit, 1usize);
                let mut pick = Choice::Leaf;
                if let Some((e, idx)) = st.wedge {
                    if e + 2.0 * lambda < best.0 {
                        best = (e + 2.0 * lambda, e, 2);
                        pick = Choice::Wedge(idx);
                    }
                }
                if j < jm {
                    let (iy, ix) = (k / per_side, k % per_side);
                    let child = |dy: usize, dx: usize| cost[j + 1][(2 * iy + dy) * 2 * per_side + 2 * ix + dx];
                    let kids = [child(0, 0), child(0, 1), child(1, 0), child(1, 1)];
                    let total = kids.iter().fold((0.0, 0.0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
                    if total.0 < best.0 {
                        best = total;
                        pick = Choice::Quad;
                    }
                }
                cost[j].push(best);
                choice[j].push(pick);
            }
        }
        let mut leaves = Vec::new();
        let mut stack = vec![DyadicSquare::ROOT];
        while let Some(sq) = stack.pop() {
            let k = (sq.iy as usize) * (1 << sq.j) + sq.ix as usize;
            match choice[sq.j as usize][k] {
                Choice::Leaf => leaves.push(EdRdpLeaf { square: sq, split: None }),
                Choice::Wedge(idx) => {
                    let (v1, v2) = edgelet_from_index(idx as u64);
                    for side in 0..2 {
                        leaves.push(EdRdpLeaf { square: sq, split: Some(Wedge { v1: v1 as u32, v2: v2 as u32, side }) });
                    }
                }
                Choice::Quad => stack.extend(sq.children().iter().rev()),
            }
        }
        let (total, error_sq, pieces) = cost[0][0];
        FitResult { partition: EdRdp { params: self.params, leaves }, cost: total, error_sq, pieces }
    }
}

/// Global minimizer of `‖f - Ave(f | P)‖² + λ · #pieces` over the capped dictionary.
pub fn fit_rdp(f: &Raster, params: DictionaryParams, lambda: f64) -> Result<FitResult, WedgeError> {
    if !(lambda >= 0.0) {
        return Err(WedgeError::Params(format!("lambda must be nonnegative, got {lambda}")));
    }
    let dict = Dictionary::new(params)?;
    Ok(FitStats::compute(f, &dict)?.select(lambda))
}

#[derive(Debug, Clone)]
pub struct Projection {
    /// `f_P`, the coefficient of the unnormalized mask `1̃_P`.
    pub coefficients: Vec<f64>,
    /// `‖1̃_P‖` in `L²([0,1]²)`.
    pub norms: Vec<f64>,
    pub reconstruction: Raster,
}

impl Projection {
    /// `θ_P = f_P ‖1̃_P‖`, the coefficient of `φ_P = 1̃_P / ‖1̃_P‖`.
    pub fn thetas(&self) -> Vec<f64> {
        self.coefficients.iter().zip(&self.norms).map(|(c, n)| c * n).collect()
    }
}

/// Least-squares projection onto the span of the leaf masks.
///
/// Masks of different squares have disjoint pixel supports; the two
/// wedgelets of one square share their boundary pixels and are solved
/// jointly through their 2×2 Gram system.
pub fn project(f: &Raster, partition: &EdRdp) -> Result<Projection, WedgeError> {
    let params = &partition.params;
    check_size(f, params)?;
    let n = f.n;
    let scale = 1.0 / (n * n) as f64;
    let mut coefficients = Vec::with_capacity(partition.leaves.len());
    let mut norms = Vec::with_capacity(partition.leaves.len());
    let mut recon = Raster::zeros(n);
    let leaves = &partition.leaves;
    let mut i = 0;
    while i < leaves.len() {
        let len = leaves[i..].iter().take_while(|l| l.square == leaves[i].square).count();
        if len > 2 {
            return Err(WedgeError::Partition(format!("{len} leaves share square {:?}", leaves[i].square)));
        }
        let masks: Vec<Mask> = leaves[i..i + len].iter().map(|l| wedge_mask(l, params)).collect::<Result<_, _>>()?;
        let gram: Vec<Vec<f64>> = masks.iter().map(|a| masks.iter().map(|b| a.dot(b)).collect()).collect();
        let rhs: Vec<f64> = masks.iter().map(|m| m.dot_array(&f.data, n)).collect();
        if gram.iter().enumerate().any(|(k, row)| row[k] <= 0.0) {
            return Err(WedgeError::Degenerate(format!("zero-norm mask in {:?}", leaves[i].square)));
        }
        let coef = if len == 1 {
            vec![rhs[0] / gram[0][0]]
        } else {
            let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
            if det <= 1e-12 * gram[0][0] * gram[1][1] {
                return Err(WedgeError::Degenerate(format!("wedgelets of {:?} are linearly dependent", leaves[i].square)));
            }
            vec![
                (gram[1][1] * rhs[0] - gram[0][1] * rhs[1]) / det,
                (gram[0][0] * rhs[1] - gram[1][0] * rhs[0]) / det,
            ]
        };
        for (k, m) in masks.iter().enumerate() {
            m.add_to(&mut recon.data, n, coef[k]);
            coefficients.push(coef[k]);
            norms.push((gram[k][k] * scale).sqrt());
        }
        i += len;
    }
    Ok(Projection { coefficients, norms, reconstruction: recon })
}

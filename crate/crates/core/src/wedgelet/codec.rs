//! Bit-exact container for quantized ED-RDP expansions.
//!
//! Layout: `"WDGL"`, version byte, `J` byte, `K` byte, `M_cap` as `u16` LE
//! (0 for uncapped), leaf count as `u32` LE, then MSB-first bit fields per
//! leaf, zero-padded to a byte boundary:
//!
//! ```text
//! scale j   ⌈log₂(J+1)⌉ bits
//! ix, iy    j bits each
//! split     1 bit
//!   index   ⌈log₂ binom(M_j, 2)⌉ bits (colex rank of v1 < v2)
//!   side    1 bit
//! coeff     q + (n²+1) in ⌈log₂(2n²+3)⌉ bits, θ = q/n²
//! ```
//!
//! Leaves whose coefficient quantizes to zero are left out.

use serde::Serialize;

use super::fit::{project, Dictionary, FitStats};
use super::{edgelet_from_index, edgelet_index, is_degenerate, wedge_mask, wedge_mask_at, DictionaryParams, DyadicSquare, EdRdp, EdRdpLeaf, Wedge, WedgeError};
use crate::cartoon::Raster;
use crate::quantizer::weight_code;

pub const MAGIC: &[u8; 4] = b"WDGL";
pub const FORMAT_VERSION: u8 = 1;
const HEADER_LEN: usize = 13;

fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    fn push(&mut self, value: u64, width: u32) {
        for b in (0..width).rev() {
            if self.len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if value >> b & 1 == 1 {
                *self.bytes.last_mut().expect("pushed above") |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl BitReader<'_> {
    fn read(&mut self, width: u32) -> Result<u64, WedgeError> {
        if self.pos + width as u64 > 8 * self.bytes.len() as u64 {
            return Err(WedgeError::Corrupt("truncated payload".into()));
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.bytes[(self.pos / 8) as usize];
            v = v << 1 | (byte >> (7 - self.pos % 8) & 1) as u64;
            self.pos += 1;
        }
        Ok(v)
    }
}

struct Widths {
    scale: u32,
    coeff: u32,
    offset: u64,
}

impl Widths {
    fn new(p: &DictionaryParams) -> Self {
        let n2 = (p.n() * p.n()) as u64;
        Self { scale: ceil_log2(p.j_max as u64 + 1), coeff: ceil_log2(2 * n2 + 3), offset: n2 + 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WedgeCode {
    pub params: DictionaryParams,
    pub leaf_count: u32,
    pub payload: Vec<u8>,
}

impl WedgeCode {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.params.j_max as u8);
        out.push(self.params.k as u8);
        out.extend_from_slice(&(self.params.m_cap.unwrap_or(0) as u16).to_le_bytes());
        out.extend_from_slice(&self.leaf_count.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WedgeError> {
        if bytes.len() < HEADER_LEN {
            return Err(WedgeError::Corrupt("stream shorter than its header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(WedgeError::Corrupt("bad magic".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(WedgeError::Corrupt(format!("unsupported version {}", bytes[4])));
        }
        let cap = u16::from_le_bytes([bytes[7], bytes[8]]) as u32;
        let params = DictionaryParams::new(bytes[5] as u32, bytes[6] as u32, (cap != 0).then_some(cap))
            .map_err(|e| WedgeError::Corrupt(format!("bad header: {e}")))?;
        let leaf_count = u32::from_le_bytes(bytes[9..13].try_into().expect("4 bytes"));
        Ok(Self { params, leaf_count, payload: bytes[HEADER_LEN..].to_vec() })
    }

    /// Total length `ℓ` in bits, header included.
    pub fn total_bits(&self) -> u64 {
        8 * (HEADER_LEN + self.payload.len()) as u64
    }
}

/// Quantize the projection of `f` onto `partition` and serialize it.
pub fn encode_on(f: &Raster, partition: &EdRdp) -> Result<WedgeCode, WedgeError> {
    let p = &partition.params;
    let proj = project(f, partition)?;
    let w = Widths::new(p);
    let eta = p.eta();
    let limit = w.offset as f64;
    let mut bits = BitWriter::default();
    let mut count = 0u32;
    for (leaf, theta) in partition.leaves.iter().zip(proj.thetas()) {
        let q = weight_code(theta, eta, 1);
        if q.abs() > limit {
            return Err(WedgeError::Range(format!("coefficient {theta} is outside [-1-η, 1+η]")));
        }
        if q == 0.0 {
            continue;
        }
        let sq = leaf.square;
        bits.push(sq.j as u64, w.scale);
        bits.push(sq.ix as u64, sq.j);
        bits.push(sq.iy as u64, sq.j);
        match leaf.split {
            None => bits.push(0, 1),
            Some(wedge) => {
                bits.push(1, 1);
                bits.push(edgelet_index(wedge.v1 as u64, wedge.v2 as u64), ceil_log2(p.local_edgelets(sq.j)));
                bits.push(wedge.side as u64, 1);
            }
        }
        bits.push((q as i64 + w.offset as i64) as u64, w.coeff);
        count += 1;
    }
    Ok(WedgeCode { params: *p, leaf_count: count, payload: bits.bytes })
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub array: Raster,
    pub leaves: Vec<EdRdpLeaf>,
    /// Integer codes `q` with `θ = q η`.
    pub codes: Vec<i64>,
    pub warnings: Vec<String>,
}

impl Decoded {
    pub fn partition(&self, params: DictionaryParams) -> EdRdp {
        EdRdp { params, leaves: self.leaves.clone() }
    }
}

pub fn decode(code: &WedgeCode) -> Result<Decoded, WedgeError> {
    let p = code.params;
    let n = p.n();
    let w = Widths::new(&p);
    let eta = p.eta();
    let mut reader = BitReader { bytes: &code.payload, pos: 0 };
    let mut array = Raster::zeros(n);
    let mut cover = vec![0u32; n * n];
    let mut leaves = Vec::with_capacity(code.leaf_count as usize);
    let mut codes = Vec::with_capacity(code.leaf_count as usize);
    let mut warnings = Vec::new();
    let mut last_square = None;
    for _ in 0..code.leaf_count {
        let j = reader.read(w.scale)? as u32;
        if j > p.j_max {
            return Err(WedgeError::Corrupt(format!("scale {j} exceeds J = {}", p.j_max)));
        }
        let square = DyadicSquare { j, ix: reader.read(j)? as u32, iy: reader.read(j)? as u32 };
        let split = if reader.read(1)? == 1 {
            let count = p.local_edgelets(j);
            let idx = reader.read(ceil_log2(count))?;
            let (v1, v2) = edgelet_from_index(idx);
            if idx >= count || is_degenerate(v1, v2, p.vertex_count(j)) {
                return Err(WedgeError::Corrupt(format!("invalid edgelet index {idx} at scale {j}")));
            }
            Some(Wedge { v1: v1 as u32, v2: v2 as u32, side: reader.read(1)? as u8 })
        } else {
            None
        };
        let field = reader.read(w.coeff)?;
        if field > 2 * w.offset {
            return Err(WedgeError::Corrupt(format!("coefficient field {field} out of range")));
        }
        let q = field as i64 - w.offset as i64;
        let leaf = EdRdpLeaf { square, split };
        let mask = wedge_mask(&leaf, &p).map_err(|e| WedgeError::Corrupt(e.to_string()))?;
        let norm = mask.sum_sq().sqrt() / n as f64;
        if norm == 0.0 {
            return Err(WedgeError::Corrupt(format!("zero-area leaf {leaf:?}")));
        }
        mask.add_to(&mut array.data, n, q as f64 * eta / norm);
        if last_square != Some(square) {
            let (r0, c0, s) = square.pixel_block(p.j_max);
            for r in r0..r0 + s {
                for c in &mut cover[r * n + c0..][..s] {
                    *c += 1;
                }
            }
            last_square = Some(square);
        }
        leaves.push(leaf);
        codes.push(q);
    }
    let rest = 8 * code.payload.len() as u64 - reader.pos;
    if rest >= 8 || reader.read(rest as u32)? != 0 {
        return Err(WedgeError::Corrupt("trailing data after the last leaf".into()));
    }
    let overlaps = cover.iter().filter(|&&c| c > 1).count();
    if overlaps > 0 {
        warnings.push(format!("{overlaps} pixels covered by more than one leaf square"));
    }
    Ok(Decoded { array, leaves, codes, warnings })
}

/// Reconstruction on the finer grid `2^{j_render}`: each leaf keeps its
/// amplitude `θ_P / ‖1̃_P‖` (norm at the code's own resolution) and is
/// re-rasterized exactly at the finer pixels.
pub fn render(code: &WedgeCode, j_render: u32) -> Result<Raster, WedgeError> {
    let d = decode(code)?;
    let p = code.params;
    let n = p.n() as f64;
    let fine = 1usize << j_render;
    let mut out = Raster::zeros(fine);
    for (leaf, q) in d.leaves.iter().zip(&d.codes) {
        let norm = wedge_mask(leaf, &p)?.sum_sq().sqrt() / n;
        wedge_mask_at(leaf, &p, j_render)?.add_to(&mut out.data, fine, *q as f64 * p.eta() / norm);
    }
    Ok(out)
}

/// Re-encode a decoded stream on its own leaves without refitting.
pub fn reencode(code: &WedgeCode) -> Result<WedgeCode, WedgeError> {
    let d = decode(code)?;
    encode_on(&d.array, &d.partition(code.params))
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodeReport {
    pub lambda: f64,
    pub leaves: usize,
    pub squares: usize,
    pub pieces: usize,
    /// `‖f - Ave(f|P)‖` before quantization.
    pub fit_error: f64,
    /// `‖f - decode(encode(f))‖`.
    pub l2_error: f64,
    pub total_bits: u64,
}

fn encode_with(f: &Raster, stats: &FitStats, lambda: f64, error: &impl Fn(&WedgeCode, &Raster) -> f64) -> Result<(WedgeCode, EncodeReport), WedgeError> {
    let fit = stats.select(lambda);
    let code = encode_on(f, &fit.partition)?;
    let decoded = decode(&code)?;
    let report = EncodeReport {
        lambda,
        leaves: fit.partition.leaves.len(),
        squares: fit.partition.square_count(),
        pieces: fit.pieces,
        fit_error: fit.error_sq.sqrt(),
        l2_error: error(&code, &decoded.array),
        total_bits: code.total_bits(),
    };
    Ok((code, report))
}

/// Fit with penalty `λ`, quantize and serialize.
pub fn encode(f: &Raster, params: DictionaryParams, lambda: f64) -> Result<(WedgeCode, EncodeReport), WedgeError> {
    if !(lambda >= 0.0) {
        return Err(WedgeError::Params(format!("lambda must be nonnegative, got {lambda}")));
    }
    let dict = Dictionary::new(params)?;
    encode_with(f, &FitStats::compute(f, &dict)?, lambda, &|_: &WedgeCode, g: &Raster| f.sub(g).norm())
}

const LAMBDA_FLOOR: f64 = 1e-14;
const BISECTION_STEPS: usize = 40;

/// Largest `λ` (by bisection in `log λ` over `[10⁻¹⁴, 1]`) whose decoded
/// error is at most `eps`.
pub fn encode_target(f: &Raster, params: DictionaryParams, eps: f64) -> Result<(WedgeCode, EncodeReport), WedgeError> {
    encode_target_with(f, params, eps, |_: &WedgeCode, g: &Raster| f.sub(g).norm())
}

/// [`encode_target`] with a caller-supplied error of a code and its decoded array.
pub fn encode_target_with(
    f: &Raster,
    params: DictionaryParams,
    eps: f64,
    error: impl Fn(&WedgeCode, &Raster) -> f64,
) -> Result<(WedgeCode, EncodeReport), WedgeError> {
    if !(eps > 0.0) {
        return Err(WedgeError::Params(format!("target error must be positive, got {eps}")));
    }
    let dict = Dictionary::new(params)?;
    let stats = FitStats::compute(f, &dict)?;
    let top = encode_with(f, &stats, 1.0, &error)?;
    if top.1.l2_error <= eps {
        return Ok(top);
    }
    let mut good = encode_with(f, &stats, LAMBDA_FLOOR, &error)?;
    if good.1.l2_error > eps {
        return Err(WedgeError::Unreachable { target: eps, best: good.1.l2_error });
    }
    let (mut lo, mut hi) = (LAMBDA_FLOOR.ln(), 0.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let trial = encode_with(f, &stats, mid.exp(), &error)?;
        if trial.1.l2_error <= eps {
            lo = mid;
            good = trial;
        } else {
            hi = mid;
        }
    }
    Ok(good)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartoon::{rasterize, StarFunction};

    fn disc(n: usize) -> Raster {
        rasterize(&StarFunction::disc((0.5, 0.5), 0.25, 2.0, 1.0), n, 8).unwrap()
    }

    #[test]
    fn widths() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(6), 3);
        assert_eq!(ceil_log2(515), 10);
    }

    #[test]
    fn bits_are_msb_first() {
        let mut w = BitWriter::default();
        w.push(0b101, 3);
        w.push(1, 1);
        w.push(0xff, 8);
        assert_eq!(w.bytes, vec![0b1011_1111, 0b1111_0000]);
        let mut r = BitReader { bytes: &w.bytes, pos: 0 };
        assert_eq!(r.read(3).unwrap(), 5);
        assert_eq!(r.read(9).unwrap(), 0x1ff);
        assert!(r.read(5).is_err());
    }

    #[test]
    fn constant_round_trip() {
        let p = DictionaryParams::new(4, 0, Some(16)).unwrap();
        let f = Raster { n: 16, data: vec![0.5; 256] };
        let (code, report) = encode(&f, p, 1e-3).unwrap();
        assert_eq!(code.leaf_count, 1);
        let d = decode(&code).unwrap();
        assert!(d.array.data.iter().all(|v| (v - 0.5).abs() <= p.eta()));
        assert_eq!(report.total_bits, 8 * (13 + 2));
    }

    #[test]
    fn coefficient_rounding_example() {
        let p = DictionaryParams::new(4, 0, Some(16)).unwrap();
        let f = Raster { n: 16, data: vec![0.3001; 256] };
        let code = encode_on(&f, &EdRdp::trivial(p)).unwrap();
        let d = decode(&code).unwrap();
        assert_eq!(d.codes, vec![77]);
        assert!((d.array.data[0] - 77.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn disc_round_trip_is_exact() {
        let p = DictionaryParams::new(6, 0, Some(32)).unwrap();
        let f = disc(64);
        let (code, report) = encode(&f, p, 1e-5).unwrap();
        let bytes = code.to_bytes();
        let parsed = WedgeCode::from_bytes(&bytes).unwrap();
        assert_eq!(parsed, code);
        assert_eq!(reencode(&code).unwrap(), code);
        let d = decode(&code).unwrap();
        assert!(d.warnings.is_empty());
        let again = project(&d.array, &d.partition(p)).unwrap();
        let codes: Vec<i64> = again.thetas().iter().map(|t| weight_code(*t, p.eta(), 1) as i64).collect();
        assert_eq!(codes, d.codes);
        assert!(report.l2_error <= report.fit_error + 64.0 * p.eta() / 2.0);
    }

    #[test]
    fn corruption_is_rejected() {
        let p = DictionaryParams::new(5, 0, Some(16)).unwrap();
        let (code, _) = encode(&disc(32), p, 1e-4).unwrap();
        let mut bytes = code.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(WedgeCode::from_bytes(&bytes), Err(WedgeError::Corrupt(_))));
        let mut short = code.clone();
        short.payload.truncate(short.payload.len() / 2);
        assert!(matches!(decode(&short), Err(WedgeError::Corrupt(_))));
        let mut long = code;
        long.payload.push(0);
        assert!(matches!(decode(&long), Err(WedgeError::Corrupt(_))));
    }

    #[test]
    fn render_matches_decode_at_own_scale() {
        let p = DictionaryParams::new(5, 0, Some(16)).unwrap();
        let (code, _) = encode(&disc(32), p, 1e-4).unwrap();
        let d = decode(&code).unwrap();
        let same = render(&code, 5).unwrap();
        assert!(same.sub(&d.array).norm() < 1e-12);
        let fine = render(&code, 7).unwrap();
        assert!((fine.mean() - d.array.mean()).abs() < 1e-9);
        assert!(render(&code, 4).is_err());
    }

    #[test]
    fn target_error_is_met() {
        let p = DictionaryParams::new(6, 0, Some(32)).unwrap();
        let f = disc(64);
        let (_, report) = encode_target(&f, p, 0.05).unwrap();
        assert!(report.l2_error <= 0.05);
        assert!(matches!(encode_target(&f, p, 1e-9), Err(WedgeError::Unreachable { .. })));
    }
}

//! Binary arc images.
//!
//! The domain `[0, width-1] x [0, height-1]` is split into `n x n` half-open
//! cells, the last row and column closed, so every point of the domain lies in
//! exactly one cell. A cell is set iff some point of some arc segment lies in
//! it. Traversal is exact: coordinates are snapped to multiples of 2^-24 and
//! every cell boundary test is an integer comparison.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::morse::SeparatrixArc;

/// `n x n` bits, row-major, row 0 at `y = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcImage {
    n: usize,
    bits: Vec<u8>,
    pub meta: BTreeMap<String, String>,
}

impl ArcImage {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("image resolution must be >= 1"));
        }
        Ok(Self { n, bits: vec![0; n * n], meta: BTreeMap::new() })
    }

    /// Entries must be 0 or 1.
    pub fn from_bits(n: usize, bits: Vec<u8>) -> Result<Self> {
        if n == 0 || bits.len() != n * n {
            return Err(Error::input(format!("expected {} bits for n={n}, got {}", n * n, bits.len())));
        }
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::input(format!("bit {i} is {}, expected 0 or 1", bits[i])));
        }
        Ok(Self { n, bits, meta: BTreeMap::new() })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.bits[row * self.n + col]
    }

    pub fn set(&mut self, col: usize, row: usize) {
        self.bits[row * self.n + col] = 1;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.bits.iter().map(|&b| b as f32).collect()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    /// Bitwise OR; both images must share a resolution.
    pub fn union(&self, other: &ArcImage) -> Result<ArcImage> {
        if self.n != other.n {
            return Err(Error::input(format!("resolution mismatch {} vs {}", self.n, other.n)));
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect();
        Ok(ArcImage { n: self.n, bits, meta: self.meta.clone() })
    }

    /// 2x2 max-pool. `n` must be even.
    pub fn max_pool2(&self) -> Result<ArcImage> {
        if !self.n.is_multiple_of(2) {
            return Err(Error::param(format!("cannot pool odd resolution {}", self.n)));
        }
        let m = self.n / 2;
        let mut out = ArcImage::zeros(m)?;
        for r in 0..self.n {
            for c in 0..self.n {
                if self.get(c, r) == 1 {
                    out.set(c / 2, r / 2);
                }
            }
        }
        Ok(out)
    }
}

const FRAC_BITS: u32 = 24;
const SCALE: f64 = (1u64 << FRAC_BITS) as f64;

/// One axis: a coordinate `q` (in units of 2^-24) scaled by `n` lies in cell
/// `floor(q * n / (extent * 2^24))`, clamped to `n - 1`.
#[derive(Clone, Copy)]
struct Axis {
    n: i128,
    /// Cell width in scaled units: `extent * 2^24`.
    cell: i128,
}

impl Axis {
    fn new(extent: usize, n: usize) -> Self {
        Axis { n: n as i128, cell: (extent as i128) << FRAC_BITS }
    }

    fn clamp(&self, c: i128) -> usize {
        c.clamp(0, self.n - 1) as usize
    }

    /// Cell of the rational coordinate `num / den` (scaled), `den > 0`.
    fn floor_cell(&self, num: i128, den: i128) -> i128 {
        num.div_euclid(den * self.cell)
    }

    /// Index of the first cell boundary at or above `num / den`.
    fn ceil_cell(&self, num: i128, den: i128) -> i128 {
        -(-num).div_euclid(den * self.cell)
    }
}

fn quantize(v: f64) -> i128 {
    (v * SCALE).round() as i128
}

/// Rasterize `arcs` over a `width x height` field domain at resolution `n`.
pub fn rasterize(arcs: &[SeparatrixArc], domain: (usize, usize), n: usize) -> Result<ArcImage> {
    let (width, height) = domain;
    if width < 2 || height < 2 {
        return Err(Error::param(format!("domain must be at least 2x2, got {width}x{height}")));
    }
    let mut img = ArcImage::zeros(n)?;
    let (xmax, ymax) = ((width - 1) as f64, (height - 1) as f64);
    for (i, arc) in arcs.iter().enumerate() {
        if let Some(p) = arc.points.iter().find(|p| !(0.0..=xmax).contains(&p[0]) || !(0.0..=ymax).contains(&p[1])) {
            return Err(Error::input(format!(
                "arc {i} has point ({}, {}) outside the domain [0, {xmax}] x [0, {ymax}]",
                p[0], p[1]
            )));
        }
    }
    let ax = Axis::new(width - 1, n);
    let ay = Axis::new(height - 1, n);
    let nn = n as i128;
    for arc in arcs {
        let pts: Vec<(i128, i128)> = arc.points.iter().map(|p| (quantize(p[0]) * nn, quantize(p[1]) * nn)).collect();
        if let [only] = pts[..] {
            img.set(ax.clamp(ax.floor_cell(only.0, 1)), ay.clamp(ay.floor_cell(only.1, 1)));
        }
        for w in pts.windows(2) {
            segment(&mut img, ax, ay, w[0], w[1]);
        }
    }
    Ok(img)
}

/// Mark every cell containing a point of the closed segment `p`-`q`.
fn segment(img: &mut ArcImage, ax: Axis, ay: Axis, p: (i128, i128), q: (i128, i128)) {
    let (p, q) = if p.0 <= q.0 { (p, q) } else { (q, p) };
    let (du, dv) = (q.0 - p.0, q.1 - p.1);
    if du == 0 {
        let col = ax.clamp(ax.floor_cell(p.0, 1));
        let (lo, hi) = (p.1.min(q.1), p.1.max(q.1));
        for row in ay.clamp(ay.floor_cell(lo, 1))..=ay.clamp(ay.floor_cell(hi, 1)) {
            img.set(col, row);
        }
        return;
    }
    let c0 = ax.clamp(ax.floor_cell(p.0, 1));
    let c1 = ax.clamp(ax.floor_cell(q.0, 1));
    // v(u) * du = p.1 * du + dv * (u - p.0): the segment's scaled y, times du.
    let v_num = |u: i128| p.1 * du + dv * (u - p.0);
    for c in c0..=c1 {
        let left = (c as i128) * ax.cell;
        let right = left + ax.cell;
        let a_lo = p.0.max(left);
        // The segment leaves column c at its right boundary unless it ends
        // first, or c is the closed last column.
        let (a_hi, hi_included) = if q.0 < right || c == c1 { (q.0, true) } else { (right, false) };
        let (lo_num, hi_num) = (v_num(a_lo), v_num(a_hi));
        let (r_lo, r_hi) = if dv > 0 {
            let top = if hi_included { ay.floor_cell(hi_num, du) } else { ay.ceil_cell(hi_num, du) - 1 };
            let bottom = ay.floor_cell(lo_num, du);
            (bottom, top.max(bottom))
        } else if dv < 0 {
            (ay.floor_cell(hi_num, du), ay.floor_cell(lo_num, du))
        } else {
            let r = ay.floor_cell(p.1, 1);
            (r, r)
        };
        for row in ay.clamp(r_lo)..=ay.clamp(r_hi) {
            img.set(c, row);
        }
    }
}

fn comment_line(meta: &BTreeMap<String, String>) -> String {
    let json = serde_json::to_string(meta).expect("metadata serializes");
    format!("# {json}\n")
}

/// P4 bitmap: rows packed MSB first, each row padded to a whole byte. The
/// metadata is written as a one-line JSON comment.
pub fn encode_pbm(img: &ArcImage) -> Vec<u8> {
    let n = img.n;
    let mut out = format!("P4\n{}{n} {n}\n", comment_line(&img.meta)).into_bytes();
    let row_bytes = n.div_ceil(8);
    for r in 0..n {
        let mut row = vec![0u8; row_bytes];
        for c in 0..n {
            if img.get(c, r) == 1 {
                row[c / 8] |= 0x80 >> (c % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

struct Header {
    magic: [u8; 2],
    fields: Vec<usize>,
    comments: Vec<String>,
    payload: usize,
}

/// Parse a netpbm header with `count` numeric fields after the magic.
fn parse_header(bytes: &[u8], count: usize) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::format_at_offset(0, "not a netpbm file"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut i = 2;
    let mut fields = Vec::new();
    let mut comments = Vec::new();
    while fields.len() < count {
        match bytes.get(i) {
            None => return Err(Error::format_at_offset(i, "truncated header")),
            Some(b'#') => {
                let end = bytes[i..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |e| i + e);
                comments.push(String::from_utf8_lossy(&bytes[i + 1..end]).trim().to_string());
                i = end;
            }
            Some(b) if b.is_ascii_whitespace() => i += 1,
            Some(b) if b.is_ascii_digit() => {
                let start = i;
                while bytes.get(i).is_some_and(u8::is_ascii_digit) {
                    i += 1;
                }
                let text = std::str::from_utf8(&bytes[start..i]).unwrap();
                let v = text.parse().map_err(|_| Error::format_at_offset(start, "header number overflows"))?;
                fields.push(v);
            }
            Some(_) => return Err(Error::format_at_offset(i, "unexpected byte in header")),
        }
    }
    match bytes.get(i) {
        Some(b) if b.is_ascii_whitespace() => i += 1,
        _ => return Err(Error::format_at_offset(i, "missing whitespace after header")),
    }
    Ok(Header { magic, fields, comments, payload: i })
}

fn meta_from_comments(comments: &[String]) -> BTreeMap<String, String> {
    comments
        .iter()
        .find_map(|c| serde_json::from_str(c).ok())
        .unwrap_or_default()
}

pub fn decode_pbm(bytes: &[u8]) -> Result<ArcImage> {
    let h = parse_header(bytes, 2)?;
    if &h.magic != b"P4" {
        return Err(Error::format_at_offset(0, "expected P4 magic"));
    }
    let [w, ht] = [h.fields[0], h.fields[1]];
    if w != ht || w == 0 {
        return Err(Error::format_at_offset(3, format!("expected a square image, got {w}x{ht}")));
    }
    let row_bytes = w.div_ceil(8);
    let payload = &bytes[h.payload..];
    if payload.len() != row_bytes * w {
        return Err(Error::format_at_offset(
            h.payload,
            format!("payload is {} bytes, expected {}", payload.len(), row_bytes * w),
        ));
    }
    let mut img = ArcImage::zeros(w)?;
    for r in 0..w {
        for c in 0..w {
            if payload[r * row_bytes + c / 8] & (0x80 >> (c % 8)) != 0 {
                img.set(c, r);
            }
        }
    }
    img.meta = meta_from_comments(&h.comments);
    Ok(img)
}

pub fn store_image(img: &ArcImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pbm(img)).map_err(|e| Error::io(path, e))
}

pub fn load_image(path: &Path) -> Result<ArcImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pbm(&bytes)
}

/// Grayscale image with 8-bit samples, for decoder reconstructions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub meta: BTreeMap<String, String>,
}

impl GrayImage {
    /// Quantize values in `[0, 1]` to `round(255 v)`.
    pub fn from_unit(width: usize, height: usize, values: &[f32]) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::input(format!("expected {} values, got {}", width * height, values.len())));
        }
        let pixels = values.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
        Ok(Self { width, height, pixels, meta: BTreeMap::new() })
    }
}

/// P5 graymap with maxval 255.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::new();
    write!(out, "P5\n{}{} {}\n255\n", comment_line(&img.meta), img.width, img.height).unwrap();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes, 3)?;
    if &h.magic != b"P5" {
        return Err(Error::format_at_offset(0, "expected P5 magic"));
    }
    let [width, height, maxval] = [h.fields[0], h.fields[1], h.fields[2]];
    if maxval != 255 {
        return Err(Error::format_at_offset(h.payload - 1, format!("maxval {maxval}, only 255 is supported")));
    }
    let payload = &bytes[h.payload..];
    if payload.len() != width * height {
        return Err(Error::format_at_offset(
            h.payload,
            format!("payload is {} bytes, expected {}", payload.len(), width * height),
        ));
    }
    Ok(GrayImage { width, height, pixels: payload.to_vec(), meta: meta_from_comments(&h.comments) })
}

pub fn store_gray(img: &GrayImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

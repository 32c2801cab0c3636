//! Scalar fields on regular grids: synthetic families, noise, and storage.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Samples of a scalar function on a `width` × `height` grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2D {
    width: usize,
    height: usize,
    values: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

impl ScalarField2D {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::param(format!(
                "field must be at least 2x2, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::input(format!(
                "expected {} values for a {width}x{height} field, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite value at sample {i}")));
        }
        Ok(Self {
            width,
            height,
            values,
            meta: BTreeMap::new(),
        })
    }

    /// Evaluate `f(x, y)` at every sample index.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x as f64, y as f64));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    /// Round every sample to the nearest `f32`, the precision of the MSF1 format.
    pub fn to_storage_precision(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = *v as f32 as f64;
        }
        out
    }

    /// Copy of the `w` × `h` window whose lower-left sample is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::param(format!(
                "window {w}x{h} at ({x0},{y0}) exceeds {}x{} field",
                self.width, self.height
            )));
        }
        let mut values = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            values.extend_from_slice(&self.values[y * self.width + x0..y * self.width + x0 + w]);
        }
        let mut out = Self::new(w, h, values)?;
        out.meta = self.meta.clone();
        out.meta.insert("crop_x".into(), x0.to_string());
        out.meta.insert("crop_y".into(), y0.to_string());
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Blobs,
    Sine,
    Rotsine,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Blobs, Family::Sine, Family::Rotsine];

    pub fn name(self) -> &'static str {
        match self {
            Family::Blobs => "blobs",
            Family::Sine => "sine",
            Family::Rotsine => "rotsine",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blobs" => Ok(Family::Blobs),
            "sine" => Ok(Family::Sine),
            "rotsine" => Ok(Family::Rotsine),
            other => Err(Error::param(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub center: (f64, f64),
    pub sigma: f64,
}

pub const BLOB_COUNT_RANGE: (usize, usize) = (2, 512);
pub const SIGMA_RANGE: (f64, f64) = (4.0, 32.0);
pub const ALPHA_RANGE: (i32, i32) = (5, 20);
pub const BETA_RANGE: (i32, i32) = (10, 40);
pub const ROTATION_RANGE: (i32, i32) = (10, 80);

/// Parameters of one synthetic field. Construct through [`SynthParams::blobs`],
/// [`SynthParams::sine`], [`SynthParams::rotsine`] or [`SynthParams::sample`],
/// all of which validate ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SynthParams {
    Blobs { blobs: Vec<Blob>, seed: u64 },
    Sine { alpha: i32, beta: i32, seed: u64 },
    Rotsine { alpha: i32, beta: i32, gamma: i32, delta: i32, seed: u64 },
}

fn check_int(name: &str, v: i32, (lo, hi): (i32, i32)) -> Result<()> {
    if v < lo || v > hi {
        return Err(Error::param(format!("{name}={v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl SynthParams {
    /// Explicit blob list. A single blob is accepted; the sampler draws
    /// between 2 and 512.
    pub fn blobs(blobs: Vec<Blob>, seed: u64) -> Result<Self> {
        if blobs.is_empty() || blobs.len() > BLOB_COUNT_RANGE.1 {
            return Err(Error::param(format!(
                "blob count {} outside [1, {}]",
                blobs.len(),
                BLOB_COUNT_RANGE.1
            )));
        }
        for (i, b) in blobs.iter().enumerate() {
            if !(SIGMA_RANGE.0..=SIGMA_RANGE.1).contains(&b.sigma) {
                return Err(Error::param(format!(
                    "blob {i}: sigma {} outside [{}, {}]",
                    b.sigma, SIGMA_RANGE.0, SIGMA_RANGE.1
                )));
            }
            if !(b.center.0.is_finite() && b.center.1.is_finite()) {
                return Err(Error::param(format!("blob {i}: non-finite center")));
            }
        }
        Ok(SynthParams::Blobs { blobs, seed })
    }

    pub fn sine(alpha: i32, beta: i32, seed: u64) -> Result<Self> {
        check_int("alpha", alpha, ALPHA_RANGE)?;
        check_int("beta", beta, BETA_RANGE)?;
        Ok(SynthParams::Sine { alpha, beta, seed })
    }

    pub fn rotsine(alpha: i32, beta: i32, gamma: i32, delta: i32, seed: u64) -> Result<Self> {
        check_int("alpha", alpha, ALPHA_RANGE)?;
        check_int("beta", beta, BETA_RANGE)?;
        check_int("|gamma|", gamma.abs(), ROTATION_RANGE)?;
        check_int("|delta|", delta.abs(), ROTATION_RANGE)?;
        Ok(SynthParams::Rotsine { alpha, beta, gamma, delta, seed })
    }

    /// Draw parameters for `family` on a `width` × `height` grid.
    pub fn sample(family: Family, width: usize, height: usize, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        match family {
            Family::Blobs => {
                let count = r.gen_range(BLOB_COUNT_RANGE.0..=BLOB_COUNT_RANGE.1);
                let blobs = (0..count)
                    .map(|_| {
                        let sigma = r.gen_range(SIGMA_RANGE.0..=SIGMA_RANGE.1);
                        let cx = r.gen_range(0.0..=(width - 1) as f64);
                        let cy = r.gen_range(0.0..=(height - 1) as f64);
                        Blob { center: (cx, cy), sigma }
                    })
                    .collect();
                SynthParams::Blobs { blobs, seed }
            }
            Family::Sine => SynthParams::Sine {
                alpha: r.gen_range(ALPHA_RANGE.0..=ALPHA_RANGE.1),
                beta: r.gen_range(BETA_RANGE.0..=BETA_RANGE.1),
                seed,
            },
            Family::Rotsine => {
                let alpha = r.gen_range(ALPHA_RANGE.0..=ALPHA_RANGE.1);
                let beta = r.gen_range(BETA_RANGE.0..=BETA_RANGE.1);
                let mut rot = || {
                    let m = r.gen_range(ROTATION_RANGE.0..=ROTATION_RANGE.1);
                    if r.gen_bool(0.5) {
                        -m
                    } else {
                        m
                    }
                };
                let gamma = rot();
                let delta = rot();
                SynthParams::Rotsine { alpha, beta, gamma, delta, seed }
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            SynthParams::Blobs { .. } => Family::Blobs,
            SynthParams::Sine { .. } => Family::Sine,
            SynthParams::Rotsine { .. } => Family::Rotsine,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SynthParams::Blobs { seed, .. }
            | SynthParams::Sine { seed, .. }
            | SynthParams::Rotsine { seed, .. } => *seed,
        }
    }

    /// Re-check ranges, for parameters that were deserialized or built by hand.
    pub fn validate(&self) -> Result<()> {
        match self {
            SynthParams::Blobs { blobs, seed } => Self::blobs(blobs.clone(), *seed).map(|_| ()),
            SynthParams::Sine { alpha, beta, seed } => Self::sine(*alpha, *beta, *seed).map(|_| ()),
            SynthParams::Rotsine { alpha, beta, gamma, delta, seed } => {
                Self::rotsine(*alpha, *beta, *gamma, *delta, *seed).map(|_| ())
            }
        }
    }
}

/// Sum of unit-amplitude isotropic Gaussians.
pub fn generate_blobs(params: &SynthParams, width: usize, height: usize) -> Result<ScalarField2D> {
    params.validate()?;
    let SynthParams::Blobs { blobs, .. } = params else {
        return Err(Error::param(format!("expected blobs parameters, got {}", params.family())));
    };
    let coeffs: Vec<(f64, f64, f64)> = blobs
        .iter()
        .map(|b| (b.center.0, b.center.1, -1.0 / (2.0 * b.sigma * b.sigma)))
        .collect();
    let field = ScalarField2D::from_fn(width, height, |x, y| {
        coeffs
            .iter()
            .map(|&(cx, cy, k)| ((x - cx).powi(2) + (y - cy).powi(2)) * k)
            .map(f64::exp)
            .sum()
    })?;
    Ok(annotate(field, params))
}

/// `sin(x/α) + sin(y/β)`, or `sin(x/α + y/γ) + sin(y/β + x/δ)` when `rotated`.
pub fn generate_sine(
    params: &SynthParams,
    width: usize,
    height: usize,
    rotated: bool,
) -> Result<ScalarField2D> {
    params.validate()?;
    let field = match (params, rotated) {
        (SynthParams::Sine { alpha, beta, .. }, false) => {
            let (a, b) = (*alpha as f64, *beta as f64);
            ScalarField2D::from_fn(width, height, |x, y| (x / a).sin() + (y / b).sin())?
        }
        (SynthParams::Rotsine { alpha, beta, gamma, delta, .. }, true) => {
            let (a, b, g, d) = (*alpha as f64, *beta as f64, *gamma as f64, *delta as f64);
            ScalarField2D::from_fn(width, height, |x, y| {
                (x / a + y / g).sin() + (y / b + x / d).sin()
            })?
        }
        _ => {
            return Err(Error::param(format!(
                "{} parameters do not match rotated={rotated}",
                params.family()
            )))
        }
    };
    Ok(annotate(field, params))
}

/// Dispatch on the parameter family.
pub fn generate(params: &SynthParams, width: usize, height: usize) -> Result<ScalarField2D> {
    match params.family() {
        Family::Blobs => generate_blobs(params, width, height),
        Family::Sine => generate_sine(params, width, height, false),
        Family::Rotsine => generate_sine(params, width, height, true),
    }
}

fn annotate(field: ScalarField2D, params: &SynthParams) -> ScalarField2D {
    let params_json = serde_json::to_string(params).expect("parameters serialize");
    field
        .with_meta("family", params.family())
        .with_meta("seed", params.seed())
        .with_meta("params", params_json)
}

/// Add independent `Uniform[0, magnitude]` noise to every sample.
pub fn add_uniform_noise(
    field: &ScalarField2D,
    magnitude: f64,
    seed: u64,
    variant: usize,
) -> Result<ScalarField2D> {
    if !(magnitude >= 0.0) || !magnitude.is_finite() {
        return Err(Error::param(format!("noise magnitude must be >= 0, got {magnitude}")));
    }
    let mut out = field.clone();
    if magnitude > 0.0 {
        let mut r = rng::seeded(seed);
        for v in &mut out.values {
            *v += r.gen_range(0.0..=magnitude);
        }
    }
    Ok(out
        .with_meta("variant", variant)
        .with_meta("noise", magnitude)
        .with_meta("noise_seed", seed))
}

pub const FIELD_MAGIC: &[u8; 4] = b"MSF1";

/// Serialize to MSF1: magic, u32 width, u32 height, then f32 samples, all little-endian.
pub fn encode_field(field: &ScalarField2D) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * field.values.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&(field.width as u32).to_le_bytes());
    out.extend_from_slice(&(field.height as u32).to_le_bytes());
    for &v in &field.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<ScalarField2D> {
    if bytes.len() < 4 || &bytes[..4] != FIELD_MAGIC {
        return Err(Error::format_at_offset(0, "bad magic, expected \"MSF1\""));
    }
    if bytes.len() < 12 {
        return Err(Error::format_at_offset(bytes.len(), "truncated header"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width < 2 || height < 2 {
        return Err(Error::format_at_offset(4, format!("degenerate size {width}x{height}")));
    }
    let expected = 12 + 4 * width * height;
    if bytes.len() != expected {
        return Err(Error::format_at_offset(
            bytes.len().min(expected),
            format!("payload length {} bytes, expected {}", bytes.len() - 12, expected - 12),
        ));
    }
    let mut values = Vec::with_capacity(width * height);
    for (i, chunk) in bytes[12..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format_at_offset(12 + 4 * i, "non-finite sample"));
        }
        values.push(v as f64);
    }
    ScalarField2D::new(width, height, values)
}

pub fn store_field(field: &ScalarField2D, path: &Path) -> Result<()> {
    std::fs::write(path, encode_field(field)).map_err(|e| Error::io(path, e))
}

/// Load an MSF1 file, or a CSV file when the extension is `.csv`.
pub fn load_field(path: &Path) -> Result<ScalarField2D> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let field = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| Error::format_at_offset(e.valid_up_to(), "CSV is not UTF-8"))?;
        parse_csv(text)?
    } else {
        decode_field(&bytes)?
    };
    Ok(field.with_meta("source", path.display()))
}

/// One grid row per line, comma-separated decimals. The first line is `y = 0`.
pub fn parse_csv(text: &str) -> Result<ScalarField2D> {
    let mut width = None;
    let mut values = Vec::new();
    let mut height = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let row = line.trim_end_matches(['\n', '\r']);
        let line_offset = offset;
        offset += line.len();
        if row.trim().is_empty() {
            continue;
        }
        let mut col_offset = line_offset;
        let mut count = 0;
        for cell in row.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::format_at_offset(col_offset, format!("invalid number {:?}", cell.trim()))
            })?;
            if !v.is_finite() {
                return Err(Error::format_at_offset(col_offset, "non-finite value"));
            }
            values.push(v);
            count += 1;
            col_offset += cell.len() + 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::format_at_offset(
                    line_offset,
                    format!("row {height} has {count} columns, expected {w}"),
                ))
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or_else(|| Error::format_at_offset(0, "empty CSV"))?;
    ScalarField2D::new(width, height, values)
}

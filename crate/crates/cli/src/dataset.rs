//! Dataset construction: synthetic ensembles, extraction from stored fields,
//! and cropping fields into sub-windows.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use morsemap_core::field::{self, add_uniform_noise, store_field, Family, ScalarField2D, SynthParams};
use morsemap_core::morse::{morse_arcs, ArcMode};
use morsemap_core::raster::{encode_pbm, rasterize, ArcImage};
use morsemap_core::rng::{derive_seed, seeded};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::manifest::{sha256_hex, DatasetManifest, ManifestEntry};

/// Field to arc image: cancel pairs below `simplify`, trace separatrices of
/// `mode` and rasterize them over the field's domain.
pub fn field_to_image(f: &ScalarField2D, simplify: f64, resolution: usize, mode: ArcMode) -> Result<(ArcImage, Value)> {
    let s = morse_arcs(f, simplify, mode)?;
    let img = rasterize(&s.arcs, (f.width(), f.height()), resolution)?;
    let stats = json!({
        "critical_counts": s.critical_counts,
        "cancelled": s.cancelled,
        "blocked": s.blocked,
        "arcs": s.arcs.len(),
    });
    Ok((img, stats))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSynthOptions {
    /// Base functions; each yields `1 + variants` images.
    pub count: usize,
    pub variants: usize,
    pub noise: f64,
    pub simplify: f64,
    pub resolution: usize,
    /// Side length of the generated fields.
    pub field_size: usize,
    pub mode: ArcMode,
    pub seed: u64,
}

impl Default for GenSynthOptions {
    fn default() -> Self {
        Self {
            count: 10,
            variants: 4,
            noise: 0.05,
            simplify: 0.04,
            resolution: 64,
            field_size: 256,
            mode: ArcMode::SaddleMin,
            seed: 0,
        }
    }
}

/// Parameters of base function `base`: the family is drawn uniformly from the
/// three, then its parameters from a child stream.
pub fn base_params(seed: u64, base: usize, size: usize) -> SynthParams {
    let base_seed = derive_seed(seed, base as u64);
    let family = Family::ALL[seeded(base_seed).gen_range(0..Family::ALL.len())];
    SynthParams::sample(family, size, size, derive_seed(base_seed, 0))
}

/// Field of `variant` of base `base`. Variant 0 is the clean base; the rest
/// add uniform noise. Values are rounded to storage precision so the stored
/// field reproduces the image exactly.
pub fn synth_field(opts: &GenSynthOptions, base: usize, variant: usize) -> Result<ScalarField2D> {
    let params = base_params(opts.seed, base, opts.field_size);
    let clean = field::generate(&params, opts.field_size, opts.field_size)?;
    let f = if variant == 0 {
        clean
    } else {
        let noise_seed = derive_seed(derive_seed(opts.seed, base as u64), variant as u64);
        add_uniform_noise(&clean, opts.noise, noise_seed, variant)?
    };
    Ok(f.to_storage_precision())
}

pub fn synth_id(base: usize, variant: usize) -> (String, String) {
    let group = format!("b{base:05}");
    (format!("{group}-v{variant}"), group)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn image_bytes(img: ArcImage, id: &str, label: &str) -> Vec<u8> {
    encode_pbm(&img.with_meta("id", id).with_meta("label", label))
}

/// Generate, extract and store a synthetic dataset under `out_dir`:
/// `images/<id>.pbm`, `fields/<id>.msf` and `manifest.json`.
pub fn gen_synth(opts: &GenSynthOptions, out_dir: &Path) -> Result<DatasetManifest> {
    if opts.count == 0 {
        bail!("count must be positive");
    }
    if !(opts.noise >= 0.0 && opts.simplify >= 0.0) {
        bail!("noise and simplify must be non-negative");
    }
    for d in ["images", "fields"] {
        std::fs::create_dir_all(out_dir.join(d)).with_context(|| format!("creating {}", out_dir.join(d).display()))?;
    }
    let per = 1 + opts.variants;
    let entries = (0..opts.count * per)
        .into_par_iter()
        .map(|k| {
            let (base, variant) = (k / per, k % per);
            let (id, group) = synth_id(base, variant);
            let f = synth_field(opts, base, variant)?;
            let params = base_params(opts.seed, base, opts.field_size);
            let label = params.family().name().to_string();
            let (img, stats) = field_to_image(&f, opts.simplify, opts.resolution, opts.mode)?;
            let image = format!("images/{id}.pbm");
            let field = format!("fields/{id}.msf");
            let bytes = image_bytes(img, &id, &label);
            write(&out_dir.join(&image), &bytes)?;
            store_field(&f, &out_dir.join(&field))?;
            let mut meta = Map::new();
            meta.insert("variant".into(), variant.into());
            meta.insert("noise".into(), if variant == 0 { 0.0 } else { opts.noise }.into());
            meta.insert("morse".into(), stats);
            log::debug!("{id}: {label}");
            Ok(ManifestEntry {
                id,
                image,
                sha256: sha256_hex(&bytes),
                field,
                label,
                group,
                params: Some(params),
                source: None,
                simplify: opts.simplify,
                resolution: opts.resolution,
                meta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let id = format!("synth-s{}-{}x{}", opts.seed, opts.count, per);
    let mut m = DatasetManifest::new(id, opts.seed, opts.resolution, out_dir);
    m.entries = entries;
    m.save(&out_dir.join("manifest.json"))?;
    Ok(m)
}

/// A stored field to extract, with annotations copied into its entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractInput {
    pub path: PathBuf,
    pub meta: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractOptions {
    pub simplify: f64,
    pub resolution: usize,
    pub mode: ArcMode,
    pub label: String,
    pub dataset_id: String,
    pub seed: u64,
}

/// Images for stored fields. Ids are file stems; fields are copied into the
/// dataset as MSF1 so the manifest is self-contained.
pub fn extract(inputs: &[ExtractInput], opts: &ExtractOptions, out_dir: &Path) -> Result<DatasetManifest> {
    if inputs.is_empty() {
        bail!("no fields to extract");
    }
    for d in ["images", "fields"] {
        std::fs::create_dir_all(out_dir.join(d)).with_context(|| format!("creating {}", out_dir.join(d).display()))?;
    }
    let ids: Vec<String> = inputs
        .iter()
        .map(|i| {
            i.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .with_context(|| format!("no file name in {}", i.path.display()))
        })
        .collect::<Result<_>>()?;
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = ids.iter().find(|id| !seen.insert(*id)) {
        bail!("two inputs share the id {dup:?}");
    }
    let entries = inputs
        .par_iter()
        .zip(ids.par_iter())
        .map(|(input, id)| {
            let f = field::load_field(&input.path)?.to_storage_precision();
            let (img, stats) = field_to_image(&f, opts.simplify, opts.resolution, opts.mode)?;
            let image = format!("images/{id}.pbm");
            let field = format!("fields/{id}.msf");
            let bytes = image_bytes(img, id, &opts.label);
            write(&out_dir.join(&image), &bytes)?;
            store_field(&f, &out_dir.join(&field))?;
            let mut meta = input.meta.clone();
            meta.insert("morse".into(), stats);
            Ok(ManifestEntry {
                id: id.clone(),
                image,
                sha256: sha256_hex(&bytes),
                field,
                label: opts.label.clone(),
                group: id.clone(),
                params: None,
                source: Some(input.path.display().to_string()),
                simplify: opts.simplify,
                resolution: opts.resolution,
                meta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = DatasetManifest::new(&opts.dataset_id, opts.seed, opts.resolution, out_dir);
    m.entries = entries;
    m.save(&out_dir.join("manifest.json"))?;
    Ok(m)
}

/// Origins of the `w x h` windows placed every `stride` samples, row by row.
/// A stride larger than the field still yields the window at the origin.
pub fn crop_origins(width: usize, height: usize, window: (usize, usize), stride: (usize, usize)) -> Result<Vec<(usize, usize)>> {
    let (w, h) = window;
    if w < 2 || h < 2 || stride.0 == 0 || stride.1 == 0 {
        bail!("window must be at least 2x2 and strides positive");
    }
    if w > width || h > height {
        bail!("window {w}x{h} larger than the {width}x{height} field");
    }
    let xs: Vec<usize> = (0..=width - w).step_by(stride.0).collect();
    let ys: Vec<usize> = (0..=height - h).step_by(stride.1).collect();
    Ok(ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropRecord {
    pub file: String,
    pub x: usize,
    pub y: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropListing {
    pub source: String,
    pub window: [usize; 2],
    pub stride: [usize; 2],
    pub crops: Vec<CropRecord>,
}

/// Write `<stem>_x<X>_y<Y>.msf` for every window and a `crops.json` listing.
pub fn crop(field_path: &Path, window: (usize, usize), stride: (usize, usize), out_dir: &Path) -> Result<CropListing> {
    let f = field::load_field(field_path)?;
    let origins = crop_origins(f.width(), f.height(), window, stride)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let stem = field_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "field".into());
    let mut crops = Vec::with_capacity(origins.len());
    for (x, y) in origins {
        let file = format!("{stem}_x{x}_y{y}.msf");
        store_field(&f.crop(x, y, window.0, window.1)?, &out_dir.join(&file))?;
        crops.push(CropRecord { file, x, y });
    }
    let listing = CropListing {
        source: field_path.display().to_string(),
        window: [window.0, window.1],
        stride: [stride.0, stride.1],
        crops,
    };
    let mut text = serde_json::to_string_pretty(&listing)?;
    text.push('\n');
    write(&out_dir.join("crops.json"), text.as_bytes())?;
    Ok(listing)
}

/// Extraction inputs for a crop listing, each annotated with its offsets.
pub fn crop_inputs(listing_path: &Path) -> Result<Vec<ExtractInput>> {
    let text = std::fs::read_to_string(listing_path).with_context(|| format!("reading {}", listing_path.display()))?;
    let listing: CropListing = serde_json::from_str(&text).with_context(|| format!("parsing {}", listing_path.display()))?;
    let dir = listing_path.parent().unwrap_or(Path::new(""));
    Ok(listing
        .crops
        .iter()
        .map(|c| ExtractInput {
            path: dir.join(&c.file),
            meta: Map::from_iter([("x".to_string(), c.x.into()), ("y".to_string(), c.y.into())]),
        })
        .collect())
}

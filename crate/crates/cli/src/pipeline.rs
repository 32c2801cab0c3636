//! Model and projection commands: train, sweep, encode, project.

use std::path::Path;

use anyhow::{bail, Context, Result};
use morsemap_core::embed::{self, export_embedding, Embedding2D, LabeledVector, Method};
use morsemap_core::nn::{
    load_model, save_model, Autoencoder, AutoencoderConfig, TrainConfig, TrainReport, Trainer,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::manifest::{sha256_hex, DatasetManifest};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub latent_dim: usize,
    pub channels: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub min_delta: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            latent_dim: 64,
            channels: vec![16, 32, 64, 128],
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            min_delta: t.min_delta,
            patience: t.patience,
            seed: 0,
        }
    }
}

impl TrainOptions {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            min_delta: self.min_delta,
            patience: self.patience,
            seed: self.seed,
        }
    }

    fn model_config(&self, resolution: usize) -> AutoencoderConfig {
        AutoencoderConfig { resolution, latent_dim: self.latent_dim, channels: self.channels.clone(), seed: self.seed }
    }
}

/// Train on every image of `manifest` and write the checkpoint with its
/// optimizer state to `out`. With `resume`, training continues from a saved
/// checkpoint until `opts.epochs` epochs have run in total.
pub fn train(
    manifest: &DatasetManifest,
    opts: &TrainOptions,
    out: &Path,
    test: Option<&DatasetManifest>,
    resume: Option<&Path>,
    mut on_epoch: impl FnMut(&morsemap_core::nn::EpochRecord),
) -> Result<TrainReport> {
    let data = manifest.load_images()?;
    let test_data = test.map(|m| m.load_images()).transpose()?;
    let mut trainer = match resume {
        Some(path) => {
            let (model, state) = load_model(path)?;
            let state = state.with_context(|| format!("{} has no optimizer state to resume from", path.display()))?;
            Trainer::resume(model, state, opts.train_config())?
        }
        None => Trainer::new(Autoencoder::new(opts.model_config(manifest.resolution))?, opts.train_config())?,
    };
    let report = trainer.train(&data, test_data.as_deref(), |rec| on_epoch(rec))?;
    save_model(&trainer.model, Some(&trainer.state), out)?;
    Ok(report)
}

/// Loss per optimizer step count: `iteration,epoch,train_bce,lr`.
pub fn loss_curve_csv(report: &TrainReport, steps_per_epoch: usize) -> String {
    let mut s = String::from("iteration,epoch,train_bce,lr\n");
    for e in &report.epochs {
        s.push_str(&format!("{},{},{:.9},{:e}\n", e.epoch * steps_per_epoch, e.epoch, e.train_bce, e.lr));
    }
    s
}

/// One training run per `(latent_dim, seed)`, each writing
/// `loss_m<m>_s<seed>.csv`, plus `summary.csv` with the final losses.
pub fn sweep(manifest: &DatasetManifest, latent_dims: &[usize], seeds: &[u64], base: &TrainOptions, out_dir: &Path) -> Result<String> {
    if latent_dims.is_empty() || seeds.is_empty() {
        bail!("sweep needs at least one latent dimension and one seed");
    }
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let data = manifest.load_images()?;
    let steps = data.len().div_ceil(base.batch_size.max(1));
    let runs: Vec<(usize, u64)> = latent_dims.iter().flat_map(|&m| seeds.iter().map(move |&s| (m, s))).collect();
    let finals = runs
        .par_iter()
        .map(|&(m, seed)| {
            let opts = TrainOptions { latent_dim: m, seed, ..base.clone() };
            let mut trainer = Trainer::new(Autoencoder::new(opts.model_config(manifest.resolution))?, opts.train_config())?;
            let report = trainer.train(&data, None, |_| {})?;
            let path = out_dir.join(format!("loss_m{m}_s{seed}.csv"));
            std::fs::write(&path, loss_curve_csv(&report, steps)).with_context(|| format!("writing {}", path.display()))?;
            log::info!("sweep m={m} seed={seed}: final {:?}", report.final_train_bce());
            Ok(report.final_train_bce().unwrap_or(f64::NAN))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut summary = String::from("latent_dim,seed,final_train_bce\n");
    for (&(m, seed), f) in runs.iter().zip(finals) {
        summary.push_str(&format!("{m},{seed},{f:.9}\n"));
    }
    std::fs::write(out_dir.join("summary.csv"), &summary).context("writing summary.csv")?;
    Ok(summary)
}

pub const LATENTS_VERSION: u32 = 1;

/// Encoder outputs for a dataset, one item per manifest entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentSet {
    pub version: u32,
    pub latent_dim: usize,
    pub dataset_id: String,
    /// SHA-256 of the checkpoint file that produced the vectors.
    pub model_sha256: String,
    pub items: Vec<LatentItem>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentItem {
    pub id: String,
    pub label: String,
    pub meta: Map<String, Value>,
    pub vector: Vec<f32>,
}

impl LatentSet {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let set: LatentSet = serde_json::from_str(&text).with_context(|| format!("parsing latents {}", path.display()))?;
        if set.version != LATENTS_VERSION {
            bail!("latents {}: unsupported version {}", path.display(), set.version);
        }
        if let Some(it) = set.items.iter().find(|it| it.vector.len() != set.latent_dim) {
            bail!("latent {} has {} entries, expected {}", it.id, it.vector.len(), set.latent_dim);
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn labeled_vectors(&self) -> Vec<LabeledVector> {
        self.items
            .iter()
            .map(|it| LabeledVector {
                id: it.id.clone(),
                label: it.label.clone(),
                meta: it.meta.clone(),
                vector: it.vector.iter().map(|&v| v as f64).collect(),
            })
            .collect()
    }
}

/// Encode every image of `manifest`. Entry metadata, with the group, is
/// carried into each item.
pub fn encode(model_path: &Path, manifest: &DatasetManifest) -> Result<LatentSet> {
    let bytes = std::fs::read(model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let (model, _) = morsemap_core::nn::decode_model(&bytes)?;
    if model.config().resolution != manifest.resolution {
        bail!("model expects {}x{} images, dataset has {}", model.config().resolution, model.config().resolution, manifest.resolution);
    }
    let items = manifest
        .entries
        .par_iter()
        .map(|e| {
            let image = manifest.load_image(e)?.to_f32();
            let mut meta = e.meta.clone();
            meta.insert("group".into(), Value::from(e.group.clone()));
            Ok(LatentItem { id: e.id.clone(), label: e.label.clone(), meta, vector: model.encode(&image)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LatentSet {
        version: LATENTS_VERSION,
        latent_dim: model.config().latent_dim,
        dataset_id: manifest.dataset_id.clone(),
        model_sha256: sha256_hex(&bytes),
        items,
    })
}

pub fn project(latents: &LatentSet, method: Method, perplexity: Option<f64>, seed: u64) -> Result<Embedding2D> {
    if latents.items.is_empty() {
        bail!("no latent vectors to project");
    }
    Ok(embed::project(&latents.labeled_vectors(), method, perplexity, seed)?)
}

pub fn project_to_file(latents: &LatentSet, method: Method, perplexity: Option<f64>, seed: u64, out: &Path) -> Result<Embedding2D> {
    let e = project(latents, method, perplexity, seed)?;
    export_embedding(&e, out)?;
    Ok(e)
}

//! Dataset manifests: one JSON document listing every image of a dataset with
//! the field it came from and how it was made.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use morsemap_core::field::{load_field, ScalarField2D, SynthParams};
use morsemap_core::raster::{load_image, ArcImage};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub dataset_id: String,
    pub seed: u64,
    pub tool_version: String,
    pub resolution: usize,
    pub entries: Vec<ManifestEntry>,
    /// Directory that entry paths are relative to.
    #[serde(skip)]
    pub root: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Image path relative to the manifest.
    pub image: String,
    /// SHA-256 of the image file, lowercase hex.
    pub sha256: String,
    pub field: String,
    /// Family name for synthetic data, a source annotation otherwise.
    pub label: String,
    /// Entries made from the same base field share a group.
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SynthParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub simplify: f64,
    pub resolution: usize,
    #[serde(default)]
    pub meta: Map<String, Value>,
}

impl DatasetManifest {
    pub fn new(dataset_id: impl Into<String>, seed: u64, resolution: usize, root: &Path) -> Self {
        Self {
            version: MANIFEST_VERSION,
            dataset_id: dataset_id.into(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            resolution,
            entries: Vec::new(),
            root: root.to_path_buf(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: DatasetManifest =
            serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        if m.version != MANIFEST_VERSION {
            bail!("manifest {}: unsupported version {}", path.display(), m.version);
        }
        m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.check_ids()?;
        Ok(m)
    }

    /// Pretty JSON with a trailing newline; byte-stable for equal manifests.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.check_ids()?;
        std::fs::write(path, self.to_json()).with_context(|| format!("writing manifest {}", path.display()))
    }

    fn check_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.id) {
                bail!("duplicate manifest id {:?}", e.id);
            }
        }
        Ok(())
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn image_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.image)
    }

    pub fn field_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.field)
    }

    pub fn load_image(&self, e: &ManifestEntry) -> Result<ArcImage> {
        let img = load_image(&self.image_path(e))?;
        if img.resolution() != self.resolution {
            bail!("image {} is {}x{}, manifest declares {}", e.id, img.resolution(), img.resolution(), self.resolution);
        }
        Ok(img)
    }

    pub fn load_field(&self, e: &ManifestEntry) -> Result<ScalarField2D> {
        Ok(load_field(&self.field_path(e))?)
    }

    /// Every image as `0/1` floats, in entry order.
    pub fn load_images(&self) -> Result<Vec<Vec<f32>>> {
        self.entries.iter().map(|e| Ok(self.load_image(e)?.to_f32())).collect()
    }

    /// Every referenced file exists.
    pub fn verify_paths(&self) -> Result<()> {
        for e in &self.entries {
            for p in [self.image_path(e), self.field_path(e)] {
                if !p.is_file() {
                    bail!("entry {}: missing file {}", e.id, p.display());
                }
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

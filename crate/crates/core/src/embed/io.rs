//! Embedding documents: `{"version":1,"projection":{...},"points":[...]}`.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const EMBEDDING_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Tsne,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(Method::Pca),
            "tsne" => Ok(Method::Tsne),
            _ => Err(Error::param(format!("unknown projection method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub latent_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub meta: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub version: u64,
    pub projection: Projection,
    pub points: Vec<EmbeddedPoint>,
}

/// Round to 9 significant decimal digits.
pub fn round_sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

impl Embedding2D {
    pub fn new(projection: Projection, points: Vec<EmbeddedPoint>) -> Self {
        Self { version: EMBEDDING_VERSION, projection, points }
    }

    /// Serialized document with coordinates rounded to 9 significant digits.
    /// Non-finite coordinates and duplicate ids are refused.
    pub fn to_json(&self) -> Result<String> {
        let mut seen = HashSet::new();
        for (i, p) in self.points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::input(format!("point {i} ({}) has a non-finite coordinate", p.id)));
            }
            if !seen.insert(&p.id) {
                return Err(Error::input(format!("duplicate point id {:?}", p.id)));
            }
        }
        let mut doc = self.clone();
        for p in &mut doc.points {
            p.x = round_sig9(p.x);
            p.y = round_sig9(p.y);
        }
        Ok(serde_json::to_string(&doc).expect("embedding serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| Error::format_at(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        validate(&v)?;
        serde_json::from_value(v).map_err(|e| Error::format_at("", e.to_string()))
    }
}

fn field<'a>(obj: &'a Map<String, Value>, ptr: &str, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::format_at(format!("{ptr}/{key}"), "missing required key"))
}

fn object<'a>(v: &'a Value, ptr: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::format_at(ptr, "expected an object"))
}

fn string<'a>(obj: &'a Map<String, Value>, ptr: &str, key: &str) -> Result<&'a str> {
    field(obj, ptr, key)?.as_str().ok_or_else(|| Error::format_at(format!("{ptr}/{key}"), "expected a string"))
}

fn number(obj: &Map<String, Value>, ptr: &str, key: &str) -> Result<f64> {
    field(obj, ptr, key)?.as_f64().ok_or_else(|| Error::format_at(format!("{ptr}/{key}"), "expected a number"))
}

fn unsigned(v: &Value, ptr: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::format_at(ptr, "expected a non-negative integer"))
}

/// Check the document shape, reporting the JSON pointer of the first violation.
fn validate(v: &Value) -> Result<()> {
    let root = object(v, "")?;
    let version = unsigned(field(root, "", "version")?, "/version")?;
    if version != EMBEDDING_VERSION {
        return Err(Error::format_at("/version", format!("unsupported version {version}")));
    }
    let proj = object(field(root, "", "projection")?, "/projection")?;
    let method = string(proj, "/projection", "method")?;
    if method != "pca" && method != "tsne" {
        return Err(Error::format_at("/projection/method", format!("unknown method {method:?}")));
    }
    unsigned(field(proj, "/projection", "latent_dim")?, "/projection/latent_dim")?;
    if proj.contains_key("perplexity") {
        number(proj, "/projection", "perplexity")?;
    }
    if let Some(seed) = proj.get("seed") {
        unsigned(seed, "/projection/seed")?;
    }
    let points = field(root, "", "points")?
        .as_array()
        .ok_or_else(|| Error::format_at("/points", "expected an array"))?;
    let mut ids = HashSet::new();
    for (i, p) in points.iter().enumerate() {
        let ptr = format!("/points/{i}");
        let obj = object(p, &ptr)?;
        let id = string(obj, &ptr, "id")?;
        if !ids.insert(id) {
            return Err(Error::format_at(format!("{ptr}/id"), format!("duplicate id {id:?}")));
        }
        number(obj, &ptr, "x")?;
        number(obj, &ptr, "y")?;
        string(obj, &ptr, "label")?;
        object(field(obj, &ptr, "meta")?, &format!("{ptr}/meta"))?;
    }
    Ok(())
}

pub fn export_embedding(e: &Embedding2D, path: &Path) -> Result<()> {
    std::fs::write(path, e.to_json()?).map_err(|err| Error::io(path, err))
}

pub fn import_embedding(path: &Path) -> Result<Embedding2D> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Embedding2D::from_json(&text)
}

//! `MCAE` checkpoints: magic, u32 version, u32 header length, JSON header,
//! then little-endian f32 weights in shape-table order, then the Adam first
//! and second moments when the header says they are present.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Autoencoder, AutoencoderConfig};
use super::train::OptimizerState;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MCAE";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TableEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: AutoencoderConfig,
    layers: Vec<TableEntry>,
    iteration: u64,
    has_optimizer_state: bool,
    optimizer: Option<OptimizerState>,
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_model(model: &Autoencoder<f32>, state: Option<&OptimizerState>) -> Vec<u8> {
    let header = Header {
        config: model.config().clone(),
        layers: model.param_table().into_iter().map(|(name, shape)| TableEntry { name, shape }).collect(),
        iteration: model.iteration,
        has_optimizer_state: state.is_some(),
        optimizer: state.cloned(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in model.params() {
        push_f32s(&mut out, p);
    }
    if let Some(s) = state {
        for m in s.m.iter().chain(&s.v) {
            push_f32s(&mut out, m);
        }
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format_at_offset(bytes.len(), "truncated header"))
}

fn read_f32s(bytes: &[u8], at: &mut usize, n: usize) -> Vec<f32> {
    let out = bytes[*at..*at + 4 * n].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    *at += 4 * n;
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<(Autoencoder<f32>, Option<OptimizerState>)> {
    if bytes.get(..4) != Some(&MAGIC[..]) {
        return Err(Error::format_at_offset(0, "bad magic, expected \"MCAE\""));
    }
    let version = u32_at(bytes, 4)?;
    if version != VERSION {
        return Err(Error::format_at_offset(4, format!("unsupported version {version}, expected {VERSION}")));
    }
    let header_len = u32_at(bytes, 8)? as usize;
    let json = bytes
        .get(12..12 + header_len)
        .ok_or_else(|| Error::format_at_offset(bytes.len(), "truncated header"))?;
    let header: Header = serde_json::from_slice(json)
        .map_err(|e| Error::format_at_offset(12 + e.column().saturating_sub(1), format!("bad header: {e}")))?;

    let mut model = Autoencoder::<f32>::zeros(header.config.clone())
        .map_err(|e| Error::format_at_offset(12, format!("invalid config: {e}")))?;
    let expected = model.param_table();
    if let Some(enc) = expected.iter().position(|(n, _)| n.starts_with("encoder.") && n.contains("linear.weight")) {
        if let Some(declared) = header.layers.get(enc) {
            if declared.shape.first() != expected[enc].1.first() {
                return Err(Error::format_at_offset(
                    12,
                    format!(
                        "declared latent_dim {} but the shape table implies {}",
                        header.config.latent_dim,
                        declared.shape.first().copied().unwrap_or(0)
                    ),
                ));
            }
        }
    }
    if header.layers.len() != expected.len()
        || header.layers.iter().zip(&expected).any(|(d, (n, s))| &d.name != n || &d.shape != s)
    {
        let at = header
            .layers
            .iter()
            .zip(&expected)
            .position(|(d, (n, s))| &d.name != n || &d.shape != s)
            .unwrap_or(expected.len().min(header.layers.len()));
        return Err(Error::format_at_offset(12, format!("shape table does not match the config at entry {at}")));
    }
    if header.has_optimizer_state != header.optimizer.is_some() {
        return Err(Error::format_at_offset(12, "optimizer flag disagrees with optimizer state"));
    }

    let count = model.num_params();
    let blocks = if header.has_optimizer_state { 3 } else { 1 };
    let start = 12 + header_len;
    let expected_bytes = 4 * count * blocks;
    if bytes.len() - start != expected_bytes {
        return Err(Error::format_at_offset(
            start,
            format!("weight payload is {} bytes, expected {expected_bytes}", bytes.len() - start),
        ));
    }
    let mut at = start;
    for p in model.params_mut() {
        let n = p.len();
        *p = read_f32s(bytes, &mut at, n);
    }
    model.iteration = header.iteration;
    let state = header.optimizer.map(|mut s| {
        let lens: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
        s.m = lens.iter().map(|&n| read_f32s(bytes, &mut at, n)).collect();
        s.v = lens.iter().map(|&n| read_f32s(bytes, &mut at, n)).collect();
        s
    });
    Ok((model, state))
}

pub fn save_model(model: &Autoencoder<f32>, state: Option<&OptimizerState>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model, state)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<(Autoencoder<f32>, Option<OptimizerState>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

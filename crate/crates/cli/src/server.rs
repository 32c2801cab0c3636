//! HTTP service behind the explorer.
//!
//! Routing is a pure function of the state and the request, so tests drive
//! `handle` directly. `serve` only moves bytes between sockets and `handle`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use morsemap_core::embed::{Embedding2D, Method};
use morsemap_core::raster::{encode_pbm, ArcImage};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::manifest::DatasetManifest;
use crate::pipeline::{project, LatentSet};

#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Response {
    fn json(status: u16, v: &Value) -> Self {
        Self { status, content_type: "application/json", body: serde_json::to_vec(v).expect("json value serializes") }
    }

    fn raw_json(text: String) -> Self {
        Self { status: 200, content_type: "application/json", body: text.into_bytes() }
    }

    fn error(status: u16, msg: impl std::fmt::Display) -> Self {
        Self::json(status, &json!({ "error": msg.to_string() }))
    }

    pub fn json_body(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or(Value::Null)
    }
}

pub struct AppState {
    /// Embedding file contents, served verbatim.
    embedding_text: String,
    embedding: Embedding2D,
    manifest: DatasetManifest,
    latents: Option<LatentSet>,
    /// Projections are CPU heavy; one at a time.
    project_lock: Mutex<()>,
    /// Embeddings made by `POST /api/project`, by index.
    created: Mutex<Vec<Arc<String>>>,
}

impl AppState {
    pub fn new(embedding_text: String, manifest: DatasetManifest, latents: Option<LatentSet>) -> Result<Self> {
        let embedding = Embedding2D::from_json(&embedding_text).context("parsing embedding")?;
        Ok(Self { embedding_text, embedding, manifest, latents, project_lock: Mutex::new(()), created: Mutex::new(Vec::new()) })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectRequest {
    method: Method,
    #[serde(default)]
    perplexity: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

fn split_query(url: &str) -> (&str, HashMap<&str, &str>) {
    match url.split_once('?') {
        Some((path, q)) => (path, q.split('&').filter_map(|kv| kv.split_once('=')).collect()),
        None => (url, HashMap::new()),
    }
}

/// Black arcs on white, 8-bit grayscale.
pub fn image_png(img: &ArcImage) -> Result<Vec<u8>> {
    let n = img.resolution();
    let pixels: Vec<u8> = img.bits().iter().map(|&b| if b == 1 { 0 } else { 255 }).collect();
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, n as u32, n as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    enc.write_header()?.write_image_data(&pixels)?;
    Ok(out)
}

pub fn handle(state: &AppState, method: &str, url: &str, body: &[u8]) -> Response {
    let (path, query) = split_query(url);
    let segments: Vec<&str> = path.trim_matches('/').split('/').collect();
    match (method, segments.as_slice()) {
        ("GET", ["api", "embedding"]) => Response::raw_json(state.embedding_text.clone()),
        ("GET", ["api", "embeddings", k]) => {
            let created = state.created.lock().expect("created list lock");
            match k.parse::<usize>().ok().and_then(|k| created.get(k)) {
                Some(text) => Response::raw_json(text.as_ref().clone()),
                None => Response::error(404, format!("no embedding {k:?}")),
            }
        }
        ("GET", ["api", "points", id]) => point(state, id),
        ("GET", ["api", "image", id]) => image(state, id, query.get("format").copied()),
        ("GET", ["api", "field", id]) => field(state, id),
        ("POST", ["api", "project"]) => reproject(state, body),
        (_, ["api", "embedding" | "points" | "image" | "field" | "project" | "embeddings", ..]) => {
            Response::error(405, format!("{method} not allowed on {path}"))
        }
        _ => Response::error(404, format!("no route {path}")),
    }
}

fn point(state: &AppState, id: &str) -> Response {
    let Some(p) = state.embedding.points.iter().find(|p| p.id == id) else {
        return Response::error(404, format!("unknown point {id:?}"));
    };
    let entry = state.manifest.entry(id).map(|e| serde_json::to_value(e).expect("entry serializes"));
    Response::json(200, &json!({ "point": p, "entry": entry }))
}

fn image(state: &AppState, id: &str, format: Option<&str>) -> Response {
    let Some(e) = state.manifest.entry(id) else {
        return Response::error(404, format!("unknown image {id:?}"));
    };
    let img = match state.manifest.load_image(e) {
        Ok(img) => img,
        Err(err) => return Response::error(500, format!("{err:#}")),
    };
    match format.unwrap_or("png") {
        "pbm" => Response { status: 200, content_type: "image/x-portable-bitmap", body: encode_pbm(&img) },
        "png" => match image_png(&img) {
            Ok(body) => Response { status: 200, content_type: "image/png", body },
            Err(err) => Response::error(500, format!("{err:#}")),
        },
        other => Response::error(400, format!("unknown image format {other:?}")),
    }
}

fn field(state: &AppState, id: &str) -> Response {
    let Some(e) = state.manifest.entry(id) else {
        return Response::error(404, format!("unknown field {id:?}"));
    };
    match state.manifest.load_field(e) {
        Ok(f) => {
            let v = f.values();
            let (min, max) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            Response::json(200, &json!({ "id": id, "width": f.width(), "height": f.height(), "min": min, "max": max, "values": v }))
        }
        Err(err) => Response::error(500, format!("{err:#}")),
    }
}

fn reproject(state: &AppState, body: &[u8]) -> Response {
    let Some(latents) = &state.latents else {
        return Response::error(400, "service was started without latents; reprojection is unavailable");
    };
    let req: ProjectRequest = match serde_json::from_slice(body) {
        Ok(r) => r,
        Err(err) => return Response::error(400, format!("bad request body: {err}")),
    };
    let seed = req.seed.unwrap_or(0);
    let result = {
        let _guard = state.project_lock.lock().expect("projection lock");
        project(latents, req.method, req.perplexity, seed).and_then(|e| Ok(e.to_json()?))
    };
    match result {
        Ok(text) => {
            let mut created = state.created.lock().expect("created list lock");
            created.push(Arc::new(text.clone()));
            log::info!("projection {} stored", created.len() - 1);
            Response::raw_json(text)
        }
        Err(err) => Response::error(400, format!("{err:#}")),
    }
}

/// Serve until the process exits, `workers` requests at a time.
pub fn serve(state: AppState, addr: &str, workers: usize) -> Result<()> {
    let server = tiny_http::Server::http(addr).map_err(|e| anyhow::anyhow!("binding {addr}: {e}"))?;
    log::info!("listening on http://{}", server.server_addr());
    run(Arc::new(server), Arc::new(state), workers);
    Ok(())
}

/// Worker loop over an already bound server; returns when it is unblocked.
pub fn run(server: Arc<tiny_http::Server>, state: Arc<AppState>, workers: usize) {
    let threads: Vec<_> = (0..workers.max(1))
        .map(|_| {
            let (server, state) = (Arc::clone(&server), Arc::clone(&state));
            std::thread::spawn(move || {
                for mut req in server.incoming_requests() {
                    let mut body = Vec::new();
                    let resp = match req.as_reader().read_to_end(&mut body) {
                        Ok(_) => handle(&state, req.method().as_str(), req.url(), &body),
                        Err(err) => Response::error(400, err),
                    };
                    log::debug!("{} {} -> {}", req.method(), req.url(), resp.status);
                    let header = tiny_http::Header::from_bytes("Content-Type", resp.content_type).expect("static header");
                    let out = tiny_http::Response::from_data(resp.body).with_status_code(resp.status).with_header(header);
                    if let Err(err) = req.respond(out) {
                        log::warn!("responding: {err}");
                    }
                }
            })
        })
        .collect();
    for t in threads {
        let _ = t.join();
    }
}

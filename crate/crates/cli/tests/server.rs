use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use morsemap_cli::dataset::{self, GenSynthOptions};
use morsemap_cli::manifest::DatasetManifest;
use morsemap_cli::pipeline::{self, LatentSet, TrainOptions};
use morsemap_cli::server::{handle, run, AppState};
use morsemap_core::embed::Method;
use morsemap_core::raster::decode_pbm;
use tempfile::{tempdir, TempDir};

struct Fixture {
    _dir: TempDir,
    embedding_text: String,
    manifest: DatasetManifest,
    latents: LatentSet,
}

fn fixture() -> Fixture {
    let dir = tempdir().unwrap();
    let root = dir.path();
    let opts = GenSynthOptions { count: 4, variants: 2, field_size: 40, seed: 5, ..Default::default() };
    let manifest = dataset::gen_synth(&opts, &root.join("ds")).unwrap();
    let train = TrainOptions { latent_dim: 6, channels: vec![4, 4], epochs: 1, seed: 5, ..Default::default() };
    pipeline::train(&manifest, &train, &root.join("m.bin"), None, None, |_| {}).unwrap();
    let latents = pipeline::encode(&root.join("m.bin"), &manifest).unwrap();
    let e = pipeline::project_to_file(&latents, Method::Pca, None, 0, &root.join("e.json")).unwrap();
    assert_eq!(e.points.len(), 12);
    let embedding_text = std::fs::read_to_string(root.join("e.json")).unwrap();
    Fixture { _dir: dir, embedding_text, manifest, latents }
}

fn state(f: &Fixture) -> AppState {
    AppState::new(f.embedding_text.clone(), f.manifest.clone(), Some(f.latents.clone())).unwrap()
}

#[test]
fn embedding_is_served_verbatim() {
    let f = fixture();
    let r = handle(&state(&f), "GET", "/api/embedding", b"");
    assert_eq!((r.status, r.content_type), (200, "application/json"));
    assert_eq!(r.body, f.embedding_text.as_bytes());
}

#[test]
fn image_as_png_and_pbm() {
    let f = fixture();
    let s = state(&f);
    let e = &f.manifest.entries[4];
    let pbm = handle(&s, "GET", &format!("/api/image/{}?format=pbm", e.id), b"");
    assert_eq!(pbm.status, 200);
    assert_eq!(pbm.body, std::fs::read(f.manifest.image_path(e)).unwrap());
    let img = decode_pbm(&pbm.body).unwrap();

    let png = handle(&s, "GET", &format!("/api/image/{}", e.id), b"");
    assert_eq!((png.status, png.content_type), (200, "image/png"));
    let mut reader = png::Decoder::new(png.body.as_slice()).read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size()];
    reader.next_frame(&mut buf).unwrap();
    let lit: Vec<u8> = buf.iter().map(|&g| u8::from(g == 0)).collect();
    assert_eq!(lit, img.bits());

    assert_eq!(handle(&s, "GET", "/api/image/missing", b"").status, 404);
    assert_eq!(handle(&s, "GET", &format!("/api/image/{}?format=gif", e.id), b"").status, 400);
}

#[test]
fn points_and_fields_resolve_through_the_manifest() {
    let f = fixture();
    let s = state(&f);
    let e = &f.manifest.entries[2];
    let r = handle(&s, "GET", &format!("/api/points/{}", e.id), b"").json_body();
    assert_eq!(r["point"]["id"], e.id.as_str());
    assert_eq!(r["entry"]["sha256"], e.sha256.as_str());

    let field = handle(&s, "GET", &format!("/api/field/{}", e.id), b"");
    assert_eq!(field.status, 200);
    let v = field.json_body();
    let stored = f.manifest.load_field(e).unwrap();
    assert_eq!((v["width"].as_u64(), v["height"].as_u64()), (Some(40), Some(40)));
    let values: Vec<f64> = v["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(values, stored.values());
    assert_eq!(handle(&s, "GET", "/api/points/nope", b"").status, 404);
    assert_eq!(handle(&s, "GET", "/api/field/nope", b"").status, 404);
}

#[test]
fn reprojection_equals_the_project_command() {
    let f = fixture();
    let s = state(&f);
    let r = handle(&s, "POST", "/api/project", br#"{"method":"tsne","perplexity":3,"seed":3}"#);
    assert_eq!(r.status, 200, "{}", String::from_utf8_lossy(&r.body));
    let dir = tempdir().unwrap();
    let out = dir.path().join("p.json");
    pipeline::project_to_file(&f.latents, Method::Tsne, Some(3.0), 3, &out).unwrap();
    assert_eq!(r.body, std::fs::read(&out).unwrap());

    let again = handle(&s, "GET", "/api/embeddings/0", b"");
    assert_eq!(again.body, r.body);
    assert_eq!(handle(&s, "GET", "/api/embeddings/1", b"").status, 404);
    // The served embedding is unchanged.
    assert_eq!(handle(&s, "GET", "/api/embedding", b"").body, f.embedding_text.as_bytes());
}

#[test]
fn errors_are_json_with_status() {
    let f = fixture();
    let s = state(&f);
    for (method, url, body, status) in [
        ("POST", "/api/project", &b"not json"[..], 400),
        ("POST", "/api/project", br#"{"method":"umap"}"#, 400),
        ("POST", "/api/project", br#"{"method":"tsne","perplexity":500}"#, 400),
        ("POST", "/api/embedding", b"", 405),
        ("DELETE", "/api/image/x", b"", 405),
        ("GET", "/elsewhere", b"", 404),
    ] {
        let r = handle(&s, method, url, body);
        assert_eq!(r.status, status, "{method} {url}");
        assert!(r.json_body()["error"].is_string(), "{method} {url}");
    }
    let without = AppState::new(f.embedding_text.clone(), f.manifest.clone(), None).unwrap();
    assert_eq!(handle(&without, "POST", "/api/project", br#"{"method":"pca"}"#).status, 400);
}

fn get(addr: std::net::SocketAddr, path: &str) -> (String, Vec<u8>) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    (String::from_utf8_lossy(&raw[..split]).into_owned(), raw[split + 4..].to_vec())
}

#[test]
fn live_socket_serves_the_same_bytes() {
    let f = fixture();
    let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
    let addr = server.server_addr().to_ip().unwrap();
    let worker = {
        let (server, state) = (Arc::clone(&server), Arc::new(state(&f)));
        std::thread::spawn(move || run(server, state, 1))
    };
    let (head, body) = get(addr, "/api/embedding");
    assert!(head.starts_with("HTTP/1.1 200"), "{head}");
    assert!(head.to_ascii_lowercase().contains("content-type: application/json"));
    assert_eq!(body, f.embedding_text.as_bytes());
    let (head, _) = get(addr, "/api/image/none");
    assert!(head.starts_with("HTTP/1.1 404"), "{head}");
    server.unblock();
    worker.join().unwrap();
}

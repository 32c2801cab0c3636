//! Planar layouts of latent vectors by PCA or t-SNE, and their documents.

mod io;
mod pca;
mod tsne;

pub use io::{
    export_embedding, import_embedding, round_sig9, EmbeddedPoint, Embedding2D, Method, Projection, EMBEDDING_VERSION,
};
pub use pca::{covariance, pca, Pca};
pub use tsne::{
    calibrate, check_perplexity, kl_divergence, kl_gradient, squared_distances, symmetrize, tsne, Tsne, TsneParams,
    ENTROPY_TOL,
};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// A latent vector with the identity and annotations it carries into a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVector {
    pub id: String,
    pub label: String,
    pub meta: Map<String, Value>,
    pub vector: Vec<f64>,
}

/// Layout of `items` by `method`. `perplexity` is required for t-SNE.
pub fn project(items: &[LabeledVector], method: Method, perplexity: Option<f64>, seed: u64) -> Result<Embedding2D> {
    let vectors: Vec<Vec<f64>> = items.iter().map(|i| i.vector.clone()).collect();
    let latent_dim = vectors.first().map_or(0, Vec::len);
    let (coords, projection) = match method {
        Method::Pca => {
            let p = pca(&vectors, 2)?;
            let coords = p.coords.iter().map(|c| [c[0], c[1]]).collect::<Vec<_>>();
            (coords, Projection { method, perplexity: None, seed: None, latent_dim })
        }
        Method::Tsne => {
            let perplexity = perplexity.ok_or_else(|| Error::param("t-SNE needs a perplexity"))?;
            let t = tsne(&vectors, &TsneParams::new(perplexity, seed))?;
            (t.coords, Projection { method, perplexity: Some(perplexity), seed: Some(seed), latent_dim })
        }
    };
    let points = items
        .iter()
        .zip(coords)
        .map(|(it, c)| EmbeddedPoint { id: it.id.clone(), x: c[0], y: c[1], label: it.label.clone(), meta: it.meta.clone() })
        .collect();
    Ok(Embedding2D::new(projection, points))
}

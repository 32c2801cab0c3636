//! Scalar-field ensembles to a 2D map of their Morse complexes.
//!
//! The pipeline runs [`field`] → [`morse`] → [`raster`] → [`nn`] → [`embed`]:
//! synthetic or loaded fields are reduced to separatrix arcs, the arcs are
//! rasterized into binary images, an autoencoder compresses the images to
//! latent vectors, and PCA or t-SNE lays the latents out in the plane.

pub mod embed;
pub mod error;
pub mod field;
pub mod morse;
pub mod nn;
pub mod raster;
pub mod rng;

pub use error::{Error, Result};

#![allow(dead_code)]
pub mod embed_oracle;
pub mod morse_oracle;
pub mod nn_oracle;
pub mod raster_oracle;

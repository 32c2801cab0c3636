//! Convolutional autoencoder with hand-written backpropagation.

mod checkpoint;
mod layers;
mod loss;
mod model;
mod real;
mod train;

pub use checkpoint::{decode_model, encode_model, load_model, save_model};
pub use layers::{Conv2d, Layer, Linear, Shape};
pub use loss::{bce, bce_grad, BCE_EPS};
pub use model::{Autoencoder, AutoencoderConfig, Stage, Trace};
pub use real::Real;
pub use train::{evaluate, train, EpochRecord, OptimizerState, TrainConfig, TrainReport, Trainer};

//! Convolutional autoencoder assembled from [`Layer`]s.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::layers::{Conv2d, Layer, Linear, Shape, K};
use super::loss::{bce, bce_grad};
use super::real::Real;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub resolution: usize,
    pub latent_dim: usize,
    /// Encoder output channels per stage; the decoder mirrors them.
    pub channels: Vec<usize>,
    pub seed: u64,
}

/// One encoder stage: a 3x3 convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stage {
    pub out_c: usize,
    pub stride: usize,
    pub pad: usize,
}

impl AutoencoderConfig {
    pub fn new(resolution: usize, latent_dim: usize, seed: u64) -> Self {
        Self { resolution, latent_dim, channels: vec![16, 32, 64, 128], seed }
    }

    /// Stride-2 padded convolutions. When the resolution is not divisible by
    /// `2^stages`, the last stage is an unpadded stride-1 convolution instead
    /// (50 -> 25 -> 13 -> 7 -> 5).
    pub fn stages(&self) -> Vec<Stage> {
        let l = self.channels.len();
        let exact = l < usize::BITS as usize && self.resolution.is_multiple_of(1 << l);
        self.channels
            .iter()
            .enumerate()
            .map(|(i, &out_c)| {
                if exact || i + 1 < l {
                    Stage { out_c, stride: 2, pad: 1 }
                } else {
                    Stage { out_c, stride: 1, pad: 0 }
                }
            })
            .collect()
    }

    /// Spatial size entering each stage, then the bottleneck size.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.resolution];
        for st in self.stages() {
            let s = *sizes.last().unwrap();
            sizes.push(if s + 2 * st.pad < K { 0 } else { (s + 2 * st.pad - K) / st.stride + 1 });
        }
        sizes
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::param("latent_dim must be positive"));
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::param(format!("invalid channel plan {:?}", self.channels)));
        }
        if self.resolution < 2 || self.sizes().contains(&0) {
            return Err(Error::param(format!(
                "resolution {} too small for {} encoder stages",
                self.resolution,
                self.channels.len()
            )));
        }
        Ok(())
    }
}

/// Encoder: convolution + ReLU per stage, then a linear map to the latent.
/// Decoder: linear + ReLU to the bottleneck map, then per stage a bilinear
/// resize to the mirrored encoder size and a convolution, ReLU after all but
/// the last, which feeds a logistic output.
#[derive(Clone, Debug, PartialEq)]
pub struct Autoencoder<T> {
    config: AutoencoderConfig,
    layers: Vec<Layer<T>>,
    encoder_len: usize,
    /// Completed optimizer steps.
    pub iteration: u64,
}

/// Activations of one forward pass: `inputs[i]` feeds layer `i`, the last
/// entry is the reconstruction.
pub struct Trace<T> {
    pub values: Vec<Vec<T>>,
    pub shapes: Vec<Shape>,
}

impl<T: Real> Autoencoder<T> {
    /// Architecture with every weight zero.
    pub fn zeros(config: AutoencoderConfig) -> Result<Self> {
        config.validate()?;
        let stages = config.stages();
        let sizes = config.sizes();
        let bottom = *sizes.last().unwrap();
        let top_c = *config.channels.last().unwrap();
        let mut layers = Vec::new();
        let conv = |in_c, out_c, stride, pad| {
            Layer::Conv2d(Conv2d {
                in_c,
                out_c,
                stride,
                pad,
                weight: vec![T::ZERO; out_c * in_c * K * K],
                bias: vec![T::ZERO; out_c],
            })
        };
        let linear = |in_f, out_f| {
            Layer::Linear(Linear { in_f, out_f, weight: vec![T::ZERO; in_f * out_f], bias: vec![T::ZERO; out_f] })
        };
        let mut in_c = 1;
        for st in &stages {
            layers.push(conv(in_c, st.out_c, st.stride, st.pad));
            layers.push(Layer::Relu);
            in_c = st.out_c;
        }
        let flat = top_c * bottom * bottom;
        layers.push(linear(flat, config.latent_dim));
        let encoder_len = layers.len();

        layers.push(linear(config.latent_dim, flat));
        layers.push(Layer::Relu);
        layers.push(Layer::Reshape(Shape::new(top_c, bottom, bottom)));
        let mut in_c = top_c;
        for i in (0..stages.len()).rev() {
            let out_c = if i == 0 { 1 } else { config.channels[i - 1] };
            layers.push(Layer::Resize { h: sizes[i], w: sizes[i] });
            layers.push(conv(in_c, out_c, 1, 1));
            layers.push(if i == 0 { Layer::Sigmoid } else { Layer::Relu });
            in_c = out_c;
        }
        Ok(Self { config, layers, encoder_len, iteration: 0 })
    }

    /// Seeded fan-in uniform initialization, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`,
    /// zero biases, and a zero output convolution so the initial output is 0.5.
    pub fn new(config: AutoencoderConfig) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        model.randomize(model.config.seed, false);
        Ok(model)
    }

    /// Redraw every weight; with `include_output` the output convolution is
    /// random too.
    pub fn randomize(&mut self, seed: u64, include_output: bool) {
        let mut r = rng::seeded(seed);
        let last = self.layers.iter().rposition(|l| l.params().is_some());
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let fan_in = match layer {
                Layer::Conv2d(c) => c.in_c * K * K,
                Layer::Linear(l) => l.in_f,
                _ => continue,
            };
            let (w, b) = layer.params_mut().unwrap();
            if Some(i) == last && !include_output {
                w.fill(T::ZERO);
                b.fill(T::ZERO);
                continue;
            }
            let bound = (6.0 / fan_in as f64).sqrt();
            for v in w.iter_mut() {
                *v = T::from_f64(r.gen_range(-bound..bound) as f32 as f64);
            }
            if include_output {
                for v in b.iter_mut() {
                    *v = T::from_f64(r.gen_range(-0.1..0.1) as f32 as f64);
                }
            } else {
                b.fill(T::ZERO);
            }
        }
    }

    pub fn config(&self) -> &AutoencoderConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn encoder_len(&self) -> usize {
        self.encoder_len
    }

    /// `(name, shape)` of every parameter tensor in storage order.
    pub fn param_table(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some((ws, bs)) = layer.param_shapes() {
                let part = if i < self.encoder_len { "encoder" } else { "decoder" };
                out.push((format!("{part}.{i}.{}.weight", layer.kind()), ws));
                out.push((format!("{part}.{i}.{}.bias", layer.kind()), bs));
            }
        }
        out
    }

    pub fn params(&self) -> Vec<&[T]> {
        self.layers.iter().filter_map(|l| l.params()).flat_map(|(w, b)| [w, b]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<T>> {
        self.layers.iter_mut().filter_map(|l| l.params_mut()).flat_map(|(w, b)| [w, b]).collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Zero buffers congruent to [`Autoencoder::params`].
    pub fn zero_grads(&self) -> Vec<Vec<T>> {
        self.params().iter().map(|p| vec![T::ZERO; p.len()]).collect()
    }

    pub fn cast<U: Real>(&self) -> Autoencoder<U> {
        Autoencoder {
            config: self.config.clone(),
            layers: self.layers.iter().map(Layer::cast).collect(),
            encoder_len: self.encoder_len,
            iteration: self.iteration,
        }
    }

    fn image_shape(&self) -> Shape {
        Shape::new(1, self.config.resolution, self.config.resolution)
    }

    fn run(&self, range: std::ops::Range<usize>, x: &[T], s: Shape) -> Trace<T> {
        let mut values = vec![x.to_vec()];
        let mut shapes = vec![s];
        for layer in &self.layers[range] {
            let (y, ys) = layer.forward(values.last().unwrap(), *shapes.last().unwrap());
            values.push(y);
            shapes.push(ys);
        }
        Trace { values, shapes }
    }

    fn check_image(&self, image: &[T]) -> Result<()> {
        let n = self.config.resolution;
        if image.len() != n * n {
            return Err(Error::input(format!("expected a {n}x{n} image ({} values), got {}", n * n, image.len())));
        }
        Ok(())
    }

    /// Every intermediate activation of a full pass.
    pub fn trace(&self, image: &[T]) -> Result<Trace<T>> {
        self.check_image(image)?;
        Ok(self.run(0..self.layers.len(), image, self.image_shape()))
    }

    pub fn encode(&self, image: &[T]) -> Result<Vec<T>> {
        self.check_image(image)?;
        Ok(self.run(0..self.encoder_len, image, self.image_shape()).values.pop().unwrap())
    }

    pub fn decode(&self, latent: &[T]) -> Result<Vec<T>> {
        if latent.len() != self.config.latent_dim {
            return Err(Error::input(format!(
                "expected a latent of length {}, got {}",
                self.config.latent_dim,
                latent.len()
            )));
        }
        let s = Shape::new(latent.len(), 1, 1);
        Ok(self.run(self.encoder_len..self.layers.len(), latent, s).values.pop().unwrap())
    }

    /// `(reconstruction, latent)`.
    pub fn forward(&self, image: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let mut t = self.trace(image)?;
        let latent = t.values[self.encoder_len].clone();
        Ok((t.values.pop().unwrap(), latent))
    }

    /// Mean per-pixel BCE of reconstructing `target` from `image`, and its
    /// gradient accumulated into `grads` (congruent to [`Autoencoder::params`]).
    pub fn accumulate_grad(&self, image: &[T], target: &[T], grads: &mut [Vec<T>]) -> Result<f64> {
        let t = self.trace(image)?;
        let out = t.values.last().unwrap();
        let loss = bce(out, target)?;
        let mut g = bce_grad(out, target)?;
        let mut slot = grads.len();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let buffers = if layer.params().is_some() {
                slot -= 2;
                let (w, b) = grads[slot..slot + 2].split_at_mut(1);
                Some((&mut w[0][..], &mut b[0][..]))
            } else {
                None
            };
            match layer.backward(&t.values[i], t.shapes[i], &t.values[i + 1], &g, buffers, i > 0) {
                Some(gx) => g = gx,
                None => break,
            }
        }
        Ok(loss)
    }

    /// Loss and gradient for one autoencoding sample.
    pub fn backward(&self, image: &[T]) -> Result<(f64, Vec<Vec<T>>)> {
        let mut grads = self.zero_grads();
        let loss = self.accumulate_grad(image, image, &mut grads)?;
        Ok((loss, grads))
    }

    pub fn loss(&self, image: &[T]) -> Result<f64> {
        let (recon, _) = self.forward(image)?;
        bce(&recon, image)
    }
}

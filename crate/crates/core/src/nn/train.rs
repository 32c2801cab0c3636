//! Mini-batch Adam on mean BCE with a halve-on-plateau learning rate.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::Autoencoder;
use crate::error::{Error, Result};
use crate::rng;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// An epoch improves when its loss drops below the best so far by this much.
    pub min_delta: f64,
    /// Non-improving epochs before the learning rate halves.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 30, batch_size: 8, lr: 1e-4, min_delta: 1e-5, patience: 3, seed: 0 }
    }
}

/// Adam moments and schedule position; everything needed to resume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub lr: f64,
    pub step: u64,
    pub epoch: usize,
    pub best: Option<f64>,
    pub bad_epochs: usize,
    #[serde(skip)]
    pub m: Vec<Vec<f32>>,
    #[serde(skip)]
    pub v: Vec<Vec<f32>>,
}

impl OptimizerState {
    pub fn new(model: &Autoencoder<f32>, lr: f64) -> Self {
        let zeros: Vec<Vec<f32>> = model.zero_grads();
        Self { lr, step: 0, epoch: 0, best: None, bad_epochs: 0, m: zeros.clone(), v: zeros }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-pixel BCE over the epoch's training samples.
    pub train_bce: f64,
    pub test_bce: Option<f64>,
    /// Learning rate used during the epoch.
    pub lr: f64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
}

impl TrainReport {
    pub fn final_train_bce(&self) -> Option<f64> {
        self.epochs.last().map(|r| r.train_bce)
    }

    /// `epoch,train_bce,test_bce,lr,elapsed_s`; an empty field when there is no test set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_bce,test_bce,lr,elapsed_s\n");
        for r in &self.epochs {
            let test = r.test_bce.map(|t| format!("{t:.9}")).unwrap_or_default();
            out.push_str(&format!("{},{:.9},{},{},{:.3}\n", r.epoch, r.train_bce, test, r.lr, r.elapsed_s));
        }
        out
    }
}

fn check_dataset(data: &[Vec<f32>], resolution: usize, what: &str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::input(format!("{what} set is empty")));
    }
    if let Some(i) = data.iter().position(|d| d.len() != resolution * resolution) {
        return Err(Error::input(format!(
            "{what} image {i} has {} pixels, expected {resolution}x{resolution}",
            data[i].len()
        )));
    }
    Ok(())
}

/// Mean per-image BCE.
pub fn evaluate(model: &Autoencoder<f32>, data: &[Vec<f32>]) -> Result<f64> {
    let mut sum = 0.0;
    for img in data {
        sum += model.loss(img)?;
    }
    Ok(sum / data.len() as f64)
}

pub struct Trainer {
    pub model: Autoencoder<f32>,
    pub state: OptimizerState,
    pub config: TrainConfig,
}

impl Trainer {
    pub fn new(model: Autoencoder<f32>, config: TrainConfig) -> Result<Self> {
        if config.batch_size == 0 {
            return Err(Error::param("batch size must be positive"));
        }
        if !(config.lr > 0.0) {
            return Err(Error::param(format!("learning rate must be positive, got {}", config.lr)));
        }
        let state = OptimizerState::new(&model, config.lr);
        Ok(Self { model, state, config })
    }

    /// Continue from a saved optimizer state.
    pub fn resume(model: Autoencoder<f32>, state: OptimizerState, config: TrainConfig) -> Result<Self> {
        let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
        let ok = |m: &[Vec<f32>]| m.iter().map(Vec::len).eq(shapes.iter().copied());
        if !ok(&state.m) || !ok(&state.v) {
            return Err(Error::input("optimizer moments do not match the model parameters"));
        }
        Ok(Self { model, state, config })
    }

    fn adam_step(&mut self, grads: &[Vec<f32>], scale: f32) {
        self.state.step += 1;
        let t = self.state.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let step = (self.state.lr * bc2.sqrt() / bc1) as f32;
        let eps = (ADAM_EPS * bc2.sqrt()) as f32;
        let (b1, b2) = (BETA1 as f32, BETA2 as f32);
        let params = self.model.params_mut();
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.state.m).zip(&mut self.state.v) {
            for i in 0..p.len() {
                let gi = g[i] * scale;
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                p[i] -= step * m[i] / (v[i].sqrt() + eps);
            }
        }
        self.model.iteration = self.state.step;
    }

    /// One pass over `data` in an order fixed by the seed and epoch number.
    pub fn run_epoch(&mut self, data: &[Vec<f32>], test: Option<&[Vec<f32>]>) -> Result<EpochRecord> {
        let res = self.model.config().resolution;
        check_dataset(data, res, "training")?;
        if let Some(t) = test {
            check_dataset(t, res, "test")?;
        }
        let start = Instant::now();
        let epoch = self.state.epoch;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng::seeded(rng::derive_seed(self.config.seed, epoch as u64)));
        let lr = self.state.lr;
        let mut total = 0.0;
        for batch in order.chunks(self.config.batch_size) {
            let mut grads = self.model.zero_grads();
            for &i in batch {
                total += self.model.accumulate_grad(&data[i], &data[i], &mut grads)?;
            }
            self.adam_step(&grads, 1.0 / batch.len() as f32);
        }
        let train_bce = total / data.len() as f64;
        let test_bce = test.map(|t| evaluate(&self.model, t)).transpose()?;

        match self.state.best {
            Some(best) if train_bce > best - self.config.min_delta => self.state.bad_epochs += 1,
            _ => {
                self.state.best = Some(train_bce);
                self.state.bad_epochs = 0;
            }
        }
        if self.state.bad_epochs >= self.config.patience {
            self.state.lr *= 0.5;
            self.state.bad_epochs = 0;
        }
        self.state.epoch += 1;
        Ok(EpochRecord { epoch: epoch + 1, train_bce, test_bce, lr, elapsed_s: start.elapsed().as_secs_f64() })
    }

    /// Run until `config.epochs` epochs have completed in total, calling
    /// `on_epoch` after each.
    pub fn train(
        &mut self,
        data: &[Vec<f32>],
        test: Option<&[Vec<f32>]>,
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<TrainReport> {
        let mut report = TrainReport::default();
        while self.state.epoch < self.config.epochs {
            let rec = self.run_epoch(data, test)?;
            on_epoch(&rec);
            report.epochs.push(rec);
        }
        Ok(report)
    }
}

/// Train a fresh model.
pub fn train(
    model: Autoencoder<f32>,
    data: &[Vec<f32>],
    config: TrainConfig,
    test: Option<&[Vec<f32>]>,
) -> Result<(Autoencoder<f32>, OptimizerState, TrainReport)> {
    let mut t = Trainer::new(model, config)?;
    let report = t.train(data, test, |_| {})?;
    Ok((t.model, t.state, report))
}

//! Exact t-SNE with perplexity calibration by bisection.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Calibration stops once `|H - ln(perplexity)|` falls below this.
pub const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub seed: u64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Iterations run with exaggerated affinities and momentum 0.5.
    pub exaggeration_iters: usize,
}

impl TsneParams {
    pub fn new(perplexity: f64, seed: u64) -> Self {
        Self { perplexity, seed, iterations: 1000, learning_rate: 200.0, early_exaggeration: 12.0, exaggeration_iters: 250 }
    }
}

#[derive(Clone, Debug)]
pub struct Tsne {
    pub coords: Vec<[f64; 2]>,
    /// Entropy in nats of each conditional distribution after calibration.
    pub entropies: Vec<f64>,
    /// Symmetric joint affinities, dense `N x N`.
    pub p: Vec<f64>,
    /// KL(P||Q) of the initial layout and of the final one.
    pub kl_initial: f64,
    pub kl_final: f64,
}

pub fn squared_distances(vectors: &[Vec<f64>]) -> Vec<f64> {
    let n = vectors.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Row `i` of the conditional affinities for precision `beta`, and its
/// entropy. Distances are shifted by their minimum so the largest weight is 1.
fn conditional_row(row: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let dmin = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, (&d, o)) in row.iter().zip(out.iter_mut()).enumerate() {
        *o = if j == i { 0.0 } else { (-beta * (d - dmin)).exp() };
        sum += *o;
    }
    let mut h = 0.0;
    for (j, o) in out.iter_mut().enumerate() {
        if j != i {
            *o /= sum;
            if *o > 0.0 {
                h -= *o * o.ln();
            }
        }
    }
    h
}

/// Conditional affinities `P(j|i)` with every row calibrated to entropy
/// `ln(perplexity)`. Returns the row-major matrix and the entropies.
pub fn calibrate(distances: &[f64], n: usize, perplexity: f64) -> (Vec<f64>, Vec<f64>) {
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    let mut entropies = vec![0.0; n];
    for i in 0..n {
        let row = &distances[i * n..(i + 1) * n];
        let out = &mut p[i * n..(i + 1) * n];
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut beta = 1.0;
        let mut h = conditional_row(row, i, beta, out);
        for _ in 0..MAX_BISECTIONS {
            if (h - target).abs() < ENTROPY_TOL {
                break;
            }
            // Entropy falls as beta grows.
            if h > target {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (lo + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (lo + hi);
            }
            h = conditional_row(row, i, beta, out);
        }
        entropies[i] = h;
    }
    (p, entropies)
}

/// `(P(j|i) + P(i|j)) / 2N`.
pub fn symmetrize(cond: &[f64], n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64);
        }
    }
    p
}

/// Student-t kernel weights `1 / (1 + |yi - yj|^2)` and their sum over `i != j`.
fn kernel(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut w = vec![0.0; n * n];
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (y[i][0] - y[j][0], y[i][1] - y[j][1]);
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            w[i * n + j] = v;
            w[j * n + i] = v;
            z += 2.0 * v;
        }
    }
    (w, z)
}

/// `sum_{i != j} p_ij ln(p_ij / q_ij)`, skipping zero `p_ij`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let (w, z) = kernel(y);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                kl += pij * (pij * z / w[i * n + j]).ln();
            }
        }
    }
    kl
}

/// Gradient of [`kl_divergence`] with affinities scaled by `exaggeration`:
/// `4 sum_j (a p_ij - q_ij) w_ij (y_i - y_j)`.
pub fn kl_gradient(p: &[f64], y: &[[f64; 2]], exaggeration: f64) -> Vec<[f64; 2]> {
    let n = y.len();
    let (w, z) = kernel(y);
    let mut g = vec![[0.0; 2]; n];
    for i in 0..n {
        let mut acc = [0.0; 2];
        for j in 0..n {
            if i == j {
                continue;
            }
            let wij = w[i * n + j];
            let f = (exaggeration * p[i * n + j] - wij / z) * wij;
            acc[0] += f * (y[i][0] - y[j][0]);
            acc[1] += f * (y[i][1] - y[j][1]);
        }
        g[i] = [4.0 * acc[0], 4.0 * acc[1]];
    }
    g
}

pub fn check_perplexity(perplexity: f64, n: usize) -> Result<()> {
    let max = (n as f64 - 1.0) / 3.0;
    if !(perplexity >= 1.0 && perplexity < max) {
        return Err(Error::param(format!(
            "perplexity {perplexity} outside [1, {max}) for {n} points"
        )));
    }
    Ok(())
}

pub fn tsne(vectors: &[Vec<f64>], params: &TsneParams) -> Result<Tsne> {
    let n = vectors.len();
    check_perplexity(params.perplexity, n)?;
    let dim = vectors[0].len();
    if let Some(i) = vectors.iter().position(|v| v.len() != dim) {
        return Err(Error::input(format!("vector {i} has dimension {}, expected {dim}", vectors[i].len())));
    }
    if vectors.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite entry in t-SNE input"));
    }
    let d = squared_distances(vectors);
    let (cond, entropies) = calibrate(&d, n, params.perplexity);
    let p = symmetrize(&cond, n);

    let mut r = rng::seeded(params.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut r), normal.sample(&mut r)]).collect();
    let kl_initial = kl_divergence(&p, &y);
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    for it in 0..params.iterations {
        let early = it < params.exaggeration_iters;
        let (exaggeration, momentum) = if early { (params.early_exaggeration, 0.5) } else { (1.0, 0.8) };
        let g = kl_gradient(&p, &y, exaggeration);
        for i in 0..n {
            for k in 0..2 {
                let same_sign = (g[i][k] > 0.0) == (update[i][k] > 0.0);
                gains[i][k] = if same_sign { gains[i][k] * 0.8 } else { gains[i][k] + 0.2 };
                gains[i][k] = gains[i][k].max(0.01);
                update[i][k] = momentum * update[i][k] - params.learning_rate * gains[i][k] * g[i][k];
                y[i][k] += update[i][k];
            }
        }
        let mean = y.iter().fold([0.0; 2], |a, p| [a[0] + p[0], a[1] + p[1]]);
        for p in &mut y {
            p[0] -= mean[0] / n as f64;
            p[1] -= mean[1] / n as f64;
        }
    }
    let kl_final = kl_divergence(&p, &y);
    Ok(Tsne { coords: y, entropies, p, kl_initial, kl_final })
}

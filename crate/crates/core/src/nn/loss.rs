//! Binary cross-entropy.

use super::real::Real;
use crate::error::{Error, Result};

pub const BCE_EPS: f64 = 1e-7;

fn check(a_len: usize, b_len: usize) -> Result<()> {
    if a_len != b_len || a_len == 0 {
        return Err(Error::input(format!("BCE shape mismatch: {a_len} predictions, {b_len} targets")));
    }
    Ok(())
}

/// `-(1/n) sum b log a + (1 - b) log(1 - a)` with `a` clamped to
/// `[1e-7, 1 - 1e-7]`. Accumulated in `f64`.
pub fn bce<T: Real>(a: &[T], b: &[T]) -> Result<f64> {
    check(a.len(), b.len())?;
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&a, &b)| {
            let (a, b) = (a.to_f64().clamp(BCE_EPS, 1.0 - BCE_EPS), b.to_f64());
            -(b * a.ln() + (1.0 - b) * (1.0 - a).ln())
        })
        .sum();
    Ok(sum / a.len() as f64)
}

/// Derivative of [`bce`] with respect to `a`; zero where the clamp is active.
pub fn bce_grad<T: Real>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    check(a.len(), b.len())?;
    let n = a.len() as f64;
    Ok(a.iter()
        .zip(b)
        .map(|(&a, &b)| {
            let (a, b) = (a.to_f64(), b.to_f64());
            if !(BCE_EPS..=1.0 - BCE_EPS).contains(&a) {
                return T::ZERO;
            }
            T::from_f64((-b / a + (1.0 - b) / (1.0 - a)) / n)
        })
        .collect())
}

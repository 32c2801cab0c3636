//! Principal component analysis through the covariance eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Top `k` unit eigenvectors. Each is signed so its largest-magnitude
    /// entry (first on ties) is positive.
    pub components: Vec<Vec<f64>>,
    /// All eigenvalues of the sample covariance (divisor `N - 1`), non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Centered data times components, one row per input vector.
    pub coords: Vec<Vec<f64>>,
    /// True when every input vector is identical; coordinates are then zero.
    pub degenerate: bool,
}

/// Sample covariance with divisor `N - 1`.
pub fn covariance(vectors: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let (n, m) = (vectors.len(), vectors[0].len());
    let mut mean = vec![0.0; m];
    for v in vectors {
        for (a, b) in mean.iter_mut().zip(v) {
            *a += b;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let centered = DMatrix::from_fn(n, m, |i, j| vectors[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    (mean, cov)
}

pub fn pca(vectors: &[Vec<f64>], k: usize) -> Result<Pca> {
    if vectors.len() < 2 {
        return Err(Error::input(format!("PCA needs at least 2 vectors, got {}", vectors.len())));
    }
    let m = vectors[0].len();
    if let Some(i) = vectors.iter().position(|v| v.len() != m) {
        return Err(Error::input(format!("vector {i} has dimension {}, expected {m}", vectors[i].len())));
    }
    if k == 0 || m < k {
        return Err(Error::param(format!("cannot take {k} components of {m}-dimensional data")));
    }
    if vectors.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite entry in PCA input"));
    }
    let (mean, cov) = covariance(vectors);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let components: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&i| {
            let mut c: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let lead = (0..m).fold(0, |best, j| if c[j].abs() > c[best].abs() { j } else { best });
            if c[lead] < 0.0 {
                c.iter_mut().for_each(|v| *v = -*v);
            }
            c
        })
        .collect();
    let degenerate = vectors.iter().all(|v| v == &vectors[0]);
    let coords = vectors
        .iter()
        .map(|v| {
            components
                .iter()
                .map(|c| if degenerate { 0.0 } else { v.iter().zip(&mean).zip(c).map(|((x, mu), w)| (x - mu) * w).sum() })
                .collect()
        })
        .collect();
    Ok(Pca { mean, components, eigenvalues, coords, degenerate })
}

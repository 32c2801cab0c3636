//! Dense eigensolver and cluster statistics for checking layouts.

/// Covariance with divisor `N - 1`, accumulated in plain loops.
pub fn covariance(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m) = (vectors.len(), vectors[0].len());
    let mean: Vec<f64> = (0..m).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
    let mut c = vec![vec![0.0; m]; m];
    for v in vectors {
        for a in 0..m {
            for b in 0..m {
                c[a][b] += (v[a] - mean[a]) * (v[b] - mean[b]);
            }
        }
    }
    c.iter_mut().flatten().for_each(|x| *x /= n as f64 - 1.0);
    c
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// non-increasing.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let m = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|i| a[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Mean silhouette coefficient under Euclidean distance.
pub fn silhouette(points: &[[f64; 2]], labels: &[usize]) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for (i, &p) in points.iter().enumerate() {
        let mut sum = vec![0.0; k];
        let mut count = vec![0usize; k];
        for (j, &q) in points.iter().enumerate() {
            if i != j {
                sum[labels[j]] += dist(p, q);
                count[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if count[own] == 0 {
            continue;
        }
        let a = sum[own] / count[own] as f64;
        let b = (0..k).filter(|&c| c != own && count[c] > 0).map(|c| sum[c] / count[c] as f64).fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / points.len() as f64
}

/// Leave-one-out k-nearest-neighbour accuracy; ties in distance are broken
/// by index and ties in votes by the smallest label.
pub fn knn_accuracy(points: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    let classes = labels.iter().max().unwrap() + 1;
    let mut correct = 0;
    for (i, &p) in points.iter().enumerate() {
        let mut others: Vec<(f64, usize)> =
            points.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, &q)| (dist(p, q), j)).collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; classes];
        for &(_, j) in others.iter().take(k) {
            votes[labels[j]] += 1;
        }
        let best = (0..classes).max_by(|&a, &b| votes[a].cmp(&votes[b]).then(b.cmp(&a))).unwrap();
        correct += (best == labels[i]) as usize;
    }
    correct as f64 / points.len() as f64
}

/// Fraction of groups whose mean intra-group distance is below the mean
/// distance to their nearest foreign group (nearest by mean cross distance).
pub fn group_cohesion(points: &[[f64; 2]], groups: &[usize]) -> f64 {
    let g = groups.iter().max().unwrap() + 1;
    let members: Vec<Vec<[f64; 2]>> =
        (0..g).map(|k| points.iter().zip(groups).filter(|&(_, &x)| x == k).map(|(&p, _)| p).collect()).collect();
    let mean_cross = |a: &[[f64; 2]], b: &[[f64; 2]]| {
        a.iter().flat_map(|&p| b.iter().map(move |&q| dist(p, q))).sum::<f64>() / (a.len() * b.len()) as f64
    };
    let mut cohesive = 0;
    let mut counted = 0;
    for k in 0..g {
        let m = &members[k];
        if m.len() < 2 {
            continue;
        }
        counted += 1;
        let pairs = m.len() * (m.len() - 1) / 2;
        let intra = (0..m.len()).flat_map(|i| (i + 1..m.len()).map(move |j| (i, j))).map(|(i, j)| dist(m[i], m[j])).sum::<f64>()
            / pairs as f64;
        let nearest = (0..g)
            .filter(|&h| h != k && !members[h].is_empty())
            .map(|h| mean_cross(m, &members[h]))
            .fold(f64::INFINITY, f64::min);
        cohesive += (intra < nearest) as usize;
    }
    cohesive as f64 / counted as f64
}

/// KL(P||Q) written directly from the definition of the Student-t kernel.
pub fn kl_reference(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let w = |i: usize, j: usize| 1.0 / (1.0 + (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2));
    let z: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| w(i, j)).sum();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && p[i * n + j] > 0.0 {
                kl += p[i * n + j] * (p[i * n + j] / (w(i, j) / z)).ln();
            }
        }
    }
    kl
}

//! Persistence pairing of critical cells.
//!
//! Minima are paired with saddles by sweeping saddles upward and merging the
//! components of their descending endpoints (elder rule: the younger,
//! higher minimum dies). Maxima are paired symmetrically by sweeping saddles
//! downward over ascending endpoints, with the region outside the domain
//! acting as the oldest maximum. This is the persistence of the lower-star
//! filtration of a disk: every saddle and maximum is paired and only the
//! global minimum is essential.

use std::cmp::Reverse;

use super::complex::{Simplex, TriangulatedGrid};
use super::gradient::{CriticalCell, DiscreteGradient};
use super::paths::{saddle_maxima, saddle_minima, AscentEnd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairKind {
    MinSaddle,
    SaddleMax,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PersistencePair {
    pub kind: PairKind,
    /// The minimum (for `MinSaddle`) or maximum (for `SaddleMax`).
    pub extremum: CriticalCell,
    pub saddle: CriticalCell,
    /// `|f(saddle) - f(extremum)|`.
    pub persistence: f64,
}

impl PersistencePair {
    /// Critical cell born first in the sweep direction.
    pub fn birth(&self) -> CriticalCell {
        self.extremum
    }

    pub fn death(&self) -> CriticalCell {
        self.saddle
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }
}

fn cell(grid: &TriangulatedGrid, simplex: Simplex) -> CriticalCell {
    let vertex = grid.max_vertex(simplex);
    CriticalCell { simplex, vertex, value: grid.value(vertex) }
}

fn pair(grid: &TriangulatedGrid, kind: PairKind, extremum: Simplex, saddle: Simplex) -> PersistencePair {
    let extremum = cell(grid, extremum);
    let saddle = cell(grid, saddle);
    PersistencePair {
        kind,
        persistence: (saddle.value - extremum.value).abs(),
        extremum,
        saddle,
    }
}

/// All finite persistence pairs of the gradient's critical cells.
pub fn compute_persistence_pairs(g: &DiscreteGradient, grid: &TriangulatedGrid) -> Vec<PersistencePair> {
    let mut saddles: Vec<u32> = g.critical_edges().collect();
    saddles.sort_by_key(|&e| grid.key(Simplex::Edge(e)));

    let mut out = min_saddle_pairs(g, grid, &saddles);
    saddles.reverse();
    out.extend(saddle_max_pairs(g, grid, &saddles));
    out
}

/// `saddles` in increasing key order.
fn min_saddle_pairs(g: &DiscreteGradient, grid: &TriangulatedGrid, saddles: &[u32]) -> Vec<PersistencePair> {
    let order = grid.order();
    let minima: Vec<u32> = g.critical_vertices().collect();
    let mut slot = vec![u32::MAX; grid.num_vertices()];
    for (i, &m) in minima.iter().enumerate() {
        slot[m as usize] = i as u32;
    }
    let mut sets = DisjointSet::new(minima.len());
    // Oldest (lowest) minimum of every root.
    let mut oldest: Vec<u32> = minima.clone();
    let mut out = Vec::new();
    for &s in saddles {
        let [a, b] = saddle_minima(g, grid, s).map(|m| sets.find(slot[m as usize]));
        if a == b {
            continue;
        }
        let (ma, mb) = (oldest[a as usize], oldest[b as usize]);
        let (young_root, old_root, young, old) = if order.rank(ma) > order.rank(mb) {
            (a, b, ma, mb)
        } else {
            (b, a, mb, ma)
        };
        sets.parent[young_root as usize] = old_root;
        oldest[old_root as usize] = old;
        out.push(pair(grid, PairKind::MinSaddle, Simplex::Vertex(young), Simplex::Edge(s)));
    }
    out
}

/// `saddles` in decreasing key order. Ascending paths that leave the domain
/// reach the outside, a component older than every maximum.
fn saddle_max_pairs(g: &DiscreteGradient, grid: &TriangulatedGrid, saddles: &[u32]) -> Vec<PersistencePair> {
    let maxima: Vec<u32> = g.critical_triangles().collect();
    let outside = maxima.len() as u32;
    let mut slot = std::collections::HashMap::with_capacity(maxima.len());
    for (i, &t) in maxima.iter().enumerate() {
        slot.insert(t, i as u32);
    }
    let age = |t: Option<u32>| t.map(|t| Reverse(grid.key(Simplex::Triangle(t))));
    let mut sets = DisjointSet::new(maxima.len() + 1);
    // Oldest maximum of every root; `None` is the outside.
    let mut oldest: Vec<Option<u32>> = maxima.iter().copied().map(Some).chain([None]).collect();
    let mut out = Vec::new();
    for &s in saddles {
        let [a, b] = saddle_maxima(g, grid, s).map(|end| match end {
            AscentEnd::Maximum(t) => sets.find(slot[&t]),
            AscentEnd::Boundary(_) => sets.find(outside),
        });
        if a == b {
            continue;
        }
        let (ta, tb) = (oldest[a as usize], oldest[b as usize]);
        // `None` (outside) sorts before every maximum, i.e. is oldest.
        let (young_root, old_root, young, old) = if age(ta) > age(tb) {
            (a, b, ta, tb)
        } else {
            (b, a, tb, ta)
        };
        sets.parent[young_root as usize] = old_root;
        oldest[old_root as usize] = old;
        let young = young.expect("the outside is never the younger component");
        out.push(pair(grid, PairKind::SaddleMax, Simplex::Triangle(young), Simplex::Edge(s)));
    }
    out
}

/// Smallest persistence among the finite pairs, if any.
pub fn min_persistence(pairs: &[PersistencePair]) -> Option<f64> {
    pairs.iter().map(|p| p.persistence).min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField2D;
    use crate::morse::complex::build_complex;
    use crate::morse::gradient::compute_gradient;

    fn pairs_of(f: &ScalarField2D) -> Vec<PersistencePair> {
        let grid = build_complex(f).unwrap();
        let g = compute_gradient(&grid);
        compute_persistence_pairs(&g, &grid)
    }

    #[test]
    fn monotone_field_has_no_pairs() {
        let f = ScalarField2D::from_fn(9, 7, |x, y| 2.0 * x + 0.5 * y).unwrap();
        assert!(pairs_of(&f).is_empty());
    }

    #[test]
    fn two_peaks_one_saddle() {
        // Peaks 1.0 and 0.6 joined through 0.2; the frame is lower.
        #[rustfmt::skip]
        let values = vec![
            -0.9, -0.8, -0.7, -0.6, -0.5,
            -0.4,  1.0,  0.2,  0.6, -0.3,
            -0.25, -0.2, -0.15, -0.1, -0.05,
        ];
        let f = ScalarField2D::new(5, 3, values).unwrap();
        let pairs = pairs_of(&f);
        let mut sm: Vec<_> = pairs.iter().filter(|p| p.kind == PairKind::SaddleMax).collect();
        sm.sort_by(|a, b| a.persistence.total_cmp(&b.persistence));
        // The lower peak dies at the inner saddle; the higher one against
        // the domain boundary, whose highest vertex is -0.05.
        assert_eq!(sm.len(), 2);
        assert!((sm[0].persistence - 0.4).abs() < 1e-12);
        assert_eq!(sm[0].extremum.value, 0.6);
        assert_eq!(sm[0].saddle.value, 0.2);
        assert_eq!(sm[1].extremum.value, 1.0);
        assert!((sm[1].persistence - 1.05).abs() < 1e-12);
    }

    #[test]
    fn persistence_is_translation_invariant() {
        let f = ScalarField2D::from_fn(12, 10, |x, y| (x * 0.9).sin() * (y * 0.7).cos() + 0.01 * x).unwrap();
        let g = ScalarField2D::from_fn(12, 10, |x, y| (x * 0.9).sin() * (y * 0.7).cos() + 0.01 * x + 3.5).unwrap();
        let a: Vec<f64> = pairs_of(&f).iter().map(|p| p.persistence).collect();
        let b: Vec<f64> = pairs_of(&g).iter().map(|p| p.persistence).collect();
        assert_eq!(a.len(), b.len());
        assert!(!a.is_empty());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

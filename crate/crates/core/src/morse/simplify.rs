//! Persistence simplification by gradient path reversal.

use super::complex::{Simplex, TriangulatedGrid};
use super::gradient::DiscreteGradient;
use super::paths::{ascending_path, descending_path, saddle_maxima, saddle_minima, AscentEnd};
use super::persistence::{compute_persistence_pairs, PairKind, PersistencePair};
use crate::error::{Error, Result};

/// Result of [`simplify`].
#[derive(Clone, Debug)]
pub struct Simplified {
    pub gradient: DiscreteGradient,
    pub cancelled: usize,
    /// Pairs below the threshold that could never be cancelled because their
    /// cells were joined by more than one gradient path.
    pub blocked: Vec<PersistencePair>,
}

/// Cancel every persistence pair with persistence strictly below `threshold`.
///
/// Pairs are cancelled in increasing persistence. A pair is cancellable only
/// when exactly one gradient path joins its saddle to its extremum; pairs
/// that fail this test are retried after the rest of the pass, and reported
/// in [`Simplified::blocked`] once a pass makes no progress.
pub fn simplify(g: &DiscreteGradient, grid: &TriangulatedGrid, threshold: f64) -> Result<Simplified> {
    if !(threshold >= 0.0) {
        return Err(Error::param(format!("threshold must be >= 0, got {threshold}")));
    }
    let mut gradient = g.clone();
    let mut cancelled = 0;
    loop {
        let mut candidates: Vec<PersistencePair> = compute_persistence_pairs(&gradient, grid)
            .into_iter()
            .filter(|p| p.persistence < threshold)
            .collect();
        if candidates.is_empty() {
            return Ok(Simplified { gradient, cancelled, blocked: Vec::new() });
        }
        candidates.sort_by(|a, b| {
            a.persistence
                .total_cmp(&b.persistence)
                .then(a.kind.cmp(&b.kind))
                .then_with(|| grid.key(a.saddle.simplex).cmp(&grid.key(b.saddle.simplex)))
        });
        let mut progress = false;
        for p in &candidates {
            if cancel(&mut gradient, grid, p) {
                cancelled += 1;
                progress = true;
            }
        }
        if !progress {
            return Ok(Simplified { gradient, cancelled, blocked: candidates });
        }
    }
}

/// Reverse the unique path between the pair's cells. Returns false, leaving
/// the gradient untouched, when the pair is no longer cancellable.
pub fn cancel(g: &mut DiscreteGradient, grid: &TriangulatedGrid, p: &PersistencePair) -> bool {
    let Simplex::Edge(s) = p.saddle.simplex else {
        return false;
    };
    if !g.is_critical(p.saddle.simplex) || !g.is_critical(p.extremum.simplex) {
        return false;
    }
    match (p.kind, p.extremum.simplex) {
        (PairKind::MinSaddle, Simplex::Vertex(m)) => {
            let ends = saddle_minima(g, grid, s);
            let hits: Vec<usize> = (0..2).filter(|&i| ends[i] == m).collect();
            let [i] = hits[..] else {
                return false;
            };
            let start = grid.edge_vertices(s)[i];
            let path = descending_path(g, grid, start);
            // s -> start -> e1 -> v1 -> ... -> m becomes (start, s), (v1, e1), ...
            let mut prev_edge = s;
            let mut v = start;
            for (e, next) in path {
                g.pair_vertex_edge(v, prev_edge);
                prev_edge = e;
                v = next;
            }
            g.pair_vertex_edge(v, prev_edge);
            true
        }
        (PairKind::SaddleMax, Simplex::Triangle(t)) => {
            let ends = saddle_maxima(g, grid, s);
            let hits: Vec<usize> = (0..2).filter(|&i| ends[i] == AscentEnd::Maximum(t)).collect();
            let [i] = hits[..] else {
                return false;
            };
            let (cof, _) = grid.edge_cofaces(s);
            let (path, _) = ascending_path(g, grid, s, cof[i]);
            // s -> t0 -> e1 -> t1 -> ... -> t becomes (s, t0), (e1, t1), ...
            let mut e = s;
            for (tri, next_edge) in path {
                g.pair_edge_triangle(e, tri);
                match next_edge {
                    Some(ne) => e = ne,
                    None => break,
                }
            }
            true
        }
        _ => false,
    }
}

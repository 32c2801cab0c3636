//! Discrete Morse theory on triangulated grids: gradient, persistence,
//! simplification and separatrix arcs.

mod arcs;
mod complex;
mod gradient;
mod paths;
mod persistence;
mod simplify;

pub use arcs::{arcs_to_json, extract_arcs, ArcEnd, ArcMode, SeparatrixArc};
pub use complex::{build_complex, Simplex, SimplexKey, TotalOrder, TriangulatedGrid};
pub use gradient::{compute_gradient, CriticalCell, DiscreteGradient, EdgePair};
pub use paths::{
    ascending_end, ascending_path, descending_end, descending_path, saddle_maxima, saddle_minima,
    AscentEnd,
};
pub use persistence::{compute_persistence_pairs, min_persistence, PairKind, PersistencePair};
pub use simplify::{cancel, simplify, Simplified};

use crate::error::Result;
use crate::field::ScalarField2D;

/// Field to arcs in one call: triangulate, build the gradient, cancel pairs
/// below `threshold` and trace separatrices.
pub fn morse_arcs(field: &ScalarField2D, threshold: f64, mode: ArcMode) -> Result<MorseSummary> {
    let grid = build_complex(field)?;
    let g = compute_gradient(&grid);
    let s = simplify(&g, &grid, threshold)?;
    let arcs = extract_arcs(&s.gradient, &grid, mode);
    Ok(MorseSummary {
        critical_counts: s.gradient.critical_counts(),
        cancelled: s.cancelled,
        blocked: s.blocked.len(),
        arcs,
    })
}

#[derive(Clone, Debug)]
pub struct MorseSummary {
    pub critical_counts: [usize; 3],
    pub cancelled: usize,
    pub blocked: usize,
    pub arcs: Vec<SeparatrixArc>,
}

//! V-path tracing.
//!
//! In two dimensions gradient paths never branch: a vertex is paired with at
//! most one edge and a triangle with at most one edge. A critical edge
//! therefore has exactly two descending paths (one per endpoint) and at most
//! two ascending paths (one per coface).

use super::complex::{Simplex, TriangulatedGrid};
use super::gradient::DiscreteGradient;

/// Where an ascending path from a saddle stops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AscentEnd {
    Maximum(u32),
    /// Left the domain through this boundary edge.
    Boundary(u32),
}

/// Critical vertex reached by descending from vertex `v`.
pub fn descending_end(g: &DiscreteGradient, grid: &TriangulatedGrid, mut v: u32) -> u32 {
    let mut guard = grid.num_vertices();
    while let Some((_, next)) = g.descend(grid, v) {
        v = next;
        guard -= 1;
        assert!(guard > 0, "descending V-path does not terminate");
    }
    v
}

/// Descending path from vertex `v`: the visited `(edge, vertex)` steps,
/// excluding `v` itself. The last vertex is critical.
pub fn descending_path(g: &DiscreteGradient, grid: &TriangulatedGrid, mut v: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    while let Some((e, next)) = g.descend(grid, v) {
        out.push((e, next));
        v = next;
        assert!(out.len() <= grid.num_vertices(), "descending V-path does not terminate");
    }
    out
}

/// End of the ascending path that leaves edge `e` through coface `t`.
pub fn ascending_end(g: &DiscreteGradient, grid: &TriangulatedGrid, mut e: u32, mut t: u32) -> AscentEnd {
    let mut guard = grid.num_triangles() + 1;
    loop {
        match g.ascend(t, e) {
            None => {
                return if g.is_critical(Simplex::Triangle(t)) {
                    AscentEnd::Maximum(t)
                } else {
                    // `t` is paired with `e` itself: only possible for the
                    // starting edge of a non-critical walk.
                    AscentEnd::Boundary(e)
                };
            }
            Some(next_e) => {
                let (cof, n) = grid.edge_cofaces(next_e);
                if n == 1 {
                    return AscentEnd::Boundary(next_e);
                }
                t = if cof[0] == t { cof[1] } else { cof[0] };
                e = next_e;
            }
        }
        guard -= 1;
        assert!(guard > 0, "ascending V-path does not terminate");
    }
}

/// Ascending path from edge `e` through coface `t`: the visited
/// `(triangle, edge)` steps. The final step's edge is `None` when the path
/// stops at a critical triangle.
pub fn ascending_path(
    g: &DiscreteGradient,
    grid: &TriangulatedGrid,
    mut e: u32,
    mut t: u32,
) -> (Vec<(u32, Option<u32>)>, AscentEnd) {
    let mut out = Vec::new();
    loop {
        match g.ascend(t, e) {
            None => {
                out.push((t, None));
                let end = if g.is_critical(Simplex::Triangle(t)) {
                    AscentEnd::Maximum(t)
                } else {
                    AscentEnd::Boundary(e)
                };
                return (out, end);
            }
            Some(next_e) => {
                out.push((t, Some(next_e)));
                let (cof, n) = grid.edge_cofaces(next_e);
                if n == 1 {
                    return (out, AscentEnd::Boundary(next_e));
                }
                t = if cof[0] == t { cof[1] } else { cof[0] };
                e = next_e;
            }
        }
        assert!(out.len() <= grid.num_triangles(), "ascending V-path does not terminate");
    }
}

/// Both descending ends of saddle `e`, in endpoint order.
pub fn saddle_minima(g: &DiscreteGradient, grid: &TriangulatedGrid, e: u32) -> [u32; 2] {
    grid.edge_vertices(e).map(|v| descending_end(g, grid, v))
}

/// Ascending ends of saddle `e`, one per side. A boundary edge has the
/// outside of the domain on its missing side, reported as `Boundary(e)`.
pub fn saddle_maxima(g: &DiscreteGradient, grid: &TriangulatedGrid, e: u32) -> [AscentEnd; 2] {
    let (cof, n) = grid.edge_cofaces(e);
    let mut out = [AscentEnd::Boundary(e); 2];
    for i in 0..n {
        out[i] = ascending_end(g, grid, e, cof[i]);
    }
    out
}

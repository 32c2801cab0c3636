//! Separatrix extraction.

use serde::{Deserialize, Serialize};

use super::complex::{Simplex, TriangulatedGrid};
use super::gradient::DiscreteGradient;
use super::paths::{ascending_path, descending_path, AscentEnd};
use crate::error::{Error, Result};

/// Which separatrices to extract.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcMode {
    /// Saddle to minimum: boundaries of the descending manifolds of maxima.
    #[default]
    SaddleMin,
    /// Saddle to maximum: the complex of `-f`.
    SaddleMax,
}

impl std::str::FromStr for ArcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saddle-min" | "min" => Ok(ArcMode::SaddleMin),
            "saddle-max" | "max" => Ok(ArcMode::SaddleMax),
            _ => Err(Error::param(format!("unknown arc mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcEnd {
    Minimum(u32),
    Maximum(u32),
    /// Ascending arc that leaves the domain through a boundary edge.
    Boundary(u32),
}

/// One separatrix as a polyline in field coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparatrixArc {
    pub saddle: u32,
    pub end: ArcEnd,
    pub points: Vec<[f64; 2]>,
    /// Simplices traversed after the saddle, in path order.
    pub cells: Vec<Simplex>,
}

impl SeparatrixArc {
    /// Build an arc from explicit points, for rasterization and tests.
    pub fn from_points(points: Vec<[f64; 2]>) -> Self {
        Self { saddle: u32::MAX, end: ArcEnd::Boundary(u32::MAX), points, cells: Vec::new() }
    }
}

/// Trace the separatrices of every critical edge, two per saddle for
/// `SaddleMin` and one per coface for `SaddleMax`.
pub fn extract_arcs(g: &DiscreteGradient, grid: &TriangulatedGrid, mode: ArcMode) -> Vec<SeparatrixArc> {
    let mut arcs = Vec::new();
    for s in g.critical_edges() {
        let start = grid.position(Simplex::Edge(s));
        match mode {
            ArcMode::SaddleMin => {
                for v in grid.edge_vertices(s) {
                    let mut points = vec![start, grid.position(Simplex::Vertex(v))];
                    let mut cells = vec![Simplex::Vertex(v)];
                    let mut last = v;
                    for (e, next) in descending_path(g, grid, v) {
                        points.push(grid.position(Simplex::Vertex(next)));
                        cells.push(Simplex::Edge(e));
                        cells.push(Simplex::Vertex(next));
                        last = next;
                    }
                    arcs.push(SeparatrixArc { saddle: s, end: ArcEnd::Minimum(last), points, cells });
                }
            }
            ArcMode::SaddleMax => {
                let (cof, n) = grid.edge_cofaces(s);
                for &t in &cof[..n] {
                    let (path, end) = ascending_path(g, grid, s, t);
                    let mut points = vec![start];
                    let mut cells = Vec::new();
                    for (tri, next_edge) in path {
                        points.push(grid.position(Simplex::Triangle(tri)));
                        cells.push(Simplex::Triangle(tri));
                        if let Some(e) = next_edge {
                            points.push(grid.position(Simplex::Edge(e)));
                            cells.push(Simplex::Edge(e));
                        }
                    }
                    let end = match end {
                        AscentEnd::Maximum(t) => ArcEnd::Maximum(t),
                        AscentEnd::Boundary(e) => ArcEnd::Boundary(e),
                    };
                    arcs.push(SeparatrixArc { saddle: s, end, points, cells });
                }
            }
        }
    }
    arcs
}

#[derive(Serialize, Deserialize)]
struct ArcJson {
    saddle: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    min: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max: Option<[f64; 2]>,
    points: Vec<[f64; 2]>,
}

/// JSON list of `{"saddle": [x,y], "min": [x,y], "points": [[x,y],...]}`.
/// Ascending arcs carry `"max"` instead of `"min"`.
pub fn arcs_to_json(arcs: &[SeparatrixArc]) -> String {
    let list: Vec<ArcJson> = arcs
        .iter()
        .map(|a| {
            let first = a.points.first().copied().unwrap_or([0.0, 0.0]);
            let last = a.points.last().copied().unwrap_or(first);
            let (min, max) = match a.end {
                ArcEnd::Minimum(_) => (Some(last), None),
                _ => (None, Some(last)),
            };
            ArcJson { saddle: first, min, max, points: a.points.clone() }
        })
        .collect();
    serde_json::to_string(&list).expect("arcs serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField2D;
    use crate::morse::complex::build_complex;
    use crate::morse::gradient::compute_gradient;

    #[test]
    fn arcs_start_at_saddle_and_end_at_minimum() {
        let f = ScalarField2D::from_fn(15, 11, |x, y| (x * 0.9).sin() + (y * 0.8).sin()).unwrap();
        let grid = build_complex(&f).unwrap();
        let g = compute_gradient(&grid);
        let arcs = extract_arcs(&g, &grid, ArcMode::SaddleMin);
        assert_eq!(arcs.len(), 2 * g.critical_counts()[1]);
        for a in &arcs {
            assert_eq!(a.points[0], grid.position(Simplex::Edge(a.saddle)));
            let ArcEnd::Minimum(m) = a.end else { panic!() };
            assert!(g.is_critical(Simplex::Vertex(m)));
            assert_eq!(*a.points.last().unwrap(), grid.position(Simplex::Vertex(m)));
            for w in a.points[1..].windows(2) {
                let d = (w[0][0] - w[1][0]).abs().max((w[0][1] - w[1][1]).abs());
                assert_eq!(d, 1.0);
            }
        }
        let json = arcs_to_json(&arcs[..1]);
        assert!(json.starts_with("[{\"saddle\":"), "{json}");
        assert!(json.contains("\"min\":"));
    }

    #[test]
    fn ascending_arcs_end_at_maximum_or_boundary() {
        let f = ScalarField2D::from_fn(15, 11, |x, y| (x * 0.9).sin() + (y * 0.8).sin()).unwrap();
        let grid = build_complex(&f).unwrap();
        let g = compute_gradient(&grid);
        for a in extract_arcs(&g, &grid, ArcMode::SaddleMax) {
            match a.end {
                ArcEnd::Maximum(t) => assert!(g.is_critical(Simplex::Triangle(t))),
                ArcEnd::Boundary(e) => assert!(grid.is_boundary_edge(e)),
                ArcEnd::Minimum(_) => panic!("ascending arc ended at a minimum"),
            }
        }
    }
}

//! Discrete gradient construction by lower-star processing.

use super::complex::{Simplex, SimplexKey, TriangulatedGrid};

const NONE: u32 = u32::MAX;

/// Pairing state of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgePair {
    Critical,
    /// Paired with one of its endpoints.
    Vertex(u32),
    /// Paired with one of its cofaces.
    Triangle(u32),
}

/// A discrete vector field on a [`TriangulatedGrid`]: every simplex is either
/// critical or in exactly one (face, coface) pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteGradient {
    vertex: Vec<u32>,
    edge: Vec<EdgePair>,
    triangle: Vec<u32>,
}

/// A critical simplex. The index equals the simplex dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalCell {
    pub simplex: Simplex,
    /// Highest vertex of the simplex.
    pub vertex: u32,
    pub value: f64,
}

impl CriticalCell {
    pub fn index(&self) -> usize {
        self.simplex.dim()
    }
}

impl DiscreteGradient {
    pub fn vertex_pair(&self, v: u32) -> Option<u32> {
        let e = self.vertex[v as usize];
        (e != NONE).then_some(e)
    }

    pub fn edge_pair(&self, e: u32) -> EdgePair {
        self.edge[e as usize]
    }

    pub fn triangle_pair(&self, t: u32) -> Option<u32> {
        let e = self.triangle[t as usize];
        (e != NONE).then_some(e)
    }

    pub fn is_critical(&self, s: Simplex) -> bool {
        match s {
            Simplex::Vertex(v) => self.vertex[v as usize] == NONE,
            Simplex::Edge(e) => self.edge[e as usize] == EdgePair::Critical,
            Simplex::Triangle(t) => self.triangle[t as usize] == NONE,
        }
    }

    pub(crate) fn pair_vertex_edge(&mut self, v: u32, e: u32) {
        self.vertex[v as usize] = e;
        self.edge[e as usize] = EdgePair::Vertex(v);
    }

    pub(crate) fn pair_edge_triangle(&mut self, e: u32, t: u32) {
        self.edge[e as usize] = EdgePair::Triangle(t);
        self.triangle[t as usize] = e;
    }

    pub fn critical_vertices(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.vertex.len() as u32).filter(|&v| self.vertex[v as usize] == NONE)
    }

    pub fn critical_edges(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.edge.len() as u32).filter(|&e| self.edge[e as usize] == EdgePair::Critical)
    }

    pub fn critical_triangles(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.triangle.len() as u32).filter(|&t| self.triangle[t as usize] == NONE)
    }

    /// Critical simplex counts `[m0, m1, m2]`.
    pub fn critical_counts(&self) -> [usize; 3] {
        [
            self.critical_vertices().count(),
            self.critical_edges().count(),
            self.critical_triangles().count(),
        ]
    }

    pub fn critical_cells(&self, grid: &TriangulatedGrid) -> Vec<CriticalCell> {
        let cell = |simplex: Simplex| {
            let vertex = grid.max_vertex(simplex);
            CriticalCell { simplex, vertex, value: grid.value(vertex) }
        };
        self.critical_vertices()
            .map(|v| cell(Simplex::Vertex(v)))
            .chain(self.critical_edges().map(|e| cell(Simplex::Edge(e))))
            .chain(self.critical_triangles().map(|t| cell(Simplex::Triangle(t))))
            .collect()
    }

    /// Check that pairs are mutual and join a simplex to one of its cofaces.
    pub fn check_pairing(&self, grid: &TriangulatedGrid) -> Result<(), String> {
        for (v, &e) in self.vertex.iter().enumerate() {
            if e == NONE {
                continue;
            }
            if self.edge[e as usize] != EdgePair::Vertex(v as u32) {
                return Err(format!("vertex {v} -> edge {e} is not mutual"));
            }
            if !grid.edge_vertices(e).contains(&(v as u32)) {
                return Err(format!("vertex {v} paired with non-incident edge {e}"));
            }
        }
        for (t, &e) in self.triangle.iter().enumerate() {
            if e == NONE {
                continue;
            }
            if self.edge[e as usize] != EdgePair::Triangle(t as u32) {
                return Err(format!("triangle {t} -> edge {e} is not mutual"));
            }
            if !grid.triangle_edges(t as u32).contains(&e) {
                return Err(format!("triangle {t} paired with non-incident edge {e}"));
            }
        }
        for (e, p) in self.edge.iter().enumerate() {
            match *p {
                EdgePair::Vertex(v) if self.vertex[v as usize] != e as u32 => {
                    return Err(format!("edge {e} -> vertex {v} is not mutual"))
                }
                EdgePair::Triangle(t) if self.triangle[t as usize] != e as u32 => {
                    return Err(format!("edge {e} -> triangle {t} is not mutual"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Next vertex along a descending vertex–edge path, if `v` is paired.
    #[inline]
    pub fn descend(&self, grid: &TriangulatedGrid, v: u32) -> Option<(u32, u32)> {
        let e = self.vertex_pair(v)?;
        let [a, b] = grid.edge_vertices(e);
        Some((e, if a == v { b } else { a }))
    }

    /// Next edge along an ascending edge–triangle path entering triangle `t`
    /// from edge `from`. `None` when `t` is critical or paired with `from`.
    #[inline]
    pub fn ascend(&self, t: u32, from: u32) -> Option<u32> {
        match self.triangle_pair(t) {
            Some(e) if e != from => Some(e),
            _ => None,
        }
    }
}

/// Build the gradient by processing the lower star of every vertex.
///
/// Within a lower star, simplices are handled in increasing [`SimplexKey`]
/// order: the vertex is paired with its steepest lower edge, then remaining
/// simplices are paired greedily whenever exactly one face is still
/// unassigned, and otherwise the smallest unassigned edge or triangle is
/// made critical. All pairs stay within one lower star, so V-paths are
/// monotone and acyclic.
pub fn compute_gradient(grid: &TriangulatedGrid) -> DiscreteGradient {
    let mut g = DiscreteGradient {
        vertex: vec![NONE; grid.num_vertices()],
        edge: vec![EdgePair::Critical; grid.num_edges()],
        triangle: vec![NONE; grid.num_triangles()],
    };
    let order = grid.order();
    for v in 0..grid.num_vertices() as u32 {
        let rv = order.rank(v);
        let (edges, ne) = grid.vertex_edges(v);
        let mut lower_edges: Vec<(SimplexKey, u32)> = Vec::with_capacity(6);
        for &e in &edges[..ne] {
            let [a, b] = grid.edge_vertices(e);
            let other = if a == v { b } else { a };
            if order.rank(other) < rv {
                lower_edges.push((grid.key(Simplex::Edge(e)), e));
            }
        }
        if lower_edges.is_empty() {
            continue;
        }
        let (tris, nt) = grid.vertex_triangles(v);
        let mut lower_tris: Vec<(SimplexKey, u32, [u32; 2])> = Vec::with_capacity(6);
        for &t in &tris[..nt] {
            let vs = grid.triangle_vertices(t);
            if vs.iter().all(|&u| u == v || order.rank(u) < rv) {
                let te = grid.triangle_edges(t);
                let mut faces = [0u32; 2];
                let mut k = 0;
                for e in te {
                    if grid.edge_vertices(e).contains(&v) {
                        faces[k] = e;
                        k += 1;
                    }
                }
                lower_tris.push((grid.key(Simplex::Triangle(t)), t, faces));
            }
        }
        LowerStar::new(lower_edges, lower_tris).process(v, &mut g);
    }
    g
}

/// Scratch state for one lower star. Sizes are at most six edges and six
/// triangles, so linear scans replace priority queues.
struct LowerStar {
    edges: Vec<(SimplexKey, u32)>,
    edge_done: Vec<bool>,
    tris: Vec<(SimplexKey, u32, [u32; 2])>,
    tri_done: Vec<bool>,
}

impl LowerStar {
    fn new(mut edges: Vec<(SimplexKey, u32)>, tris: Vec<(SimplexKey, u32, [u32; 2])>) -> Self {
        edges.sort_by_key(|&(k, _)| k);
        Self {
            edge_done: vec![false; edges.len()],
            tri_done: vec![false; tris.len()],
            edges,
            tris,
        }
    }

    fn edge_slot(&self, e: u32) -> usize {
        self.edges.iter().position(|&(_, x)| x == e).expect("face in lower star")
    }

    fn unpaired_faces(&self, ti: usize) -> (usize, Option<usize>) {
        let mut n = 0;
        let mut last = None;
        for f in self.tris[ti].2 {
            let s = self.edge_slot(f);
            if !self.edge_done[s] {
                n += 1;
                last = Some(s);
            }
        }
        (n, last)
    }

    /// Triangles containing edge slot `s` with exactly one unassigned face.
    fn ready_cofaces(&self, s: usize, out: &mut Vec<usize>) {
        let e = self.edges[s].1;
        for ti in 0..self.tris.len() {
            if !self.tri_done[ti] && self.tris[ti].2.contains(&e) && self.unpaired_faces(ti).0 == 1 {
                out.push(ti);
            }
        }
    }

    fn process(mut self, v: u32, g: &mut DiscreteGradient) {
        g.pair_vertex_edge(v, self.edges[0].1);
        self.edge_done[0] = true;

        let mut zero: Vec<usize> = Vec::new();
        // Triangles that had no unassigned face when popped; they compete
        // with unassigned edges for the next critical simplex.
        let mut one_tris: Vec<usize> = Vec::new();
        self.ready_cofaces(0, &mut zero);

        loop {
            while let Some(pos) = min_by_key(&zero, |ti| self.tris[ti].0) {
                let ti = zero.swap_remove(pos);
                if self.tri_done[ti] || one_tris.contains(&ti) {
                    continue;
                }
                match self.unpaired_faces(ti) {
                    (0, _) => one_tris.push(ti),
                    (_, Some(s)) => {
                        g.pair_edge_triangle(self.edges[s].1, self.tris[ti].1);
                        self.edge_done[s] = true;
                        self.tri_done[ti] = true;
                        self.ready_cofaces(s, &mut zero);
                    }
                    _ => unreachable!(),
                }
            }
            let next_edge = (0..self.edges.len()).find(|&s| !self.edge_done[s]);
            let next_tri = min_by_key(&one_tris, |ti| self.tris[ti].0);
            match (next_edge, next_tri) {
                (None, None) => break,
                (Some(s), t) if t.is_none_or(|p| self.edges[s].0 < self.tris[one_tris[p]].0) => {
                    // Critical edge.
                    self.edge_done[s] = true;
                    self.ready_cofaces(s, &mut zero);
                }
                (_, Some(p)) => {
                    // Critical triangle.
                    let ti = one_tris.swap_remove(p);
                    self.tri_done[ti] = true;
                }
                _ => unreachable!(),
            }
        }
    }
}

fn min_by_key<K: Ord>(items: &[usize], key: impl Fn(usize) -> K) -> Option<usize> {
    (0..items.len()).min_by_key(|&i| key(items[i]))
}

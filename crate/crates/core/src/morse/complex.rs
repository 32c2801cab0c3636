//! Freudenthal triangulation of a regular grid.
//!
//! Every grid quad is split along the diagonal from its lower-left corner
//! `(x, y)` to its upper-right corner `(x + 1, y + 1)`. Simplices are indexed
//! per dimension:
//!
//! * vertex `(x, y)` is `y * w + x`;
//! * edges come in three blocks: horizontal `(x, y)-(x+1, y)`, vertical
//!   `(x, y)-(x, y+1)` and diagonal `(x, y)-(x+1, y+1)`, each row-major;
//! * quad `(x, y)` holds triangle `2q` = `{(x,y), (x+1,y), (x+1,y+1)}` and
//!   `2q + 1` = `{(x,y), (x,y+1), (x+1,y+1)}` with `q = y * (w - 1) + x`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::field::ScalarField2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Simplex {
    Vertex(u32),
    Edge(u32),
    Triangle(u32),
}

impl Simplex {
    pub fn dim(self) -> usize {
        match self {
            Simplex::Vertex(_) => 0,
            Simplex::Edge(_) => 1,
            Simplex::Triangle(_) => 2,
        }
    }
}

/// Strict total order on vertices: by value, ties broken by vertex index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TotalOrder {
    rank: Vec<u32>,
}

impl TotalOrder {
    pub fn from_values(values: &[f64]) -> Self {
        let mut order: Vec<u32> = (0..values.len() as u32).collect();
        order.sort_by(|&a, &b| {
            values[a as usize]
                .total_cmp(&values[b as usize])
                .then(a.cmp(&b))
        });
        let mut rank = vec![0; values.len()];
        for (r, &v) in order.iter().enumerate() {
            rank[v as usize] = r as u32;
        }
        Self { rank }
    }

    #[inline]
    pub fn rank(&self, v: u32) -> u32 {
        self.rank[v as usize]
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// Vertices sorted from lowest to highest.
    pub fn sorted_vertices(&self) -> Vec<u32> {
        let mut out = vec![0; self.rank.len()];
        for (v, &r) in self.rank.iter().enumerate() {
            out[r as usize] = v as u32;
        }
        out
    }
}

/// Ranks of a simplex's vertices, highest first. Lexicographic comparison of
/// these keys (a proper prefix is smaller) orders simplices within and across
/// lower stars and is compatible with the face relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SimplexKey {
    ranks: [u32; 3],
    len: u8,
}

impl SimplexKey {
    pub fn new(ranks: &[u32]) -> Self {
        let mut r = [0u32; 3];
        r[..ranks.len()].copy_from_slice(ranks);
        r[..ranks.len()].sort_unstable_by(|a, b| b.cmp(a));
        Self { ranks: r, len: ranks.len() as u8 }
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks[..self.len as usize]
    }

    pub fn max_rank(&self) -> u32 {
        self.ranks[0]
    }
}

impl Ord for SimplexKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ranks().cmp(other.ranks())
    }
}

impl PartialOrd for SimplexKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The triangulated grid together with its vertex values and total order.
#[derive(Clone, Debug)]
pub struct TriangulatedGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    order: TotalOrder,
    n_horizontal: usize,
    n_vertical: usize,
}

pub fn build_complex(field: &ScalarField2D) -> Result<TriangulatedGrid> {
    TriangulatedGrid::new(field.width(), field.height(), field.values().to_vec())
}

impl TriangulatedGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::param(format!("grid must be at least 2x2, got {width}x{height}")));
        }
        if values.len() != width * height {
            return Err(Error::input(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        if width * height >= u32::MAX as usize / 4 {
            return Err(Error::param("grid too large for 32-bit simplex ids"));
        }
        let order = TotalOrder::from_values(&values);
        Ok(Self {
            width,
            height,
            n_horizontal: (width - 1) * height,
            n_vertical: width * (height - 1),
            values,
            order,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> &TotalOrder {
        &self.order
    }

    pub fn num_vertices(&self) -> usize {
        self.width * self.height
    }

    pub fn num_edges(&self) -> usize {
        self.n_horizontal + self.n_vertical + (self.width - 1) * (self.height - 1)
    }

    pub fn num_triangles(&self) -> usize {
        2 * (self.width - 1) * (self.height - 1)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    #[inline]
    pub fn vertex_xy(&self, v: u32) -> (usize, usize) {
        let v = v as usize;
        (v % self.width, v / self.width)
    }

    #[inline]
    pub fn vertex_id(&self, x: usize, y: usize) -> u32 {
        (y * self.width + x) as u32
    }

    #[inline]
    pub fn value(&self, v: u32) -> f64 {
        self.values[v as usize]
    }

    #[inline]
    fn h_edge(&self, x: usize, y: usize) -> u32 {
        (y * (self.width - 1) + x) as u32
    }

    #[inline]
    fn v_edge(&self, x: usize, y: usize) -> u32 {
        (self.n_horizontal + y * self.width + x) as u32
    }

    #[inline]
    fn d_edge(&self, x: usize, y: usize) -> u32 {
        (self.n_horizontal + self.n_vertical + y * (self.width - 1) + x) as u32
    }

    #[inline]
    fn quad(&self, x: usize, y: usize) -> u32 {
        (y * (self.width - 1) + x) as u32
    }

    /// Endpoints of an edge, lower-left endpoint first.
    pub fn edge_vertices(&self, e: u32) -> [u32; 2] {
        let e = e as usize;
        let w = self.width;
        if e < self.n_horizontal {
            let (x, y) = (e % (w - 1), e / (w - 1));
            [self.vertex_id(x, y), self.vertex_id(x + 1, y)]
        } else if e < self.n_horizontal + self.n_vertical {
            let e = e - self.n_horizontal;
            let (x, y) = (e % w, e / w);
            [self.vertex_id(x, y), self.vertex_id(x, y + 1)]
        } else {
            let e = e - self.n_horizontal - self.n_vertical;
            let (x, y) = (e % (w - 1), e / (w - 1));
            [self.vertex_id(x, y), self.vertex_id(x + 1, y + 1)]
        }
    }

    pub fn triangle_vertices(&self, t: u32) -> [u32; 3] {
        let q = (t / 2) as usize;
        let (x, y) = (q % (self.width - 1), q / (self.width - 1));
        if t.is_multiple_of(2) {
            [self.vertex_id(x, y), self.vertex_id(x + 1, y), self.vertex_id(x + 1, y + 1)]
        } else {
            [self.vertex_id(x, y), self.vertex_id(x, y + 1), self.vertex_id(x + 1, y + 1)]
        }
    }

    pub fn triangle_edges(&self, t: u32) -> [u32; 3] {
        let q = (t / 2) as usize;
        let (x, y) = (q % (self.width - 1), q / (self.width - 1));
        if t.is_multiple_of(2) {
            [self.h_edge(x, y), self.v_edge(x + 1, y), self.d_edge(x, y)]
        } else {
            [self.v_edge(x, y), self.h_edge(x, y + 1), self.d_edge(x, y)]
        }
    }

    /// Triangles containing edge `e`: one on the boundary, two inside.
    pub fn edge_cofaces(&self, e: u32) -> ([u32; 2], usize) {
        let eu = e as usize;
        let w = self.width;
        let h = self.height;
        let mut out = [0u32; 2];
        let mut n = 0;
        let mut push = |t: u32| {
            out[n] = t;
            n += 1;
        };
        if eu < self.n_horizontal {
            let (x, y) = (eu % (w - 1), eu / (w - 1));
            if y > 0 {
                push(2 * self.quad(x, y - 1) + 1);
            }
            if y + 1 < h {
                push(2 * self.quad(x, y));
            }
        } else if eu < self.n_horizontal + self.n_vertical {
            let eu = eu - self.n_horizontal;
            let (x, y) = (eu % w, eu / w);
            if x > 0 {
                push(2 * self.quad(x - 1, y));
            }
            if x + 1 < w {
                push(2 * self.quad(x, y) + 1);
            }
        } else {
            let eu = eu - self.n_horizontal - self.n_vertical;
            let (x, y) = (eu % (w - 1), eu / (w - 1));
            push(2 * self.quad(x, y));
            push(2 * self.quad(x, y) + 1);
        }
        (out, n)
    }

    pub fn is_boundary_edge(&self, e: u32) -> bool {
        self.edge_cofaces(e).1 == 1
    }

    /// Edges incident to vertex `v` (up to six).
    pub fn vertex_edges(&self, v: u32) -> ([u32; 6], usize) {
        let (x, y) = self.vertex_xy(v);
        let (w, h) = (self.width, self.height);
        let mut out = [0u32; 6];
        let mut n = 0;
        let mut push = |e: u32| {
            out[n] = e;
            n += 1;
        };
        if x > 0 {
            push(self.h_edge(x - 1, y));
        }
        if x + 1 < w {
            push(self.h_edge(x, y));
        }
        if y > 0 {
            push(self.v_edge(x, y - 1));
        }
        if y + 1 < h {
            push(self.v_edge(x, y));
        }
        if x > 0 && y > 0 {
            push(self.d_edge(x - 1, y - 1));
        }
        if x + 1 < w && y + 1 < h {
            push(self.d_edge(x, y));
        }
        (out, n)
    }

    /// Triangles containing vertex `v` (up to six).
    pub fn vertex_triangles(&self, v: u32) -> ([u32; 6], usize) {
        let (x, y) = self.vertex_xy(v);
        let (w, h) = (self.width, self.height);
        let mut out = [0u32; 6];
        let mut n = 0;
        let mut push = |t: u32| {
            out[n] = t;
            n += 1;
        };
        if x + 1 < w && y + 1 < h {
            push(2 * self.quad(x, y));
            push(2 * self.quad(x, y) + 1);
        }
        if x > 0 && y + 1 < h {
            push(2 * self.quad(x - 1, y));
        }
        if x > 0 && y > 0 {
            push(2 * self.quad(x - 1, y - 1));
            push(2 * self.quad(x - 1, y - 1) + 1);
        }
        if x + 1 < w && y > 0 {
            push(2 * self.quad(x, y - 1) + 1);
        }
        (out, n)
    }

    /// Vertices adjacent to `v` through an edge.
    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        let (edges, n) = self.vertex_edges(v);
        (0..n).map(move |i| {
            let [a, b] = self.edge_vertices(edges[i]);
            if a == v {
                b
            } else {
                a
            }
        })
    }

    pub fn key(&self, s: Simplex) -> SimplexKey {
        let r = |v: u32| self.order.rank(v);
        match s {
            Simplex::Vertex(v) => SimplexKey::new(&[r(v)]),
            Simplex::Edge(e) => {
                let [a, b] = self.edge_vertices(e);
                SimplexKey::new(&[r(a), r(b)])
            }
            Simplex::Triangle(t) => {
                let [a, b, c] = self.triangle_vertices(t);
                SimplexKey::new(&[r(a), r(b), r(c)])
            }
        }
    }

    /// Highest vertex of a simplex in the total order.
    pub fn max_vertex(&self, s: Simplex) -> u32 {
        let pick = |vs: &[u32]| *vs.iter().max_by_key(|&&v| self.order.rank(v)).unwrap();
        match s {
            Simplex::Vertex(v) => v,
            Simplex::Edge(e) => pick(&self.edge_vertices(e)),
            Simplex::Triangle(t) => pick(&self.triangle_vertices(t)),
        }
    }

    /// Function value of a simplex: the value of its highest vertex.
    pub fn simplex_value(&self, s: Simplex) -> f64 {
        self.value(self.max_vertex(s))
    }

    /// Geometric center in field coordinates.
    pub fn position(&self, s: Simplex) -> [f64; 2] {
        let xy = |v: u32| {
            let (x, y) = self.vertex_xy(v);
            [x as f64, y as f64]
        };
        match s {
            Simplex::Vertex(v) => xy(v),
            Simplex::Edge(e) => {
                let [a, b] = self.edge_vertices(e).map(xy);
                [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
            }
            Simplex::Triangle(t) => {
                let [a, b, c] = self.triangle_vertices(t).map(xy);
                [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
            }
        }
    }
}

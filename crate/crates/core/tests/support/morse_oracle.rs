//! Brute-force references for the Morse pipeline. Nothing here calls the
//! path tracing, pairing or simplification code under test.

#![allow(dead_code)]

use std::collections::BTreeMap;

use morsemap_core::morse::{DiscreteGradient, EdgePair, Simplex, TriangulatedGrid};

/// Vertex neighbours in the Freudenthal triangulation, from coordinates.
pub fn neighbours(w: usize, h: usize, v: usize) -> Vec<usize> {
    let (x, y) = ((v % w) as i64, (v / w) as i64);
    let offsets = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];
    offsets
        .iter()
        .map(|(dx, dy)| (x + dx, y + dy))
        .filter(|&(a, b)| a >= 0 && b >= 0 && a < w as i64 && b < h as i64)
        .map(|(a, b)| (b as usize) * w + a as usize)
        .collect()
}

/// Neighbours in cyclic order around `v`, for link classification.
fn cyclic_neighbours(w: usize, h: usize, v: usize) -> (Vec<Option<usize>>, bool) {
    let (x, y) = ((v % w) as i64, (v / w) as i64);
    let ring = [(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)];
    let out: Vec<Option<usize>> = ring
        .iter()
        .map(|(dx, dy)| (x + dx, y + dy))
        .map(|(a, b)| {
            (a >= 0 && b >= 0 && a < w as i64 && b < h as i64).then(|| (b as usize) * w + a as usize)
        })
        .collect();
    let interior = out.iter().all(Option::is_some);
    (out, interior)
}

fn below(values: &[f64], a: usize, b: usize) -> bool {
    (values[a], a) < (values[b], b)
}

/// Vertices with no lower neighbour.
pub fn pl_minima(w: usize, h: usize, values: &[f64]) -> Vec<usize> {
    (0..w * h)
        .filter(|&v| neighbours(w, h, v).iter().all(|&u| below(values, v, u)))
        .collect()
}

/// Interior vertices whose whole link is lower.
pub fn pl_interior_maxima(w: usize, h: usize, values: &[f64]) -> Vec<usize> {
    (0..w * h)
        .filter(|&v| {
            let (ring, interior) = cyclic_neighbours(w, h, v);
            interior && ring.iter().all(|u| below(values, u.unwrap(), v))
        })
        .collect()
}

struct Sets {
    parent: Vec<usize>,
}

impl Sets {
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] == x {
            x
        } else {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
            r
        }
    }
}

/// `(is_min_saddle, extremum vertex, saddle vertex)` from vertex merge trees:
/// sublevel components for minima, superlevel components with the boundary
/// attached to an outside component for maxima.
pub fn merge_tree_pairs(w: usize, h: usize, values: &[f64]) -> Vec<(bool, usize, usize)> {
    let n = w * h;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let rank = {
        let mut r = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            r[v] = i;
        }
        r
    };
    let mut out = Vec::new();

    // Sublevel sweep.
    let mut sets = Sets { parent: (0..n).collect() };
    let oldest: Vec<usize> = (0..n).collect();
    for &v in &order {
        let mut roots: Vec<usize> = neighbours(w, h, v)
            .into_iter()
            .filter(|&u| rank[u] < rank[v])
            .map(|u| sets.find(u))
            .collect();
        roots.sort_by_key(|&r| rank[oldest[r]]);
        roots.dedup();
        if let Some((&first, rest)) = roots.split_first() {
            for &r in rest {
                out.push((true, oldest[r], v));
                sets.parent[r] = first;
            }
            sets.parent[v] = first;
        }
    }

    // Superlevel sweep; index n is the outside, older than everything.
    let mut sets = Sets { parent: (0..=n).collect() };
    let oldest: Vec<usize> = (0..=n).collect();
    let age = |x: usize| if x == n { usize::MAX } else { rank[x] };
    for &v in order.iter().rev() {
        let (ring, interior) = cyclic_neighbours(w, h, v);
        let mut roots: Vec<usize> = ring
            .into_iter()
            .flatten()
            .filter(|&u| rank[u] > rank[v])
            .map(|u| sets.find(u))
            .collect();
        if !interior {
            roots.push(sets.find(n));
        }
        roots.sort_by_key(|&r| std::cmp::Reverse(age(oldest[r])));
        roots.dedup();
        if let Some((&first, rest)) = roots.split_first() {
            for &r in rest {
                out.push((false, oldest[r], v));
                sets.parent[r] = first;
            }
            sets.parent[v] = first;
        }
    }
    out.sort();
    out
}

/// Walk every V-path of the gradient from raw pair data and report the first
/// violation: a revisited simplex, or with `monotone` a non-decreasing step.
/// Path reversal during simplification keeps acyclicity but not monotonicity.
pub fn check_vpaths(grid: &TriangulatedGrid, g: &DiscreteGradient, monotone: bool) -> Result<(), String> {
    // Vertex-edge paths: v -> paired edge -> other endpoint.
    for start in 0..grid.num_vertices() as u32 {
        let mut seen = std::collections::HashSet::new();
        let mut v = start;
        while let Some(e) = g.vertex_pair(v) {
            if !seen.insert(v) {
                return Err(format!("vertex path from {start} revisits {v}"));
            }
            let [a, b] = grid.edge_vertices(e);
            let next = if a == v { b } else { a };
            if monotone && grid.key(Simplex::Vertex(next)) >= grid.key(Simplex::Vertex(v)) {
                return Err(format!("vertex path step {v}->{next} does not descend"));
            }
            v = next;
        }
    }
    // Edge-triangle paths, followed downward: edge e paired with triangle t,
    // then every other face of t. Exhaustive DFS with cycle detection.
    let ne = grid.num_edges();
    let mut state = vec![0u8; ne];
    fn visit(
        grid: &TriangulatedGrid,
        g: &DiscreteGradient,
        monotone: bool,
        e: u32,
        state: &mut [u8],
    ) -> Result<(), String> {
        match state[e as usize] {
            1 => return Err(format!("edge-triangle V-path cycle through edge {e}")),
            2 => return Ok(()),
            _ => {}
        }
        state[e as usize] = 1;
        if let EdgePair::Triangle(t) = g.edge_pair(e) {
            for f in grid.triangle_edges(t) {
                if f == e {
                    continue;
                }
                // The highest vertex never rises along an edge-triangle path.
                if monotone && grid.key(Simplex::Edge(f)).max_rank() > grid.key(Simplex::Edge(e)).max_rank() {
                    return Err(format!("step {e}->{t}->{f} does not descend"));
                }
                visit(grid, g, monotone, f, state)?;
            }
        }
        state[e as usize] = 2;
        Ok(())
    }
    for e in 0..ne as u32 {
        visit(grid, g, monotone, e, &mut state)?;
    }
    Ok(())
}

/// Descending separatrices by scanning raw edge pairs: for every critical
/// edge, the sequence of vertices from each endpoint to a critical vertex.
pub fn brute_descending_arcs(grid: &TriangulatedGrid, g: &DiscreteGradient) -> Vec<(u32, Vec<u32>)> {
    let mut down: BTreeMap<u32, u32> = BTreeMap::new();
    for e in 0..grid.num_edges() as u32 {
        if let EdgePair::Vertex(v) = g.edge_pair(e) {
            down.insert(v, e);
        }
    }
    let mut out = Vec::new();
    for e in 0..grid.num_edges() as u32 {
        if g.edge_pair(e) != EdgePair::Critical {
            continue;
        }
        for mut v in grid.edge_vertices(e) {
            let mut seq = vec![v];
            while let Some(&d) = down.get(&v) {
                let [a, b] = grid.edge_vertices(d);
                v = if a == v { b } else { a };
                seq.push(v);
            }
            out.push((e, seq));
        }
    }
    out
}

/// Ascending separatrices by scanning raw pairs: for every critical edge and
/// each coface, the alternating triangle/edge sequence up to a critical
/// triangle, or up to a boundary edge (reported as `Err(edge)`).
pub fn brute_ascending_arcs(
    grid: &TriangulatedGrid,
    g: &DiscreteGradient,
) -> Vec<(u32, Vec<Simplex>, Result<u32, u32>)> {
    let mut up: BTreeMap<u32, u32> = BTreeMap::new();
    for e in 0..grid.num_edges() as u32 {
        if let EdgePair::Triangle(t) = g.edge_pair(e) {
            up.insert(t, e);
        }
    }
    // Cofaces of an edge by scanning every triangle.
    let cofaces = |e: u32| -> Vec<u32> {
        (0..grid.num_triangles() as u32).filter(|&t| grid.triangle_edges(t).contains(&e)).collect()
    };
    let mut out = Vec::new();
    for s in 0..grid.num_edges() as u32 {
        if g.edge_pair(s) != EdgePair::Critical {
            continue;
        }
        for t0 in cofaces(s) {
            let mut cells = Vec::new();
            let mut t = t0;
            let end = loop {
                cells.push(Simplex::Triangle(t));
                let Some(&f) = up.get(&t) else { break Ok(t) };
                cells.push(Simplex::Edge(f));
                match cofaces(f).into_iter().find(|&u| u != t) {
                    Some(u) => t = u,
                    None => break Err(f),
                }
            };
            out.push((s, cells, end));
        }
    }
    out
}

/// Random field with distinct-ish values drawn from a small integer set, so
/// ties are common and the index tie-break is exercised.
pub fn random_values(rng: &mut impl rand::Rng, n: usize, ties: bool) -> Vec<f64> {
    (0..n)
        .map(|_| if ties { rng.gen_range(0..6) as f64 * 0.25 } else { rng.gen::<f64>() })
        .collect()
}

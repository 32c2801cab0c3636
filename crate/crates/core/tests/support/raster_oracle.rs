//! Dense point sampling of arcs, classified with plain floating point.

#![allow(dead_code)]

use rand::Rng;

/// Cells touched by samples spaced at most `1e-4` cell widths along every
/// segment, endpoints included.
pub fn sample_cells(arcs: &[Vec<[f64; 2]>], domain: (usize, usize), n: usize) -> Vec<u8> {
    let (dx, dy) = ((domain.0 - 1) as f64, (domain.1 - 1) as f64);
    let cell = |v: f64, extent: f64| ((v * n as f64 / extent).floor() as usize).min(n - 1);
    let mut bits = vec![0u8; n * n];
    let mut mark = |p: [f64; 2]| bits[cell(p[1], dy) * n + cell(p[0], dx)] = 1;
    let step = 1e-4 * (dx / n as f64).min(dy / n as f64);
    for pts in arcs {
        if let [only] = pts[..] {
            mark(only);
        }
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            let k = (len / step).ceil().max(1.0) as usize;
            for i in 0..k {
                let t = i as f64 / k as f64;
                mark([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
            mark(b);
        }
    }
    bits
}

/// Random walk over grid vertices and edge midpoints along the edges of the
/// triangulation, the shape of traced separatrices.
pub fn lattice_arc(rng: &mut impl Rng, domain: (usize, usize), max_steps: usize) -> Vec<[f64; 2]> {
    let (w, h) = (domain.0 as i64, domain.1 as i64);
    let dirs = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];
    let (mut x, mut y) = (rng.gen_range(0..w), rng.gen_range(0..h));
    let mut pts = vec![[x as f64, y as f64]];
    for _ in 0..rng.gen_range(0..=max_steps) {
        let (ddx, ddy) = dirs[rng.gen_range(0..dirs.len())];
        let (nx, ny) = (x + ddx, y + ddy);
        if nx < 0 || ny < 0 || nx >= w || ny >= h {
            continue;
        }
        pts.push([(x + nx) as f64 / 2.0, (y + ny) as f64 / 2.0]);
        if rng.gen_bool(0.8) {
            pts.push([nx as f64, ny as f64]);
            (x, y) = (nx, ny);
        }
    }
    pts
}

//! Direct-loop reference evaluator and central-difference gradients.

use morsemap_core::nn::{Autoencoder, Conv2d, Layer, Linear, Shape};

pub const FD_STEP: f64 = 1e-5;

/// Output of one layer computed by explicit loops, no im2col or GEMM.
pub fn layer_forward(layer: &Layer<f64>, x: &[f64], s: Shape) -> (Vec<f64>, Shape) {
    match layer {
        Layer::Conv2d(c) => {
            let oh = (s.h + 2 * c.pad - 3) / c.stride + 1;
            let ow = (s.w + 2 * c.pad - 3) / c.stride + 1;
            let mut y = vec![0.0; c.out_c * oh * ow];
            for oc in 0..c.out_c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = c.bias[oc];
                        for ic in 0..c.in_c {
                            for ky in 0..3 {
                                for kx in 0..3 {
                                    let iy = (oy * c.stride + ky) as isize - c.pad as isize;
                                    let ix = (ox * c.stride + kx) as isize - c.pad as isize;
                                    if iy < 0 || ix < 0 || iy >= s.h as isize || ix >= s.w as isize {
                                        continue;
                                    }
                                    let w = c.weight[((oc * c.in_c + ic) * 3 + ky) * 3 + kx];
                                    acc += w * x[(ic * s.h + iy as usize) * s.w + ix as usize];
                                }
                            }
                        }
                        y[(oc * oh + oy) * ow + ox] = acc;
                    }
                }
            }
            (y, Shape::new(c.out_c, oh, ow))
        }
        Layer::Linear(l) => {
            let y = (0..l.out_f)
                .map(|o| l.bias[o] + (0..l.in_f).map(|i| l.weight[o * l.in_f + i] * x[i]).sum::<f64>())
                .collect();
            (y, Shape::new(l.out_f, 1, 1))
        }
        Layer::Relu => (x.iter().map(|&v| v.max(0.0)).collect(), s),
        Layer::Sigmoid => (x.iter().map(|&v| 1.0 / (1.0 + (-v).exp())).collect(), s),
        Layer::Resize { h, w } => {
            let mut y = Vec::with_capacity(s.c * h * w);
            for c in 0..s.c {
                for oy in 0..*h {
                    for ox in 0..*w {
                        y.push(bilinear(&x[c * s.h * s.w..][..s.h * s.w], s.h, s.w, *h, *w, oy, ox));
                    }
                }
            }
            (y, Shape::new(s.c, *h, *w))
        }
        Layer::Reshape(t) => (x.to_vec(), *t),
    }
}

/// Half-pixel-centre sample of `plane` at output pixel `(oy, ox)`, edges clamped.
fn bilinear(plane: &[f64], ih: usize, iw: usize, oh: usize, ow: usize, oy: usize, ox: usize) -> f64 {
    let coord = |o: usize, inp: usize, out: usize| {
        let src = ((o as f64 + 0.5) * inp as f64 / out as f64 - 0.5).clamp(0.0, (inp - 1) as f64);
        let i0 = src.floor() as usize;
        let i1 = (i0 + 1).min(inp - 1);
        (i0, i1, src - i0 as f64)
    };
    let (y0, y1, ty) = coord(oy, ih, oh);
    let (x0, x1, tx) = coord(ox, iw, ow);
    let at = |r: usize, c: usize| plane[r * iw + c];
    (1.0 - ty) * ((1.0 - tx) * at(y0, x0) + tx * at(y0, x1)) + ty * ((1.0 - tx) * at(y1, x0) + tx * at(y1, x1))
}

pub fn model_forward(model: &Autoencoder<f64>, image: &[f64]) -> Vec<f64> {
    let n = model.config().resolution;
    let (mut x, mut s) = (image.to_vec(), Shape::new(1, n, n));
    for layer in model.layers() {
        (x, s) = layer_forward(layer, &x, s);
    }
    x
}

/// Mean BCE with the same clamp as the library.
pub fn bce(a: &[f64], b: &[f64]) -> f64 {
    let eps = 1e-7;
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(&a, &b)| {
            let a = a.clamp(eps, 1.0 - eps);
            -(b * a.ln() + (1.0 - b) * (1.0 - a).ln())
        })
        .sum();
    s / a.len() as f64
}

/// `(f(v + h) - f(v - h)) / 2h` for one coordinate of `v`.
pub fn central_difference(v: &mut [f64], k: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = v[k];
    v[k] = orig + FD_STEP;
    let plus = f(v);
    v[k] = orig - FD_STEP;
    let minus = f(v);
    v[k] = orig;
    (plus - minus) / (2.0 * FD_STEP)
}

/// `|a - b| / max(|a|, |b|)`, taken as absolute below `floor` so that two
/// vanishing values do not blow up the ratio.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Largest relative error over `probes` random coordinates of the input and
/// parameters of `layer`, for the scalar `sum_k r_k y_k` with random `r`.
/// Inputs stay at least 0.1 away from zero so ReLU kinks are never straddled.
pub fn check_layer(layer: &Layer<f64>, s: Shape, rng: &mut impl rand::Rng, probes: usize) -> f64 {
    let mut x: Vec<f64> = (0..s.len()).map(|_| rng.gen_range(0.1..1.0) * if rng.gen() { 1.0 } else { -1.0 }).collect();
    let (y, ys) = layer.forward(&x, s);
    let r: Vec<f64> = (0..ys.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut gw = layer.params().map(|(w, _)| vec![0.0; w.len()]).unwrap_or_default();
    let mut gb = layer.params().map(|(_, b)| vec![0.0; b.len()]).unwrap_or_default();
    let buffers = layer.params().is_some().then(|| (&mut gw[..], &mut gb[..]));
    let gx = layer.backward(&x, s, &y, &r, buffers, true).expect("input gradient");
    let score = |l: &Layer<f64>, x: &[f64]| layer_forward(l, x, s).0.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();

    let (nw, nb) = (gw.len(), gb.len());
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let k = rng.gen_range(0..x.len() + nw + nb);
        let (analytic, numeric) = if k < x.len() {
            (gx[k], central_difference(&mut x, k, |x| score(layer, x)))
        } else {
            let mut l = layer.clone();
            let (w, b) = l.params_mut().unwrap();
            let (target, j, g) = if k < x.len() + nw { (w, k - x.len(), &gw) } else { (b, k - x.len() - nw, &gb) };
            let mut v = target.clone();
            let numeric = central_difference(&mut v, j, |v| {
                let mut probe = layer.clone();
                let (pw, pb) = probe.params_mut().unwrap();
                if k < x.len() + nw { pw.copy_from_slice(v) } else { pb.copy_from_slice(v) }
                score(&probe, &x)
            });
            (g[j], numeric)
        };
        worst = worst.max(relative_error(analytic, numeric, 1e-6));
    }
    worst
}

fn uniform(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
}

/// One randomized instance of every layer type with its input shape. Convs
/// cover the padded stride-2, padded stride-1 and unpadded stride-1 cases;
/// resizes cover integer and fractional up- and downsampling.
pub fn layer_suite(rng: &mut impl rand::Rng) -> Vec<(&'static str, Layer<f64>, Shape)> {
    let mut conv = |in_c: usize, out_c: usize, stride, pad| {
        Layer::Conv2d(Conv2d { in_c, out_c, stride, pad, weight: uniform(rng, out_c * in_c * 9), bias: uniform(rng, out_c) })
    };
    let mut out = vec![
        ("conv", conv(2, 3, 2, 1), Shape::new(2, 7, 8)),
        ("conv", conv(3, 2, 1, 1), Shape::new(3, 5, 5)),
        ("conv", conv(2, 2, 1, 0), Shape::new(2, 6, 5)),
    ];
    out.push(("linear", Layer::Linear(Linear { in_f: 12, out_f: 7, weight: uniform(rng, 84), bias: uniform(rng, 7) }), Shape::new(3, 2, 2)));
    out.push(("resize", Layer::Resize { h: 8, w: 8 }, Shape::new(2, 4, 4)));
    out.push(("resize", Layer::Resize { h: 7, w: 3 }, Shape::new(1, 5, 6)));
    out.push(("relu", Layer::Relu, Shape::new(2, 4, 4)));
    out.push(("sigmoid", Layer::Sigmoid, Shape::new(2, 4, 4)));
    out
}

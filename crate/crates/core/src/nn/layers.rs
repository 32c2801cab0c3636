//! Layers with hand-written backward passes. Activations are single samples
//! laid out channel-major, `c x h x w`.

use serde::{Deserialize, Serialize};

use super::real::{gemm, Mat, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn new(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w }
    }

    pub fn len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// 3x3 convolution. `weight` is `out x in x 3 x 3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d<T> {
    pub in_c: usize,
    pub out_c: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// `y = W x + b` with `W: out x in`, on the flattened input.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    pub in_f: usize,
    pub out_f: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T> {
    Conv2d(Conv2d<T>),
    Linear(Linear<T>),
    Relu,
    Sigmoid,
    /// Bilinear resampling to `h x w`, half-pixel centres, edge clamped.
    Resize { h: usize, w: usize },
    /// Reinterpret the data with a new shape of equal length.
    Reshape(Shape),
}

pub(crate) const K: usize = 3;

impl<T: Real> Conv2d<T> {
    pub fn out_shape(&self, s: Shape) -> Shape {
        let f = |n: usize| (n + 2 * self.pad - K) / self.stride + 1;
        Shape::new(self.out_c, f(s.h), f(s.w))
    }

    /// `cols[(ci*9 + ky*3 + kx), oy*ow + ox]`, zero outside the input.
    fn im2col(&self, x: &[T], s: Shape, o: Shape) -> Vec<T> {
        let p = o.h * o.w;
        let mut cols = vec![T::ZERO; s.c * K * K * p];
        for ci in 0..s.c {
            for ky in 0..K {
                for kx in 0..K {
                    let row = &mut cols[((ci * K + ky) * K + kx) * p..][..p];
                    for oy in 0..o.h {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        if iy < 0 || iy >= s.h as isize {
                            continue;
                        }
                        let src = &x[(ci * s.h + iy as usize) * s.w..][..s.w];
                        for ox in 0..o.w {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            if ix >= 0 && ix < s.w as isize {
                                row[oy * o.w + ox] = src[ix as usize];
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, cols: &[T], s: Shape, o: Shape) -> Vec<T> {
        let p = o.h * o.w;
        let mut x = vec![T::ZERO; s.len()];
        for ci in 0..s.c {
            for ky in 0..K {
                for kx in 0..K {
                    let row = &cols[((ci * K + ky) * K + kx) * p..][..p];
                    for oy in 0..o.h {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        if iy < 0 || iy >= s.h as isize {
                            continue;
                        }
                        let dst = &mut x[(ci * s.h + iy as usize) * s.w..][..s.w];
                        for ox in 0..o.w {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            if ix >= 0 && ix < s.w as isize {
                                dst[ix as usize] += row[oy * o.w + ox];
                            }
                        }
                    }
                }
            }
        }
        x
    }

    fn forward(&self, x: &[T], s: Shape) -> (Vec<T>, Shape) {
        let o = self.out_shape(s);
        let (p, kk) = (o.h * o.w, s.c * K * K);
        let cols = self.im2col(x, s, o);
        let mut y: Vec<T> = self.bias.iter().flat_map(|&b| std::iter::repeat_n(b, p)).collect();
        gemm(
            self.out_c,
            kk,
            p,
            Mat { data: &self.weight, rs: kk, cs: 1 },
            Mat { data: &cols, rs: p, cs: 1 },
            T::ONE,
            &mut y,
        );
        (y, o)
    }

    fn backward(&self, x: &[T], s: Shape, gy: &[T], gw: &mut [T], gb: &mut [T], need_gx: bool) -> Option<Vec<T>> {
        let o = self.out_shape(s);
        let (p, kk) = (o.h * o.w, s.c * K * K);
        let cols = self.im2col(x, s, o);
        // dW += gy cols^T
        gemm(self.out_c, p, kk, Mat { data: gy, rs: p, cs: 1 }, Mat { data: &cols, rs: 1, cs: p }, T::ONE, gw);
        for (oc, g) in gb.iter_mut().enumerate() {
            *g += gy[oc * p..][..p].iter().copied().sum::<T>();
        }
        if !need_gx {
            return None;
        }
        // dcols = W^T gy
        let mut dcols = vec![T::ZERO; kk * p];
        gemm(
            kk,
            self.out_c,
            p,
            Mat { data: &self.weight, rs: 1, cs: kk },
            Mat { data: gy, rs: p, cs: 1 },
            T::ZERO,
            &mut dcols,
        );
        Some(self.col2im(&dcols, s, o))
    }
}

impl<T: Real> Linear<T> {
    fn forward(&self, x: &[T]) -> Vec<T> {
        let mut y = self.bias.clone();
        gemm(
            self.out_f,
            self.in_f,
            1,
            Mat { data: &self.weight, rs: self.in_f, cs: 1 },
            Mat { data: x, rs: 1, cs: 1 },
            T::ONE,
            &mut y,
        );
        y
    }

    fn backward(&self, x: &[T], gy: &[T], gw: &mut [T], gb: &mut [T], need_gx: bool) -> Option<Vec<T>> {
        gemm(self.out_f, 1, self.in_f, Mat { data: gy, rs: 1, cs: 1 }, Mat { data: x, rs: 1, cs: 1 }, T::ONE, gw);
        for (b, &g) in gb.iter_mut().zip(gy) {
            *b += g;
        }
        if !need_gx {
            return None;
        }
        let mut gx = vec![T::ZERO; self.in_f];
        gemm(
            self.in_f,
            self.out_f,
            1,
            Mat { data: &self.weight, rs: 1, cs: self.in_f },
            Mat { data: gy, rs: 1, cs: 1 },
            T::ZERO,
            &mut gx,
        );
        Some(gx)
    }
}

/// Source taps along one axis: `(i0, i1, t)` with output `a + t (b - a)`.
pub(crate) fn resize_taps(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|d| {
            let src = ((d as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (src.floor() as usize).min(input - 1);
            let i1 = (i0 + 1).min(input - 1);
            (i0, i1, if i1 == i0 { 0.0 } else { src - i0 as f64 })
        })
        .collect()
}

fn lerp<T: Real>(a: T, b: T, t: T) -> T {
    a + t * (b - a)
}

fn resize_forward<T: Real>(x: &[T], s: Shape, h: usize, w: usize) -> Vec<T> {
    let (ty, tx) = (resize_taps(s.h, h), resize_taps(s.w, w));
    let mut y = Vec::with_capacity(s.c * h * w);
    for c in 0..s.c {
        let plane = &x[c * s.h * s.w..][..s.h * s.w];
        for &(y0, y1, fy) in &ty {
            let (r0, r1, fy) = (&plane[y0 * s.w..][..s.w], &plane[y1 * s.w..][..s.w], T::from_f64(fy));
            for &(x0, x1, fx) in &tx {
                let fx = T::from_f64(fx);
                let top = lerp(r0[x0], r0[x1], fx);
                let bottom = lerp(r1[x0], r1[x1], fx);
                y.push(lerp(top, bottom, fy));
            }
        }
    }
    y
}

fn resize_backward<T: Real>(gy: &[T], s: Shape, h: usize, w: usize) -> Vec<T> {
    let (ty, tx) = (resize_taps(s.h, h), resize_taps(s.w, w));
    let mut gx = vec![T::ZERO; s.len()];
    let mut k = 0;
    for c in 0..s.c {
        let base = c * s.h * s.w;
        for &(y0, y1, fy) in &ty {
            let fy = T::from_f64(fy);
            for &(x0, x1, fx) in &tx {
                let fx = T::from_f64(fx);
                let g = gy[k];
                k += 1;
                let (gt, gbot) = (g * (T::ONE - fy), g * fy);
                gx[base + y0 * s.w + x0] += gt * (T::ONE - fx);
                gx[base + y0 * s.w + x1] += gt * fx;
                gx[base + y1 * s.w + x0] += gbot * (T::ONE - fx);
                gx[base + y1 * s.w + x1] += gbot * fx;
            }
        }
    }
    gx
}

pub(crate) fn sigmoid<T: Real>(v: T) -> T {
    T::ONE / (T::ONE + (-v).exp())
}

impl<T: Real> Layer<T> {
    /// Output shape for input shape `s`, or `None` when `s` is not accepted.
    pub fn out_shape(&self, s: Shape) -> Option<Shape> {
        match self {
            Layer::Conv2d(c) => (s.c == c.in_c && s.h + 2 * c.pad >= K && s.w + 2 * c.pad >= K).then(|| c.out_shape(s)),
            Layer::Linear(l) => (s.len() == l.in_f).then(|| Shape::new(l.out_f, 1, 1)),
            Layer::Relu | Layer::Sigmoid => Some(s),
            Layer::Resize { h, w } => Some(Shape::new(s.c, *h, *w)),
            Layer::Reshape(t) => (t.len() == s.len()).then_some(*t),
        }
    }

    /// `(weight, bias)` for parametrized layers.
    pub fn params(&self) -> Option<(&[T], &[T])> {
        match self {
            Layer::Conv2d(c) => Some((&c.weight, &c.bias)),
            Layer::Linear(l) => Some((&l.weight, &l.bias)),
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<(&mut Vec<T>, &mut Vec<T>)> {
        match self {
            Layer::Conv2d(c) => Some((&mut c.weight, &mut c.bias)),
            Layer::Linear(l) => Some((&mut l.weight, &mut l.bias)),
            _ => None,
        }
    }

    /// Declared shapes of `(weight, bias)`.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match self {
            Layer::Conv2d(c) => Some((vec![c.out_c, c.in_c, K, K], vec![c.out_c])),
            Layer::Linear(l) => Some((vec![l.out_f, l.in_f], vec![l.out_f])),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv",
            Layer::Linear(_) => "linear",
            Layer::Relu => "relu",
            Layer::Sigmoid => "sigmoid",
            Layer::Resize { .. } => "resize",
            Layer::Reshape(_) => "reshape",
        }
    }

    /// Shapes must have been validated with [`Layer::out_shape`].
    pub fn forward(&self, x: &[T], s: Shape) -> (Vec<T>, Shape) {
        match self {
            Layer::Conv2d(c) => c.forward(x, s),
            Layer::Linear(l) => (l.forward(x), Shape::new(l.out_f, 1, 1)),
            Layer::Relu => (x.iter().map(|&v| if v > T::ZERO { v } else { T::ZERO }).collect(), s),
            Layer::Sigmoid => (x.iter().map(|&v| sigmoid(v)).collect(), s),
            Layer::Resize { h, w } => (resize_forward(x, s, *h, *w), Shape::new(s.c, *h, *w)),
            Layer::Reshape(t) => (x.to_vec(), *t),
        }
    }

    /// Gradient with respect to the input, given input `x`, output `y` and
    /// output gradient `gy`. Parameter gradients are accumulated into
    /// `grads` as `(weight, bias)`.
    pub fn backward(
        &self,
        x: &[T],
        s: Shape,
        y: &[T],
        gy: &[T],
        grads: Option<(&mut [T], &mut [T])>,
        need_gx: bool,
    ) -> Option<Vec<T>> {
        match self {
            Layer::Conv2d(c) => {
                let (gw, gb) = grads.expect("conv gradient buffers");
                c.backward(x, s, gy, gw, gb, need_gx)
            }
            Layer::Linear(l) => {
                let (gw, gb) = grads.expect("linear gradient buffers");
                l.backward(x, gy, gw, gb, need_gx)
            }
            _ if !need_gx => None,
            Layer::Relu => Some(x.iter().zip(gy).map(|(&v, &g)| if v > T::ZERO { g } else { T::ZERO }).collect()),
            Layer::Sigmoid => Some(y.iter().zip(gy).map(|(&a, &g)| g * a * (T::ONE - a)).collect()),
            Layer::Resize { h, w } => Some(resize_backward(gy, s, *h, *w)),
            Layer::Reshape(_) => Some(gy.to_vec()),
        }
    }

    pub fn cast<U: Real>(&self) -> Layer<U> {
        let cv = |v: &[T]| v.iter().map(|x| U::from_f64(x.to_f64())).collect();
        match self {
            Layer::Conv2d(c) => Layer::Conv2d(Conv2d {
                in_c: c.in_c,
                out_c: c.out_c,
                stride: c.stride,
                pad: c.pad,
                weight: cv(&c.weight),
                bias: cv(&c.bias),
            }),
            Layer::Linear(l) => {
                Layer::Linear(Linear { in_f: l.in_f, out_f: l.out_f, weight: cv(&l.weight), bias: cv(&l.bias) })
            }
            Layer::Relu => Layer::Relu,
            Layer::Sigmoid => Layer::Sigmoid,
            Layer::Resize { h, w } => Layer::Resize { h: *h, w: *w },
            Layer::Reshape(s) => Layer::Reshape(*s),
        }
    }
}

//! Stateless elementwise and pooling ops.

use crate::real::Real;

pub fn relu<T: Real>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Gradient through a rectifier, given its output `y`.
pub fn relu_backward<T: Real>(dy: &mut [T], y: &[T]) {
    for (d, &v) in dy.iter_mut().zip(y) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
}

pub fn tanh<T: Real>(x: &mut [T]) {
    for v in x {
        *v = v.tanh();
    }
}

/// Gradient through tanh, given its output `y`.
pub fn tanh_backward<T: Real>(dy: &mut [T], y: &[T]) {
    for (d, &v) in dy.iter_mut().zip(y) {
        *d *= T::one() - v * v;
    }
}

/// Error function: Maclaurin series below 2, continued fraction for erfc
/// above. Absolute error below 1e-12.
pub fn erf(x: f64) -> f64 {
    let sign = x.signum();
    let a = x.abs();
    if a >= 2.0 {
        let mut f = a;
        for k in (1..=80).rev() {
            f = a + (k as f64 / 2.0) / f;
        }
        let erfc = (-a * a).exp() / (std::f64::consts::PI.sqrt() * f);
        return sign * (1.0 - erfc);
    }
    let a2 = a * a;
    let mut term = a;
    let mut sum = a;
    for n in 1..200 {
        term *= -a2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 {
            break;
        }
    }
    sign * sum * 2.0 / std::f64::consts::PI.sqrt()
}

pub fn gelu<T: Real>(x: &mut [T]) {
    for v in x {
        let f = v.as_f64();
        *v = T::lit(0.5 * f * (1.0 + erf(f / std::f64::consts::SQRT_2)));
    }
}

/// In-place softmax over each row of length `n`.
pub fn softmax_rows<T: Real>(x: &mut [T], n: usize) {
    for row in x.chunks_exact_mut(n) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Per-channel `y = x·scale[c] + shift[c]` on NCHW data (frozen batch norm).
pub fn channel_affine<T: Real>(x: &mut [T], channels: usize, plane: usize, scale: &[T], shift: &[T]) {
    for img in x.chunks_exact_mut(channels * plane) {
        for (c, p) in img.chunks_exact_mut(plane).enumerate() {
            let (s, b) = (scale[c], shift[c]);
            for v in p {
                *v = *v * s + b;
            }
        }
    }
}

/// Max pooling with a square window and implicit −∞ padding.
pub fn max_pool2d<T: Real>(
    x: &[T],
    n_ch: usize,
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> (Vec<T>, usize, usize) {
    let oh = (h + 2 * pad - kernel) / stride + 1;
    let ow = (w + 2 * pad - kernel) / stride + 1;
    let mut y = vec![T::neg_infinity(); n_ch * oh * ow];
    for c in 0..n_ch {
        let xc = &x[c * h * w..(c + 1) * h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = T::neg_infinity();
                for ki in 0..kernel {
                    let iy = (oy * stride + ki) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kj in 0..kernel {
                        let ix = (ox * stride + kj) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        m = m.max(xc[iy as usize * w + ix as usize]);
                    }
                }
                y[(c * oh + oy) * ow + ox] = m;
            }
        }
    }
    (y, oh, ow)
}

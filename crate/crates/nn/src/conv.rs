use crate::error::Result;
use crate::init::Init;
use crate::param::{Module, Param, ParamSource};
use crate::real::{gemm, Real};

/// 2-D convolution over NCHW batches, square kernel, zero padding.
///
/// Implemented as im2col followed by one GEMM per image; the backward pass
/// reuses the same column layout (`dW += dY·colsᵀ`, `dcols = Wᵀ·dY`).
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ConvShape {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl<T: Real> Conv2d<T> {
    pub fn new(
        src: &mut dyn ParamSource<T>,
        prefix: &str,
        shape: ConvShape,
        bias: bool,
        gain: f64,
        trainable: bool,
    ) -> Result<Self> {
        let ConvShape {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
        } = shape;
        assert!(stride >= 1 && kernel >= 1);
        let weight = src.param(
            &format!("{prefix}.weight"),
            &[out_ch, in_ch, kernel, kernel],
            Init::Orthogonal { gain },
            trainable,
        )?;
        let bias = if bias {
            Some(src.param(&format!("{prefix}.bias"), &[out_ch], Init::Zeros, trainable)?)
        } else {
            None
        };
        Ok(Conv2d {
            weight,
            bias,
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    /// Output side for an input side, `None` if the kernel does not fit.
    pub fn out_size(&self, size: usize) -> Option<usize> {
        let padded = size + 2 * self.pad;
        (padded >= self.kernel).then(|| (padded - self.kernel) / self.stride + 1)
    }

    fn col_rows(&self) -> usize {
        self.in_ch * self.kernel * self.kernel
    }

    fn im2col(&self, x: &[T], h: usize, w: usize, oh: usize, ow: usize, cols: &mut [T]) {
        let (k, s, p) = (self.kernel, self.stride, self.pad as isize);
        let plane = oh * ow;
        for c in 0..self.in_ch {
            let xc = &x[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let dst = &mut cols[row * plane..(row + 1) * plane];
                    for oy in 0..oh {
                        let iy = (oy * s + ki) as isize - p;
                        let out = &mut dst[oy * ow..(oy + 1) * ow];
                        if iy < 0 || iy >= h as isize {
                            out.fill(T::zero());
                            continue;
                        }
                        let src = &xc[iy as usize * w..(iy as usize + 1) * w];
                        if s == 1 && p == 0 {
                            out.copy_from_slice(&src[kj..kj + ow]);
                            continue;
                        }
                        for (ox, o) in out.iter_mut().enumerate() {
                            let ix = (ox * s + kj) as isize - p;
                            *o = if ix < 0 || ix >= w as isize {
                                T::zero()
                            } else {
                                src[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[T], h: usize, w: usize, oh: usize, ow: usize, dx: &mut [T]) {
        let (k, s, p) = (self.kernel, self.stride, self.pad as isize);
        let plane = oh * ow;
        for c in 0..self.in_ch {
            let dxc = &mut dx[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let src = &cols[row * plane..(row + 1) * plane];
                    for oy in 0..oh {
                        let iy = (oy * s + ki) as isize - p;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let dst = &mut dxc[iy as usize * w..(iy as usize + 1) * w];
                        let seg = &src[oy * ow..(oy + 1) * ow];
                        if s == 1 && p == 0 {
                            for (d, &v) in dst[kj..kj + ow].iter_mut().zip(seg) {
                                *d += v;
                            }
                            continue;
                        }
                        for (ox, &v) in seg.iter().enumerate() {
                            let ix = (ox * s + kj) as isize - p;
                            if ix >= 0 && ix < w as isize {
                                dst[ix as usize] += v;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Forward pass over `n` images of `in_ch`×`h`×`w`; returns the output
    /// and its spatial size.
    pub fn forward(&self, x: &[T], n: usize, h: usize, w: usize) -> (Vec<T>, usize, usize) {
        let oh = self.out_size(h).expect("input smaller than kernel");
        let ow = self.out_size(w).expect("input smaller than kernel");
        assert_eq!(x.len(), n * self.in_ch * h * w, "conv input length");
        let plane = oh * ow;
        let kdim = self.col_rows();
        let mut cols = vec![T::zero(); kdim * plane];
        let mut y = vec![T::zero(); n * self.out_ch * plane];
        for i in 0..n {
            let xi = &x[i * self.in_ch * h * w..(i + 1) * self.in_ch * h * w];
            self.im2col(xi, h, w, oh, ow, &mut cols);
            let yi = &mut y[i * self.out_ch * plane..(i + 1) * self.out_ch * plane];
            gemm(
                false,
                false,
                self.out_ch,
                plane,
                kdim,
                T::one(),
                &self.weight.value,
                &cols,
                T::zero(),
                yi,
            );
            if let Some(b) = &self.bias {
                for (o, row) in yi.chunks_exact_mut(plane).enumerate() {
                    let bo = b.value[o];
                    row.iter_mut().for_each(|v| *v += bo);
                }
            }
        }
        (y, oh, ow)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &mut self,
        x: &[T],
        dy: &[T],
        n: usize,
        h: usize,
        w: usize,
        param_grads: bool,
        want_dx: bool,
    ) -> Option<Vec<T>> {
        let oh = self.out_size(h).expect("input smaller than kernel");
        let ow = self.out_size(w).expect("input smaller than kernel");
        let plane = oh * ow;
        let kdim = self.col_rows();
        assert_eq!(dy.len(), n * self.out_ch * plane, "conv grad length");
        let param_grads = param_grads && self.weight.trainable();
        let mut cols = vec![T::zero(); kdim * plane];
        let mut dx = want_dx.then(|| vec![T::zero(); x.len()]);
        for i in 0..n {
            let dyi = &dy[i * self.out_ch * plane..(i + 1) * self.out_ch * plane];
            if param_grads {
                let xi = &x[i * self.in_ch * h * w..(i + 1) * self.in_ch * h * w];
                self.im2col(xi, h, w, oh, ow, &mut cols);
                gemm(
                    false,
                    true,
                    self.out_ch,
                    kdim,
                    plane,
                    T::one(),
                    dyi,
                    &cols,
                    T::one(),
                    &mut self.weight.grad,
                );
                if let Some(b) = &mut self.bias {
                    for (g, row) in b.grad.iter_mut().zip(dyi.chunks_exact(plane)) {
                        *g += row.iter().copied().sum::<T>();
                    }
                }
            }
            if let Some(dx) = dx.as_mut() {
                gemm(
                    true,
                    false,
                    kdim,
                    plane,
                    self.out_ch,
                    T::one(),
                    &self.weight.value,
                    dyi,
                    T::zero(),
                    &mut cols,
                );
                let dxi = &mut dx[i * self.in_ch * h * w..(i + 1) * self.in_ch * h * w];
                self.col2im(&cols, h, w, oh, ow, dxi);
            }
        }
        dx
    }
}

impl<T: Real> Module<T> for Conv2d<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        f(&self.weight);
        if let Some(b) = &self.bias {
            f(b);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        f(&mut self.weight);
        if let Some(b) = &mut self.bias {
            f(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::{InitSource, ModuleExt};
    use rand::SeedableRng;

    fn conv(ic: usize, oc: usize, k: usize, stride: usize, pad: usize) -> Conv2d<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut c = Conv2d::new(
            &mut InitSource::new(&mut rng),
            "c",
            ConvShape {
                in_ch: ic,
                out_ch: oc,
                kernel: k,
                stride,
                pad,
            },
            true,
            1.0,
            true,
        )
        .unwrap();
        for (i, b) in c.bias.as_mut().unwrap().value.iter_mut().enumerate() {
            *b = 0.05 * i as f64;
        }
        c
    }

    /// Direct nested-loop convolution.
    fn naive(c: &Conv2d<f64>, x: &[f64], n: usize, h: usize, w: usize) -> Vec<f64> {
        let (oh, ow) = (c.out_size(h).unwrap(), c.out_size(w).unwrap());
        let k = c.kernel;
        let mut y = vec![0.0; n * c.out_ch * oh * ow];
        for b in 0..n {
            for o in 0..c.out_ch {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = c.bias.as_ref().unwrap().value[o];
                        for ci in 0..c.in_ch {
                            for ki in 0..k {
                                for kj in 0..k {
                                    let iy = (oy * c.stride + ki) as isize - c.pad as isize;
                                    let ix = (ox * c.stride + kj) as isize - c.pad as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                        continue;
                                    }
                                    let wv = c.weight.value[((o * c.in_ch + ci) * k + ki) * k + kj];
                                    let xv = x[((b * c.in_ch + ci) * h + iy as usize) * w + ix as usize];
                                    acc += wv * xv;
                                }
                            }
                        }
                        y[((b * c.out_ch + o) * oh + oy) * ow + ox] = acc;
                    }
                }
            }
        }
        y
    }

    #[test]
    fn forward_matches_naive_for_stride_and_padding() {
        for (k, s, p) in [(3, 1, 0), (3, 2, 0), (3, 2, 1), (7, 2, 3), (1, 2, 0)] {
            let c = conv(2, 3, k, s, p);
            let (n, h, w) = (2, 9, 8);
            let x: Vec<f64> = (0..n * 2 * h * w).map(|i| (i as f64 * 0.31).sin()).collect();
            let (y, _, _) = c.forward(&x, n, h, w);
            let want = naive(&c, &x, n, h, w);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        for (k, s, p) in [(3, 1, 0), (3, 2, 1)] {
            let mut c = conv(2, 2, k, s, p);
            let (n, h, w) = (2, 6, 7);
            let x: Vec<f64> = (0..n * 2 * h * w).map(|i| (i as f64 * 0.17).cos()).collect();
            let (y, _, _) = c.forward(&x, n, h, w);
            let g: Vec<f64> = (0..y.len()).map(|i| (i as f64 * 0.23).sin()).collect();
            let loss = |c: &Conv2d<f64>, x: &[f64]| -> f64 {
                c.forward(x, n, h, w).0.iter().zip(&g).map(|(a, b)| a * b).sum()
            };
            c.zero_grad();
            let dx = c.backward(&x, &g, n, h, w, true, true).unwrap();
            let eps = 1e-6;
            for i in (0..x.len()).step_by(7) {
                let mut xp = x.clone();
                xp[i] += eps;
                let mut xm = x.clone();
                xm[i] -= eps;
                let fd = (loss(&c, &xp) - loss(&c, &xm)) / (2.0 * eps);
                assert!((fd - dx[i]).abs() < 1e-7);
            }
            for i in 0..c.weight.value.len() {
                let mut cp = c.clone();
                cp.weight.value[i] += eps;
                let mut cm = c.clone();
                cm.weight.value[i] -= eps;
                let fd = (loss(&cp, &x) - loss(&cm, &x)) / (2.0 * eps);
                assert!((fd - c.weight.grad[i]).abs() < 1e-7);
            }
            let bg = &c.bias.as_ref().unwrap().grad;
            let plane = c.out_size(h).unwrap() * c.out_size(w).unwrap();
            let want0: f64 = (0..n)
                .flat_map(|b| (0..plane).map(move |q| (b * 2 * plane) + q))
                .map(|i| g[i])
                .sum();
            assert!((bg[0] - want0).abs() < 1e-10);
        }
    }
}

use crate::error::Result;
use crate::init::Init;
use crate::param::{Module, Param, ParamSource};
use crate::real::Real;

#[derive(Debug, Clone)]
pub struct LayerNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    dim: usize,
    eps: f64,
}

/// Normalized inputs and reciprocal standard deviations from a forward pass.
#[derive(Debug, Clone)]
pub struct LnCache<T> {
    xhat: Vec<T>,
    rstd: Vec<T>,
}

impl<T: Real> LayerNorm<T> {
    pub fn new(
        src: &mut dyn ParamSource<T>,
        prefix: &str,
        dim: usize,
        eps: f64,
        trainable: bool,
    ) -> Result<Self> {
        Ok(LayerNorm {
            gamma: src.param(&format!("{prefix}.weight"), &[dim], Init::Ones, trainable)?,
            beta: src.param(&format!("{prefix}.bias"), &[dim], Init::Zeros, trainable)?,
            dim,
            eps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn forward(&self, x: &[T]) -> (Vec<T>, LnCache<T>) {
        let n = self.dim;
        let rows = x.len() / n;
        let mut y = vec![T::zero(); x.len()];
        let mut xhat = vec![T::zero(); x.len()];
        let mut rstd = vec![T::zero(); rows];
        let eps = T::lit(self.eps);
        let nf = T::lit(n as f64);
        for r in 0..rows {
            let row = &x[r * n..(r + 1) * n];
            let mean = row.iter().copied().sum::<T>() / nf;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
            let rs = T::one() / (var + eps).sqrt();
            rstd[r] = rs;
            for i in 0..n {
                let h = (row[i] - mean) * rs;
                xhat[r * n + i] = h;
                y[r * n + i] = h * self.gamma.value[i] + self.beta.value[i];
            }
        }
        (y, LnCache { xhat, rstd })
    }

    pub fn backward(&mut self, cache: &LnCache<T>, dy: &[T], param_grads: bool) -> Vec<T> {
        let n = self.dim;
        let nf = T::lit(n as f64);
        let mut dx = vec![T::zero(); dy.len()];
        let grads = param_grads && self.gamma.trainable();
        for (r, &rs) in cache.rstd.iter().enumerate() {
            let off = r * n;
            let mut sum_d = T::zero();
            let mut sum_dx = T::zero();
            for i in 0..n {
                let d = dy[off + i] * self.gamma.value[i];
                sum_d += d;
                sum_dx += d * cache.xhat[off + i];
                if grads {
                    self.gamma.grad[i] += dy[off + i] * cache.xhat[off + i];
                    self.beta.grad[i] += dy[off + i];
                }
            }
            for i in 0..n {
                let d = dy[off + i] * self.gamma.value[i];
                dx[off + i] = rs / nf * (nf * d - sum_d - cache.xhat[off + i] * sum_dx);
            }
        }
        dx
    }
}

impl<T: Real> Module<T> for LayerNorm<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        f(&self.gamma);
        f(&self.beta);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }
}

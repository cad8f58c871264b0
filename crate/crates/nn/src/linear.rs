use crate::error::Result;
use crate::init::Init;
use crate::param::{Module, Param, ParamSource};
use crate::real::{gemm, Real};

/// Affine map `y = x·Wᵀ + b` over a batch of row vectors.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    in_dim: usize,
    out_dim: usize,
}

impl<T: Real> Linear<T> {
    pub fn new(
        src: &mut dyn ParamSource<T>,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        gain: f64,
        trainable: bool,
    ) -> Result<Self> {
        let weight = src.param(
            &format!("{prefix}.weight"),
            &[out_dim, in_dim],
            Init::Orthogonal { gain },
            trainable,
        )?;
        let bias = src.param(&format!("{prefix}.bias"), &[out_dim], Init::Zeros, trainable)?;
        Ok(Linear {
            weight,
            bias,
            in_dim,
            out_dim,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn forward(&self, x: &[T], batch: usize) -> Vec<T> {
        debug_assert_eq!(x.len(), batch * self.in_dim);
        let mut y = Vec::with_capacity(batch * self.out_dim);
        for _ in 0..batch {
            y.extend_from_slice(&self.bias.value);
        }
        gemm(
            false,
            true,
            batch,
            self.out_dim,
            self.in_dim,
            T::one(),
            x,
            &self.weight.value,
            T::one(),
            &mut y,
        );
        y
    }

    /// Accumulates parameter gradients (when `param_grads` and the layer is
    /// trainable) and returns the input gradient when `want_dx`.
    pub fn backward(
        &mut self,
        x: &[T],
        dy: &[T],
        batch: usize,
        param_grads: bool,
        want_dx: bool,
    ) -> Option<Vec<T>> {
        debug_assert_eq!(dy.len(), batch * self.out_dim);
        if param_grads && self.weight.trainable() {
            gemm(
                true,
                false,
                self.out_dim,
                self.in_dim,
                batch,
                T::one(),
                dy,
                x,
                T::one(),
                &mut self.weight.grad,
            );
            for row in dy.chunks_exact(self.out_dim) {
                for (g, &d) in self.bias.grad.iter_mut().zip(row) {
                    *g += d;
                }
            }
        }
        want_dx.then(|| {
            let mut dx = vec![T::zero(); batch * self.in_dim];
            gemm(
                false,
                false,
                batch,
                self.in_dim,
                self.out_dim,
                T::one(),
                dy,
                &self.weight.value,
                T::zero(),
                &mut dx,
            );
            dx
        })
    }
}

impl<T: Real> Module<T> for Linear<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        f(&self.weight);
        f(&self.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}

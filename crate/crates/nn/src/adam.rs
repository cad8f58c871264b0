use crate::param::{Module, Param};
use crate::real::Real;

/// Adam with bias correction. Moment buffers are matched to trainable
/// parameters by visiting order, so one optimizer serves one module.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr: T::lit(lr),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update to every trainable parameter of `module` from its
    /// accumulated gradient.
    pub fn step<M: Module<T> + ?Sized>(&mut self, module: &mut M) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let mut idx = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        module.visit_mut(&mut |p: &mut Param<T>| {
            if !p.trainable() || p.is_hollow() {
                return;
            }
            if ms.len() <= idx {
                ms.push(vec![T::zero(); p.value.len()]);
                vs.push(vec![T::zero(); p.value.len()]);
            }
            let (m, v) = (&mut ms[idx], &mut vs[idx]);
            for i in 0..p.value.len() {
                let g = p.grad[i];
                m[i] = b1 * m[i] + (T::one() - b1) * g;
                v[i] = b2 * v[i] + (T::one() - b2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p.value[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
            idx += 1;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ModuleExt;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut p = vec![Param::new("x", &[2], vec![1.0f64, -1.0], true).unwrap()];
        p[0].grad = vec![0.5, -3.0];
        let mut adam = Adam::new(0.1);
        adam.step(&mut p);
        assert!((p[0].value[0] - 0.9).abs() < 1e-6);
        assert!((p[0].value[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn zero_lr_is_a_no_op() {
        let mut p = vec![Param::new("x", &[1], vec![1.0f32], true).unwrap()];
        p[0].grad = vec![2.0];
        let before = p.digest();
        Adam::new(0.0).step(&mut p);
        assert_eq!(before, p.digest());
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = vec![Param::new("x", &[1], vec![5.0f64], true).unwrap()];
        let mut adam = Adam::new(0.1);
        for _ in 0..500 {
            p.zero_grad();
            p[0].grad[0] = 2.0 * (p[0].value[0] - 2.0);
            adam.step(&mut p);
        }
        assert!((p[0].value[0] - 2.0).abs() < 1e-2);
    }
}

//! Actor, critic and value networks.
//!
//! Each network owns a trunk (linear → layer norm → tanh) that compresses
//! the encoder output to `feature_dim`, followed by rectifier MLPs.

use pvrl_nn::{ops, LayerNorm, Linear, LnCache, Module, Param, ParamSource, Real};

use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Trunk<T> {
    pub linear: Linear<T>,
    pub norm: LayerNorm<T>,
}

#[derive(Debug, Clone)]
pub struct TrunkCache<T> {
    ln: LnCache<T>,
    pub out: Vec<T>,
}

impl<T: Real> Trunk<T> {
    pub fn new(src: &mut dyn ParamSource<T>, prefix: &str, in_dim: usize, out_dim: usize) -> Result<Self> {
        Ok(Trunk {
            linear: Linear::new(src, &format!("{prefix}.linear"), in_dim, out_dim, 1.0, true)?,
            norm: LayerNorm::new(src, &format!("{prefix}.norm"), out_dim, 1e-5, true)?,
        })
    }

    pub fn forward(&self, h: &[T], n: usize) -> TrunkCache<T> {
        let pre = self.linear.forward(h, n);
        let (mut out, ln) = self.norm.forward(&pre);
        ops::tanh(&mut out);
        TrunkCache { ln, out }
    }

    pub fn backward(
        &mut self,
        h: &[T],
        cache: &TrunkCache<T>,
        dout: &[T],
        n: usize,
        param_grads: bool,
        want_dh: bool,
    ) -> Option<Vec<T>> {
        let mut d = dout.to_vec();
        ops::tanh_backward(&mut d, &cache.out);
        let d = self.norm.backward(&cache.ln, &d, param_grads);
        self.linear.backward(h, &d, n, param_grads, want_dh)
    }
}

impl<T: Real> Module<T> for Trunk<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.linear.visit(f);
        self.norm.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.linear.visit_mut(f);
        self.norm.visit_mut(f);
    }
}

/// Linear layers with rectifiers between them and a linear output.
#[derive(Debug, Clone)]
pub struct Mlp<T> {
    pub layers: Vec<Linear<T>>,
}

#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    /// Input to each layer; entries after the first are hidden activations.
    inputs: Vec<Vec<T>>,
    pub out: Vec<T>,
}

impl<T> MlpCache<T> {
    pub fn hidden(&self) -> &[Vec<T>] {
        &self.inputs[1..]
    }
}

impl<T: Real> Mlp<T> {
    pub fn new(src: &mut dyn ParamSource<T>, prefix: &str, dims: &[usize]) -> Result<Self> {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(src, &format!("{prefix}.{i}"), w[0], w[1], 1.0, true))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Mlp { layers })
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_dim())
            .collect()
    }

    pub fn forward(&self, x: Vec<T>, n: usize) -> MlpCache<T> {
        let mut inputs = vec![x];
        let last = self.layers.len() - 1;
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let mut y = l.forward(inputs.last().unwrap(), n);
            if i < last {
                ops::relu(&mut y);
                inputs.push(y);
            } else {
                out = y;
            }
        }
        MlpCache { inputs, out }
    }

    pub fn backward(
        &mut self,
        cache: &MlpCache<T>,
        dout: &[T],
        n: usize,
        param_grads: bool,
        want_dx: bool,
    ) -> Option<Vec<T>> {
        let mut d = dout.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i + 1 < self.layers.len() {
                ops::relu_backward(&mut d, &cache.inputs[i + 1]);
            }
            {
                let dx = self.layers[i].backward(&cache.inputs[i], &d, n, param_grads, i > 0 || want_dx)?;
                d = dx
            }
        }
        Some(d)
    }
}

impl<T: Real> Module<T> for Mlp<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.layers.visit(f)
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.layers.visit_mut(f)
    }
}

/// Deterministic policy `μ(h) = tanh(MLP(trunk(h)))`.
#[derive(Debug, Clone)]
pub struct Actor<T> {
    pub trunk: Trunk<T>,
    pub policy: Mlp<T>,
}

#[derive(Debug, Clone)]
pub struct ActorCache<T> {
    pub trunk: TrunkCache<T>,
    pub mlp: MlpCache<T>,
    pub mu: Vec<T>,
}

impl<T: Real> Actor<T> {
    pub fn new(
        src: &mut dyn ParamSource<T>,
        repr: usize,
        feature: usize,
        hidden: usize,
        action_dim: usize,
    ) -> Result<Self> {
        Ok(Actor {
            trunk: Trunk::new(src, "actor.trunk", repr, feature)?,
            policy: Mlp::new(src, "actor.policy", &[feature, hidden, hidden, action_dim])?,
        })
    }

    pub fn forward(&self, h: &[T], n: usize) -> ActorCache<T> {
        let trunk = self.trunk.forward(h, n);
        let mlp = self.policy.forward(trunk.out.clone(), n);
        let mut mu = mlp.out.clone();
        ops::tanh(&mut mu);
        ActorCache { trunk, mlp, mu }
    }

    /// Accumulates actor parameter gradients for `dmu = ∂L/∂μ`.
    pub fn backward(&mut self, h: &[T], cache: &ActorCache<T>, dmu: &[T], n: usize) {
        let mut d = dmu.to_vec();
        ops::tanh_backward(&mut d, &cache.mu);
        let dz = self
            .policy
            .backward(&cache.mlp, &d, n, true, true)
            .expect("input gradient requested");
        self.trunk.backward(h, &cache.trunk, &dz, n, true, false);
    }
}

impl<T: Real> Module<T> for Actor<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.trunk.visit(f);
        self.policy.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.trunk.visit_mut(f);
        self.policy.visit_mut(f);
    }
}

/// Two Q heads over a shared trunk, each fed `[trunk(h), a]`.
#[derive(Debug, Clone)]
pub struct Critic<T> {
    pub trunk: Trunk<T>,
    pub q1: Mlp<T>,
    pub q2: Mlp<T>,
    feature: usize,
    action_dim: usize,
}

#[derive(Debug, Clone)]
pub struct CriticCache<T> {
    pub trunk: TrunkCache<T>,
    pub q1: MlpCache<T>,
    pub q2: MlpCache<T>,
}

/// Which inputs of the critic need gradients.
#[derive(Debug, Clone, Copy)]
pub struct CriticGrads {
    pub params: bool,
    pub obs: bool,
    pub action: bool,
}

impl<T: Real> Critic<T> {
    pub fn new(
        src: &mut dyn ParamSource<T>,
        prefix: &str,
        repr: usize,
        feature: usize,
        hidden: usize,
        action_dim: usize,
    ) -> Result<Self> {
        let dims = [feature + action_dim, hidden, hidden, 1];
        Ok(Critic {
            trunk: Trunk::new(src, &format!("{prefix}.trunk"), repr, feature)?,
            q1: Mlp::new(src, &format!("{prefix}.q1"), &dims)?,
            q2: Mlp::new(src, &format!("{prefix}.q2"), &dims)?,
            feature,
            action_dim,
        })
    }

    pub fn forward(&self, h: &[T], a: &[T], n: usize) -> CriticCache<T> {
        let trunk = self.trunk.forward(h, n);
        let w = self.feature + self.action_dim;
        let mut za = Vec::with_capacity(n * w);
        for i in 0..n {
            za.extend_from_slice(&trunk.out[i * self.feature..(i + 1) * self.feature]);
            za.extend_from_slice(&a[i * self.action_dim..(i + 1) * self.action_dim]);
        }
        let q1 = self.q1.forward(za.clone(), n);
        let q2 = self.q2.forward(za, n);
        CriticCache { trunk, q1, q2 }
    }

    /// Backpropagates `dq1`, `dq2`; returns (∂L/∂h, ∂L/∂a) as requested.
    pub fn backward(
        &mut self,
        h: &[T],
        cache: &CriticCache<T>,
        dq1: &[T],
        dq2: &[T],
        n: usize,
        grads: CriticGrads,
    ) -> (Option<Vec<T>>, Option<Vec<T>>) {
        let need_input = grads.obs || grads.action || grads.params;
        let d1 = self.q1.backward(&cache.q1, dq1, n, grads.params, need_input);
        let d2 = self.q2.backward(&cache.q2, dq2, n, grads.params, need_input);
        let (Some(d1), Some(d2)) = (d1, d2) else {
            return (None, None);
        };
        let w = self.feature + self.action_dim;
        let mut dz = Vec::with_capacity(n * self.feature);
        let mut da = Vec::with_capacity(n * self.action_dim);
        for i in 0..n {
            for j in 0..w {
                let v = d1[i * w + j] + d2[i * w + j];
                if j < self.feature {
                    dz.push(v);
                } else {
                    da.push(v);
                }
            }
        }
        let dh = if grads.obs || grads.params {
            self.trunk
                .backward(h, &cache.trunk, &dz, n, grads.params, grads.obs)
        } else {
            None
        };
        (dh, grads.action.then_some(da))
    }
}

impl<T: Real> Module<T> for Critic<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.trunk.visit(f);
        self.q1.visit(f);
        self.q2.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.trunk.visit_mut(f);
        self.q1.visit_mut(f);
        self.q2.visit_mut(f);
    }
}

/// State-value head `V(h)`.
#[derive(Debug, Clone)]
pub struct ValueNet<T> {
    pub trunk: Trunk<T>,
    pub head: Mlp<T>,
}

#[derive(Debug, Clone)]
pub struct ValueCache<T> {
    pub trunk: TrunkCache<T>,
    pub mlp: MlpCache<T>,
}

impl<T: Real> ValueNet<T> {
    pub fn new(src: &mut dyn ParamSource<T>, repr: usize, feature: usize, hidden: usize) -> Result<Self> {
        Ok(ValueNet {
            trunk: Trunk::new(src, "value.trunk", repr, feature)?,
            head: Mlp::new(src, "value.head", &[feature, hidden, hidden, 1])?,
        })
    }

    pub fn forward(&self, h: &[T], n: usize) -> ValueCache<T> {
        let trunk = self.trunk.forward(h, n);
        let mlp = self.head.forward(trunk.out.clone(), n);
        ValueCache { trunk, mlp }
    }

    pub fn backward(&mut self, h: &[T], cache: &ValueCache<T>, dv: &[T], n: usize) {
        let dz = self
            .head
            .backward(&cache.mlp, dv, n, true, true)
            .expect("input gradient requested");
        self.trunk.backward(h, &cache.trunk, &dz, n, true, false);
    }
}

impl<T: Real> Module<T> for ValueNet<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.trunk.visit(f);
        self.head.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.trunk.visit_mut(f);
        self.head.visit_mut(f);
    }
}

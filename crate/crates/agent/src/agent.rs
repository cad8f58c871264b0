//! Off-policy actor-critic with dormancy-guided exploration and
//! perturbation.

use std::path::{Path, PathBuf};

use pvrl_core::archive::Archive;
use pvrl_core::config::{ExperimentConfig, ExploreSchedule};
use pvrl_core::seed::{self, RngState, Stream};
use pvrl_core::{ActionSpec, ObsKind, ValidatedConfig};
use pvrl_nn::{Adam, ArchiveSource, InitSource, Module, ModuleExt, Param, ParamSource, Real};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::augment;
use crate::checkpoint::CheckpointState;
use crate::dormant::{self, LayerActivations};
use crate::encoders::Encoder;
use crate::error::{AgentError, Result};
use crate::networks::{Actor, Critic, CriticGrads, ValueNet};
use crate::replay::{Batch, ObsBatch};

/// Noise scale: the linear schedule, floored at `β·σ_start` so a dormant
/// network keeps exploring.
pub fn exploration_stddev(step: u64, beta: f64, schedule: &ExploreSchedule) -> f64 {
    let frac = if schedule.horizon == 0 {
        1.0
    } else {
        (step as f64 / schedule.horizon as f64).min(1.0)
    };
    let linear = schedule.start + (schedule.end - schedule.start) * frac;
    linear.max(beta * schedule.start)
}

/// `Σ γⁱ rᵢ + γⁿ·bootstrap`; the bootstrap is dropped when the window ended
/// in a terminal state.
pub fn nstep_return(rewards: &[f64], gamma: f64, bootstrap: f64, terminal: bool) -> f64 {
    let mut ret = 0.0;
    let mut disc = 1.0;
    for r in rewards {
        ret += disc * r;
        disc *= gamma;
    }
    if terminal {
        ret
    } else {
        ret + disc * bootstrap
    }
}

/// Elementwise minimum of two Q heads.
pub fn min_q<T: Real>(q1: &[T], q2: &[T]) -> Vec<T> {
    q1.iter().zip(q2).map(|(a, b)| a.min(*b)).collect()
}

/// Every network the agent trains, built by one constructor so that
/// initialization, loading, auditing and perturbation agree on structure.
#[derive(Debug, Clone)]
pub struct Networks<T> {
    pub encoder: Encoder<T>,
    pub actor: Actor<T>,
    pub critic: Critic<T>,
    pub value: Option<ValueNet<T>>,
}

impl<T: Real> Networks<T> {
    pub fn build(
        cfg: &ValidatedConfig,
        src: &mut dyn ParamSource<T>,
        backbone: &mut dyn ParamSource<T>,
    ) -> Result<Self> {
        let encoder = Encoder::build(cfg, src, backbone)?;
        let repr = encoder.repr_dim();
        let (f, h, a) = (cfg.feature_dim, cfg.hidden_dim, cfg.action_dim);
        Ok(Networks {
            actor: Actor::new(src, repr, f, h, a)?,
            critic: Critic::new(src, "critic", repr, f, h, a)?,
            value: if cfg.value_head {
                Some(ValueNet::new(src, repr, f, h)?)
            } else {
                None
            },
            encoder,
        })
    }

    /// Trainable parameter count without allocating anything.
    pub fn audit(cfg: &ValidatedConfig) -> Result<u64> {
        let mut shapes = pvrl_nn::ShapeSource::new();
        let mut frozen = pvrl_nn::ShapeSource::new();
        let nets = Networks::<T>::build(cfg, &mut shapes, &mut frozen)?;
        Ok(nets.param_count(true))
    }
}

impl<T: Real> Module<T> for Networks<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.encoder.visit(f);
        self.actor.visit(f);
        self.critic.visit(f);
        self.value.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.encoder.visit_mut(f);
        self.actor.visit_mut(f);
        self.critic.visit_mut(f);
        self.value.visit_mut(f);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateMetrics {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub value_loss: Option<f64>,
    pub q_mean: f64,
    pub dormant_actor: f64,
    pub dormant_critic: f64,
}

pub struct Agent<T: Real> {
    cfg: ValidatedConfig,
    action_spec: ActionSpec,
    pub nets: Networks<T>,
    pub critic_target: Critic<T>,
    encoder_opt: Adam<T>,
    actor_opt: Adam<T>,
    critic_opt: Adam<T>,
    value_opt: Adam<T>,
    explore_rng: seed::Rng,
    update_rng: seed::Rng,
    perturb_rng: seed::Rng,
    updates: u64,
    beta_actor: f64,
    beta_critic: f64,
}

impl<T: Real> std::fmt::Debug for Agent<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent")
            .field("encoder", &self.cfg.encoder)
            .field("updates", &self.updates)
            .field("beta_actor", &self.beta_actor)
            .finish()
    }
}

fn load_backbone_archive(cfg: &ExperimentConfig) -> Result<Option<Archive>> {
    match &cfg.weights {
        Some(path) => Ok(Some(Archive::load(Path::new(path))?)),
        None => Ok(None),
    }
}

impl<T: Real> Agent<T> {
    /// Fresh agent. Frozen ResNet weights come from `encoder.weights` when
    /// set, otherwise from a seeded random initialization (test mode).
    pub fn new(cfg: &ValidatedConfig) -> Result<Self> {
        let mut init_rng = seed::rng(cfg.seed, Stream::Init);
        let mut backbone_rng = seed::rng(cfg.seed, Stream::Backbone);
        let nets = match load_backbone_archive(cfg)? {
            Some(archive) if cfg.encoder == pvrl_core::EncoderKind::ResnetPieg => Networks::build(
                cfg,
                &mut InitSource::new(&mut init_rng),
                &mut ArchiveSource::new(&archive),
            )?,
            _ => Networks::build(
                cfg,
                &mut InitSource::new(&mut init_rng),
                &mut InitSource::new(&mut backbone_rng),
            )?,
        };
        Self::from_networks(cfg, nets)
    }

    pub fn from_networks(cfg: &ValidatedConfig, nets: Networks<T>) -> Result<Self> {
        let critic_target = nets.critic.clone();
        Ok(Agent {
            action_spec: ActionSpec::symmetric(cfg.action_dim),
            critic_target,
            nets,
            encoder_opt: Adam::new(cfg.lr),
            actor_opt: Adam::new(cfg.lr),
            critic_opt: Adam::new(cfg.lr),
            value_opt: Adam::new(cfg.lr),
            explore_rng: seed::rng(cfg.seed, Stream::Exploration),
            update_rng: seed::rng(cfg.seed, Stream::Augment),
            perturb_rng: seed::rng(cfg.seed, Stream::Perturb),
            updates: 0,
            beta_actor: 0.0,
            beta_critic: 0.0,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &ValidatedConfig {
        &self.cfg
    }

    pub fn action_spec(&self) -> &ActionSpec {
        &self.action_spec
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Latest dormant ratios (actor, critic) from the update batch.
    pub fn dormant_ratios(&self) -> (f64, f64) {
        (self.beta_actor, self.beta_critic)
    }

    /// Overrides the actor dormant ratio, e.g. to exercise the
    /// perturbation policy at a chosen β.
    pub fn set_beta_actor(&mut self, beta: f64) {
        self.beta_actor = beta.clamp(0.0, 1.0);
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        for opt in [
            &mut self.encoder_opt,
            &mut self.actor_opt,
            &mut self.critic_opt,
            &mut self.value_opt,
        ] {
            opt.lr = T::lit(lr);
        }
    }

    pub fn stddev(&self, step: u64) -> f64 {
        exploration_stddev(step, self.beta_actor, &self.cfg.explore_schedule)
    }

    /// Digest of frozen encoder parameters.
    pub fn frozen_digest(&self) -> String {
        self.nets.encoder.digest_filtered(|p| !p.trainable())
    }

    /// Digest of trainable encoder parameters.
    pub fn encoder_digest(&self) -> String {
        self.nets.encoder.digest_filtered(|p| p.trainable())
    }

    pub fn actor_digest(&self) -> String {
        self.nets.actor.digest()
    }

    pub fn critic_digest(&self) -> String {
        self.nets.critic.digest()
    }

    pub fn target_digest(&self) -> String {
        self.critic_target.digest()
    }

    fn check_obs(&self, obs: &ObsBatch) -> Result<()> {
        let spec = self.cfg.obs_spec();
        let per_item = spec.numel() * self.cfg.frame_stack;
        let kind_ok = matches!(
            (obs, spec.kind()),
            (ObsBatch::Images { .. }, ObsKind::Image) | (ObsBatch::Embeddings { .. }, ObsKind::Embedding)
        );
        if !kind_ok || obs.per_item() != per_item {
            return Err(AgentError::SpecMismatch(format!(
                "expected {per_item} {:?} values per observation",
                spec.kind()
            )));
        }
        Ok(())
    }

    /// Uniform action over the action bounds, used before training starts.
    pub fn random_action(&mut self) -> Vec<f32> {
        let spec = &self.action_spec;
        (0..spec.dim())
            .map(|i| self.explore_rng.random_range(spec.low()[i]..=spec.high()[i]))
            .collect()
    }

    /// Deterministic policy output for a single stacked observation.
    pub fn policy_mean(&self, obs: &ObsBatch) -> Result<Vec<f32>> {
        self.check_obs(obs)?;
        if obs.len() != 1 {
            return Err(AgentError::Invalid("act takes exactly one observation".into()));
        }
        let (h, _) = self.nets.encoder.forward(obs)?;
        let cache = self.nets.actor.forward(&h, 1);
        Ok(cache.mu.iter().map(|v| v.as_f64() as f32).collect())
    }

    /// `clamp(μ(obs) + ε)` with `ε ~ N(0, σ²)`; `eval_mode` sets σ = 0.
    pub fn act(&mut self, obs: &ObsBatch, step: u64, eval_mode: bool) -> Result<Vec<f32>> {
        let mut a = self.policy_mean(obs)?;
        if !eval_mode {
            let sigma = self.stddev(step);
            for v in a.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut self.explore_rng);
                *v += (sigma * z) as f32;
            }
        }
        self.action_spec.clamp(&mut a);
        Ok(a)
    }

    fn augment_batch(&mut self, obs: &ObsBatch) -> Result<ObsBatch> {
        match obs {
            ObsBatch::Images { data, per_item } if self.cfg.augment() => {
                let r = self.cfg.resolution;
                let c = per_item / (r * r);
                let out = augment::random_shift(
                    data,
                    obs.len(),
                    c,
                    r,
                    r,
                    self.cfg.augment_pad,
                    &mut self.update_rng,
                )?;
                Ok(ObsBatch::Images {
                    data: out,
                    per_item: *per_item,
                })
            }
            _ => Ok(obs.clone()),
        }
    }

    fn clipped_noise(&mut self, n: usize, sigma: f64) -> Vec<T> {
        let clip = self.cfg.target_noise_clip;
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.update_rng);
                T::lit((sigma * z).clamp(-clip, clip))
            })
            .collect()
    }

    fn smoothed_action(&mut self, mu: &[T], sigma: f64) -> Vec<T> {
        let noise = self.clipped_noise(mu.len(), sigma);
        mu.iter()
            .zip(noise)
            .map(|(&m, e)| (m + e).max(-T::one()).min(T::one()))
            .collect()
    }

    /// TD targets `r + γⁿ′·min Q′(s′, a′)` for encoded next observations.
    pub fn td_targets(&mut self, next_h: &[T], batch: &Batch, sigma: f64) -> Vec<T> {
        let n = batch.len();
        let mu = self.nets.actor.forward(next_h, n).mu;
        let a_next = self.smoothed_action(&mu, sigma);
        let tc = self.critic_target.forward(next_h, &a_next, n);
        let mut boot = min_q(&tc.q1.out, &tc.q2.out);
        let mix = self.cfg.exploit_mix;
        if mix > 0.0 {
            if let Some(v) = &self.nets.value {
                let vc = v.forward(next_h, n);
                for (b, &vv) in boot.iter_mut().zip(&vc.mlp.out) {
                    let m = T::lit(mix);
                    *b = (T::one() - m) * *b + m * b.max(vv);
                }
            }
        }
        (0..n)
            .map(|i| T::lit(batch.rewards[i] as f64) + T::lit(batch.discounts[i] as f64) * boot[i])
            .collect()
    }

    /// Critic loss `mean((Q₁−y)²) + mean((Q₂−y)²)` without side effects.
    pub fn critic_loss(&self, obs: &ObsBatch, actions: &[T], y: &[T]) -> Result<T> {
        let (h, _) = self.nets.encoder.forward(obs)?;
        let c = self.nets.critic.forward(&h, actions, obs.len());
        Ok(Self::td_loss(&c.q1.out, &c.q2.out, y).0)
    }

    fn td_loss(q1: &[T], q2: &[T], y: &[T]) -> (T, Vec<T>, Vec<T>) {
        let n = T::lit(y.len() as f64);
        let two = T::lit(2.0);
        let mut loss = T::zero();
        let mut d1 = Vec::with_capacity(y.len());
        let mut d2 = Vec::with_capacity(y.len());
        for i in 0..y.len() {
            let (e1, e2) = (q1[i] - y[i], q2[i] - y[i]);
            loss += (e1 * e1 + e2 * e2) / n;
            d1.push(two * e1 / n);
            d2.push(two * e2 / n);
        }
        (loss, d1, d2)
    }

    /// Zeroes and fills critic and encoder gradients for the loss against
    /// fixed targets `y`. Returns the loss and the critic's forward cache
    /// hidden activations for dormancy scoring.
    pub fn critic_gradients(&mut self, obs: &ObsBatch, actions: &[T], y: &[T]) -> Result<T> {
        self.critic_backward(obs, actions, y).map(|(l, _)| l)
    }

    fn critic_backward(&mut self, obs: &ObsBatch, actions: &[T], y: &[T]) -> Result<(T, Vec<T>)> {
        let n = obs.len();
        self.nets.critic.zero_grad();
        self.nets.encoder.zero_grad();
        let (h, enc_cache) = self.nets.encoder.forward(obs)?;
        let cache = self.nets.critic.forward(&h, actions, n);
        let (loss, d1, d2) = Self::td_loss(&cache.q1.out, &cache.q2.out, y);
        let train_encoder = self.nets.encoder.has_trainable();
        let grads = CriticGrads {
            params: true,
            obs: train_encoder,
            action: false,
        };
        let (dh, _) = self.nets.critic.backward(&h, &cache, &d1, &d2, n, grads);
        if let Some(dh) = dh {
            self.nets.encoder.backward(&enc_cache, &dh, n);
        }
        let layers: Vec<&Vec<T>> = cache.q1.hidden().iter().chain(cache.q2.hidden()).collect();
        let mut acts: Vec<LayerActivations<'_, T>> = layers
            .iter()
            .map(|v| LayerActivations {
                id: "critic",
                values: v.as_slice(),
                width: self.cfg.hidden_dim,
            })
            .collect();
        let enc_acts = if self.cfg.dormant_include_encoder {
            self.encoder_activity(&enc_cache, n)
        } else {
            Vec::new()
        };
        for (w, v) in &enc_acts {
            acts.push(LayerActivations {
                id: "encoder",
                values: v.as_slice(),
                width: *w,
            });
        }
        if self.cfg.dormant_include_encoder {
            acts.push(LayerActivations {
                id: "critic.trunk",
                values: &cache.trunk.out,
                width: self.cfg.feature_dim,
            });
        }
        self.beta_critic = dormant::dormant_ratio(&acts, self.cfg.dormancy_threshold).ratio;
        Ok((loss, h))
    }

    fn encoder_activity(&self, cache: &crate::encoders::EncoderCache<T>, n: usize) -> Vec<(usize, Vec<T>)> {
        match (&self.nets.encoder, cache) {
            (Encoder::Scratch(e), crate::encoders::EncoderCache::Scratch(c)) => e
                .channel_activity(c, n)
                .into_iter()
                .map(|v| (crate::encoders::scratch::CHANNELS, v))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// One critic, actor and (if enabled) value update followed by a soft
    /// target update. `step` is the environment step used by the noise
    /// schedule.
    pub fn update(&mut self, batch: &Batch, step: u64) -> Result<UpdateMetrics> {
        self.check_obs(&batch.obs)?;
        self.check_obs(&batch.next_obs)?;
        let n = batch.len();
        let sigma = self.stddev(step);
        let obs = self.augment_batch(&batch.obs)?;
        let next = self.augment_batch(&batch.next_obs)?;
        let actions: Vec<T> = batch.actions.iter().map(|&a| T::lit(a as f64)).collect();

        let (next_h, _) = self.nets.encoder.forward(&next)?;
        let y = self.td_targets(&next_h, batch, sigma);
        let (critic_loss, h) = self.critic_backward(&obs, &actions, &y)?;
        if !critic_loss.is_finite() {
            return Err(AgentError::NonFinite {
                what: "critic loss",
                update: self.updates,
            });
        }
        self.critic_opt.step(&mut self.nets.critic);
        self.encoder_opt.step(&mut self.nets.encoder);

        let (actor_loss, q_mean) = self.update_actor(&h, n, sigma)?;
        let value_loss = match self.nets.value.is_some() {
            true => Some(self.update_value(&h, &actions, n)?),
            false => None,
        };

        let tau = T::lit(self.cfg.polyak);
        self.critic_target.soft_update_from(&self.nets.critic, tau)?;
        self.updates += 1;
        Ok(UpdateMetrics {
            critic_loss: critic_loss.as_f64(),
            actor_loss,
            value_loss,
            q_mean,
            dormant_actor: self.beta_actor,
            dormant_critic: self.beta_critic,
        })
    }

    /// Ascends `min(Q₁, Q₂)(h, a)` with `a` the smoothed policy action;
    /// `h` is treated as a constant, and critic gradients are discarded.
    pub fn update_actor(&mut self, h: &[T], n: usize, sigma: f64) -> Result<(f64, f64)> {
        self.nets.actor.zero_grad();
        let cache = self.nets.actor.forward(h, n);
        let a = self.smoothed_action(&cache.mu, sigma);
        let cc = self.nets.critic.forward(h, &a, n);
        let inv = T::lit(1.0 / n as f64);
        let mut loss = T::zero();
        let mut d1 = vec![T::zero(); n];
        let mut d2 = vec![T::zero(); n];
        for i in 0..n {
            if cc.q1.out[i] <= cc.q2.out[i] {
                loss -= cc.q1.out[i] * inv;
                d1[i] = -inv;
            } else {
                loss -= cc.q2.out[i] * inv;
                d2[i] = -inv;
            }
        }
        if !loss.is_finite() {
            return Err(AgentError::NonFinite {
                what: "actor loss",
                update: self.updates,
            });
        }
        let grads = CriticGrads {
            params: false,
            obs: false,
            action: true,
        };
        let (_, da) = self.nets.critic.backward(h, &cc, &d1, &d2, n, grads);
        let da = da.expect("action gradient requested");
        self.nets.actor.backward(h, &cache, &da, n);
        self.actor_opt.step(&mut self.nets.actor);

        let hidden = cache.mlp.hidden();
        let mut acts: Vec<LayerActivations<'_, T>> = hidden
            .iter()
            .map(|v| LayerActivations {
                id: "actor",
                values: v.as_slice(),
                width: self.cfg.hidden_dim,
            })
            .collect();
        if self.cfg.dormant_include_encoder {
            acts.push(LayerActivations {
                id: "actor.trunk",
                values: &cache.trunk.out,
                width: self.cfg.feature_dim,
            });
        }
        self.beta_actor = dormant::dormant_ratio(&acts, self.cfg.dormancy_threshold).ratio;
        Ok((loss.as_f64(), -loss.as_f64()))
    }

    /// Expectile regression of `V(h)` onto `min Q′(h, a)`.
    fn update_value(&mut self, h: &[T], actions: &[T], n: usize) -> Result<f64> {
        let tc = self.critic_target.forward(h, actions, n);
        let q = min_q(&tc.q1.out, &tc.q2.out);
        let Some(value) = self.nets.value.as_mut() else {
            return Ok(0.0);
        };
        value.zero_grad();
        let cache = value.forward(h, n);
        let tau = self.cfg.expectile;
        let inv = 1.0 / n as f64;
        let mut loss = 0.0;
        let dv: Vec<T> = (0..n)
            .map(|i| {
                let diff = (q[i] - cache.mlp.out[i]).as_f64();
                let w = if diff < 0.0 { 1.0 - tau } else { tau };
                loss += w * diff * diff * inv;
                T::lit(-2.0 * w * diff * inv)
            })
            .collect();
        if !loss.is_finite() {
            return Err(AgentError::NonFinite {
                what: "value loss",
                update: self.updates,
            });
        }
        value.backward(h, &cache, &dv, n);
        self.value_opt.step(value);
        Ok(loss)
    }

    /// Interpolates every trainable parameter towards a fresh sample with
    /// `α = perturb_factor(β_actor)`, then re-syncs the target critic.
    /// Returns α.
    pub fn perturb(&mut self) -> Result<f64> {
        let alpha = dormant::perturb_factor(
            self.beta_actor,
            self.cfg.perturb_alpha_min,
            self.cfg.perturb_alpha_max,
        );
        let fresh = {
            let mut frozen = pvrl_nn::ShapeSource::new();
            let mut src = InitSource::new(&mut self.perturb_rng);
            let mut fresh = Networks::build(&self.cfg, &mut src, &mut frozen)?;
            // Frozen weights are never interpolated; give them real storage
            // only so structures line up.
            fresh.encoder.visit_mut(&mut |p| {
                if p.is_hollow() {
                    p.value = vec![T::zero(); p.numel()];
                }
            });
            fresh
        };
        dormant::perturb_weights(&mut self.nets, &fresh, alpha)?;
        self.critic_target.copy_from(&self.nets.critic)?;
        Ok(alpha)
    }

    fn paths(base: &Path) -> (PathBuf, PathBuf) {
        let state = base.with_extension("state");
        (base.to_path_buf(), state)
    }

    /// Writes `<base>.manifest`, `<base>.bin` and `<base>.state`.
    pub fn save(&self, base: &Path, step: u64) -> Result<()> {
        let mut archive = Archive::new();
        self.nets.export("online.", &mut archive)?;
        self.critic_target.export("target.", &mut archive)?;
        archive.save(base)?;
        let (_, state_path) = Self::paths(base);
        let state = CheckpointState {
            step,
            updates: self.updates,
            rng_explore: RngState::capture(&self.explore_rng),
            rng_update: RngState::capture(&self.update_rng),
            rng_perturb: RngState::capture(&self.perturb_rng),
            beta_actor: self.beta_actor,
            config: self.cfg.to_text(),
        };
        std::fs::write(&state_path, state.to_text()).map_err(|e| AgentError::io(&state_path, e))?;
        Ok(())
    }

    /// Restores an agent written by [`save`](Self::save); returns it with
    /// the saved environment step. Optimizer moments start fresh.
    pub fn load(base: &Path) -> Result<(Self, u64)> {
        let (_, state_path) = Self::paths(base);
        let text = std::fs::read_to_string(&state_path).map_err(|e| AgentError::io(&state_path, e))?;
        let state = CheckpointState::parse(&text)?;
        let cfg = ExperimentConfig::from_text(&state.config)?.validate()?;
        let archive = Archive::load(base)?;
        let mut shapes_rng = seed::rng(cfg.seed, Stream::Init);
        let mut backbone_rng = seed::rng(cfg.seed, Stream::Backbone);
        let mut nets = Networks::build(
            &cfg,
            &mut InitSource::new(&mut shapes_rng),
            &mut InitSource::new(&mut backbone_rng),
        )?;
        nets.import("online.", &archive)?;
        let mut agent = Self::from_networks(&cfg, nets)?;
        agent.critic_target.import("target.", &archive)?;
        agent.updates = state.updates;
        agent.explore_rng = state.rng_explore.restore();
        agent.update_rng = state.rng_update.restore();
        agent.perturb_rng = state.rng_perturb.restore();
        agent.beta_actor = state.beta_actor;
        Ok((agent, state.step))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stddev_schedule_and_floor() {
        let s = ExploreSchedule {
            start: 1.0,
            end: 0.1,
            horizon: 100_000,
        };
        assert_eq!(exploration_stddev(0, 0.0, &s), 1.0);
        assert!((exploration_stddev(100_000, 0.0, &s) - 0.1).abs() < 1e-12);
        assert!((exploration_stddev(250_000, 0.5, &s) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nstep_examples() {
        assert!((nstep_return(&[1.0, 1.0, 1.0], 0.99, 0.0, false) - 2.9701).abs() < 1e-12);
        assert_eq!(nstep_return(&[3.0, 5.0], 0.0, 7.0, false), 3.0);
        assert_eq!(nstep_return(&[0.0, 0.0], 0.5, 5.0, false), 1.25);
        assert_eq!(nstep_return(&[1.0], 0.5, 5.0, true), 1.0);
    }
}

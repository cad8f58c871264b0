//! Evaluation protocol.

use pvrl_agent::{Agent, ObsBatch};
use pvrl_core::seed::{self, Stream};
use pvrl_nn::Real;
use rand::Rng as _;

use crate::env::{Env, ToyPush};
use crate::error::{BenchError, Result};
use crate::pipeline::Pipeline;
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub mean_reward: f64,
    pub success_rate: f64,
    pub episodes: usize,
    pub episode_rewards: Vec<f64>,
}

impl EvalResult {
    pub fn reward_std(&self) -> f64 {
        stats::population_std(&self.episode_rewards)
    }
}

/// Anything that maps the current observation to an action.
pub trait Policy<E: Env> {
    fn act(&mut self, env: &E, obs: &ObsBatch) -> Result<Vec<f32>>;
}

/// Deterministic agent policy (zero exploration noise).
pub struct AgentPolicy<'a, T: Real>(pub &'a Agent<T>);

impl<E: Env, T: Real> Policy<E> for AgentPolicy<'_, T> {
    fn act(&mut self, _env: &E, obs: &ObsBatch) -> Result<Vec<f32>> {
        let mut a = self.0.policy_mean(obs)?;
        self.0.action_spec().clamp(&mut a);
        Ok(a)
    }
}

/// Uniform actions in `[-1, 1]^dim`.
pub struct RandomPolicy {
    rng: seed::Rng,
    dim: usize,
}

impl RandomPolicy {
    pub fn new(seed: u64, dim: usize) -> Self {
        RandomPolicy {
            rng: seed::rng(seed, Stream::Exploration),
            dim,
        }
    }
}

impl<E: Env> Policy<E> for RandomPolicy {
    fn act(&mut self, _env: &E, _obs: &ObsBatch) -> Result<Vec<f32>> {
        Ok((0..self.dim)
            .map(|_| self.rng.random_range(-1.0f32..=1.0))
            .collect())
    }
}

/// Hand-written controller reading the true state: walk behind the puck on
/// the far side from the target, push until the puck sits on the target,
/// then hold still.
pub struct ScriptedPush {
    pub dim: usize,
}

impl Policy<ToyPush> for ScriptedPush {
    fn act(&mut self, env: &ToyPush, _obs: &ObsBatch) -> Result<Vec<f32>> {
        let s = env.state();
        let to_t = [s.target[0] - s.puck[0], s.target[1] - s.puck[1]];
        let d_pt = (to_t[0] * to_t[0] + to_t[1] * to_t[1]).sqrt();
        let mut a = vec![0.0f32; self.dim];
        if d_pt <= 0.01 {
            return Ok(a);
        }
        let u = [to_t[0] / d_pt, to_t[1] / d_pt];
        let behind = [s.puck[0] - 0.055 * u[0], s.puck[1] - 0.055 * u[1]];
        let to_b = [behind[0] - s.gripper[0], behind[1] - s.gripper[1]];
        let d_b = (to_b[0] * to_b[0] + to_b[1] * to_b[1]).sqrt();
        let step = if d_b > 0.01 {
            // Approach the pushing point without touching the puck first.
            [to_b[0], to_b[1]]
        } else {
            [u[0] * d_pt.min(0.05), u[1] * d_pt.min(0.05)]
        };
        a[0] = (step[0] / crate::env::DISPLACEMENT).clamp(-1.0, 1.0) as f32;
        a[1] = (step[1] / crate::env::DISPLACEMENT).clamp(-1.0, 1.0) as f32;
        Ok(a)
    }
}

/// Runs `episodes` full episodes and reports mean return and success rate.
pub fn evaluate<E: Env, P: Policy<E>>(
    policy: &mut P,
    env: &mut E,
    pipeline: &mut Pipeline,
    episodes: usize,
) -> Result<EvalResult> {
    if episodes == 0 {
        return Err(BenchError::Invalid(
            "evaluation needs at least one episode".into(),
        ));
    }
    let mut rewards = Vec::with_capacity(episodes);
    let mut successes = 0usize;
    for _ in 0..episodes {
        let first = env.reset();
        pipeline.reset(pipeline.encode(first)?);
        let mut total = 0.0;
        loop {
            let obs = pipeline.stacked();
            let action = policy.act(env, &obs)?;
            let step = env.step(&action);
            total += step.reward;
            if step.done {
                successes += step.success as usize;
                break;
            }
            pipeline.push(pipeline.encode(step.observation)?);
        }
        rewards.push(total);
    }
    Ok(EvalResult {
        mean_reward: stats::mean(&rewards),
        success_rate: successes as f64 / episodes as f64,
        episodes,
        episode_rewards: rewards,
    })
}

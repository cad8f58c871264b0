//! Environment contract and the desk-scale toy push task.

use pvrl_core::seed::{self, Stream};
use pvrl_core::{ActionSpec, ObservationSpec};
use rand::Rng as _;

/// Success radius of the push task, in task units.
pub const PUSH_RADIUS: f64 = 0.05;
/// Success radius of the drawer task, in meters.
pub const DRAWER_RADIUS: f64 = 0.03;

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<u8>,
    pub reward: f64,
    pub success: bool,
    /// True exactly at the final step of the fixed-length episode.
    pub done: bool,
}

/// Fixed-length episodic task with image observations.
pub trait Env {
    fn observation_spec(&self) -> ObservationSpec;
    fn action_spec(&self) -> ActionSpec;
    fn episode_length(&self) -> usize;
    fn reset(&mut self) -> Vec<u8>;
    fn step(&mut self, action: &[f32]) -> Step;
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Puck within `radius` of the target at the final step.
pub fn push_success(puck: &[f64], target: &[f64], at_final_step: bool, radius: f64) -> bool {
    at_final_step && dist(puck, target) <= radius
}

/// Handle strictly within `radius` of its target and gripper strictly within
/// `radius` of the handle.
pub fn drawer_success(handle: &[f64], handle_target: &[f64], gripper: &[f64], radius: f64) -> bool {
    dist(handle, handle_target) < radius && dist(gripper, handle) < radius
}

pub const DISPLACEMENT: f64 = 0.05;
pub const PUCK_RADIUS: f64 = 0.05;
/// Contact is resolved this many times per step.
pub const SUBSTEPS: usize = 4;
pub const GRIPPER_RADIUS: f64 = 0.04;
pub const TARGET_RADIUS: f64 = 0.05;
pub const MAX_REWARD: f64 = 20.0;
pub const SUCCESS_BONUS: f64 = 18.0;

/// Positions stay inside `[MARGIN, 1 - MARGIN]²` so every disk is fully
/// visible.
pub const MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyPushState {
    pub gripper: [f64; 2],
    pub puck: [f64; 2],
    pub target: [f64; 2],
    pub step: usize,
}

/// A gripper disk pushes a puck disk towards a target disk in the unit
/// square. Channel 0 draws the gripper, 1 the puck, 2 the target.
///
/// Episodes start with the gripper just behind the puck on the diagonal
/// and the target in the far corner, so a diagonal push pins the puck on
/// the target.
#[derive(Debug, Clone)]
pub struct ToyPush {
    resolution: usize,
    action_dim: usize,
    episode_length: usize,
    success_radius: f64,
    rng: seed::Rng,
    state: ToyPushState,
}

fn clamp_pos(p: [f64; 2]) -> [f64; 2] {
    [p[0].clamp(MARGIN, 1.0 - MARGIN), p[1].clamp(MARGIN, 1.0 - MARGIN)]
}

impl ToyPush {
    pub fn new(
        resolution: usize,
        action_dim: usize,
        episode_length: usize,
        success_radius: f64,
        seed: u64,
        stream: Stream,
    ) -> Self {
        assert!(action_dim >= 2, "toy push needs at least two action dimensions");
        ToyPush {
            resolution,
            action_dim,
            episode_length,
            success_radius,
            rng: seed::rng(seed, stream),
            state: ToyPushState {
                gripper: [0.5, 0.3],
                puck: [0.5, 0.36],
                target: [0.5, 0.9],
                step: 0,
            },
        }
    }

    pub fn state(&self) -> ToyPushState {
        self.state
    }

    pub fn set_state(&mut self, state: ToyPushState) {
        self.state = ToyPushState {
            gripper: clamp_pos(state.gripper),
            puck: clamp_pos(state.puck),
            target: clamp_pos(state.target),
            step: state.step,
        };
    }

    /// Shaped reward of the current geometry.
    pub fn reward(&self) -> f64 {
        let s = &self.state;
        let d_gp = dist(&s.gripper, &s.puck);
        let d_pt = dist(&s.puck, &s.target);
        let bonus = if d_pt <= self.success_radius {
            SUCCESS_BONUS
        } else {
            0.0
        };
        ((1.0 - d_gp) + (1.0 - d_pt) + bonus).min(MAX_REWARD)
    }

    pub fn render(&self) -> Vec<u8> {
        let r = self.resolution;
        let mut img = vec![0u8; 3 * r * r];
        let s = &self.state;
        for (ch, pos, rad) in [
            (0, s.gripper, GRIPPER_RADIUS),
            (1, s.puck, PUCK_RADIUS),
            (2, s.target, TARGET_RADIUS),
        ] {
            let plane = &mut img[ch * r * r..(ch + 1) * r * r];
            for y in 0..r {
                let cy = (y as f64 + 0.5) / r as f64 - pos[1];
                for x in 0..r {
                    let cx = (x as f64 + 0.5) / r as f64 - pos[0];
                    if cx * cx + cy * cy <= rad * rad {
                        plane[y * r + x] = 255;
                    }
                }
            }
        }
        img
    }

    /// Moves the gripper in sub-steps and resolves contact after each one,
    /// so a full diagonal step cannot pass through the puck. A puck blocked
    /// by the wall holds the gripper at contact distance.
    fn advance(&mut self, action: &[f32]) {
        let a = [
            (action[0] as f64).clamp(-1.0, 1.0),
            (action[1] as f64).clamp(-1.0, 1.0),
        ];
        let s = &mut self.state;
        let h = DISPLACEMENT / SUBSTEPS as f64;
        for _ in 0..SUBSTEPS {
            s.gripper = clamp_pos([s.gripper[0] + h * a[0], s.gripper[1] + h * a[1]]);
            let d = [s.puck[0] - s.gripper[0], s.puck[1] - s.gripper[1]];
            let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if n >= PUCK_RADIUS {
                continue;
            }
            let normal = if n > 1e-9 {
                [d[0] / n, d[1] / n]
            } else {
                let an = (a[0] * a[0] + a[1] * a[1]).sqrt();
                if an > 0.0 {
                    [a[0] / an, a[1] / an]
                } else {
                    [0.0, 1.0]
                }
            };
            s.puck = clamp_pos([
                s.gripper[0] + PUCK_RADIUS * normal[0],
                s.gripper[1] + PUCK_RADIUS * normal[1],
            ]);
            let back = [s.puck[0] - s.gripper[0], s.puck[1] - s.gripper[1]];
            if (back[0] * back[0] + back[1] * back[1]).sqrt() < PUCK_RADIUS - 1e-12 {
                s.gripper = clamp_pos([
                    s.puck[0] - PUCK_RADIUS * normal[0],
                    s.puck[1] - PUCK_RADIUS * normal[1],
                ]);
            }
        }
        s.step += 1;
    }
}

impl Env for ToyPush {
    fn observation_spec(&self) -> ObservationSpec {
        ObservationSpec::image(self.resolution)
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec::symmetric(self.action_dim)
    }

    fn episode_length(&self) -> usize {
        self.episode_length
    }

    fn reset(&mut self) -> Vec<u8> {
        let puck = [
            self.rng.random_range(0.74..0.84),
            self.rng.random_range(0.74..0.84),
        ];
        let back = (PUCK_RADIUS + 0.01) / std::f64::consts::SQRT_2;
        let gripper = [puck[0] - back, puck[1] - back];
        let corner = 1.0 - MARGIN;
        let target = [
            corner - self.rng.random_range(0.0..0.02),
            corner - self.rng.random_range(0.0..0.02),
        ];
        self.set_state(ToyPushState {
            gripper,
            puck,
            target,
            step: 0,
        });
        self.render()
    }

    fn step(&mut self, action: &[f32]) -> Step {
        self.advance(action);
        let done = self.state.step >= self.episode_length;
        Step {
            observation: self.render(),
            reward: self.reward(),
            success: push_success(&self.state.puck, &self.state.target, done, self.success_radius),
            done,
        }
    }
}

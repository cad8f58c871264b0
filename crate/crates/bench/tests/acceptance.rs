//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. `ACCEPTANCE_ONLY=1,5` runs a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pvrl_agent::agent::min_q;
use pvrl_agent::augment::{random_shift, shift_batch, ShiftSample};
use pvrl_agent::dormant::perturb_weights;
use pvrl_agent::networks::Mlp;
use pvrl_agent::{
    dormant_ratio, nstep_return, perturb_factor, Agent, Batch, LayerActivations, ObsBatch, ReplayBuffer,
    Transition,
};
use pvrl_bench::audit::audit_all;
use pvrl_bench::budget::{embedding_reduction, mem_budget};
use pvrl_bench::env::{Env, ToyPush, PUSH_RADIUS};
use pvrl_bench::eval::{evaluate, RandomPolicy};
use pvrl_bench::metrics::{write_all, MetricsRow, Phase, METRICS_FILE};
use pvrl_bench::pipeline::Pipeline;
use pvrl_bench::report::{emit_report, METRICS};
use pvrl_bench::train::{seed_configs, train};
use pvrl_core::seed::{self, Stream};
use pvrl_core::{EncoderKind, ExperimentConfig, StorageMode, ValidatedConfig};
use pvrl_nn::{InitSource, Module, ModuleExt, Param};
use rand::{Rng, SeedableRng};

type Check = std::result::Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load_config(name: &str) -> std::result::Result<ExperimentConfig, String> {
    let path = workspace_root().join("configs").join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    ExperimentConfig::from_text(&text).map_err(err)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// 1. Replay memory for one-million-observation image buffers.
fn memory_accounting() -> Check {
    let mut parts = Vec::new();
    for (res, want, gb) in [
        (84usize, 21_168_000_000u64, 21.17),
        (112, 37_632_000_000, 37.63),
        (224, 150_528_000_000, 150.53),
    ] {
        let got = mem_budget(1_000_000, res, StorageMode::Image, 1);
        let oracle = 1_000_000 * 3 * (res * res) as u64;
        ensure(got == want && got == oracle, || {
            format!("{res}px: {got} bytes, want {want}")
        })?;
        let rounded = (got as f64 / 1e7).round() / 100.0;
        ensure(rounded == gb, || format!("{res}px: {rounded} GB, want {gb}"))?;
        parts.push(format!("{res}px {got}"));
    }
    Ok(parts.join(", "))
}

// 2. One CLS embedding against one 112 px frame.
fn embedding_reduction_check() -> Check {
    let r = embedding_reduction(112);
    let oracle = 1.0 - (768.0 * 4.0) / (3.0 * 112.0 * 112.0);
    ensure(r == oracle, || format!("reduction {r}, oracle {oracle}"))?;
    let pct = (r * 10_000.0).round() / 100.0;
    ensure(pct == 91.84 && r > 0.9, || format!("reduction {pct}%"))?;
    Ok(format!("{pct}%"))
}

// 3. Trainable-parameter audit at the reference widths.
fn param_audit() -> Check {
    let cfg = load_config("table1.conf")?.validate().map_err(err)?;
    let report = audit_all(&cfg, &[112, 224]).map_err(err)?;
    let count = |k: EncoderKind, r: usize| {
        report
            .get(k, r)
            .map(|row| row.trainable)
            .ok_or(format!("missing {k:?}@{r}"))
    };
    for k in [EncoderKind::VitCls, EncoderKind::VitReg] {
        let (a, b) = (count(k, 112)?, count(k, 224)?);
        ensure(a == b, || format!("{k:?}: {a} at 112 but {b} at 224"))?;
    }
    // Flattened conv output: stride-2 conv then three valid 3x3 convs, 32 channels.
    let scratch_flat = |r: usize| {
        let side = (r - 3) / 2 + 1 - 6;
        32 * side * side
    };
    // Truncated ResNet: stride 8 overall, 128 channels.
    let resnet_flat = |r: usize| 128 * (r / 8) * (r / 8);
    let scratch = count(EncoderKind::ScratchCnn, 224)? - count(EncoderKind::ScratchCnn, 112)?;
    let want = 150 * (scratch_flat(224) - scratch_flat(112)) as u64;
    ensure(scratch == want && scratch == 57_373_481 - 15_978_281, || {
        format!("scratch difference {scratch}, want {want}")
    })?;
    let pieg = count(EncoderKind::ResnetPieg, 224)? - count(EncoderKind::ResnetPieg, 112)?;
    let want = 4096 * (resnet_flat(224) - resnet_flat(112)) as u64;
    ensure(pieg == want && pieg == 415_621_577 - 107_340_233, || {
        format!("resnet difference {pieg}, want {want}")
    })?;
    let residuals: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.residual().is_some_and(|v| v != 0))
        .map(|r| format!("{}@{} {:+}", r.label, r.resolution, r.residual().unwrap()))
        .collect();
    let table = report.to_table();
    ensure(table.contains("residual"), || {
        "audit table lacks a residual column".into()
    })?;
    Ok(format!(
        "vit equal; deltas {scratch} / {pieg}; residuals: {}",
        if residuals.is_empty() {
            "none".into()
        } else {
            residuals.join(", ")
        }
    ))
}

// 4. Dormant ratios against a brute-force recomputation.
fn brute_force_ratio(net: &Mlp<f64>, x: &[f64], n: usize, tau: f64) -> f64 {
    let mut input = x.to_vec();
    let mut width_in = net.layers[0].in_dim();
    let (mut dead, mut total) = (0usize, 0usize);
    for layer in &net.layers[..net.layers.len() - 1] {
        let out = layer.out_dim();
        let (w, b) = (&layer.weight.value, &layer.bias.value);
        let mut acts = vec![0.0; n * out];
        for s in 0..n {
            for j in 0..out {
                let mut z = b[j];
                for i in 0..width_in {
                    z += w[j * width_in + i] * input[s * width_in + i];
                }
                acts[s * out + j] = z.max(0.0);
            }
        }
        let score: Vec<f64> = (0..out)
            .map(|j| (0..n).map(|s| acts[s * out + j].abs()).sum::<f64>() / n as f64)
            .collect();
        let layer_mean = score.iter().sum::<f64>() / out as f64;
        for s in &score {
            let normalized = if layer_mean == 0.0 { 0.0 } else { s / layer_mean };
            if normalized <= tau {
                dead += 1;
            }
        }
        total += out;
        input = acts;
        width_in = out;
    }
    dead as f64 / total as f64
}

fn module_ratio(net: &Mlp<f64>, x: &[f64], n: usize, tau: f64) -> f64 {
    let cache = net.forward(x.to_vec(), n);
    let acts: Vec<LayerActivations<'_, f64>> = cache
        .hidden()
        .iter()
        .zip(net.hidden_widths())
        .map(|(v, width)| LayerActivations {
            id: "hidden",
            values: v.as_slice(),
            width,
        })
        .collect();
    dormant_ratio(&acts, tau).ratio
}

fn dormancy_oracle() -> Check {
    let mut rng = seed::Rng::seed_from_u64(2024);
    let mut max_err = 0.0f64;
    for trial in 0..50 {
        let depth = rng.random_range(2..=4);
        let dims: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=12)).collect();
        let mut net: Mlp<f64> = Mlp::new(&mut InitSource::new(&mut rng), "m", &dims).map_err(err)?;
        // Negative biases silence some units outright.
        net.visit_mut(&mut |p: &mut Param<f64>| {
            if p.name().ends_with("bias") {
                for v in p.value.iter_mut() {
                    *v = if (trial + v.to_bits() as usize).is_multiple_of(3) {
                        -5.0
                    } else {
                        0.1
                    };
                }
            }
        });
        let n = rng.random_range(1..=8);
        let x: Vec<f64> = (0..n * dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tau = [0.0, 0.025, 0.1, 0.5][trial % 4];
        let got = module_ratio(&net, &x, n, tau);
        let want = brute_force_ratio(&net, &x, n, tau);
        max_err = max_err.max((got - want).abs());
        ensure(close(got, want, 1e-9), || {
            format!("trial {trial}: ratio {got}, brute force {want}")
        })?;
    }

    let ratio = |values: &[f64], width: usize| {
        dormant_ratio(
            &[LayerActivations {
                id: "l",
                values,
                width,
            }],
            0.025,
        )
        .ratio
    };
    let uniform = ratio(&[1.0; 12], 4);
    ensure(uniform == 0.0, || format!("uniform activations: {uniform}"))?;
    let half = ratio(&[0.0, 2.0, 0.0, 3.0, 0.0, 1.0, 0.0, 4.0], 4);
    ensure(half == 0.5, || format!("half-zeroed layer: {half}"))?;
    let mut zero: Mlp<f64> = Mlp::new(&mut InitSource::new(&mut rng), "z", &[3, 5, 4, 1]).map_err(err)?;
    zero.visit_mut(&mut |p: &mut Param<f64>| p.value.iter_mut().for_each(|v| *v = 0.0));
    let all = module_ratio(&zero, &[0.3, -0.2, 0.9, 1.0, 0.0, -1.0], 2, 0.025);
    ensure(all == 1.0, || format!("all-zero network: {all}"))?;
    Ok(format!("50 networks, max error {max_err:e}; crafted 0 / 0.5 / 1"))
}

// 5. Agent arithmetic and critic gradients.
fn tiny_agent_config(seed: u64) -> ValidatedConfig {
    let c = ExperimentConfig {
        encoder: EncoderKind::VitCls,
        resolution: 112,
        seed,
        frame_stack: 1,
        feature_dim: 6,
        hidden_dim: 8,
        action_dim: 2,
        ..Default::default()
    };
    c.validate().expect("tiny config is valid")
}

fn embedding_batch(n: usize, dim: usize, salt: f32) -> Batch {
    Batch {
        obs: ObsBatch::Embeddings {
            data: (0..n * dim).map(|i| (i as f32 * 0.37 + salt).sin()).collect(),
            per_item: dim,
        },
        next_obs: ObsBatch::Embeddings {
            data: (0..n * dim).map(|i| (i as f32 * 0.11 - salt).cos()).collect(),
            per_item: dim,
        },
        actions: (0..n * 2).map(|i| ((i as f32) * 0.3).sin() * 0.9).collect(),
        rewards: (0..n).map(|i| i as f32 * 0.1).collect(),
        discounts: vec![0.97; n],
        action_dim: 2,
    }
}

fn agent_math() -> Check {
    let r = nstep_return(&[1.0, 2.0, 3.0], 0.9, 10.0, false);
    ensure(close(r, 1.0 + 1.8 + 2.43 + 7.29, 1e-12), || {
        format!("n-step return {r}")
    })?;
    let r = nstep_return(&[1.0, 2.0, 3.0], 0.9, 10.0, true);
    ensure(close(r, 5.23, 1e-12), || format!("terminal n-step return {r}"))?;
    let r = nstep_return(&[], 0.9, 4.0, false);
    ensure(r == 4.0, || format!("empty window {r}"))?;

    let q = min_q(&[1.0, -2.0, 3.0], &[0.5, -1.0, 3.0]);
    ensure(q == vec![0.5, -2.0, 3.0], || format!("min-Q {q:?}"))?;

    let mut agent: Agent<f64> = Agent::new(&tiny_agent_config(2)).map_err(err)?;
    agent.update(&embedding_batch(4, 768, 0.0), 10_000).map_err(err)?;
    let online = agent.nets.critic.clone();
    let before = agent.critic_target.clone();
    let mut t = before.clone();
    t.soft_update_from(&online, 0.0).map_err(err)?;
    ensure(t.digest() == before.digest(), || "tau 0 moved the target".into())?;
    t.soft_update_from(&online, 1.0).map_err(err)?;
    ensure(t.digest() == online.digest(), || "tau 1 did not copy".into())?;
    let mut t = before.clone();
    t.soft_update_from(&online, 0.25).map_err(err)?;
    for ((pb, po), pt) in before.params().iter().zip(online.params()).zip(t.params()) {
        for i in 0..pb.value.len() {
            let want = 0.75 * pb.value[i] + 0.25 * po.value[i];
            ensure(close(pt.value[i], want, 1e-15), || {
                format!("soft update {}[{i}]", pt.name())
            })?;
        }
    }

    let cfg = tiny_agent_config(3)
        .with(|c| c.explore_schedule.start = 50.0)
        .map_err(err)?;
    let mut noisy: Agent<f32> = Agent::new(&cfg).map_err(err)?;
    let obs = ObsBatch::Embeddings {
        data: vec![0.5; 768],
        per_item: 768,
    };
    for step in 0..200 {
        let a = noisy.act(&obs, step, false).map_err(err)?;
        ensure(a.iter().all(|v| (-1.0..=1.0).contains(v)), || {
            format!("action {a:?} out of bounds")
        })?;
    }

    let mut agent: Agent<f64> = Agent::new(&tiny_agent_config(6)).map_err(err)?;
    let batch = embedding_batch(3, 768, 0.5);
    let actions: Vec<f64> = batch.actions.iter().map(|&a| a as f64).collect();
    let y = [0.3, -0.2, 1.1];
    agent.critic_gradients(&batch.obs, &actions, &y).map_err(err)?;
    let grads: Vec<Vec<f64>> = agent
        .nets
        .critic
        .params()
        .iter()
        .map(|p| p.grad.clone())
        .collect();
    let eps = 1e-6;
    let (mut checked, mut worst) = (0, 0.0f64);
    for (pi, grad) in grads.iter().enumerate() {
        for idx in (0..grad.len()).step_by((grad.len() / 5).max(1)) {
            let nudge = |agent: &mut Agent<f64>, delta: f64| {
                let mut k = 0;
                agent.nets.critic.visit_mut(&mut |p: &mut Param<f64>| {
                    if k == pi {
                        p.value[idx] += delta;
                    }
                    k += 1;
                });
            };
            nudge(&mut agent, eps);
            let up = agent.critic_loss(&batch.obs, &actions, &y).map_err(err)?;
            nudge(&mut agent, -2.0 * eps);
            let down = agent.critic_loss(&batch.obs, &actions, &y).map_err(err)?;
            nudge(&mut agent, eps);
            let fd = (up - down) / (2.0 * eps);
            let rel = (fd - grad[idx]).abs() / fd.abs().max(grad[idx].abs()).max(1e-6);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    ensure(worst < 1e-4, || {
        format!("finite-difference relative error {worst:e}")
    })?;
    Ok(format!(
        "identities hold; {checked} gradient entries, worst relative error {worst:.1e}"
    ))
}

// 6. Frozen parameters stay frozen through training updates.
fn freeze_isolation() -> Check {
    let c = ExperimentConfig {
        encoder: EncoderKind::VitCls,
        resolution: 112,
        frame_stack: 2,
        feature_dim: 16,
        hidden_dim: 32,
        batch_size: 8,
        seed: 5,
        ..Default::default()
    };
    let cfg = c.validate().map_err(err)?;
    let pipeline = Pipeline::new(&cfg).map_err(err)?;
    let backbone_before = pipeline.backbone_digest().ok_or("stub mode has no backbone")?;
    let mut env = ToyPush::new(112, cfg.action_dim, 20, PUSH_RADIUS, 5, Stream::Env);
    let mut replay =
        ReplayBuffer::new(cfg.obs_spec().clone(), cfg.action_dim, 1000, cfg.frame_stack).map_err(err)?;
    let mut agent: Agent<f32> = Agent::new(&cfg).map_err(err)?;
    let digests = |a: &Agent<f32>| {
        (
            a.encoder_digest(),
            a.actor_digest(),
            a.critic_digest(),
            a.frozen_digest(),
        )
    };
    let before = digests(&agent);
    let zero = vec![0.0f32; cfg.action_dim];
    for episode in 0..3u64 {
        let frame = pipeline.encode(env.reset()).map_err(err)?;
        push(&mut replay, &frame.as_observation(), &zero, 0.0, episode)?;
        for _ in 0..env.episode_length() {
            let a = agent.random_action();
            let s = env.step(&a);
            let frame = pipeline.encode(s.observation).map_err(err)?;
            push(&mut replay, &frame.as_observation(), &a, s.reward as f32, episode)?;
        }
    }
    let mut rng = seed::rng(5, Stream::Replay);
    for k in 0..100 {
        let batch = replay
            .sample(cfg.batch_size, cfg.n_step, cfg.discount, &mut rng)
            .map_err(err)?;
        agent.update(&batch, 2000 + k).map_err(err)?;
    }
    let after = digests(&agent);
    ensure(
        pipeline.backbone_digest().as_deref() == Some(backbone_before.as_str()),
        || "stub backbone changed".into(),
    )?;
    ensure(after.3 == before.3, || "frozen encoder parameters changed".into())?;
    ensure(after.1 != before.1 && after.2 != before.2, || {
        "actor or critic did not train".into()
    })?;

    // The projection head trains while the ResNet trunk stays fixed.
    let c = ExperimentConfig {
        encoder: EncoderKind::ResnetPieg,
        resolution: 112,
        frame_stack: 1,
        feature_dim: 8,
        hidden_dim: 16,
        batch_size: 2,
        projection_width: 32,
        ..Default::default()
    };
    let cfg = c.validate().map_err(err)?;
    let mut pieg: Agent<f32> = Agent::new(&cfg).map_err(err)?;
    let before_p = digests(&pieg);
    let image: Vec<u8> = (0..2 * 3 * 112 * 112).map(|i| (i * 31 % 251) as u8).collect();
    let batch = Batch {
        obs: ObsBatch::Images {
            data: image.clone(),
            per_item: 3 * 112 * 112,
        },
        next_obs: ObsBatch::Images {
            data: image.iter().rev().copied().collect(),
            per_item: 3 * 112 * 112,
        },
        actions: vec![0.1; 2 * cfg.action_dim],
        rewards: vec![1.0, 0.5],
        discounts: vec![0.99; 2],
        action_dim: cfg.action_dim,
    };
    for k in 0..3 {
        pieg.update(&batch, 5000 + k).map_err(err)?;
    }
    let after_p = digests(&pieg);
    ensure(after_p.3 == before_p.3, || "ResNet trunk changed".into())?;
    ensure(after_p.0 != before_p.0, || "projection did not train".into())?;
    Ok("stub backbone and ResNet trunk unchanged; trainable parts moved".into())
}

fn push(
    replay: &mut ReplayBuffer,
    obs: &pvrl_agent::Observation<'_>,
    action: &[f32],
    reward: f32,
    episode: u64,
) -> std::result::Result<(), String> {
    replay
        .push(&Transition {
            observation: *obs,
            action,
            reward,
            terminal: false,
            episode,
        })
        .map_err(err)
}

// 7. Dormancy-driven perturbation.
fn perturbation() -> Check {
    let cfg = tiny_agent_config(8);
    let mut agent: Agent<f64> = Agent::new(&cfg).map_err(err)?;
    agent.set_beta_actor(1.0);
    let before = agent.nets.actor.clone();
    let alpha = agent.perturb().map_err(err)?;
    ensure(alpha == cfg.perturb_alpha_min, || {
        format!("alpha {alpha}, want {}", cfg.perturb_alpha_min)
    })?;
    let f = perturb_factor(1.0, cfg.perturb_alpha_min, cfg.perturb_alpha_max);
    ensure(f == cfg.perturb_alpha_min, || format!("perturb_factor(1) = {f}"))?;
    ensure(agent.actor_digest() != before.digest(), || {
        "actor unchanged".into()
    })?;

    let mut rng = seed::Rng::seed_from_u64(77);
    let theta: Mlp<f64> = Mlp::new(&mut InitSource::new(&mut rng), "p", &[5, 7, 3]).map_err(err)?;
    let phi: Mlp<f64> = Mlp::new(&mut InitSource::new(&mut rng), "p", &[5, 7, 3]).map_err(err)?;
    let distance = |a: &Mlp<f64>| {
        a.params()
            .iter()
            .zip(phi.params())
            .flat_map(|(x, y)| {
                x.value
                    .iter()
                    .zip(&y.value)
                    .map(|(u, v)| (u - v) * (u - v))
                    .collect::<Vec<_>>()
            })
            .sum::<f64>()
            .sqrt()
    };
    let d0 = distance(&theta);
    for alpha in [0.0, 0.25, 1.0] {
        let mut moved = theta.clone();
        perturb_weights(&mut moved, &phi, alpha).map_err(err)?;
        for ((m, t), p) in moved.params().iter().zip(theta.params()).zip(phi.params()) {
            for i in 0..m.value.len() {
                let want = alpha * t.value[i] + (1.0 - alpha) * p.value[i];
                ensure(close(m.value[i], want, 1e-15), || {
                    format!("alpha {alpha}: {}[{i}]", m.name())
                })?;
            }
        }
        let d = distance(&moved);
        if alpha < 1.0 {
            ensure(d < d0, || format!("alpha {alpha}: distance {d} not below {d0}"))?;
        }
    }
    Ok(format!("alpha_min {alpha}; interpolation exact at 0, 0.25, 1"))
}

// 8. Random-shift augmentation properties.
fn augmentation() -> Check {
    let (n, c, h, w, pad) = (3, 3, 12, 10, 4);
    let mut rng = seed::Rng::seed_from_u64(8);
    let images: Vec<u8> = (0..n * c * h * w).map(|_| rng.random()).collect();
    let zero = vec![ShiftSample { dx: 0, dy: 0 }; n];
    let same = shift_batch(&images, c, h, w, pad, &zero).map_err(err)?;
    ensure(same == images, || "zero shift changed the images".into())?;
    let shifted = random_shift(&images, n, c, h, w, pad, &mut seed::rng(1, Stream::Augment)).map_err(err)?;
    ensure(shifted.len() == images.len(), || "shape changed".into())?;
    let again = random_shift(&images, n, c, h, w, pad, &mut seed::rng(1, Stream::Augment)).map_err(err)?;
    ensure(shifted == again, || "same seed gave different shifts".into())?;
    let constant = vec![0.625f32; n * c * h * w];
    for s in 0..20 {
        let out =
            random_shift(&constant, n, c, h, w, pad, &mut seed::rng(s, Stream::Augment)).map_err(err)?;
        ensure(out == constant, || "constant image moved".into())?;
    }
    Ok("identity, shape, fixed point, determinism".into())
}

// 9. Desk-scale training on the toy push task.
const BASELINE_FIXTURE: &str = "tests/fixtures/random_baseline.csv";
const BASELINE_EPISODES: usize = 20;

fn random_baseline(cfg: &ValidatedConfig) -> std::result::Result<Vec<f64>, String> {
    let mut env = ToyPush::new(
        cfg.resolution,
        cfg.action_dim,
        cfg.episode_length,
        PUSH_RADIUS,
        0,
        Stream::EvalEnv,
    );
    let mut pipeline = Pipeline::new(cfg).map_err(err)?;
    let mut policy = RandomPolicy::new(0, cfg.action_dim);
    let r = evaluate(&mut policy, &mut env, &mut pipeline, BASELINE_EPISODES).map_err(err)?;
    Ok(r.episode_rewards)
}

fn read_baseline() -> std::result::Result<Vec<f64>, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(BASELINE_FIXTURE);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .skip(1)
        .map(|l| {
            let reward = l.split(',').nth(1).ok_or(format!("bad fixture line `{l}`"))?;
            reward.trim().parse::<f64>().map_err(err)
        })
        .collect()
}

fn smoke_training() -> Check {
    let cfg = load_config("smoke.conf")?.validate().map_err(err)?;
    let baseline = read_baseline()?;
    let fresh = random_baseline(&cfg)?;
    ensure(
        fresh.len() == baseline.len() && fresh.iter().zip(&baseline).all(|(a, b)| close(*a, *b, 1e-9)),
        || "stored random baseline no longer matches the environment".into(),
    )?;
    let base_mean = pvrl_bench::stats::mean(&baseline);
    let base_std = pvrl_bench::stats::population_std(&baseline);
    let bar = base_mean + 5.0 * base_std;

    let tmp = tempfile::tempdir().map_err(err)?;
    let start = Instant::now();
    let mut finals = Vec::new();
    for c in seed_configs(&cfg).map_err(err)? {
        let seed = c.seed;
        let out = train(&c, &tmp.path().join(format!("seed-{seed}")), None).map_err(err)?;
        let last = out.final_eval().ok_or("no evaluation")?.clone();
        eprintln!(
            "  seed {seed}: reward {:.1}, success {:.2}",
            last.mean_reward, last.success_rate
        );
        finals.push(last);
    }
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let mean_reward = pvrl_bench::stats::mean(&finals.iter().map(|r| r.mean_reward).collect::<Vec<_>>());
    let successful = finals.iter().filter(|r| r.success_rate >= 0.5).count();

    let vit = load_config("smoke_vit.conf")?.validate().map_err(err)?;
    let vit_seed = vit.seed;
    let vit_out = train(&vit, &tmp.path().join("vit"), None).map_err(|e| format!("stub-ViT run: {e}"))?;
    ensure(vit_out.final_eval().is_some() && vit_out.updates > 0, || {
        "stub-ViT run did not train".into()
    })?;

    let summary = format!(
        "mean reward {mean_reward:.1} vs bar {bar:.1} (baseline {base_mean:.1} ± {base_std:.2}), \
         {successful}/3 seeds with success ≥ 0.5, {minutes:.1} min; stub-ViT seed {vit_seed} ran {} updates",
        vit_out.updates
    );
    ensure(mean_reward > bar && successful >= 2 && minutes <= 60.0, || {
        summary.clone()
    })?;
    Ok(summary)
}

// 10. Multi-seed report over synthetic runs.
fn reporting() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let runs = tmp.path().join("runs");
    // Seed s reports reward 10·s + frame/100 and success s/10 at each frame.
    let frames = [0u64, 500, 1000];
    for s in 1..=5u64 {
        let dir = runs.join(format!("seed-{s}"));
        std::fs::create_dir_all(&dir).map_err(err)?;
        let rows: Vec<MetricsRow> = frames
            .iter()
            .map(|&f| MetricsRow {
                seed: s,
                frame: f,
                phase: Phase::Eval,
                episode_reward: 10.0 * s as f64 + f as f64 / 100.0,
                success: s as f64 / 10.0,
                dormant_ratio_actor: 0.1,
                dormant_ratio_critic: 0.05 * s as f64,
                sigma: 0.2,
            })
            .collect();
        let file = std::fs::File::create(dir.join(METRICS_FILE)).map_err(err)?;
        write_all(file, &rows).map_err(err)?;
    }
    let out = tmp.path().join("report");
    let rep = emit_report(&runs, &out).map_err(err)?;
    ensure(rep.configs.len() == 1, || {
        format!("{} configs", rep.configs.len())
    })?;
    let curves = &rep.configs[0].curves;
    // Values 10..50: mean 30, population std √200, half-width √200 / 2.
    let reward = &curves["episode_reward"];
    for (i, f) in frames.iter().enumerate() {
        let m = 30.0 + *f as f64 / 100.0;
        ensure(close(reward.mean[i], m, 1e-9), || {
            format!("reward mean {} at {f}", reward.mean[i])
        })?;
        ensure(close(reward.half_width[i], 200f64.sqrt() / 2.0, 1e-9), || {
            format!("reward half-width {}", reward.half_width[i])
        })?;
    }
    let success = &curves["success_rate"];
    ensure(
        close(success.mean[0], 0.3, 1e-9) && close(success.half_width[0], 0.02f64.sqrt() / 2.0, 1e-9),
        || format!("success band {} ± {}", success.mean[0], success.half_width[0]),
    )?;
    let actor = &curves["dormant_ratio_actor"];
    ensure(actor.half_width.iter().all(|h| *h == 0.0), || {
        "identical seeds gave a band".into()
    })?;
    let three = pvrl_bench::stats::aggregate_seeds(&[vec![(0, 10.0)], vec![(0, 20.0)], vec![(0, 30.0)]])
        .map_err(err)?;
    ensure(
        close(three.half_width[0], 4.0825, 1e-4)
            && close(three.half_width[0], (200.0f64 / 3.0).sqrt() / 2.0, 1e-12),
        || format!("(10, 20, 30) half-width {}", three.half_width[0]),
    )?;
    ensure(rep.plots.len() == METRICS.len(), || {
        format!("{} plots", rep.plots.len())
    })?;
    for p in &rep.plots {
        let svg = std::fs::read_to_string(p).map_err(err)?;
        ensure(svg.contains("<svg"), || format!("{} is not an SVG", p.display()))?;
    }
    let summary = std::fs::read_to_string(&rep.summary).map_err(err)?;
    ensure(
        summary.lines().count() == 1 + METRICS.len() * frames.len(),
        || "summary row count".into(),
    )?;
    Ok(format!("5 seeds, {} plots", rep.plots.len()))
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let criteria: [Criterion; 10] = [
        (1, "memory accounting", memory_accounting),
        (2, "embedding reduction", embedding_reduction_check),
        (3, "parameter audit", param_audit),
        (4, "dormancy oracle", dormancy_oracle),
        (5, "agent math", agent_math),
        (6, "freeze isolation", freeze_isolation),
        (7, "perturbation", perturbation),
        (8, "augmentation", augmentation),
        (9, "smoke training", smoke_training),
        (10, "reporting", reporting),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} ({name}): PASS [{secs:.1}s] {detail}"),
            Err(e) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{secs:.1}s] {e}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

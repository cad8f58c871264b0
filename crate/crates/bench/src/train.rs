//! Single-seed training loop and run-directory layout.

use std::path::{Path, PathBuf};

use pvrl_agent::{Agent, ReplayBuffer, Transition};
use pvrl_core::seed::{self, Stream};
use pvrl_core::ValidatedConfig;

use crate::env::{Env, ToyPush};
use crate::error::{BenchError, Result};
use crate::eval::{evaluate, AgentPolicy, EvalResult};
use crate::metrics::{MetricsRow, MetricsWriter, Phase};
use crate::pipeline::{Frame, Pipeline};

pub const CONFIG_FILE: &str = "config.resolved";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const REPORT_DIR: &str = "report";

/// Builds the training or evaluation instance of the configured task.
pub fn make_env(cfg: &ValidatedConfig, stream: Stream) -> Result<ToyPush> {
    match cfg.env_name.as_str() {
        "toy_push" => Ok(ToyPush::new(
            cfg.resolution,
            cfg.action_dim,
            cfg.episode_length,
            cfg.success_radius,
            cfg.seed,
            stream,
        )),
        other => Err(BenchError::Invalid(format!(
            "environment `{other}` is not built in; connect it through the Env trait"
        ))),
    }
}

/// Creates `config.resolved`, `checkpoints/` and `report/` under `run_dir`.
pub fn init_run_dir(cfg: &ValidatedConfig, run_dir: &Path) -> Result<()> {
    for dir in [
        run_dir.to_path_buf(),
        run_dir.join(CHECKPOINT_DIR),
        run_dir.join(REPORT_DIR),
    ] {
        std::fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
    }
    let path = run_dir.join(CONFIG_FILE);
    std::fs::write(&path, cfg.to_text()).map_err(|e| BenchError::io(&path, e))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub seed: u64,
    pub run_dir: PathBuf,
    pub evals: Vec<(u64, EvalResult)>,
    pub updates: u64,
}

impl TrainOutcome {
    pub fn final_eval(&self) -> Option<&EvalResult> {
        self.evals.last().map(|e| &e.1)
    }
}

/// Progress callback: `(frame, eval result)` after each evaluation.
pub type Progress<'a> = &'a mut dyn FnMut(u64, &EvalResult);

/// Trains one seed to `total_steps` environment steps, evaluating every
/// `eval_every` steps and once at the end.
pub fn train(cfg: &ValidatedConfig, run_dir: &Path, progress: Option<Progress<'_>>) -> Result<TrainOutcome> {
    let mut noop = |_: u64, _: &EvalResult| {};
    let progress: Progress<'_> = match progress {
        Some(p) => p,
        None => &mut noop,
    };
    init_run_dir(cfg, run_dir)?;
    let mut metrics = MetricsWriter::open(run_dir)?;
    let mut env = make_env(cfg, Stream::Env)?;
    let mut eval_env = make_env(cfg, Stream::EvalEnv)?;
    let mut pipeline = Pipeline::new(cfg)?;
    let mut eval_pipeline = pipeline.clone();
    let mut agent: Agent<f32> = Agent::new(cfg)?;
    let spec = cfg.obs_spec().clone();
    let mut replay = match &cfg.spill_dir {
        Some(dir) => ReplayBuffer::open_file(
            &Path::new(dir).join(format!("seed-{}", cfg.seed)),
            spec,
            cfg.action_dim,
            cfg.buffer_capacity,
            cfg.frame_stack,
        )?,
        None => ReplayBuffer::new(spec, cfg.action_dim, cfg.buffer_capacity, cfg.frame_stack)?,
    };
    let mut replay_rng = seed::rng(cfg.seed, Stream::Replay);
    let zero_action = vec![0.0f32; cfg.action_dim];

    let mut evals = Vec::new();
    let mut episode = 0u64;
    let mut episode_reward = 0.0;
    let mut start_episode = true;
    for step in 0..cfg.total_steps {
        if start_episode {
            let frame = pipeline.encode(env.reset())?;
            push_record(&mut replay, &frame, &zero_action, 0.0, episode)?;
            pipeline.reset(frame);
            episode_reward = 0.0;
            start_episode = false;
        }
        let action = if step < cfg.seed_frames {
            agent.random_action()
        } else {
            agent.act(&pipeline.stacked(), step, false)?
        };
        let out = env.step(&action);
        episode_reward += out.reward;
        let frame = pipeline.encode(out.observation)?;
        // Episodes end on the time limit only, so no record is terminal.
        push_record(&mut replay, &frame, &action, out.reward as f32, episode)?;
        pipeline.push(frame);

        if step >= cfg.seed_frames && (step - cfg.seed_frames).is_multiple_of(cfg.update_every) {
            let batch = replay.sample(cfg.batch_size, cfg.n_step, cfg.discount, &mut replay_rng)?;
            agent.update(&batch, step)?;
        }
        if cfg.perturb_period > 0 && step > cfg.seed_frames && step % cfg.perturb_period == 0 {
            agent.perturb()?;
        }

        let frame_no = step + 1;
        if out.done {
            let (da, dc) = agent.dormant_ratios();
            metrics.write(&MetricsRow {
                seed: cfg.seed,
                frame: frame_no,
                phase: Phase::Train,
                episode_reward,
                success: if out.success { 1.0 } else { 0.0 },
                dormant_ratio_actor: da,
                dormant_ratio_critic: dc,
                sigma: agent.stddev(step),
            })?;
            episode += 1;
            start_episode = true;
        }
        let last = frame_no == cfg.total_steps;
        if (cfg.eval_every > 0 && frame_no % cfg.eval_every == 0) || last {
            let result = evaluate(
                &mut AgentPolicy(&agent),
                &mut eval_env,
                &mut eval_pipeline,
                cfg.eval_episodes,
            )?;
            let (da, dc) = agent.dormant_ratios();
            metrics.write(&MetricsRow {
                seed: cfg.seed,
                frame: frame_no,
                phase: Phase::Eval,
                episode_reward: result.mean_reward,
                success: result.success_rate,
                dormant_ratio_actor: da,
                dormant_ratio_critic: dc,
                sigma: agent.stddev(step),
            })?;
            progress(frame_no, &result);
            evals.push((frame_no, result));
        }
        if (cfg.checkpoint_every > 0 && frame_no % cfg.checkpoint_every == 0) || last {
            let base = run_dir.join(CHECKPOINT_DIR).join(format!("step-{frame_no}"));
            agent.save(&base, frame_no)?;
        }
    }
    if cfg.spill_dir.is_some() {
        replay.flush()?;
    }
    Ok(TrainOutcome {
        seed: cfg.seed,
        run_dir: run_dir.to_path_buf(),
        evals,
        updates: agent.updates(),
    })
}

fn push_record(
    replay: &mut ReplayBuffer,
    frame: &Frame,
    action: &[f32],
    reward: f32,
    episode: u64,
) -> Result<()> {
    replay.push(&Transition {
        observation: frame.as_observation(),
        action,
        reward,
        terminal: false,
        episode,
    })?;
    Ok(())
}

/// Evaluates a saved checkpoint on fresh evaluation episodes.
pub fn eval_checkpoint(base: &Path, episodes: usize) -> Result<(EvalResult, u64)> {
    let (agent, step) = Agent::<f32>::load(base)?;
    let cfg = agent.config().clone();
    let mut env = make_env(&cfg, Stream::EvalEnv)?;
    let mut pipeline = Pipeline::new(&cfg)?;
    let result = evaluate(&mut AgentPolicy(&agent), &mut env, &mut pipeline, episodes)?;
    Ok((result, step))
}

/// Per-seed configs `seed, seed+1, ...` for `num_seeds` seeds.
pub fn seed_configs(cfg: &ValidatedConfig) -> Result<Vec<ValidatedConfig>> {
    (0..cfg.num_seeds as u64)
        .map(|i| Ok(cfg.with(|c| c.seed = cfg.seed + i)?))
        .collect()
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pvrl_bench::audit::{audit_params, ParamReport};
use pvrl_bench::error::{BenchError, Result};
use pvrl_bench::{budget, report, train};
use pvrl_core::{EncoderKind, ExperimentConfig, StorageMode, ValidatedConfig, GB};

#[derive(Parser)]
#[command(name = "pvrl", version, about = "Visual RL encoder comparison harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one or more seeds and write metrics, checkpoints and a report.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Train only this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        encoder: Option<String>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        storage: Option<String>,
        #[arg(long)]
        augment: Option<bool>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, default_value = "runs")]
        run_dir: PathBuf,
    },
    /// Count trainable parameters at each resolution.
    AuditParams {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "112,224")]
        resolutions: Vec<usize>,
        /// Audit every encoder kind, not just the configured one.
        #[arg(long)]
        all: bool,
    },
    /// Replay observation memory for a buffer of `capacity` observations.
    MemBudget {
        #[arg(long)]
        capacity: u64,
        #[arg(long)]
        resolution: usize,
        #[arg(long, default_value = "image")]
        storage: String,
        /// Tokens per embedding observation (1 = CLS only).
        #[arg(long, default_value_t = 1)]
        tokens: usize,
    },
    /// Aggregate runs into plots and a summary table.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint (path without extension).
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| BenchError::io(p, e))?;
            Ok(ExperimentConfig::from_text(&text)?)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn run_train(cfg: ValidatedConfig, single_seed: bool, run_dir: PathBuf) -> Result<()> {
    let seeds = if single_seed {
        vec![cfg.clone()]
    } else {
        train::seed_configs(&cfg)?
    };
    let nested = seeds.len() > 1;
    for c in seeds {
        let dir = if nested {
            run_dir.join(format!("seed-{}", c.seed))
        } else {
            run_dir.clone()
        };
        let seed = c.seed;
        let mut progress = |frame: u64, r: &pvrl_bench::EvalResult| {
            eprintln!(
                "seed {seed} frame {frame}: eval reward {:.1}, success {:.2}",
                r.mean_reward, r.success_rate
            );
        };
        train::train(&c, &dir, Some(&mut progress))?;
    }
    let out = run_dir.join(train::REPORT_DIR);
    let rep = report::emit_report(&run_dir, &out)?;
    println!("report: {}", rep.summary.display());
    Ok(())
}

fn print_audit(report: &ParamReport) {
    print!("{}", report.to_table());
    if report.rows.iter().any(|r| r.residual().is_some_and(|v| v != 0)) {
        println!(
            "note: nonzero residuals come from reference widths that were never published; \
             resolution differences are exact"
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            encoder,
            resolution,
            storage,
            augment,
            steps,
            run_dir,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            let seed_s = seed.map(|s| s.to_string());
            let res_s = resolution.map(|r| r.to_string());
            let aug_s = augment.map(|a| a.to_string());
            let steps_s = steps.map(|s| s.to_string());
            let overrides = [
                ("experiment.seed", seed_s.as_deref()),
                ("experiment.encoder", encoder.as_deref()),
                ("experiment.resolution", res_s.as_deref()),
                ("experiment.storage", storage.as_deref()),
                ("experiment.augment", aug_s.as_deref()),
                ("experiment.steps", steps_s.as_deref()),
            ];
            cfg.apply_overrides(overrides.iter().filter_map(|(k, v)| v.map(|v| (*k, v))))?;
            run_train(cfg.validate()?, seed.is_some(), run_dir)
        }
        Command::AuditParams {
            config,
            resolutions,
            all,
        } => {
            let cfg = load_config(config.as_ref())?;
            let mut report = ParamReport::default();
            let kinds: Vec<EncoderKind> = if all {
                EncoderKind::ALL.to_vec()
            } else {
                vec![cfg.encoder]
            };
            for kind in kinds {
                let mut c = cfg.clone();
                c.encoder = kind;
                c.storage = None;
                c.augment = None;
                report
                    .rows
                    .extend(audit_params(&c.validate()?, &resolutions)?.rows);
            }
            print_audit(&report);
            Ok(())
        }
        Command::MemBudget {
            capacity,
            resolution,
            storage,
            tokens,
        } => {
            let mode: StorageMode = storage.parse().map_err(BenchError::Invalid)?;
            let bytes = budget::mem_budget(capacity, resolution, mode, tokens);
            println!("{bytes} bytes ({:.2} GB)", bytes as f64 / GB);
            Ok(())
        }
        Command::Report { runs, out } => {
            let rep = report::emit_report(&runs, &out)?;
            for c in &rep.configs {
                println!("{}: {} seeds", c.label, c.seeds.len());
            }
            println!("summary: {}", rep.summary.display());
            for p in &rep.plots {
                println!("plot: {}", p.display());
            }
            Ok(())
        }
        Command::Eval { checkpoint, episodes } => {
            let (r, step) = train::eval_checkpoint(&checkpoint, episodes)?;
            println!(
                "step {step}: mean reward {:.3}, success rate {:.3} over {} episodes",
                r.mean_reward, r.success_rate, r.episodes
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Benchmark harness: toy push environment, evaluation protocol, parameter
//! audit, replay memory accounting, metrics, reports and training runs.

pub mod audit;
pub mod budget;
pub mod env;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod train;

pub use audit::{audit_params, ParamReport, ParamRow};
pub use budget::{embedding_reduction, mem_budget};
pub use env::{drawer_success, push_success, Env, Step, ToyPush, ToyPushState};
pub use error::{BenchError, Result};
pub use eval::{evaluate, EvalResult, Policy};
pub use metrics::{MetricsRow, MetricsWriter, Phase};
pub use report::emit_report;
pub use stats::{aggregate_seeds, SeedCurve};
pub use train::{train, TrainOutcome};

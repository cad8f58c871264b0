//! Shared building blocks for the pretrained-visual-representation RL stack.
//!
//! This crate holds everything the other crates agree on: observation and
//! action specs, the experiment configuration schema (with its dotted-key
//! text format), deterministic seeding, and the flat weights archive used
//! for frozen backbones and agent checkpoints.

pub mod archive;
pub mod config;
pub mod error;
pub mod seed;
pub mod spec;

pub use config::{EncoderKind, ExperimentConfig, ExploreSchedule, StorageMode, ValidatedConfig};
pub use error::{Error, Result};
pub use spec::{ActionSpec, ObsKind, ObservationSpec};

/// Width of the CLS (and register) token of the ViT-B backbones.
pub const TOKEN_DIM: usize = 768;

/// One decimal gigabyte. Memory figures are reported in 10^9 bytes.
pub const GB: f64 = 1e9;

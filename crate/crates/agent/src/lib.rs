//! Pixel-based continuous-control agent: encoders, replay, augmentation,
//! dormancy measurement and the actor-critic update.

pub mod agent;
pub mod augment;
pub mod checkpoint;
pub mod dormant;
pub mod encoders;
pub mod error;
pub mod networks;
pub mod replay;

pub use agent::{exploration_stddev, nstep_return, Agent, Networks, UpdateMetrics};
pub use dormant::{dormant_ratio, perturb_factor, DormantReport, LayerActivations};
pub use encoders::{Backbone, Encoder, StubBackbone, TokenSet, VitBackbone};
pub use error::{AgentError, Result};
pub use replay::{Batch, BufferStats, ObsBatch, Observation, ReplayBuffer, Transition};

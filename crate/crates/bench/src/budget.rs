//! Replay memory accounting.

use pvrl_agent::replay::memory_budget;
use pvrl_core::{ObservationSpec, StorageMode, TOKEN_DIM};

/// Observation bytes for `capacity` stored observations. Embedding storage
/// holds `tokens` 768-wide f32 vectors per observation.
pub fn mem_budget(capacity: u64, resolution: usize, storage: StorageMode, tokens: usize) -> u64 {
    let spec = match storage {
        StorageMode::Image => ObservationSpec::image(resolution),
        StorageMode::Embedding => ObservationSpec::embedding(TOKEN_DIM * tokens),
    };
    memory_budget(capacity, &spec)
}

/// Fractional saving of storing one CLS embedding instead of a frame.
pub fn embedding_reduction(resolution: usize) -> f64 {
    let image = ObservationSpec::image(resolution).bytes_per_observation() as f64;
    let embedding = ObservationSpec::embedding(TOKEN_DIM).bytes_per_observation() as f64;
    1.0 - embedding / image
}

//! Experiment configuration: schema, defaults, dotted-key text format and
//! validation.
//!
//! The on-disk format is one `section.key = value` per line; `#` starts a
//! comment. Unknown and repeated keys are rejected. Precedence when a run is
//! assembled is defaults < file < command-line overrides.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spec::ObservationSpec;
use crate::TOKEN_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncoderKind {
    /// Four-layer convolutional encoder trained from scratch.
    ScratchCnn,
    /// Frozen truncated ResNet18 followed by a trainable projection.
    ResnetPieg,
    /// Frozen ViT, CLS token only.
    VitCls,
    /// Frozen ViT, CLS token concatenated with register tokens.
    VitReg,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 4] = [
        EncoderKind::ScratchCnn,
        EncoderKind::ResnetPieg,
        EncoderKind::VitCls,
        EncoderKind::VitReg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::ScratchCnn => "scratch_cnn",
            EncoderKind::ResnetPieg => "resnet_pieg",
            EncoderKind::VitCls => "vit_cls",
            EncoderKind::VitReg => "vit_reg",
        }
    }

    pub fn is_vit(self) -> bool {
        matches!(self, EncoderKind::VitCls | EncoderKind::VitReg)
    }

    /// Storage mode forced by the encoder: frozen ViTs store tokens, the
    /// image encoders store frames.
    pub fn required_storage(self) -> StorageMode {
        if self.is_vit() {
            StorageMode::Embedding
        } else {
            StorageMode::Image
        }
    }

    pub fn default_augment(self) -> bool {
        !self.is_vit()
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        EncoderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown encoder `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StorageMode {
    Image,
    Embedding,
}

impl StorageMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StorageMode::Image => "image",
            StorageMode::Embedding => "embedding",
        }
    }
}

impl fmt::Display for StorageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StorageMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "image" => Ok(StorageMode::Image),
            "embedding" => Ok(StorageMode::Embedding),
            _ => Err(format!("unknown storage mode `{s}`")),
        }
    }
}

/// Linear exploration-noise decay: `start` → `end` over `horizon` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExploreSchedule {
    pub start: f64,
    pub end: f64,
    pub horizon: u64,
}

/// Full description of one training run.
///
/// `storage` and `augment` are optional: when unset, validation fills them
/// from the encoder kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub encoder: EncoderKind,
    pub resolution: usize,
    pub storage: Option<StorageMode>,
    pub augment: Option<bool>,
    pub seed: u64,
    pub num_seeds: usize,
    pub total_steps: u64,

    pub buffer_capacity: usize,
    pub spill_dir: Option<String>,

    pub n_step: usize,
    pub discount: f64,
    pub batch_size: usize,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub frame_stack: usize,
    pub lr: f64,
    pub polyak: f64,
    pub target_noise_clip: f64,
    pub seed_frames: u64,
    pub update_every: u64,
    pub value_head: bool,
    pub exploit_mix: f64,
    pub expectile: f64,
    pub explore_schedule: ExploreSchedule,

    pub dormancy_threshold: f64,
    pub dormant_include_encoder: bool,
    pub perturb_period: u64,
    pub perturb_alpha_min: f64,
    pub perturb_alpha_max: f64,

    pub projection_width: usize,
    pub registers: usize,
    pub patch_size: usize,
    pub stub_seed: Option<u64>,
    pub weights: Option<String>,

    pub augment_pad: usize,

    pub eval_every: u64,
    pub eval_episodes: usize,
    pub checkpoint_every: u64,

    pub env_name: String,
    pub episode_length: usize,
    pub action_dim: usize,
    pub success_radius: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            encoder: EncoderKind::ScratchCnn,
            resolution: 112,
            storage: None,
            augment: None,
            seed: 1,
            num_seeds: 5,
            total_steps: 500_000,

            buffer_capacity: 1_000_000,
            spill_dir: None,

            // Calibration block: agent hyperparameters of the DrQ-v2/DrM
            // lineage. Swap wholesale when matching a reference run.
            n_step: 3,
            discount: 0.99,
            batch_size: 256,
            feature_dim: 50,
            hidden_dim: 1024,
            frame_stack: 1,
            lr: 1e-4,
            polyak: 0.01,
            target_noise_clip: 0.3,
            seed_frames: 4000,
            update_every: 1,
            value_head: true,
            exploit_mix: 0.0,
            expectile: 0.9,
            explore_schedule: ExploreSchedule {
                start: 1.0,
                end: 0.1,
                horizon: 250_000,
            },

            dormancy_threshold: 0.025,
            dormant_include_encoder: false,
            perturb_period: 100_000,
            perturb_alpha_min: 0.2,
            perturb_alpha_max: 0.9,

            projection_width: 4096,
            registers: 4,
            patch_size: 14,
            stub_seed: None,
            weights: None,

            augment_pad: 4,

            eval_every: 10_000,
            eval_episodes: 10,
            checkpoint_every: 100_000,

            env_name: "toy_push".to_string(),
            episode_length: 100,
            action_dim: 4,
            success_radius: 0.05,
        }
    }
}

/// Every key accepted in a config file, in canonical output order.
pub const KEYS: &[&str] = &[
    "experiment.encoder",
    "experiment.resolution",
    "experiment.storage",
    "experiment.augment",
    "experiment.seed",
    "experiment.num_seeds",
    "experiment.steps",
    "replay.capacity",
    "replay.spill_dir",
    "agent.n_step",
    "agent.discount",
    "agent.batch_size",
    "agent.feature_dim",
    "agent.hidden_dim",
    "agent.frame_stack",
    "agent.lr",
    "agent.polyak",
    "agent.target_noise_clip",
    "agent.seed_frames",
    "agent.update_every",
    "agent.value_head",
    "agent.exploit_mix",
    "agent.expectile",
    "agent.explore.start",
    "agent.explore.end",
    "agent.explore.horizon",
    "dormant.threshold",
    "dormant.include_encoder",
    "perturb.period",
    "perturb.alpha_min",
    "perturb.alpha_max",
    "encoder.projection_width",
    "encoder.registers",
    "encoder.patch_size",
    "encoder.stub_seed",
    "encoder.weights",
    "augment.pad",
    "eval.every",
    "eval.episodes",
    "eval.checkpoint_every",
    "env.name",
    "env.episode_length",
    "env.action_dim",
    "env.success_radius",
];

fn parse<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T> {
    value.parse().map_err(|_| Error::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "boolean",
        }),
    }
}

fn parse_enum<T: FromStr<Err = String>>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: "one of the listed variants",
    })
}

fn finite(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value, "number")?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "finite number",
        })
    }
}

impl ExperimentConfig {
    /// Sets a single dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "experiment.encoder" => self.encoder = parse_enum(key, v)?,
            "experiment.resolution" => self.resolution = parse(key, v, "pixel count")?,
            "experiment.storage" => self.storage = Some(parse_enum(key, v)?),
            "experiment.augment" => self.augment = Some(parse_bool(key, v)?),
            "experiment.seed" => self.seed = parse(key, v, "unsigned integer")?,
            "experiment.num_seeds" => self.num_seeds = parse(key, v, "count")?,
            "experiment.steps" => self.total_steps = parse(key, v, "count")?,
            "replay.capacity" => self.buffer_capacity = parse(key, v, "count")?,
            "replay.spill_dir" => self.spill_dir = Some(v.to_string()),
            "agent.n_step" => self.n_step = parse(key, v, "count")?,
            "agent.discount" => self.discount = finite(key, v)?,
            "agent.batch_size" => self.batch_size = parse(key, v, "count")?,
            "agent.feature_dim" => self.feature_dim = parse(key, v, "count")?,
            "agent.hidden_dim" => self.hidden_dim = parse(key, v, "count")?,
            "agent.frame_stack" => self.frame_stack = parse(key, v, "count")?,
            "agent.lr" => self.lr = finite(key, v)?,
            "agent.polyak" => self.polyak = finite(key, v)?,
            "agent.target_noise_clip" => self.target_noise_clip = finite(key, v)?,
            "agent.seed_frames" => self.seed_frames = parse(key, v, "count")?,
            "agent.update_every" => self.update_every = parse(key, v, "count")?,
            "agent.value_head" => self.value_head = parse_bool(key, v)?,
            "agent.exploit_mix" => self.exploit_mix = finite(key, v)?,
            "agent.expectile" => self.expectile = finite(key, v)?,
            "agent.explore.start" => self.explore_schedule.start = finite(key, v)?,
            "agent.explore.end" => self.explore_schedule.end = finite(key, v)?,
            "agent.explore.horizon" => self.explore_schedule.horizon = parse(key, v, "count")?,
            "dormant.threshold" => self.dormancy_threshold = finite(key, v)?,
            "dormant.include_encoder" => self.dormant_include_encoder = parse_bool(key, v)?,
            "perturb.period" => self.perturb_period = parse(key, v, "count")?,
            "perturb.alpha_min" => self.perturb_alpha_min = finite(key, v)?,
            "perturb.alpha_max" => self.perturb_alpha_max = finite(key, v)?,
            "encoder.projection_width" => self.projection_width = parse(key, v, "count")?,
            "encoder.registers" => self.registers = parse(key, v, "count")?,
            "encoder.patch_size" => self.patch_size = parse(key, v, "count")?,
            "encoder.stub_seed" => self.stub_seed = Some(parse(key, v, "unsigned integer")?),
            "encoder.weights" => self.weights = Some(v.to_string()),
            "augment.pad" => self.augment_pad = parse(key, v, "count")?,
            "eval.every" => self.eval_every = parse(key, v, "count")?,
            "eval.episodes" => self.eval_episodes = parse(key, v, "count")?,
            "eval.checkpoint_every" => self.checkpoint_every = parse(key, v, "count")?,
            "env.name" => self.env_name = v.to_string(),
            "env.episode_length" => self.episode_length = parse(key, v, "count")?,
            "env.action_dim" => self.action_dim = parse(key, v, "count")?,
            "env.success_radius" => self.success_radius = finite(key, v)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Current value of a key, `None` when an optional key is unset.
    pub fn get(&self, key: &str) -> Result<Option<String>> {
        let s = match key {
            "experiment.encoder" => self.encoder.to_string(),
            "experiment.resolution" => self.resolution.to_string(),
            "experiment.storage" => return Ok(self.storage.map(|s| s.to_string())),
            "experiment.augment" => return Ok(self.augment.map(|a| a.to_string())),
            "experiment.seed" => self.seed.to_string(),
            "experiment.num_seeds" => self.num_seeds.to_string(),
            "experiment.steps" => self.total_steps.to_string(),
            "replay.capacity" => self.buffer_capacity.to_string(),
            "replay.spill_dir" => return Ok(self.spill_dir.clone()),
            "agent.n_step" => self.n_step.to_string(),
            "agent.discount" => self.discount.to_string(),
            "agent.batch_size" => self.batch_size.to_string(),
            "agent.feature_dim" => self.feature_dim.to_string(),
            "agent.hidden_dim" => self.hidden_dim.to_string(),
            "agent.frame_stack" => self.frame_stack.to_string(),
            "agent.lr" => self.lr.to_string(),
            "agent.polyak" => self.polyak.to_string(),
            "agent.target_noise_clip" => self.target_noise_clip.to_string(),
            "agent.seed_frames" => self.seed_frames.to_string(),
            "agent.update_every" => self.update_every.to_string(),
            "agent.value_head" => self.value_head.to_string(),
            "agent.exploit_mix" => self.exploit_mix.to_string(),
            "agent.expectile" => self.expectile.to_string(),
            "agent.explore.start" => self.explore_schedule.start.to_string(),
            "agent.explore.end" => self.explore_schedule.end.to_string(),
            "agent.explore.horizon" => self.explore_schedule.horizon.to_string(),
            "dormant.threshold" => self.dormancy_threshold.to_string(),
            "dormant.include_encoder" => self.dormant_include_encoder.to_string(),
            "perturb.period" => self.perturb_period.to_string(),
            "perturb.alpha_min" => self.perturb_alpha_min.to_string(),
            "perturb.alpha_max" => self.perturb_alpha_max.to_string(),
            "encoder.projection_width" => self.projection_width.to_string(),
            "encoder.registers" => self.registers.to_string(),
            "encoder.patch_size" => self.patch_size.to_string(),
            "encoder.stub_seed" => return Ok(self.stub_seed.map(|s| s.to_string())),
            "encoder.weights" => return Ok(self.weights.clone()),
            "augment.pad" => self.augment_pad.to_string(),
            "eval.every" => self.eval_every.to_string(),
            "eval.episodes" => self.eval_episodes.to_string(),
            "eval.checkpoint_every" => self.checkpoint_every.to_string(),
            "env.name" => self.env_name.clone(),
            "env.episode_length" => self.episode_length.to_string(),
            "env.action_dim" => self.action_dim.to_string(),
            "env.success_radius" => self.success_radius.to_string(),
            _ => return Err(Error::UnknownKey(key.to_string())),
        };
        Ok(Some(s))
    }

    /// Parses a config file on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    /// Applies every `key = value` line of `text` to `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(Error::ConfigSyntax {
                    line: i + 1,
                    msg: "empty key or value".to_string(),
                });
            }
            if seen.iter().any(|k| k == key) {
                return Err(Error::ConfigSyntax {
                    line: i + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            self.set(key, value)?;
            seen.push(key.to_string());
        }
        Ok(())
    }

    /// Applies command-line style overrides, which win over file values.
    pub fn apply_overrides<'a, I>(&mut self, overrides: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Canonical text form; parsing it back yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            if let Some(v) = self.get(key).expect("listed key") {
                out.push_str(key);
                out.push_str(" = ");
                out.push_str(&v);
                out.push('\n');
            }
        }
        out
    }

    /// Checks every invariant and resolves the encoder-dependent defaults.
    pub fn validate(&self) -> Result<ValidatedConfig> {
        validate_config(self)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

/// Spatial size after the four encoder convolutions (strides 2-1-1-1,
/// 3×3 kernels, no padding), or `None` when the input is too small.
pub fn scratch_cnn_spatial(resolution: usize) -> Option<usize> {
    let mut s = resolution;
    for stride in [2usize, 1, 1, 1] {
        if s < 3 {
            return None;
        }
        s = (s - 3) / stride + 1;
    }
    Some(s)
}

pub const SUPPORTED_RESOLUTIONS: [usize; 3] = [84, 112, 224];

pub fn validate_config(cfg: &ExperimentConfig) -> Result<ValidatedConfig> {
    let enc = cfg.encoder;
    let required = enc.required_storage();
    let storage = cfg.storage.unwrap_or(required);
    if storage != required {
        return Err(Error::IncompatibleStorage {
            encoder: enc.as_str(),
            required: required.as_str(),
            got: storage.as_str(),
        });
    }
    let augment = cfg.augment.unwrap_or(enc.default_augment());
    if augment && storage == StorageMode::Embedding {
        return Err(invalid(
            "augmentation needs stored frames; embedding storage cannot be augmented",
        ));
    }

    let r = cfg.resolution;
    if !SUPPORTED_RESOLUTIONS.contains(&r) {
        return Err(Error::UnsupportedResolution {
            encoder: enc.as_str(),
            resolution: r,
            reason: format!("supported sides are {SUPPORTED_RESOLUTIONS:?}"),
        });
    }
    match enc {
        EncoderKind::ScratchCnn => {
            if scratch_cnn_spatial(r).is_none() {
                return Err(Error::UnsupportedResolution {
                    encoder: enc.as_str(),
                    resolution: r,
                    reason: "too small for four convolutions".to_string(),
                });
            }
        }
        EncoderKind::ResnetPieg => {
            if !r.is_multiple_of(8) || r < 112 {
                return Err(Error::UnsupportedResolution {
                    encoder: enc.as_str(),
                    resolution: r,
                    reason: "the truncated ResNet runs at 112 or 224".to_string(),
                });
            }
        }
        EncoderKind::VitCls | EncoderKind::VitReg => {
            if cfg.patch_size == 0 || !r.is_multiple_of(cfg.patch_size) {
                return Err(Error::UnsupportedResolution {
                    encoder: enc.as_str(),
                    resolution: r,
                    reason: format!("not a multiple of patch size {}", cfg.patch_size),
                });
            }
        }
    }
    if enc == EncoderKind::VitReg && cfg.registers == 0 {
        return Err(invalid("vit_reg needs at least one register token"));
    }

    let positive = [
        ("replay.capacity", cfg.buffer_capacity),
        ("agent.batch_size", cfg.batch_size),
        ("agent.n_step", cfg.n_step),
        ("agent.feature_dim", cfg.feature_dim),
        ("agent.hidden_dim", cfg.hidden_dim),
        ("agent.frame_stack", cfg.frame_stack),
        ("encoder.projection_width", cfg.projection_width),
        ("eval.episodes", cfg.eval_episodes),
        ("env.episode_length", cfg.episode_length),
        ("env.action_dim", cfg.action_dim),
        ("experiment.num_seeds", cfg.num_seeds),
    ];
    if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
        return Err(invalid(format!("{k} must be positive")));
    }
    if cfg.update_every == 0 || cfg.eval_every == 0 || cfg.perturb_period == 0 {
        return Err(invalid(
            "cadences (update_every, eval.every, perturb.period) must be positive",
        ));
    }
    if !(cfg.discount > 0.0 && cfg.discount <= 1.0) {
        return Err(invalid(format!("discount {} outside (0, 1]", cfg.discount)));
    }
    if !(cfg.dormancy_threshold > 0.0 && cfg.dormancy_threshold < 1.0) {
        return Err(invalid(format!(
            "dormancy threshold {} outside (0, 1)",
            cfg.dormancy_threshold
        )));
    }
    let (amin, amax) = (cfg.perturb_alpha_min, cfg.perturb_alpha_max);
    if !(amin > 0.0 && amin <= amax && amax <= 1.0) {
        return Err(invalid(format!(
            "perturbation bounds need 0 < alpha_min <= alpha_max <= 1, got ({amin}, {amax})"
        )));
    }
    let s = cfg.explore_schedule;
    if !(s.start >= s.end && s.end >= 0.0) {
        return Err(invalid(format!(
            "exploration schedule needs start >= end >= 0, got ({}, {})",
            s.start, s.end
        )));
    }
    if !(0.0..=1.0).contains(&cfg.polyak) {
        return Err(invalid(format!("polyak rate {} outside [0, 1]", cfg.polyak)));
    }
    if cfg.lr < 0.0 || cfg.target_noise_clip < 0.0 || cfg.success_radius <= 0.0 {
        return Err(invalid(
            "learning rate, noise clip and success radius must be non-negative",
        ));
    }
    if !(0.0..=1.0).contains(&cfg.exploit_mix) {
        return Err(invalid("agent.exploit_mix outside [0, 1]"));
    }
    if cfg.exploit_mix > 0.0 && !cfg.value_head {
        return Err(invalid("agent.exploit_mix > 0 needs agent.value_head = true"));
    }
    if !(cfg.expectile > 0.0 && cfg.expectile < 1.0) {
        return Err(invalid("agent.expectile outside (0, 1)"));
    }
    if 2 * cfg.augment_pad >= r {
        return Err(invalid(format!(
            "augment.pad {} too large for {r}px",
            cfg.augment_pad
        )));
    }
    if cfg.env_name.is_empty() {
        return Err(invalid("env.name is empty"));
    }

    let obs_spec = match storage {
        StorageMode::Image => ObservationSpec::image(r),
        StorageMode::Embedding => {
            let tokens = if enc == EncoderKind::VitReg {
                1 + cfg.registers
            } else {
                1
            };
            ObservationSpec::embedding(TOKEN_DIM * tokens)
        }
    };

    let mut resolved = cfg.clone();
    resolved.storage = Some(storage);
    resolved.augment = Some(augment);
    Ok(ValidatedConfig {
        cfg: resolved,
        obs_spec,
    })
}

/// A configuration whose invariants hold and whose optional fields are
/// resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    cfg: ExperimentConfig,
    obs_spec: ObservationSpec,
}

impl ValidatedConfig {
    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn into_config(self) -> ExperimentConfig {
        self.cfg
    }

    pub fn obs_spec(&self) -> &ObservationSpec {
        &self.obs_spec
    }

    pub fn storage(&self) -> StorageMode {
        self.cfg.storage.expect("resolved by validation")
    }

    pub fn augment(&self) -> bool {
        self.cfg.augment.expect("resolved by validation")
    }

    pub fn bytes_per_observation(&self) -> u64 {
        self.obs_spec.bytes_per_observation()
    }

    /// Number of 768-wide tokens stored per observation in embedding mode.
    pub fn token_count(&self) -> usize {
        match self.cfg.encoder {
            EncoderKind::VitReg => 1 + self.cfg.registers,
            EncoderKind::VitCls => 1,
            _ => 0,
        }
    }

    /// Re-validates after changing fields, e.g. for per-seed copies.
    pub fn with<F: FnOnce(&mut ExperimentConfig)>(&self, f: F) -> Result<ValidatedConfig> {
        let mut c = self.cfg.clone();
        f(&mut c);
        c.validate()
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = ExperimentConfig;

    fn deref(&self) -> &ExperimentConfig {
        &self.cfg
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::spec::ObsKind;

    fn cfg(encoder: EncoderKind, resolution: usize) -> ExperimentConfig {
        ExperimentConfig {
            encoder,
            resolution,
            ..Default::default()
        }
    }

    #[test]
    fn vit_cls_at_224_stores_768_floats() {
        let mut c = cfg(EncoderKind::VitCls, 224);
        c.storage = Some(StorageMode::Embedding);
        let v = c.validate().unwrap();
        assert_eq!(v.obs_spec().kind(), ObsKind::Embedding);
        assert_eq!(v.obs_spec().shape(), &[768]);
        assert_eq!(v.bytes_per_observation(), 3072);
    }

    #[test]
    fn scratch_cnn_rejects_embedding_storage() {
        let mut c = cfg(EncoderKind::ScratchCnn, 112);
        c.storage = Some(StorageMode::Embedding);
        assert!(matches!(c.validate(), Err(Error::IncompatibleStorage { .. })));
        let mut c = cfg(EncoderKind::VitReg, 112);
        c.storage = Some(StorageMode::Image);
        assert!(matches!(c.validate(), Err(Error::IncompatibleStorage { .. })));
    }

    #[test]
    fn augment_defaults_follow_encoder() {
        assert!(!cfg(EncoderKind::VitCls, 112).validate().unwrap().augment());
        assert!(!cfg(EncoderKind::VitReg, 224).validate().unwrap().augment());
        assert!(cfg(EncoderKind::ScratchCnn, 84).validate().unwrap().augment());
        assert!(cfg(EncoderKind::ResnetPieg, 112).validate().unwrap().augment());
        let mut c = cfg(EncoderKind::VitCls, 112);
        c.augment = Some(true);
        assert!(c.validate().is_err());
    }

    #[test]
    fn register_variant_stores_concatenated_tokens() {
        let v = cfg(EncoderKind::VitReg, 224).validate().unwrap();
        assert_eq!(v.obs_spec().shape(), &[3840]);
        assert_eq!(v.token_count(), 5);
    }

    #[test]
    fn unsupported_resolutions() {
        assert!(cfg(EncoderKind::ScratchCnn, 100).validate().is_err());
        assert!(cfg(EncoderKind::ResnetPieg, 84).validate().is_err());
        let mut c = cfg(EncoderKind::VitCls, 84);
        c.patch_size = 16;
        assert!(matches!(c.validate(), Err(Error::UnsupportedResolution { .. })));
    }

    #[test]
    fn non_positive_sizes_rejected() {
        let mut c = cfg(EncoderKind::ScratchCnn, 84);
        c.buffer_capacity = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(EncoderKind::ScratchCnn, 84);
        c.batch_size = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(EncoderKind::ScratchCnn, 84);
        c.discount = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg(EncoderKind::ScratchCnn, 84);
        c.perturb_alpha_min = 0.95;
        assert!(c.validate().is_err());
    }

    #[test]
    fn scratch_spatial_sizes() {
        assert_eq!(scratch_cnn_spatial(84), Some(35));
        assert_eq!(scratch_cnn_spatial(112), Some(49));
        assert_eq!(scratch_cnn_spatial(224), Some(105));
        assert_eq!(scratch_cnn_spatial(8), None);
    }

    #[test]
    fn text_format_errors() {
        assert!(matches!(
            ExperimentConfig::from_text("agent.nope = 3"),
            Err(Error::UnknownKey(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_text("agent.n_step 3"),
            Err(Error::ConfigSyntax { line: 1, .. })
        ));
        assert!(ExperimentConfig::from_text("agent.n_step = 3\nagent.n_step = 4").is_err());
        assert!(matches!(
            ExperimentConfig::from_text("agent.n_step = three"),
            Err(Error::BadValue { .. })
        ));
        assert!(ExperimentConfig::from_text("agent.discount = NaN").is_err());
    }

    #[test]
    fn precedence_defaults_file_overrides() {
        let mut c =
            ExperimentConfig::from_text("# comment\nagent.n_step = 5\nexperiment.seed = 9\n").unwrap();
        assert_eq!(c.n_step, 5);
        assert_eq!(c.batch_size, 256);
        c.apply_overrides([("experiment.seed", "11")]).unwrap();
        assert_eq!(c.seed, 11);
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            prop::sample::select(EncoderKind::ALL.to_vec()),
            prop::sample::select(vec![84usize, 112, 224]),
            any::<u64>(),
            1usize..8,
            prop::option::of(any::<bool>()),
            0.01f64..1.0,
            prop::option::of(any::<u64>()),
        )
            .prop_map(|(encoder, resolution, seed, n_step, augment, discount, stub)| {
                ExperimentConfig {
                    encoder,
                    resolution,
                    seed,
                    n_step,
                    augment,
                    discount,
                    stub_seed: stub,
                    ..Default::default()
                }
            })
    }

    proptest! {
        #[test]
        fn validation_is_idempotent(c in arb_config()) {
            if let Ok(v) = c.validate() {
                let again = v.config().validate().unwrap();
                prop_assert_eq!(&again, &v);
                if let Some(r) = v.obs_spec().resolution() {
                    prop_assert_eq!(v.bytes_per_observation(), 3 * (r * r) as u64);
                }
            }
        }

        #[test]
        fn text_round_trip(c in arb_config()) {
            let parsed = ExperimentConfig::from_text(&c.to_text()).unwrap();
            prop_assert_eq!(parsed, c);
        }
    }
}

//! Observation encoders.
//!
//! Image-storage encoders ([`ScratchCnn`], [`PiegEncoder`]) run on sampled
//! batches inside the agent. Transformer backbones implement [`Backbone`]
//! and run once per environment step; the agent then sees their token
//! embeddings through [`Encoder::Identity`].

pub mod resnet;
pub mod scratch;
pub mod stub;
pub mod tokens;
pub mod vit;

use pvrl_core::config::EncoderKind;
use pvrl_core::ValidatedConfig;
use pvrl_nn::{Module, Param, ParamSource, Real};

pub use resnet::{PiegCache, PiegEncoder, ResNetTrunk};
pub use scratch::{ScratchCache, ScratchCnn};
pub use stub::StubBackbone;
pub use tokens::{concat_tokens, Backbone, TokenSet};
pub use vit::VitBackbone;

use crate::error::{AgentError, Result};
use crate::replay::ObsBatch;

/// Encoder feeding the actor and critic trunks.
#[derive(Debug, Clone)]
pub enum Encoder<T> {
    Scratch(ScratchCnn<T>),
    Pieg(Box<PiegEncoder<T>>),
    /// Precomputed embeddings pass through unchanged.
    Identity {
        dim: usize,
    },
}

#[derive(Debug, Clone)]
pub enum EncoderCache<T> {
    Scratch(ScratchCache<T>),
    Pieg(PiegCache<T>),
    Identity,
}

impl<T: Real> Encoder<T> {
    /// Builds the encoder for `cfg`; `backbone` supplies frozen weights.
    pub fn build(
        cfg: &ValidatedConfig,
        src: &mut dyn ParamSource<T>,
        backbone: &mut dyn ParamSource<T>,
    ) -> Result<Self> {
        let frames = cfg.frame_stack;
        Ok(match cfg.encoder {
            EncoderKind::ScratchCnn => {
                Encoder::Scratch(ScratchCnn::new(src, "encoder", 3 * frames, cfg.resolution)?)
            }
            EncoderKind::ResnetPieg => Encoder::Pieg(Box::new(PiegEncoder::new(
                src,
                backbone,
                "encoder",
                cfg.resolution,
                frames,
                cfg.projection_width,
            )?)),
            EncoderKind::VitCls | EncoderKind::VitReg => Encoder::Identity {
                dim: cfg.obs_spec().numel() * frames,
            },
        })
    }

    pub fn repr_dim(&self) -> usize {
        match self {
            Encoder::Scratch(e) => e.out_dim(),
            Encoder::Pieg(e) => e.out_dim(),
            Encoder::Identity { dim } => *dim,
        }
    }

    pub fn has_trainable(&self) -> bool {
        !matches!(self, Encoder::Identity { .. })
    }

    /// Encodes a batch of stored observations.
    pub fn forward(&self, obs: &ObsBatch) -> Result<(Vec<T>, EncoderCache<T>)> {
        let n = obs.len();
        match (self, obs) {
            (Encoder::Scratch(e), ObsBatch::Images { data, per_item }) => {
                let r = e.resolution();
                if *per_item != e.in_channels() * r * r {
                    return Err(AgentError::SpecMismatch(format!(
                        "image items of {per_item} bytes, encoder expects {}",
                        e.in_channels() * r * r
                    )));
                }
                let half = T::lit(0.5);
                let inv = T::lit(1.0 / 255.0);
                let x: Vec<T> = data.iter().map(|&p| T::lit(p as f64) * inv - half).collect();
                let (h, cache) = e.forward(x, n);
                Ok((h, EncoderCache::Scratch(cache)))
            }
            (Encoder::Pieg(e), ObsBatch::Images { data, per_item }) => {
                if *per_item != e.in_len() {
                    return Err(AgentError::SpecMismatch(format!(
                        "image items of {per_item} bytes, encoder expects {}",
                        e.in_len()
                    )));
                }
                let (h, cache) = e.forward(data, n);
                Ok((h, EncoderCache::Pieg(cache)))
            }
            (Encoder::Identity { dim }, ObsBatch::Embeddings { data, per_item }) => {
                if per_item != dim {
                    return Err(AgentError::SpecMismatch(format!(
                        "embedding of {per_item} values, encoder expects {dim}"
                    )));
                }
                Ok((
                    data.iter().map(|&v| T::lit(v as f64)).collect(),
                    EncoderCache::Identity,
                ))
            }
            _ => Err(AgentError::SpecMismatch(
                "observation kind does not match encoder".into(),
            )),
        }
    }

    /// Accumulates gradients into trainable encoder parameters.
    pub fn backward(&mut self, cache: &EncoderCache<T>, dh: &[T], n: usize) {
        match (self, cache) {
            (Encoder::Scratch(e), EncoderCache::Scratch(c)) => e.backward(c, dh, n),
            (Encoder::Pieg(e), EncoderCache::Pieg(c)) => e.backward(c, dh, n),
            _ => {}
        }
    }
}

impl<T: Real> Module<T> for Encoder<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        match self {
            Encoder::Scratch(e) => e.visit(f),
            Encoder::Pieg(e) => e.visit(f),
            Encoder::Identity { .. } => {}
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        match self {
            Encoder::Scratch(e) => e.visit_mut(f),
            Encoder::Pieg(e) => e.visit_mut(f),
            Encoder::Identity { .. } => {}
        }
    }
}

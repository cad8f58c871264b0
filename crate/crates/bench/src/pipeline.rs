//! Turns rendered frames into stored observations and stacked agent input.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use pvrl_agent::encoders::{concat_tokens, Backbone, StubBackbone, VitBackbone};
use pvrl_agent::{ObsBatch, Observation};
use pvrl_core::archive::Archive;
use pvrl_core::{EncoderKind, ValidatedConfig};

use crate::error::{BenchError, Result};

/// One stored observation: raw frame or frozen-backbone embedding.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Image(Vec<u8>),
    Embedding(Vec<f32>),
}

impl Frame {
    pub fn as_observation(&self) -> Observation<'_> {
        match self {
            Frame::Image(v) => Observation::Image(v),
            Frame::Embedding(v) => Observation::Embedding(v),
        }
    }
}

/// Frame encoder plus the frame stack of the current episode. Clones share
/// the backbone.
#[derive(Clone)]
pub struct Pipeline {
    backbone: Option<Arc<dyn Backbone>>,
    include_registers: bool,
    resolution: usize,
    frame_stack: usize,
    frames: VecDeque<Frame>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("backbone", &self.backbone.as_ref().map(|b| b.digest()))
            .field("resolution", &self.resolution)
            .field("frame_stack", &self.frame_stack)
            .finish()
    }
}

/// The frozen backbone for a transformer config: weights from
/// `encoder.weights` when set, otherwise the seeded stub.
pub fn load_backbone(cfg: &ValidatedConfig) -> Result<Option<Arc<dyn Backbone>>> {
    if !cfg.encoder.is_vit() {
        return Ok(None);
    }
    let backbone: Arc<dyn Backbone> = match &cfg.weights {
        Some(path) => {
            let archive = Archive::load(Path::new(path))?;
            let vit = VitBackbone::from_archive(&archive, None)?;
            if cfg.encoder == EncoderKind::VitReg && vit.register_count() < cfg.registers {
                return Err(BenchError::Invalid(format!(
                    "{path}: {} register tokens, config wants {}",
                    vit.register_count(),
                    cfg.registers
                )));
            }
            Arc::new(vit)
        }
        None => {
            let registers = if cfg.encoder == EncoderKind::VitReg {
                cfg.registers
            } else {
                0
            };
            Arc::new(StubBackbone::new(
                cfg.stub_seed.unwrap_or(cfg.seed),
                cfg.resolution,
                cfg.patch_size,
                registers,
            )?)
        }
    };
    Ok(Some(backbone))
}

impl Pipeline {
    pub fn new(cfg: &ValidatedConfig) -> Result<Self> {
        Ok(Self::with_backbone(cfg, load_backbone(cfg)?))
    }

    pub fn with_backbone(cfg: &ValidatedConfig, backbone: Option<Arc<dyn Backbone>>) -> Self {
        Pipeline {
            backbone,
            include_registers: cfg.encoder == EncoderKind::VitReg,
            resolution: cfg.resolution,
            frame_stack: cfg.frame_stack,
            frames: VecDeque::with_capacity(cfg.frame_stack),
        }
    }

    pub fn backbone_digest(&self) -> Option<String> {
        self.backbone.as_ref().map(|b| b.digest())
    }

    /// Converts a rendered frame into its stored form.
    pub fn encode(&self, image: Vec<u8>) -> Result<Frame> {
        match &self.backbone {
            None => Ok(Frame::Image(image)),
            Some(b) => {
                let tokens = b.tokens(&image, self.resolution)?;
                Ok(Frame::Embedding(concat_tokens(&tokens, self.include_registers)?))
            }
        }
    }

    /// Starts an episode; the first frame fills the whole stack.
    pub fn reset(&mut self, first: Frame) {
        self.frames.clear();
        for _ in 0..self.frame_stack {
            self.frames.push_back(first.clone());
        }
    }

    pub fn push(&mut self, frame: Frame) {
        if self.frames.len() == self.frame_stack {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
    }

    pub fn latest(&self) -> Option<&Frame> {
        self.frames.back()
    }

    /// Oldest-first concatenation of the stacked frames as a batch of one.
    pub fn stacked(&self) -> ObsBatch {
        match self.frames.front() {
            Some(Frame::Embedding(_)) => {
                let data: Vec<f32> = self
                    .frames
                    .iter()
                    .flat_map(|f| match f {
                        Frame::Embedding(v) => v.clone(),
                        Frame::Image(_) => unreachable!("mixed frame kinds"),
                    })
                    .collect();
                ObsBatch::Embeddings {
                    per_item: data.len(),
                    data,
                }
            }
            _ => {
                let data: Vec<u8> = self
                    .frames
                    .iter()
                    .flat_map(|f| match f {
                        Frame::Image(v) => v.clone(),
                        Frame::Embedding(_) => unreachable!("mixed frame kinds"),
                    })
                    .collect();
                ObsBatch::Images {
                    per_item: data.len(),
                    data,
                }
            }
        }
    }
}

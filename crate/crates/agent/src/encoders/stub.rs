use pvrl_core::seed::mix64;
use pvrl_core::TOKEN_DIM;
use pvrl_nn::{ModuleExt, Param};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::tokens::{Backbone, TokenSet};
use crate::error::{AgentError, Result};

/// Deterministic stand-in for a pretrained transformer: per-patch channel
/// means mapped to 768 dimensions by a fixed, seeded, bias-free projection,
/// one projection per output token.
#[derive(Debug, Clone)]
pub struct StubBackbone {
    seed: u64,
    patch: usize,
    resolution: usize,
    registers: usize,
    /// One `TOKEN_DIM`×`3·patches` matrix per token, CLS first.
    weights: Vec<Param<f32>>,
}

impl StubBackbone {
    pub fn new(seed: u64, resolution: usize, patch: usize, registers: usize) -> Result<Self> {
        if patch == 0 || !resolution.is_multiple_of(patch) {
            return Err(AgentError::Invalid(format!(
                "resolution {resolution} is not a multiple of patch size {patch}"
            )));
        }
        let grid = resolution / patch;
        let in_dim = 3 * grid * grid;
        let std = (1.0 / in_dim as f64).sqrt();
        let weights = (0..=registers)
            .map(|t| {
                let mut rng = pvrl_core::seed::Rng::seed_from_u64(mix64(seed ^ mix64(t as u64 + 1)));
                let values: Vec<f32> = (0..TOKEN_DIM * in_dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (z * std) as f32
                    })
                    .collect();
                Param::new(&format!("stub.token{t}"), &[TOKEN_DIM, in_dim], values, false)
                    .expect("shape matches by construction")
            })
            .collect();
        Ok(StubBackbone {
            seed,
            patch,
            resolution,
            registers,
            weights,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn patch_means(&self, image: &[u8]) -> Vec<f32> {
        let (r, p) = (self.resolution, self.patch);
        let grid = r / p;
        let mut out = Vec::with_capacity(3 * grid * grid);
        let inv = 1.0 / (255.0 * (p * p) as f64);
        for c in 0..3 {
            let plane = &image[c * r * r..(c + 1) * r * r];
            for gy in 0..grid {
                for gx in 0..grid {
                    let mut sum = 0u64;
                    for y in gy * p..(gy + 1) * p {
                        sum += plane[y * r + gx * p..y * r + (gx + 1) * p]
                            .iter()
                            .map(|&v| v as u64)
                            .sum::<u64>();
                    }
                    out.push((sum as f64 * inv) as f32);
                }
            }
        }
        out
    }
}

impl Backbone for StubBackbone {
    fn tokens(&self, image: &[u8], resolution: usize) -> Result<TokenSet> {
        if resolution != self.resolution || image.len() != 3 * resolution * resolution {
            return Err(AgentError::SpecMismatch(format!(
                "stub built for 3×{0}×{0} images, got {1} bytes at side {resolution}",
                self.resolution,
                image.len()
            )));
        }
        let x = self.patch_means(image);
        let mut outs = self.weights.iter().map(|w| {
            w.value
                .chunks_exact(x.len())
                .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
                .collect::<Vec<f32>>()
        });
        let cls = outs.next().expect("CLS projection exists");
        Ok(TokenSet {
            cls,
            registers: outs.collect(),
        })
    }

    fn register_count(&self) -> usize {
        self.registers
    }

    fn digest(&self) -> String {
        self.weights.digest()
    }
}

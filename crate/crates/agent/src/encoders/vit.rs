use pvrl_core::archive::Archive;
use pvrl_nn::conv::ConvShape;
use pvrl_nn::{ops, ArchiveSource, Conv2d, LayerNorm, Linear, Module, ModuleExt, Param, ParamSource};

use super::resnet::{IMAGENET_MEAN, IMAGENET_STD};
use super::tokens::{Backbone, TokenSet};
use crate::error::{AgentError, Result};

const LN_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Block {
    norm1: LayerNorm<f32>,
    qkv: Linear<f32>,
    proj: Linear<f32>,
    ls1: Option<Param<f32>>,
    norm2: LayerNorm<f32>,
    fc1: Linear<f32>,
    fc2: Linear<f32>,
    ls2: Option<Param<f32>>,
}

impl Module<f32> for Block {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<f32>)) {
        self.norm1.visit(f);
        self.qkv.visit(f);
        self.proj.visit(f);
        self.ls1.visit(f);
        self.norm2.visit(f);
        self.fc1.visit(f);
        self.fc2.visit(f);
        self.ls2.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<f32>)) {
        self.norm1.visit_mut(f);
        self.qkv.visit_mut(f);
        self.proj.visit_mut(f);
        self.ls1.visit_mut(f);
        self.norm2.visit_mut(f);
        self.fc1.visit_mut(f);
        self.fc2.visit_mut(f);
        self.ls2.visit_mut(f);
    }
}

/// Frozen vision transformer loaded from a weights archive that uses the
/// common self-supervised checkpoint naming: `cls_token`, optional
/// `register_tokens`, `pos_embed`, `patch_embed.proj`, `blocks.{i}.…`
/// and a final `norm`. Depth, width, patch size and register count are
/// read from tensor shapes; heads default to width / 64.
#[derive(Debug, Clone)]
pub struct VitBackbone {
    patch_embed: Conv2d<f32>,
    cls: Param<f32>,
    registers: Option<Param<f32>>,
    pos_embed: Param<f32>,
    blocks: Vec<Block>,
    norm: LayerNorm<f32>,
    dim: usize,
    heads: usize,
    patch: usize,
    pos_grid: usize,
}

fn shape_of(archive: &Archive, name: &str) -> Result<Vec<usize>> {
    archive
        .manifest()
        .get(name)
        .map(|e| e.shape.clone())
        .ok_or_else(|| AgentError::Invalid(format!("weights archive lacks `{name}`")))
}

fn squeeze(shape: &[usize]) -> Vec<usize> {
    shape.iter().copied().filter(|&d| d != 1).collect()
}

impl VitBackbone {
    pub fn from_archive(archive: &Archive, heads: Option<usize>) -> Result<Self> {
        let pw = shape_of(archive, "patch_embed.proj.weight")?;
        if pw.len() != 4 || pw[1] != 3 || pw[2] != pw[3] {
            return Err(AgentError::Invalid(format!(
                "patch_embed.proj.weight has shape {pw:?}"
            )));
        }
        let (dim, patch) = (pw[0], pw[2]);
        let heads = heads.unwrap_or((dim / 64).max(1));
        if dim % heads != 0 {
            return Err(AgentError::Invalid(format!(
                "width {dim} not divisible by {heads} heads"
            )));
        }
        let pos = squeeze(&shape_of(archive, "pos_embed")?);
        let n_pos = if pos.len() == 2 && pos[1] == dim {
            pos[0]
        } else {
            0
        };
        let pos_grid = ((n_pos.saturating_sub(1)) as f64).sqrt().round() as usize;
        if n_pos < 2 || pos_grid * pos_grid + 1 != n_pos {
            return Err(AgentError::Invalid(format!(
                "pos_embed shape {pos:?} is not 1 + g² tokens"
            )));
        }
        let n_reg = match archive.manifest().get("register_tokens") {
            Some(e) => {
                let s = squeeze(&e.shape);
                match s.as_slice() {
                    [d] if *d == dim => 1,
                    [r, d] if *d == dim => *r,
                    _ => {
                        return Err(AgentError::Invalid(format!(
                            "register_tokens shape {:?}",
                            e.shape
                        )))
                    }
                }
            }
            None => 0,
        };
        let depth = (0..)
            .take_while(|i| {
                archive
                    .manifest()
                    .get(&format!("blocks.{i}.norm1.weight"))
                    .is_some()
            })
            .count();
        if depth == 0 {
            return Err(AgentError::Invalid(
                "weights archive has no transformer blocks".into(),
            ));
        }
        let hidden = shape_of(archive, "blocks.0.mlp.fc1.weight")?[0];
        let layer_scale = archive.manifest().get("blocks.0.ls1.gamma").is_some();

        let src: &mut dyn ParamSource<f32> = &mut ArchiveSource::new(archive);
        let shape = ConvShape {
            in_ch: 3,
            out_ch: dim,
            kernel: patch,
            stride: patch,
            pad: 0,
        };
        let patch_embed = Conv2d::new(src, "patch_embed.proj", shape, true, 1.0, false)?;
        let cls = src.param("cls_token", &[dim], pvrl_nn::Init::Zeros, false)?;
        let registers = if n_reg > 0 {
            Some(src.param("register_tokens", &[n_reg, dim], pvrl_nn::Init::Zeros, false)?)
        } else {
            None
        };
        let pos_embed = src.param("pos_embed", &[n_pos, dim], pvrl_nn::Init::Zeros, false)?;
        let mut blocks = Vec::with_capacity(depth);
        for i in 0..depth {
            let p = format!("blocks.{i}");
            let ls = |src: &mut dyn ParamSource<f32>, n: &str| -> Result<Option<Param<f32>>> {
                if layer_scale {
                    Ok(Some(src.param(
                        &format!("{p}.{n}.gamma"),
                        &[dim],
                        pvrl_nn::Init::Ones,
                        false,
                    )?))
                } else {
                    Ok(None)
                }
            };
            blocks.push(Block {
                norm1: LayerNorm::new(src, &format!("{p}.norm1"), dim, LN_EPS, false)?,
                qkv: Linear::new(src, &format!("{p}.attn.qkv"), dim, 3 * dim, 1.0, false)?,
                proj: Linear::new(src, &format!("{p}.attn.proj"), dim, dim, 1.0, false)?,
                ls1: ls(src, "ls1")?,
                norm2: LayerNorm::new(src, &format!("{p}.norm2"), dim, LN_EPS, false)?,
                fc1: Linear::new(src, &format!("{p}.mlp.fc1"), dim, hidden, 1.0, false)?,
                fc2: Linear::new(src, &format!("{p}.mlp.fc2"), hidden, dim, 1.0, false)?,
                ls2: ls(src, "ls2")?,
            });
        }
        let norm = LayerNorm::new(src, "norm", dim, LN_EPS, false)?;
        Ok(VitBackbone {
            patch_embed,
            cls,
            registers,
            pos_embed,
            blocks,
            norm,
            dim,
            heads,
            patch,
            pos_grid,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn patch_size(&self) -> usize {
        self.patch
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    /// Patch position embeddings resampled bilinearly (half-pixel centers)
    /// from the stored grid to `grid`×`grid`.
    fn patch_positions(&self, grid: usize) -> Vec<f32> {
        let d = self.dim;
        let g0 = self.pos_grid;
        let table = &self.pos_embed.value[d..];
        if grid == g0 {
            return table.to_vec();
        }
        let scale = g0 as f64 / grid as f64;
        let coord = |i: usize| -> (usize, usize, f32) {
            let c = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (g0 - 1) as f64);
            let lo = c.floor() as usize;
            let hi = (lo + 1).min(g0 - 1);
            (lo, hi, (c - lo as f64) as f32)
        };
        let mut out = vec![0.0f32; grid * grid * d];
        for y in 0..grid {
            let (y0, y1, fy) = coord(y);
            for x in 0..grid {
                let (x0, x1, fx) = coord(x);
                let dst = &mut out[(y * grid + x) * d..(y * grid + x + 1) * d];
                for (yy, wy) in [(y0, 1.0 - fy), (y1, fy)] {
                    for (xx, wx) in [(x0, 1.0 - fx), (x1, fx)] {
                        let w = wy * wx;
                        if w == 0.0 {
                            continue;
                        }
                        let src = &table[(yy * g0 + xx) * d..(yy * g0 + xx + 1) * d];
                        for (o, s) in dst.iter_mut().zip(src) {
                            *o += w * s;
                        }
                    }
                }
            }
        }
        out
    }

    fn attention(&self, b: &Block, x: &[f32], n: usize) -> Vec<f32> {
        let d = self.dim;
        let hd = d / self.heads;
        let qkv = b.qkv.forward(x, n);
        let scale = 1.0 / (hd as f32).sqrt();
        let mut out = vec![0.0f32; n * d];
        let mut q = vec![0.0f32; n * hd];
        let mut k = vec![0.0f32; n * hd];
        let mut v = vec![0.0f32; n * hd];
        let mut scores = vec![0.0f32; n * n];
        let mut o = vec![0.0f32; n * hd];
        for h in 0..self.heads {
            for t in 0..n {
                let row = &qkv[t * 3 * d..(t + 1) * 3 * d];
                q[t * hd..(t + 1) * hd].copy_from_slice(&row[h * hd..(h + 1) * hd]);
                k[t * hd..(t + 1) * hd].copy_from_slice(&row[d + h * hd..d + (h + 1) * hd]);
                v[t * hd..(t + 1) * hd].copy_from_slice(&row[2 * d + h * hd..2 * d + (h + 1) * hd]);
            }
            pvrl_nn::gemm(false, true, n, n, hd, scale, &q, &k, 0.0, &mut scores);
            ops::softmax_rows(&mut scores, n);
            pvrl_nn::gemm(false, false, n, hd, n, 1.0, &scores, &v, 0.0, &mut o);
            for t in 0..n {
                out[t * d + h * hd..t * d + (h + 1) * hd].copy_from_slice(&o[t * hd..(t + 1) * hd]);
            }
        }
        b.proj.forward(&out, n)
    }

    fn residual(x: &mut [f32], delta: &[f32], gamma: Option<&Param<f32>>, d: usize) {
        match gamma {
            Some(g) => {
                for (row, drow) in x.chunks_exact_mut(d).zip(delta.chunks_exact(d)) {
                    for ((v, dv), gv) in row.iter_mut().zip(drow).zip(&g.value) {
                        *v += dv * gv;
                    }
                }
            }
            None => x.iter_mut().zip(delta).for_each(|(v, dv)| *v += dv),
        }
    }
}

impl Backbone for VitBackbone {
    fn tokens(&self, image: &[u8], resolution: usize) -> Result<TokenSet> {
        if !resolution.is_multiple_of(self.patch) {
            return Err(AgentError::Invalid(format!(
                "resolution {resolution} is not divisible by patch size {}",
                self.patch
            )));
        }
        if image.len() != 3 * resolution * resolution {
            return Err(AgentError::SpecMismatch(format!(
                "expected 3×{resolution}×{resolution} bytes, got {}",
                image.len()
            )));
        }
        let d = self.dim;
        let plane = resolution * resolution;
        let x: Vec<f32> = (0..3)
            .flat_map(|c| {
                image[c * plane..(c + 1) * plane]
                    .iter()
                    .map(move |&p| ((p as f64 / 255.0 - IMAGENET_MEAN[c]) / IMAGENET_STD[c]) as f32)
            })
            .collect();
        let (feat, g, _) = self.patch_embed.forward(&x, 1, resolution, resolution);
        let n_patch = g * g;
        let n_reg = self.registers.as_ref().map_or(0, |r| r.shape()[0]);
        let n = 1 + n_reg + n_patch;
        let pos = self.patch_positions(g);
        let mut tokens = vec![0.0f32; n * d];
        for (i, t) in tokens[..d].iter_mut().enumerate() {
            *t = self.cls.value[i] + self.pos_embed.value[i];
        }
        if let Some(r) = &self.registers {
            tokens[d..(1 + n_reg) * d].copy_from_slice(&r.value);
        }
        // Patch features arrive channel-major; transpose to token rows.
        for p in 0..n_patch {
            let row = &mut tokens[(1 + n_reg + p) * d..(2 + n_reg + p) * d];
            for (c, v) in row.iter_mut().enumerate() {
                *v = feat[c * n_patch + p] + pos[p * d + c];
            }
        }
        for b in &self.blocks {
            let (h, _) = b.norm1.forward(&tokens);
            let a = self.attention(b, &h, n);
            Self::residual(&mut tokens, &a, b.ls1.as_ref(), d);
            let (h, _) = b.norm2.forward(&tokens);
            let mut m = b.fc1.forward(&h, n);
            ops::gelu(&mut m);
            let m = b.fc2.forward(&m, n);
            Self::residual(&mut tokens, &m, b.ls2.as_ref(), d);
        }
        let head = &tokens[..(1 + n_reg) * d];
        let (out, _) = self.norm.forward(head);
        Ok(TokenSet {
            cls: out[..d].to_vec(),
            registers: out[d..].chunks_exact(d).map(|c| c.to_vec()).collect(),
        })
    }

    fn register_count(&self) -> usize {
        self.registers.as_ref().map_or(0, |r| r.shape()[0])
    }

    fn digest(&self) -> String {
        ModuleExt::digest(self)
    }
}

impl Module<f32> for VitBackbone {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<f32>)) {
        self.patch_embed.visit(f);
        f(&self.cls);
        self.registers.visit(f);
        f(&self.pos_embed);
        self.blocks.visit(f);
        self.norm.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<f32>)) {
        self.patch_embed.visit_mut(f);
        f(&mut self.cls);
        self.registers.visit_mut(f);
        f(&mut self.pos_embed);
        self.blocks.visit_mut(f);
        self.norm.visit_mut(f);
    }
}

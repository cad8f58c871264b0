use pvrl_nn::conv::ConvShape;
use pvrl_nn::init::RELU_GAIN;
use pvrl_nn::{ops, Conv2d, Init, Linear, Module, Param, ParamSource, Real};

use crate::error::{AgentError, Result};

pub const IMAGENET_MEAN: [f64; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STD: [f64; 3] = [0.229, 0.224, 0.225];
pub const TRUNK_CHANNELS: usize = 128;

/// Batch norm in inference mode; never trained.
#[derive(Debug, Clone)]
struct FrozenBn<T> {
    weight: Param<T>,
    bias: Param<T>,
    mean: Param<T>,
    var: Param<T>,
}

impl<T: Real> FrozenBn<T> {
    fn new(src: &mut dyn ParamSource<T>, prefix: &str, ch: usize) -> Result<Self> {
        Ok(FrozenBn {
            weight: src.param(&format!("{prefix}.weight"), &[ch], Init::Ones, false)?,
            bias: src.param(&format!("{prefix}.bias"), &[ch], Init::Zeros, false)?,
            mean: src.param(&format!("{prefix}.running_mean"), &[ch], Init::Zeros, false)?,
            var: src.param(&format!("{prefix}.running_var"), &[ch], Init::Ones, false)?,
        })
    }

    fn apply(&self, x: &mut [T], plane: usize) {
        let eps = T::lit(1e-5);
        let scale: Vec<T> = (0..self.weight.value.len())
            .map(|c| self.weight.value[c] / (self.var.value[c] + eps).sqrt())
            .collect();
        let shift: Vec<T> = (0..scale.len())
            .map(|c| self.bias.value[c] - self.mean.value[c] * scale[c])
            .collect();
        ops::channel_affine(x, scale.len(), plane, &scale, &shift);
    }
}

impl<T: Real> Module<T> for FrozenBn<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        f(&self.weight);
        f(&self.bias);
        f(&self.mean);
        f(&self.var);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        f(&mut self.weight);
        f(&mut self.bias);
        f(&mut self.mean);
        f(&mut self.var);
    }
}

fn conv<T: Real>(
    src: &mut dyn ParamSource<T>,
    name: &str,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
) -> Result<Conv2d<T>> {
    let shape = ConvShape {
        in_ch,
        out_ch,
        kernel,
        stride,
        pad: kernel / 2,
    };
    Ok(Conv2d::new(src, name, shape, false, RELU_GAIN, false)?)
}

#[derive(Debug, Clone)]
struct BasicBlock<T> {
    conv1: Conv2d<T>,
    bn1: FrozenBn<T>,
    conv2: Conv2d<T>,
    bn2: FrozenBn<T>,
    downsample: Option<(Conv2d<T>, FrozenBn<T>)>,
    stride: usize,
}

impl<T: Real> BasicBlock<T> {
    fn new(
        src: &mut dyn ParamSource<T>,
        prefix: &str,
        in_ch: usize,
        out_ch: usize,
        stride: usize,
    ) -> Result<Self> {
        let downsample = if stride != 1 || in_ch != out_ch {
            Some((
                conv(src, &format!("{prefix}.downsample.0"), in_ch, out_ch, 1, stride)?,
                FrozenBn::new(src, &format!("{prefix}.downsample.1"), out_ch)?,
            ))
        } else {
            None
        };
        Ok(BasicBlock {
            conv1: conv(src, &format!("{prefix}.conv1"), in_ch, out_ch, 3, stride)?,
            bn1: FrozenBn::new(src, &format!("{prefix}.bn1"), out_ch)?,
            conv2: conv(src, &format!("{prefix}.conv2"), out_ch, out_ch, 3, 1)?,
            bn2: FrozenBn::new(src, &format!("{prefix}.bn2"), out_ch)?,
            downsample,
            stride,
        })
    }

    fn forward(&self, x: &[T], n: usize, side: usize) -> (Vec<T>, usize) {
        let (mut h, s, _) = self.conv1.forward(x, n, side, side);
        self.bn1.apply(&mut h, s * s);
        ops::relu(&mut h);
        let (mut h, s, _) = self.conv2.forward(&h, n, s, s);
        self.bn2.apply(&mut h, s * s);
        let identity = match &self.downsample {
            Some((c, bn)) => {
                let (mut d, _, _) = c.forward(x, n, side, side);
                bn.apply(&mut d, s * s);
                d
            }
            None => x.to_vec(),
        };
        debug_assert!(self.stride == 1 || s == side.div_ceil(self.stride));
        for (v, i) in h.iter_mut().zip(&identity) {
            *v += *i;
        }
        ops::relu(&mut h);
        (h, s)
    }
}

impl<T: Real> Module<T> for BasicBlock<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        if let Some((c, bn)) = &self.downsample {
            c.visit(f);
            bn.visit(f);
        }
        self.conv1.visit(f);
        self.bn1.visit(f);
        self.conv2.visit(f);
        self.bn2.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        if let Some((c, bn)) = &mut self.downsample {
            c.visit_mut(f);
            bn.visit_mut(f);
        }
        self.conv1.visit_mut(f);
        self.bn1.visit_mut(f);
        self.conv2.visit_mut(f);
        self.bn2.visit_mut(f);
    }
}

/// ResNet-18 stem plus its first two residual stages, frozen. Parameter
/// names follow the common checkpoint layout (`conv1`, `bn1`, `layer1.0.…`).
#[derive(Debug, Clone)]
pub struct ResNetTrunk<T> {
    conv1: Conv2d<T>,
    bn1: FrozenBn<T>,
    blocks: Vec<BasicBlock<T>>,
}

impl<T: Real> ResNetTrunk<T> {
    pub fn new(src: &mut dyn ParamSource<T>) -> Result<Self> {
        Ok(ResNetTrunk {
            conv1: conv(src, "conv1", 3, 64, 7, 2)?,
            bn1: FrozenBn::new(src, "bn1", 64)?,
            blocks: vec![
                BasicBlock::new(src, "layer1.0", 64, 64, 1)?,
                BasicBlock::new(src, "layer1.1", 64, 64, 1)?,
                BasicBlock::new(src, "layer2.0", 64, 128, 2)?,
                BasicBlock::new(src, "layer2.1", 128, 128, 1)?,
            ],
        })
    }

    /// Flattened output length for a square input.
    pub fn out_dim(resolution: usize) -> Result<usize> {
        if !resolution.is_multiple_of(8) || resolution < 16 {
            return Err(AgentError::Invalid(format!(
                "resolution {resolution} is not a multiple of 8"
            )));
        }
        let s = resolution / 8;
        Ok(TRUNK_CHANNELS * s * s)
    }

    /// `x`: `n` ImageNet-normalized RGB images.
    pub fn forward(&self, x: &[T], n: usize, resolution: usize) -> Vec<T> {
        let (mut h, s, _) = self.conv1.forward(x, n, resolution, resolution);
        self.bn1.apply(&mut h, s * s);
        ops::relu(&mut h);
        let (mut h, mut s, _) = ops::max_pool2d(&h, n * 64, s, s, 3, 2, 1);
        for b in &self.blocks {
            let (next, ns) = b.forward(&h, n, s);
            h = next;
            s = ns;
        }
        h
    }
}

impl<T: Real> Module<T> for ResNetTrunk<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.conv1.visit(f);
        self.bn1.visit(f);
        self.blocks.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.conv1.visit_mut(f);
        self.bn1.visit_mut(f);
        self.blocks.visit_mut(f);
    }
}

/// Frozen ResNet trunk followed by a trainable linear projection, applied
/// to each stacked frame with shared weights.
#[derive(Debug, Clone)]
pub struct PiegEncoder<T> {
    pub trunk: ResNetTrunk<T>,
    pub projection: Linear<T>,
    resolution: usize,
    frames: usize,
}

#[derive(Debug, Clone)]
pub struct PiegCache<T> {
    features: Vec<Vec<T>>,
}

impl<T: Real> PiegEncoder<T> {
    pub fn new(
        src: &mut dyn ParamSource<T>,
        backbone: &mut dyn ParamSource<T>,
        prefix: &str,
        resolution: usize,
        frames: usize,
        width: usize,
    ) -> Result<Self> {
        let in_dim = ResNetTrunk::<T>::out_dim(resolution)?;
        Ok(PiegEncoder {
            trunk: ResNetTrunk::new(backbone)?,
            projection: Linear::new(src, &format!("{prefix}.projection"), in_dim, width, 1.0, true)?,
            resolution,
            frames,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.projection.out_dim() * self.frames
    }

    /// Bytes per stacked input observation.
    pub fn in_len(&self) -> usize {
        3 * self.frames * self.resolution * self.resolution
    }

    /// Normalizes raw bytes and runs the frozen trunk per frame.
    pub fn features(&self, images: &[u8], n: usize) -> Vec<Vec<T>> {
        let r = self.resolution;
        let plane = r * r;
        let per_frame = 3 * plane;
        (0..self.frames)
            .map(|f| {
                let mut x = Vec::with_capacity(n * per_frame);
                for i in 0..n {
                    let base = i * self.frames * per_frame + f * per_frame;
                    for c in 0..3 {
                        let (m, s) = (IMAGENET_MEAN[c], IMAGENET_STD[c]);
                        x.extend(
                            images[base + c * plane..base + (c + 1) * plane]
                                .iter()
                                .map(|&p| T::lit((p as f64 / 255.0 - m) / s)),
                        );
                    }
                }
                self.trunk.forward(&x, n, r)
            })
            .collect()
    }

    pub fn forward(&self, images: &[u8], n: usize) -> (Vec<T>, PiegCache<T>) {
        let features = self.features(images, n);
        let w = self.projection.out_dim();
        let mut out = vec![T::zero(); n * w * self.frames];
        for (f, feat) in features.iter().enumerate() {
            let p = self.projection.forward(feat, n);
            for i in 0..n {
                let dst = (i * self.frames + f) * w;
                out[dst..dst + w].copy_from_slice(&p[i * w..(i + 1) * w]);
            }
        }
        (out, PiegCache { features })
    }

    pub fn backward(&mut self, cache: &PiegCache<T>, dout: &[T], n: usize) {
        let w = self.projection.out_dim();
        for (f, feat) in cache.features.iter().enumerate() {
            let mut d = Vec::with_capacity(n * w);
            for i in 0..n {
                let src = (i * self.frames + f) * w;
                d.extend_from_slice(&dout[src..src + w]);
            }
            self.projection.backward(feat, &d, n, true, false);
        }
    }
}

impl<T: Real> Module<T> for PiegEncoder<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.trunk.visit(f);
        self.projection.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.trunk.visit_mut(f);
        self.projection.visit_mut(f);
    }
}

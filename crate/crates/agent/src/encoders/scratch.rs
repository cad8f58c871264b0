use pvrl_nn::conv::ConvShape;
use pvrl_nn::init::RELU_GAIN;
use pvrl_nn::{ops, Conv2d, Module, Param, ParamSource, Real};

use crate::error::{AgentError, Result};

pub const CHANNELS: usize = 32;
const STRIDES: [usize; 4] = [2, 1, 1, 1];

/// Four 3×3 convolutions (32 channels, strides 2-1-1-1) with rectifiers,
/// flattened without pooling.
#[derive(Debug, Clone)]
pub struct ScratchCnn<T> {
    convs: Vec<Conv2d<T>>,
    sizes: Vec<usize>,
}

/// Per-layer inputs (the last entry is the flattened output).
#[derive(Debug, Clone)]
pub struct ScratchCache<T> {
    acts: Vec<Vec<T>>,
}

/// Side length after the four convolutions, if the input survives them.
pub fn output_side(resolution: usize) -> Option<usize> {
    let mut s = resolution;
    for st in STRIDES {
        if s < 3 {
            return None;
        }
        s = (s - 3) / st + 1;
    }
    Some(s)
}

impl<T: Real> ScratchCnn<T> {
    pub fn new(src: &mut dyn ParamSource<T>, prefix: &str, in_ch: usize, resolution: usize) -> Result<Self> {
        let out = output_side(resolution).ok_or_else(|| {
            AgentError::Invalid(format!("resolution {resolution} too small for four convolutions"))
        })?;
        let mut convs = Vec::with_capacity(4);
        let mut sizes = vec![resolution];
        let mut ch = in_ch;
        for (i, &stride) in STRIDES.iter().enumerate() {
            let shape = ConvShape {
                in_ch: ch,
                out_ch: CHANNELS,
                kernel: 3,
                stride,
                pad: 0,
            };
            convs.push(Conv2d::new(
                src,
                &format!("{prefix}.convs.{i}"),
                shape,
                true,
                RELU_GAIN,
                true,
            )?);
            let last = *sizes.last().unwrap();
            sizes.push((last - 3) / stride + 1);
            ch = CHANNELS;
        }
        debug_assert_eq!(*sizes.last().unwrap(), out);
        Ok(ScratchCnn { convs, sizes })
    }

    pub fn out_dim(&self) -> usize {
        let s = *self.sizes.last().unwrap();
        CHANNELS * s * s
    }

    pub fn resolution(&self) -> usize {
        self.sizes[0]
    }

    pub fn in_channels(&self) -> usize {
        self.convs[0].in_channels()
    }

    /// `x` holds `n` preprocessed images.
    pub fn forward(&self, x: Vec<T>, n: usize) -> (Vec<T>, ScratchCache<T>) {
        let mut acts = vec![x];
        for (i, conv) in self.convs.iter().enumerate() {
            let s = self.sizes[i];
            let (mut y, _, _) = conv.forward(acts.last().unwrap(), n, s, s);
            ops::relu(&mut y);
            acts.push(y);
        }
        (acts.last().unwrap().clone(), ScratchCache { acts })
    }

    /// Accumulates parameter gradients; the input gradient is not needed.
    pub fn backward(&mut self, cache: &ScratchCache<T>, dout: &[T], n: usize) {
        let mut d = dout.to_vec();
        for i in (0..self.convs.len()).rev() {
            ops::relu_backward(&mut d, &cache.acts[i + 1]);
            let s = self.sizes[i];
            match self.convs[i].backward(&cache.acts[i], &d, n, s, s, true, i > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }
    }

    /// Per-image, per-channel mean activation of each convolution, as
    /// `n`×32 rows, so channels act as neurons for dormancy scoring.
    pub fn channel_activity(&self, cache: &ScratchCache<T>, n: usize) -> Vec<Vec<T>> {
        cache.acts[1..]
            .iter()
            .map(|a| {
                let plane = a.len() / (n * CHANNELS);
                let inv = T::lit(1.0 / plane as f64);
                a.chunks_exact(plane)
                    .map(|p| p.iter().map(|v| v.abs()).sum::<T>() * inv)
                    .collect()
            })
            .collect()
    }
}

impl<T: Real> Module<T> for ScratchCnn<T> {
    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Param<T>)) {
        self.convs.visit(f)
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param<T>)) {
        self.convs.visit_mut(f)
    }
}

//! Pad-and-shift augmentation with edge replication.

use rand::Rng;

use crate::error::{AgentError, Result};

/// Integer offset applied to one image, each component in `[-pad, pad]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftSample {
    pub dx: i32,
    pub dy: i32,
}

impl ShiftSample {
    pub fn draw<R: Rng + ?Sized>(pad: usize, rng: &mut R) -> Self {
        let p = pad as i32;
        ShiftSample {
            dx: rng.random_range(-p..=p),
            dy: rng.random_range(-p..=p),
        }
    }
}

fn check(h: usize, w: usize, pad: usize) -> Result<()> {
    if 2 * pad >= h || 2 * pad >= w {
        return Err(AgentError::Invalid(format!(
            "pad {pad} too large for {h}x{w} image"
        )));
    }
    Ok(())
}

/// Translates one `c`×`h`×`w` image by `shift` as if it had been padded by
/// replicating its border and cropped back: each output pixel reads the
/// input at the clamped, shifted coordinate.
pub fn shift_image<P: Copy>(src: &[P], dst: &mut [P], c: usize, h: usize, w: usize, shift: ShiftSample) {
    debug_assert_eq!(src.len(), c * h * w);
    let col: Vec<usize> = (0..w)
        .map(|x| (x as i64 + shift.dx as i64).clamp(0, w as i64 - 1) as usize)
        .collect();
    for ch in 0..c {
        let plane = &src[ch * h * w..(ch + 1) * h * w];
        let out = &mut dst[ch * h * w..(ch + 1) * h * w];
        for y in 0..h {
            let sy = (y as i64 + shift.dy as i64).clamp(0, h as i64 - 1) as usize;
            let row = &plane[sy * w..(sy + 1) * w];
            let orow = &mut out[y * w..(y + 1) * w];
            if shift.dx == 0 {
                orow.copy_from_slice(row);
            } else {
                for (o, &sx) in orow.iter_mut().zip(&col) {
                    *o = row[sx];
                }
            }
        }
    }
}

/// Augments a batch of `n` images, one independent shift per image drawn
/// in batch order.
pub fn random_shift<P: Copy, R: Rng + ?Sized>(
    images: &[P],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    pad: usize,
    rng: &mut R,
) -> Result<Vec<P>> {
    check(h, w, pad)?;
    if images.len() != n * c * h * w {
        return Err(AgentError::Invalid(format!(
            "batch holds {} values, expected {}",
            images.len(),
            n * c * h * w
        )));
    }
    let shifts: Vec<ShiftSample> = (0..n).map(|_| ShiftSample::draw(pad, rng)).collect();
    shift_batch(images, c, h, w, pad, &shifts)
}

/// Applies explicit per-image shifts.
pub fn shift_batch<P: Copy>(
    images: &[P],
    c: usize,
    h: usize,
    w: usize,
    pad: usize,
    shifts: &[ShiftSample],
) -> Result<Vec<P>> {
    check(h, w, pad)?;
    let stride = c * h * w;
    if images.len() != shifts.len() * stride {
        return Err(AgentError::Invalid("one shift per image required".into()));
    }
    let p = pad as i32;
    if let Some(s) = shifts.iter().find(|s| s.dx.abs() > p || s.dy.abs() > p) {
        return Err(AgentError::Invalid(format!("shift {s:?} exceeds pad {pad}")));
    }
    let mut out = images.to_vec();
    for (i, s) in shifts.iter().enumerate() {
        let range = i * stride..(i + 1) * stride;
        shift_image(&images[range.clone()], &mut out[range], c, h, w, *s);
    }
    Ok(out)
}

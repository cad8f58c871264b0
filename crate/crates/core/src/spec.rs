use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObsKind {
    /// Raw RGB frame, one byte per element.
    Image,
    /// Precomputed backbone embedding, 32-bit floats.
    Embedding,
}

/// Layout of one stored observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationSpec {
    kind: ObsKind,
    shape: Vec<usize>,
}

impl ObservationSpec {
    /// A single RGB frame of `resolution`×`resolution` pixels.
    pub fn image(resolution: usize) -> Self {
        ObservationSpec {
            kind: ObsKind::Image,
            shape: vec![3, resolution, resolution],
        }
    }

    pub fn embedding(len: usize) -> Self {
        ObservationSpec {
            kind: ObsKind::Embedding,
            shape: vec![len],
        }
    }

    /// Builds a spec from raw parts, enforcing the per-kind shape rules.
    pub fn new(kind: ObsKind, shape: Vec<usize>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Invalid(format!("zero-sized dimension in {shape:?}")));
        }
        match kind {
            ObsKind::Image if shape.len() != 3 || shape[0] != 3 => Err(Error::Invalid(format!(
                "image observations are 3×H×W, got {shape:?}"
            ))),
            ObsKind::Embedding if shape.len() != 1 => Err(Error::Invalid(format!(
                "embedding observations are one-dimensional, got {shape:?}"
            ))),
            _ => Ok(ObservationSpec { kind, shape }),
        }
    }

    pub fn kind(&self) -> ObsKind {
        self.kind
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn element_width(&self) -> usize {
        match self.kind {
            ObsKind::Image => 1,
            ObsKind::Embedding => 4,
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn bytes_per_observation(&self) -> u64 {
        self.numel() as u64 * self.element_width() as u64
    }

    /// Pixel side length for image specs.
    pub fn resolution(&self) -> Option<usize> {
        match self.kind {
            ObsKind::Image => Some(self.shape[1]),
            ObsKind::Embedding => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    low: Vec<f32>,
    high: Vec<f32>,
}

impl ActionSpec {
    /// `dim` actions bounded in [-1, 1].
    pub fn symmetric(dim: usize) -> Self {
        ActionSpec {
            low: vec![-1.0; dim],
            high: vec![1.0; dim],
        }
    }

    pub fn new(low: Vec<f32>, high: Vec<f32>) -> Result<Self> {
        if low.is_empty() || low.len() != high.len() {
            return Err(Error::Invalid(format!(
                "action bounds must be non-empty and equal length ({} vs {})",
                low.len(),
                high.len()
            )));
        }
        if let Some(i) =
            (0..low.len()).find(|&i| low[i].partial_cmp(&high[i]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::Invalid(format!(
                "action dim {i}: low {} is not below high {}",
                low[i], high[i]
            )));
        }
        Ok(ActionSpec { low, high })
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn low(&self) -> &[f32] {
        &self.low
    }

    pub fn high(&self) -> &[f32] {
        &self.high
    }

    pub fn clamp(&self, action: &mut [f32]) {
        for ((a, &lo), &hi) in action.iter_mut().zip(&self.low).zip(&self.high) {
            *a = a.clamp(lo, hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_bytes_follow_product_formula() {
        for r in [84, 112, 224] {
            assert_eq!(
                ObservationSpec::image(r).bytes_per_observation(),
                3 * (r * r) as u64
            );
        }
        assert_eq!(ObservationSpec::embedding(768).bytes_per_observation(), 3072);
    }

    #[test]
    fn shape_rules() {
        assert!(ObservationSpec::new(ObsKind::Image, vec![9, 84, 84]).is_err());
        assert!(ObservationSpec::new(ObsKind::Embedding, vec![2, 768]).is_err());
        assert!(ObservationSpec::new(ObsKind::Embedding, vec![0]).is_err());
        assert!(ObservationSpec::new(ObsKind::Image, vec![3, 84, 84]).is_ok());
    }

    #[test]
    fn action_bounds() {
        assert!(ActionSpec::new(vec![1.0], vec![1.0]).is_err());
        assert!(ActionSpec::new(vec![], vec![]).is_err());
        let spec = ActionSpec::symmetric(2);
        let mut a = [3.0, -7.0];
        spec.clamp(&mut a);
        assert_eq!(a, [1.0, -1.0]);
    }
}

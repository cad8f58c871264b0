//! Dormant-neuron scores, dormant ratios and the perturbation policy.

use pvrl_nn::{ModuleExt, Real};

use crate::error::Result;

/// Activations of one layer over a batch, row-major `batch`×`width`.
#[derive(Debug, Clone, Copy)]
pub struct LayerActivations<'a, T> {
    pub id: &'a str,
    pub values: &'a [T],
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerCount {
    pub id: String,
    pub neurons: usize,
    pub dormant: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DormantReport {
    pub per_layer: Vec<LayerCount>,
    pub ratio: f64,
    pub threshold: f64,
}

/// Batch-mean absolute activation of each neuron divided by the mean of
/// those values over the layer. A layer whose mean is exactly zero scores
/// every neuron 0.
pub fn neuron_scores<T: Real>(values: &[T], width: usize) -> Vec<f64> {
    assert!(width > 0, "layer width must be positive");
    let rows = values.len() / width;
    assert!(
        rows > 0 && rows * width == values.len(),
        "ragged activation batch"
    );
    let mut means = vec![0.0f64; width];
    for row in values.chunks_exact(width) {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v.as_f64().abs();
        }
    }
    for m in means.iter_mut() {
        *m /= rows as f64;
    }
    let layer_mean = means.iter().sum::<f64>() / width as f64;
    if layer_mean == 0.0 {
        return vec![0.0; width];
    }
    means.iter().map(|m| m / layer_mean).collect()
}

/// A neuron is dormant when its score is at most `threshold`; the ratio
/// pools counts over all given layers.
pub fn dormant_ratio<T: Real>(layers: &[LayerActivations<'_, T>], threshold: f64) -> DormantReport {
    let mut per_layer = Vec::with_capacity(layers.len());
    let (mut total, mut dead) = (0usize, 0usize);
    for l in layers {
        let scores = neuron_scores(l.values, l.width);
        let dormant = scores.iter().filter(|&&s| s <= threshold).count();
        total += l.width;
        dead += dormant;
        per_layer.push(LayerCount {
            id: l.id.to_string(),
            neurons: l.width,
            dormant,
        });
    }
    DormantReport {
        per_layer,
        ratio: if total == 0 {
            0.0
        } else {
            dead as f64 / total as f64
        },
        threshold,
    }
}

/// Interpolation weight kept on the current parameters: `clamp(1 − β)`.
pub fn perturb_factor(beta: f64, alpha_min: f64, alpha_max: f64) -> f64 {
    (1.0 - beta).clamp(alpha_min, alpha_max)
}

/// `θ ← α·θ + (1 − α)·φ` over trainable parameters, `fresh` built by the
/// same constructor as `params`.
pub fn perturb_weights<T: Real, M: ModuleExt<T>>(params: &mut M, fresh: &M, alpha: f64) -> Result<()> {
    params.interpolate_towards(fresh, T::lit(alpha))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_scores() {
        // Two neurons, batch of two: mean |a| = (0, 0.5).
        let acts = [0.0f64, 1.0, 0.0, 0.0];
        assert_eq!(neuron_scores(&acts, 2), vec![0.0, 2.0]);
        let r = dormant_ratio(
            &[LayerActivations {
                id: "l",
                values: &acts[..],
                width: 2,
            }],
            0.025,
        );
        assert_eq!(r.ratio, 0.5);
    }

    #[test]
    fn perturb_factor_clamps() {
        assert_eq!(perturb_factor(0.0, 0.2, 0.9), 0.9);
        assert_eq!(perturb_factor(1.0, 0.2, 0.9), 0.2);
        assert_eq!(perturb_factor(0.5, 0.2, 0.9), 0.5);
    }
}

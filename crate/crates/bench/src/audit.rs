//! Trainable-parameter audit.

use std::fmt::Write as _;

use pvrl_agent::Networks;
use pvrl_core::{EncoderKind, ValidatedConfig};

use crate::error::Result;

/// Published trainable-parameter counts at 112 and 224 pixels.
pub const REFERENCE: [(&str, EncoderKind, u64, u64); 5] = [
    ("DRM", EncoderKind::ScratchCnn, 15_978_281, 57_373_481),
    ("PIEG", EncoderKind::ResnetPieg, 107_340_233, 415_621_577),
    ("DINOv2", EncoderKind::VitCls, 4_768_713, 4_768_713),
    ("DINOv2 REG", EncoderKind::VitReg, 6_151_113, 6_151_113),
    ("VC", EncoderKind::VitCls, 4_768_713, 4_768_713),
];

/// Published count for the first reference row matching `encoder`.
pub fn reference_count(encoder: EncoderKind, resolution: usize) -> Option<u64> {
    let row = REFERENCE.iter().find(|r| r.1 == encoder)?;
    match resolution {
        112 => Some(row.2),
        224 => Some(row.3),
        _ => None,
    }
}

pub fn model_label(encoder: EncoderKind) -> &'static str {
    match encoder {
        EncoderKind::ScratchCnn => "DRM",
        EncoderKind::ResnetPieg => "PIEG",
        EncoderKind::VitCls => "DINOv2 / VC",
        EncoderKind::VitReg => "DINOv2 REG",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow {
    pub label: String,
    pub encoder: EncoderKind,
    pub resolution: usize,
    pub trainable: u64,
    pub reference: Option<u64>,
}

impl ParamRow {
    /// Our count minus the published one.
    pub fn residual(&self) -> Option<i64> {
        self.reference.map(|r| self.trainable as i64 - r as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamReport {
    pub rows: Vec<ParamRow>,
}

impl ParamReport {
    pub fn get(&self, encoder: EncoderKind, resolution: usize) -> Option<&ParamRow> {
        self.rows
            .iter()
            .find(|r| r.encoder == encoder && r.resolution == resolution)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<12} {:>6} {:>14} {:>14} {:>14}",
            "model", "encoder", "res", "trainable", "reference", "residual"
        );
        for r in &self.rows {
            let reference = r.reference.map_or("-".to_string(), |v| v.to_string());
            let residual = r.residual().map_or("-".to_string(), |v| format!("{v:+}"));
            let _ = writeln!(
                out,
                "{:<12} {:<12} {:>6} {:>14} {:>14} {:>14}",
                r.label,
                r.encoder.as_str(),
                r.resolution,
                r.trainable,
                reference,
                residual
            );
        }
        out
    }
}

/// Exact trainable count for `cfg`, built from shapes only.
pub fn count_trainable(cfg: &ValidatedConfig) -> Result<u64> {
    Ok(Networks::<f32>::audit(cfg)?)
}

/// Audits `cfg` at each resolution.
pub fn audit_params(cfg: &ValidatedConfig, resolutions: &[usize]) -> Result<ParamReport> {
    let mut report = ParamReport::default();
    for &res in resolutions {
        let at = cfg.with(|c| c.resolution = res)?;
        report.rows.push(ParamRow {
            label: model_label(cfg.encoder).to_string(),
            encoder: cfg.encoder,
            resolution: res,
            trainable: count_trainable(&at)?,
            reference: reference_count(cfg.encoder, res),
        });
    }
    Ok(report)
}

/// Audits every encoder kind at each resolution with the other settings
/// of `cfg`.
pub fn audit_all(cfg: &ValidatedConfig, resolutions: &[usize]) -> Result<ParamReport> {
    let mut report = ParamReport::default();
    for kind in EncoderKind::ALL {
        let at = cfg.with(|c| {
            c.encoder = kind;
            c.storage = None;
            c.augment = None;
        })?;
        report.rows.extend(audit_params(&at, resolutions)?.rows);
    }
    Ok(report)
}

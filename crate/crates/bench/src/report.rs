//! Multi-seed report: summary table plus one SVG plot per metric.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{BenchError, Result};
use crate::metrics::{read_metrics, MetricsRow, Phase, METRICS_FILE};
use crate::stats::{aggregate_seeds, SeedCurve};
use crate::train::CONFIG_FILE;

pub const SUMMARY_FILE: &str = "summary.csv";

pub type MetricFn = fn(&MetricsRow) -> f64;

/// Reported evaluation metrics, with their output file stems.
pub const METRICS: [(&str, MetricFn); 4] = [
    ("episode_reward", |r| r.episode_reward),
    ("success_rate", |r| r.success),
    ("dormant_ratio_actor", |r| r.dormant_ratio_actor),
    ("dormant_ratio_critic", |r| r.dormant_ratio_critic),
];

/// Aggregated curves of one configuration, keyed by metric name.
#[derive(Debug, Clone)]
pub struct ConfigCurves {
    pub label: String,
    pub seeds: Vec<u64>,
    pub curves: BTreeMap<&'static str, SeedCurve>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub configs: Vec<ConfigCurves>,
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Every directory at most three levels below `root` holding a metrics file.
pub fn find_runs(root: &Path) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, depth: usize, out: &mut Vec<PathBuf>) -> Result<()> {
        if dir.join(METRICS_FILE).is_file() {
            out.push(dir.to_path_buf());
        }
        if depth == 0 {
            return Ok(());
        }
        let entries = std::fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))?;
        let mut subdirs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        subdirs.sort();
        for d in subdirs {
            walk(&d, depth - 1, out)?;
        }
        Ok(())
    }
    if !root.is_dir() {
        return Err(BenchError::NoRuns(root.to_path_buf()));
    }
    let mut out = Vec::new();
    walk(root, 3, &mut out)?;
    Ok(out)
}

/// `encoder@resolution` from the resolved config, or the directory name of
/// the run's parent when no config was written.
fn config_label(run: &Path, root: &Path) -> String {
    if let Ok(text) = std::fs::read_to_string(run.join(CONFIG_FILE)) {
        if let Ok(cfg) = pvrl_core::ExperimentConfig::from_text(&text) {
            return format!("{}@{}", cfg.encoder.as_str(), cfg.resolution);
        }
    }
    run.parent()
        .filter(|p| p.starts_with(root))
        .unwrap_or(run)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "runs".to_string())
}

/// Aggregates evaluation rows grouped by seed; frames missing from any seed
/// are dropped so all series share one grid.
pub fn aggregate_rows(label: &str, rows: &[MetricsRow]) -> Result<ConfigCurves> {
    let mut by_seed: BTreeMap<u64, BTreeMap<u64, &MetricsRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.phase == Phase::Eval) {
        by_seed.entry(r.seed).or_default().insert(r.frame, r);
    }
    if by_seed.is_empty() {
        return Err(BenchError::Invalid(format!("{label}: no evaluation rows")));
    }
    let mut grid: Vec<u64> = by_seed.values().next().unwrap().keys().copied().collect();
    grid.retain(|f| by_seed.values().all(|s| s.contains_key(f)));
    let mut curves = BTreeMap::new();
    for (name, get) in METRICS {
        let runs: Vec<Vec<(u64, f64)>> = by_seed
            .values()
            .map(|s| grid.iter().map(|f| (*f, get(s[f]))).collect())
            .collect();
        curves.insert(name, aggregate_seeds(&runs)?);
    }
    Ok(ConfigCurves {
        label: label.to_string(),
        seeds: by_seed.keys().copied().collect(),
        curves,
    })
}

/// Reads every run under `runs_root` and writes `summary.csv` plus one SVG
/// per metric into `out_dir`.
pub fn emit_report(runs_root: &Path, out_dir: &Path) -> Result<Report> {
    let runs = find_runs(runs_root)?;
    if runs.is_empty() {
        return Err(BenchError::NoRuns(runs_root.to_path_buf()));
    }
    let mut grouped: BTreeMap<String, Vec<MetricsRow>> = BTreeMap::new();
    for run in &runs {
        let rows = read_metrics(&run.join(METRICS_FILE))?;
        grouped
            .entry(config_label(run, runs_root))
            .or_default()
            .extend(rows);
    }
    let configs = grouped
        .iter()
        .map(|(label, rows)| aggregate_rows(label, rows))
        .collect::<Result<Vec<_>>>()?;

    std::fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    let summary = out_dir.join(SUMMARY_FILE);
    std::fs::write(&summary, summary_table(&configs)).map_err(|e| BenchError::io(&summary, e))?;
    let mut plots = Vec::new();
    for (name, _) in METRICS {
        let path = out_dir.join(format!("{name}.svg"));
        plot_metric(&configs, name, &path)?;
        plots.push(path);
    }
    Ok(Report {
        configs,
        summary,
        plots,
    })
}

/// One row per (config, metric, frame): mean, band half-width, seed count.
pub fn summary_table(configs: &[ConfigCurves]) -> String {
    let mut out = String::from("config,metric,frame,mean,half_width,seeds\n");
    for c in configs {
        for (name, curve) in &c.curves {
            for i in 0..curve.steps.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    c.label,
                    name,
                    curve.steps[i],
                    curve.mean[i],
                    curve.half_width[i],
                    c.seeds.len()
                );
            }
        }
    }
    out
}

fn plot_err<E: std::fmt::Display>(e: E) -> BenchError {
    BenchError::Plot(e.to_string())
}

fn plot_metric(configs: &[ConfigCurves], metric: &str, path: &Path) -> Result<()> {
    let (mut x_max, mut y_min, mut y_max) = (1u64, f64::INFINITY, f64::NEG_INFINITY);
    for c in configs {
        let curve = &c.curves[metric];
        x_max = x_max.max(curve.steps.last().copied().unwrap_or(1));
        for (lo, hi) in curve.lower().into_iter().zip(curve.upper()) {
            y_min = y_min.min(lo);
            y_max = y_max.max(hi);
        }
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if y_max - y_min < 1e-9 {
        y_max += 0.5;
        y_min -= 0.5;
    }

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(metric, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(0u64..x_max, y_min..y_max)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("frame")
        .y_desc(metric)
        .draw()
        .map_err(plot_err)?;

    for (i, c) in configs.iter().enumerate() {
        let curve = &c.curves[metric];
        let color = Palette99::pick(i).to_rgba();
        let band: Vec<(u64, f64)> = curve
            .steps
            .iter()
            .copied()
            .zip(curve.upper())
            .chain(curve.steps.iter().copied().zip(curve.lower()).rev())
            .collect();
        chart
            .draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(
                curve.steps.iter().copied().zip(curve.mean.iter().copied()),
                color.stroke_width(2),
            ))
            .map_err(plot_err)?
            .label(format!("{} (n={})", c.label, c.seeds.len()))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

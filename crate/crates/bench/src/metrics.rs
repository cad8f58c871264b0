//! Per-run metrics CSV.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{BenchError, Result};

pub const HEADER: [&str; 8] = [
    "seed",
    "frame",
    "phase",
    "episode_reward",
    "success",
    "dormant_ratio_actor",
    "dormant_ratio_critic",
    "sigma",
];

pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Train,
    Eval,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Train => "train",
            Phase::Eval => "eval",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s {
            "train" => Some(Phase::Train),
            "eval" => Some(Phase::Eval),
            _ => None,
        }
    }
}

/// One CSV row. `success` is 0/1 for a training episode and the success
/// rate for an evaluation block.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub seed: u64,
    pub frame: u64,
    pub phase: Phase,
    pub episode_reward: f64,
    pub success: f64,
    pub dormant_ratio_actor: f64,
    pub dormant_ratio_critic: f64,
    pub sigma: f64,
}

impl MetricsRow {
    fn fields(&self) -> [String; 8] {
        [
            self.seed.to_string(),
            self.frame.to_string(),
            self.phase.as_str().to_string(),
            self.episode_reward.to_string(),
            self.success.to_string(),
            self.dormant_ratio_actor.to_string(),
            self.dormant_ratio_critic.to_string(),
            self.sigma.to_string(),
        ]
    }

    /// Parses one record; `line` is used for diagnostics only.
    pub fn from_fields<S: AsRef<str>>(fields: &[S], line: usize) -> Result<Self> {
        let err = |msg: String| BenchError::Metrics { line, msg };
        if fields.len() != HEADER.len() {
            return Err(err(format!(
                "expected {} columns, got {}",
                HEADER.len(),
                fields.len()
            )));
        }
        let f = |i: usize| fields[i].as_ref().trim();
        let int = |i: usize| {
            f(i).parse::<u64>()
                .map_err(|_| err(format!("{}: `{}` is not an unsigned integer", HEADER[i], f(i))))
        };
        let real = |i: usize| {
            let v: f64 = f(i)
                .parse()
                .map_err(|_| err(format!("{}: `{}` is not a number", HEADER[i], f(i))))?;
            if v.is_nan() {
                return Err(err(format!("{}: NaN", HEADER[i])));
            }
            Ok(v)
        };
        let unit = |i: usize| {
            let v = real(i)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(err(format!("{}: {v} outside [0, 1]", HEADER[i])));
            }
            Ok(v)
        };
        Ok(MetricsRow {
            seed: int(0)?,
            frame: int(1)?,
            phase: Phase::parse(f(2))
                .ok_or_else(|| err(format!("phase: `{}` is not train or eval", f(2))))?,
            episode_reward: real(3)?,
            success: unit(4)?,
            dormant_ratio_actor: unit(5)?,
            dormant_ratio_critic: unit(6)?,
            sigma: real(7)?,
        })
    }
}

/// Appends rows to `<run_dir>/metrics.csv`, flushing after each one.
#[derive(Debug)]
pub struct MetricsWriter {
    path: PathBuf,
    out: csv::Writer<File>,
}

impl MetricsWriter {
    /// Creates the file with its header, or appends to an existing one
    /// after checking its header.
    pub fn open(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(METRICS_FILE);
        let exists = path.exists() && std::fs::metadata(&path).map(|m| m.len() > 0).unwrap_or(false);
        if exists {
            let text = std::fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
            parse_metrics(&text)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| BenchError::io(&path, e))?;
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if !exists {
            out.write_record(HEADER).map_err(|e| csv_err(&path, e))?;
            out.flush().map_err(|e| BenchError::io(&path, e))?;
        }
        Ok(MetricsWriter { path, out })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<()> {
        self.out
            .write_record(row.fields())
            .map_err(|e| csv_err(&self.path, e))?;
        self.out.flush().map_err(|e| BenchError::io(&self.path, e))
    }

    /// Validates a raw record before appending it.
    pub fn write_fields<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<()> {
        let row = MetricsRow::from_fields(fields, 0)?;
        self.write(&row)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> BenchError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => BenchError::io(path, io),
        other => BenchError::Metrics {
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}

/// Parses a metrics file, requiring the exact header.
pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| BenchError::Metrics {
            line,
            msg: e.to_string(),
        })?;
        if i == 0 {
            if rec.iter().ne(HEADER.iter().copied()) {
                return Err(BenchError::Metrics {
                    line,
                    msg: format!("header must be `{}`", HEADER.join(",")),
                });
            }
            continue;
        }
        let fields: Vec<&str> = rec.iter().collect();
        rows.push(MetricsRow::from_fields(&fields, line)?);
    }
    if rows.is_empty() && text.trim().is_empty() {
        return Err(BenchError::Metrics {
            line: 1,
            msg: "missing header".into(),
        });
    }
    Ok(rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_metrics(&text)
}

/// Writes rows to any sink with the header, e.g. for synthetic runs.
pub fn write_all<W: Write>(sink: W, rows: &[MetricsRow]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    let path = Path::new("<sink>");
    out.write_record(HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        out.write_record(r.fields()).map_err(|e| csv_err(path, e))?;
    }
    out.flush().map_err(|e| BenchError::io(path, e))
}

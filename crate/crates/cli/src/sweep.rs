//! Cartesian parameter sweeps. Each point runs as an independent experiment
//! in its own subdirectory; `sweep.csv` collects one row per point.
//!
//! Besides every configuration key, an axis may use the shorthand
//! `optimization`, which takes `sequential`, `coalescing` or `pipelined`
//! (pipelined implies coalescing).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{parse_assignment, ExperimentConfig};
use crate::run::{run_experiment, RunSummary};
use crate::CliError;

pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (key, values) = parse_assignment(s)?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(CliError::Config(format!("axis {key}: no values")));
        }
        Ok(Axis { key, values })
    }
}

fn expand(key: &str, value: &str) -> Result<Vec<(String, String)>, CliError> {
    let pair = |k: &str, v: &str| (k.to_string(), v.to_string());
    if key != "optimization" {
        return Ok(vec![pair(key, value)]);
    }
    let (schedule, coalescing) = match value {
        "sequential" => ("sequential", "false"),
        "coalescing" => ("sequential", "true"),
        "pipelined" => ("pipelined", "true"),
        other => {
            return Err(CliError::Config(format!(
                "optimization: expected sequential, coalescing or pipelined, got {other:?}"
            )))
        }
    };
    Ok(vec![pair("schedule", schedule), pair("coalescing", coalescing)])
}

/// All combinations, first axis varying slowest.
pub fn points(axes: &[Axis]) -> Vec<Vec<(String, String)>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((axis.key.clone(), v.clone()));
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug)]
pub struct PointResult {
    pub index: usize,
    pub assignments: Vec<(String, String)>,
    pub dir: PathBuf,
    pub outcome: Result<RunSummary, CliError>,
}

fn run_point(base: &[(String, String)], index: usize, point: Vec<(String, String)>, out_dir: &Path) -> PointResult {
    let dir = out_dir.join(format!("point_{index:03}"));
    let outcome = (|| {
        let mut pairs = base.to_vec();
        for (k, v) in &point {
            pairs.extend(expand(k, v)?);
        }
        let cfg = ExperimentConfig::from_pairs(&pairs)?;
        run_experiment(&cfg, &dir)
    })();
    PointResult { index, assignments: point, dir, outcome }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Runs every point in parallel and writes `sweep.csv`. Failing points are
/// recorded with their error and do not stop the sweep.
pub fn run_sweep(base: &[(String, String)], axes: &[Axis], out_dir: &Path) -> Result<Vec<PointResult>, CliError> {
    // reject unknown keys and malformed values before any work starts
    let base_cfg = ExperimentConfig::from_pairs(base)?;
    for axis in axes {
        for v in &axis.values {
            let mut probe = base_cfg.clone();
            for (k, val) in expand(&axis.key, v)? {
                probe.set(&k, &val)?;
            }
        }
    }
    fs::create_dir_all(out_dir)?;
    let results: Vec<PointResult> = points(axes)
        .into_iter()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, p)| run_point(base, i, p, out_dir))
        .collect();

    let mut out = BufWriter::new(fs::File::create(out_dir.join(SWEEP_FILE))?);
    for line in base_cfg.to_lines() {
        writeln!(out, "# {line}")?;
    }
    let mut header = vec!["point".to_string()];
    header.extend(axes.iter().map(|a| a.key.clone()));
    header.extend(
        ["status", "epochs", "mean_cycles", "mean_energy", "mean_anomaly", "learned", "mean_repetitions", "error"]
            .map(String::from),
    );
    writeln!(out, "{}", header.join(","))?;
    for r in &results {
        let mut cols = vec![r.index.to_string()];
        cols.extend(r.assignments.iter().map(|(_, v)| v.clone()));
        match &r.outcome {
            Ok(s) => {
                let (learned, reps) = match &s.learning {
                    Some(l) => (l.learned.to_string(), l.mean_repetitions.to_string()),
                    None => (String::new(), String::new()),
                };
                cols.extend([
                    "ok".to_string(),
                    s.totals.epochs.to_string(),
                    s.means.cycles.to_string(),
                    s.means.energy.to_string(),
                    s.means.anomaly.to_string(),
                    learned,
                    reps,
                    String::new(),
                ]);
            }
            Err(e) => {
                cols.extend(["failed".to_string()]);
                cols.extend(std::iter::repeat_n(String::new(), 6));
                cols.push(quote(&e.to_string()));
            }
        }
        writeln!(out, "{}", cols.join(","))?;
    }
    out.flush()?;
    Ok(results)
}

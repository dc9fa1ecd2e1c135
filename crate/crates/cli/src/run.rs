//! A single experiment: `epochs.csv` with one row per epoch and
//! `summary.json` with means, totals and learning statistics.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use claasic::accel::{verify_against_reference, EpochReport, Machine, Reference, VerifyReport};
use claasic::noc::{NetStats, PacketKind};
use claasic::workload::{gen_poly_series, ingest_csv, LearnTracker};
use serde::Serialize;

use crate::config::{ExperimentConfig, WorkloadKind};
use crate::CliError;

pub const EPOCHS_FILE: &str = "epochs.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.txt";

/// Normal quantile for a two-sided 98% interval.
const Z98: f64 = 2.326_347_874;

const CSV_CHUNK: usize = 512;

#[derive(Debug, Clone, Serialize)]
pub struct Means {
    pub cycles: f64,
    pub energy: f64,
    pub anomaly: f64,
    pub flit_hops: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub epochs: u64,
    pub cycles: u64,
    pub drains: u64,
    pub energy: f64,
    pub flit_hops: Vec<(String, u64)>,
    pub cross_zone_deliveries: u64,
    pub late_deliveries: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LearnStats {
    pub series: u32,
    pub learned: u32,
    /// Repetitions until learned; unlearned series count `max_reps`.
    pub mean_repetitions: f64,
    pub ci98: (f64, f64),
    pub repetitions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub epochs_compared: usize,
    pub divergences: usize,
    pub first: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: Vec<String>,
    pub means: Means,
    pub totals: Totals,
    pub learning: Option<LearnStats>,
    pub verify: Option<VerifySummary>,
    pub skipped_rows: Option<usize>,
}

struct Row {
    series: u64,
    input: u64,
    report: EpochReport,
}

fn csv_header() -> String {
    let mut cols: Vec<String> =
        ["row", "series", "input", "epoch", "zone", "anomaly", "bursting", "cycles", "drains"].map(String::from).into();
    cols.extend(PacketKind::ALL.iter().map(|k| format!("flit_hops_{}", k.name())));
    cols.extend(["router_traversals", "link_flits", "buffer_writes", "buffer_reads", "energy"].map(String::from));
    cols.join(",")
}

fn csv_row(index: usize, row: &Row, cfg: &ExperimentConfig) -> String {
    let r = &row.report;
    let mut cols = vec![
        index.to_string(),
        row.series.to_string(),
        row.input.to_string(),
        r.result.epoch.to_string(),
        r.result.zone.to_string(),
        r.result.anomaly.to_string(),
        r.result.bursting_columns.len().to_string(),
        r.cycles.to_string(),
        r.drains.to_string(),
    ];
    cols.extend(r.net.flit_hops.iter().map(u64::to_string));
    cols.extend([r.net.router_traversals, r.net.link_flits, r.net.buffer_writes, r.net.buffer_reads].map(|v| v.to_string()));
    cols.push(r.net.energy(&cfg.machine.net.energy).to_string());
    cols.join(",")
}

/// Mean and two-sided 98% normal interval of `xs`.
pub fn mean_ci98(xs: &[f64]) -> (f64, (f64, f64)) {
    if xs.is_empty() {
        return (f64::NAN, (f64::NAN, f64::NAN));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, (mean, mean));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z98 * (var / n).sqrt();
    (mean, (mean - half, mean + half))
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    rows: Vec<Row>,
    verify: VerifyReport,
    cross_zone: u64,
    trace: Vec<String>,
}

impl Runner<'_> {
    fn batch(&mut self, machine: &mut Machine, reference: Option<&mut Reference>, series: u64, values: &[u64]) -> Result<(), Fault> {
        let reports = machine.run_values(values).map_err(|e| Fault { error: e, trace: machine.take_trace() })?;
        if self.cfg.machine.net.trace {
            self.trace.extend(machine.take_trace());
        }
        if let Some(reference) = reference {
            let expected = reference.run_values(values).map_err(|e| Fault { error: e, trace: Vec::new() })?;
            let got: Vec<_> = reports.iter().map(|r| r.result.clone()).collect();
            let report = verify_against_reference(&got, &expected);
            self.verify.epochs_compared += report.epochs_compared;
            self.verify.divergences.extend(report.divergences);
        }
        self.rows.extend(values.iter().zip(reports).map(|(&input, report)| Row { series, input, report }));
        Ok(())
    }
}

struct Fault {
    error: claasic::Error,
    trace: Vec<String>,
}

/// Runs one experiment and writes its output files into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut runner = Runner { cfg, rows: Vec::new(), verify: VerifyReport::default(), cross_zone: 0, trace: Vec::new() };
    let mut learning = None;
    let mut skipped_rows = None;

    let outcome: Result<(), Fault> = (|| {
        match cfg.workload {
            WorkloadKind::Synthetic => {
                let mut reps = Vec::new();
                let mut learned = 0;
                for seed in cfg.first_seed..cfg.first_seed + cfg.series as u64 {
                    let series = gen_poly_series(seed);
                    let mut machine = Machine::new(cfg.machine.clone()).map_err(|e| Fault { error: e, trace: Vec::new() })?;
                    let mut reference = match cfg.verify {
                        true => Some(Reference::new(&cfg.machine).map_err(|e| Fault { error: e, trace: Vec::new() })?),
                        false => None,
                    };
                    let mut tracker = LearnTracker::new(series.points.len());
                    while tracker.repetitions() < cfg.max_reps && !tracker.learned {
                        let start = runner.rows.len();
                        runner.batch(&mut machine, reference.as_mut(), seed, &series.points)?;
                        for row in &runner.rows[start..] {
                            tracker.record(&row.report.result);
                        }
                    }
                    runner.cross_zone += machine.cross_zone_deliveries();
                    learned += tracker.learned as u32;
                    reps.push(tracker.repetitions());
                }
                let xs: Vec<f64> = reps.iter().map(|&r| r as f64).collect();
                let (mean, ci98) = mean_ci98(&xs);
                learning = Some(LearnStats { series: cfg.series, learned, mean_repetitions: mean, ci98, repetitions: reps });
            }
            WorkloadKind::Csv => {
                let path = cfg.csv_path.as_ref().expect("validated");
                let data = ingest_csv(path, &cfg.csv_column, &cfg.quantizer).map_err(|e| Fault { error: e, trace: Vec::new() })?;
                skipped_rows = Some(data.skipped_rows);
                let mut machine = Machine::new(cfg.machine.clone()).map_err(|e| Fault { error: e, trace: Vec::new() })?;
                let mut reference = match cfg.verify {
                    true => Some(Reference::new(&cfg.machine).map_err(|e| Fault { error: e, trace: Vec::new() })?),
                    false => None,
                };
                for chunk in data.values.chunks(CSV_CHUNK) {
                    runner.batch(&mut machine, reference.as_mut(), 0, chunk)?;
                }
                runner.cross_zone += machine.cross_zone_deliveries();
            }
        }
        Ok(())
    })();

    let trace_path = out_dir.join(TRACE_FILE);
    if let Err(fault) = outcome {
        if !matches!(fault.error, claasic::Error::Simulation { .. }) {
            return Err(fault.error.into());
        }
        let mut lines = runner.trace;
        lines.extend(fault.trace);
        lines.push(format!("fault: {}", fault.error));
        write_lines(&trace_path, &lines)?;
        return Err(CliError::Fault { message: fault.error.to_string(), trace: trace_path });
    }
    if cfg.machine.net.trace {
        write_lines(&trace_path, &runner.trace)?;
    }

    let summary = summarize(cfg, &runner, learning, skipped_rows);
    write_epochs(cfg, &runner.rows, &out_dir.join(EPOCHS_FILE))?;
    fs::write(out_dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary).expect("summary serializes"))?;

    if let Some(d) = runner.verify.first() {
        return Err(CliError::Divergence(format!("epoch {}: {} {}", d.epoch, d.field, d.detail)));
    }
    Ok(summary)
}

fn write_lines(path: &PathBuf, lines: &[String]) -> std::io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for l in lines {
        writeln!(out, "{l}")?;
    }
    out.flush()
}

fn write_epochs(cfg: &ExperimentConfig, rows: &[Row], path: &Path) -> std::io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for line in cfg.to_lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", csv_header())?;
    for (i, row) in rows.iter().enumerate() {
        writeln!(out, "{}", csv_row(i, row, cfg))?;
    }
    out.flush()
}

fn summarize(cfg: &ExperimentConfig, runner: &Runner, learning: Option<LearnStats>, skipped_rows: Option<usize>) -> RunSummary {
    let mut net = NetStats::default();
    let mut drains = 0;
    let mut anomaly = 0.0;
    for row in &runner.rows {
        net.add(&row.report.net);
        drains += row.report.drains;
        anomaly += row.report.result.anomaly;
    }
    let cycles: u64 = runner.rows.iter().map(|r| r.report.cycles).sum();
    let epochs = runner.rows.len() as u64;
    let n = epochs.max(1) as f64;
    let energy = net.energy(&cfg.machine.net.energy);
    let hops = |f: &dyn Fn(u64) -> f64| -> Vec<(String, f64)> {
        PacketKind::ALL.iter().map(|k| (k.name().to_string(), f(net.flit_hops[k.index()]))).collect()
    };
    RunSummary {
        config: cfg.to_lines(),
        means: Means { cycles: cycles as f64 / n, energy: energy / n, anomaly: anomaly / n, flit_hops: hops(&|h| h as f64 / n) },
        totals: Totals {
            epochs,
            cycles,
            drains,
            energy,
            flit_hops: PacketKind::ALL.iter().map(|k| (k.name().to_string(), net.flit_hops[k.index()])).collect(),
            cross_zone_deliveries: runner.cross_zone,
            late_deliveries: net.late_deliveries,
        },
        learning,
        verify: cfg.verify.then(|| VerifySummary {
            epochs_compared: runner.verify.epochs_compared,
            divergences: runner.verify.divergences.len(),
            first: runner.verify.first().map(|d| format!("epoch {}: {} {}", d.epoch, d.field, d.detail)),
        }),
        skipped_rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_of_constant_sample_is_a_point() {
        let (m, (lo, hi)) = mean_ci98(&[3.0, 3.0, 3.0]);
        assert_eq!((m, lo, hi), (3.0, 3.0, 3.0));
    }

    #[test]
    fn ci_matches_hand_computation() {
        // mean 2.5, sample variance 5/3, n 4
        let (m, (lo, hi)) = mean_ci98(&[1.0, 2.0, 3.0, 4.0]);
        let half = 2.326_347_874 * (5.0f64 / 3.0 / 4.0).sqrt();
        assert_eq!(m, 2.5);
        assert!((hi - 2.5 - half).abs() < 1e-12 && (2.5 - lo - half).abs() < 1e-12);
    }

    #[test]
    fn header_and_row_widths_agree() {
        let cfg = ExperimentConfig::preset(crate::config::Scale::Desk);
        let row = Row {
            series: 0,
            input: 0,
            report: EpochReport {
                result: claasic::cla::EpochResult {
                    epoch: 0,
                    zone: 0,
                    active_columns: vec![],
                    predicted_columns: vec![],
                    next_predicted: vec![],
                    bursting_columns: vec![],
                    anomaly: 0.0,
                },
                cycles: 0,
                drains: 0,
                net: NetStats::default(),
            },
        };
        assert_eq!(csv_header().split(',').count(), csv_row(0, &row, &cfg).split(',').count());
    }
}

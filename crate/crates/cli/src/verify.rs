//! Cross-checks the accelerator against the reference model over several
//! seeds, once per schedule.

use claasic::accel::{verify_against_reference, Machine, Reference, Schedule};
use claasic::workload::gen_poly_series;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct VerifyCase {
    pub seed: u64,
    pub schedule: Schedule,
    pub epochs: usize,
    pub divergence: Option<String>,
}

fn stream(seed: u64, epochs: usize) -> Vec<u64> {
    gen_poly_series(seed).points.into_iter().cycle().take(epochs).collect()
}

fn check(base: &ExperimentConfig, seed: u64, schedule: Schedule, epochs: usize) -> Result<VerifyCase, CliError> {
    let mut cfg = base.machine.clone();
    cfg.cortex.seed = base.machine.cortex.seed.wrapping_add(seed);
    cfg.schedule = schedule;
    let values = stream(seed, epochs);
    let mut machine = Machine::new(cfg.clone())?;
    let mut reference = Reference::new(&cfg)?;
    let got: Vec<_> = machine.run_values(&values)?.into_iter().map(|r| r.result).collect();
    let expected = reference.run_values(&values)?;
    let report = verify_against_reference(&got, &expected);
    Ok(VerifyCase {
        seed,
        schedule,
        epochs: report.epochs_compared,
        divergence: report.first().map(|d| format!("epoch {}: {} {}", d.epoch, d.field, d.detail)),
    })
}

/// Runs `seeds` cortex seeds for `epochs` epochs under both schedules.
pub fn run_verify(base: &ExperimentConfig, seeds: u64, epochs: usize) -> Result<Vec<VerifyCase>, CliError> {
    base.validate()?;
    let cases: Vec<(u64, Schedule)> =
        (0..seeds).flat_map(|s| [Schedule::Sequential, Schedule::Pipelined].map(|sch| (s, sch))).collect();
    cases.into_par_iter().map(|(s, sch)| check(base, s, sch, epochs)).collect()
}

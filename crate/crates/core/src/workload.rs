//! Workloads: synthetic polynomial series for learning experiments and CSV
//! time series for anomaly runs.
//!
//! A polynomial series is 20 samples `p(0), ..., p(19)` of a random
//! polynomial of degree 0 to 4 with integer coefficients in
//! [`COEFF_MIN`]..=[`COEFF_MAX`]. Samples are shifted by [`VALUE_OFFSET`],
//! scaled by [`VALUE_SCALE`] and clamped to `0..=VALUE_MAX` so every value is
//! a valid encoder input.
//!
//! A series counts as learned once one full repetition of it contains at
//! least half its length in epochs without a bursting column.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accel::{Machine, Reference};
use crate::cla::EpochResult;
use crate::error::{Error, Result};
use crate::rng::{Purpose, XorShift64Star};

pub const POINTS: usize = 20;
pub const MAX_DEGREE: u32 = 4;
pub const COEFF_MIN: i64 = -8;
pub const COEFF_MAX: i64 = 8;
pub const VALUE_SCALE: i64 = 4;
pub const VALUE_OFFSET: i64 = 1 << 23;
pub const VALUE_MAX: i64 = (1 << 31) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolySeries {
    pub seed: u64,
    pub degree: u32,
    /// `coefficients[i]` multiplies `x^i`; entries above `degree` are zero.
    pub coefficients: [i64; 5],
    pub points: Vec<u64>,
}

/// Encoder input for `p(x)`.
pub fn poly_value(coefficients: &[i64; 5], x: i64) -> u64 {
    let p = coefficients.iter().rev().fold(0i64, |acc, &c| acc * x + c);
    (VALUE_OFFSET + VALUE_SCALE * p).clamp(0, VALUE_MAX) as u64
}

pub fn gen_poly_series(seed: u64) -> PolySeries {
    let mut rng = XorShift64Star::for_site(seed, Purpose::Workload, 0, 0);
    let degree = rng.below(MAX_DEGREE as u64 + 1) as u32;
    let mut coefficients = [0i64; 5];
    for c in coefficients.iter_mut().take(degree as usize + 1) {
        *c = rng.range_inclusive(COEFF_MIN, COEFF_MAX);
    }
    // keep the nominal degree
    while degree > 0 && coefficients[degree as usize] == 0 {
        coefficients[degree as usize] = rng.range_inclusive(COEFF_MIN, COEFF_MAX);
    }
    let points = (0..POINTS as i64).map(|x| poly_value(&coefficients, x)).collect();
    PolySeries { seed, degree, coefficients, points }
}

/// Anything that consumes a value stream epoch by epoch.
pub trait Learner {
    fn feed(&mut self, values: &[u64]) -> Result<Vec<EpochResult>>;
    fn set_learning(&mut self, on: bool);
}

impl Learner for Machine {
    fn feed(&mut self, values: &[u64]) -> Result<Vec<EpochResult>> {
        Ok(self.run_values(values)?.into_iter().map(|r| r.result).collect())
    }

    fn set_learning(&mut self, on: bool) {
        Machine::set_learning(self, on)
    }
}

impl Learner for Reference {
    fn feed(&mut self, values: &[u64]) -> Result<Vec<EpochResult>> {
        self.run_values(values)
    }

    fn set_learning(&mut self, on: bool) {
        Reference::set_learning(self, on)
    }
}

/// Burst-free epoch counts per repetition of a series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnTracker {
    series_len: usize,
    position: usize,
    current: u32,
    pub hits: Vec<u32>,
    pub learned: bool,
}

impl LearnTracker {
    pub fn new(series_len: usize) -> Self {
        assert!(series_len > 0, "series must not be empty");
        Self { series_len, position: 0, current: 0, hits: Vec::new(), learned: false }
    }

    pub fn threshold(&self) -> u32 {
        self.series_len.div_ceil(2) as u32
    }

    /// Records one epoch; returns true when it closes a repetition.
    pub fn record(&mut self, result: &EpochResult) -> bool {
        if result.bursting_columns.is_empty() {
            self.current += 1;
        }
        self.position += 1;
        if self.position < self.series_len {
            return false;
        }
        self.learned = self.current >= self.threshold();
        self.hits.push(self.current);
        self.position = 0;
        self.current = 0;
        true
    }

    pub fn repetitions(&self) -> usize {
        self.hits.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub repetitions: usize,
    pub learned: bool,
    pub hits: Vec<u32>,
}

/// Replays `series` until a repetition is learned or `max_reps` have run.
pub fn run_until_learned<L: Learner + ?Sized>(learner: &mut L, series: &[u64], max_reps: usize) -> Result<LearnOutcome> {
    if series.is_empty() {
        return Err(Error::Usage("cannot learn an empty series".into()));
    }
    let mut tracker = LearnTracker::new(series.len());
    while tracker.repetitions() < max_reps && !tracker.learned {
        for r in learner.feed(series)? {
            tracker.record(&r);
        }
    }
    Ok(LearnOutcome { repetitions: tracker.repetitions(), learned: tracker.learned, hits: tracker.hits })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyPoint {
    pub epoch: u64,
    pub zone: u32,
    pub score: f64,
}

pub fn run_anomaly<L: Learner + ?Sized>(learner: &mut L, stream: &[u64]) -> Result<Vec<AnomalyPoint>> {
    Ok(learner
        .feed(stream)?
        .into_iter()
        .map(|r| AnomalyPoint { epoch: r.epoch, zone: r.zone, score: r.anomaly })
        .collect())
}

/// Affine map from raw samples onto `0..levels`, then onto encoder inputs
/// `level * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    pub levels: u32,
    /// Fraction of the stream, from the start, whose range sets the bounds.
    pub probation: f64,
    /// Fixed bounds; when set, `probation` is ignored.
    pub bounds: Option<(f64, f64)>,
    pub spacing: u64,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self { levels: 130, probation: 0.1, bounds: None, spacing: 1 }
    }
}

impl QuantizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=130).contains(&self.levels) {
            return Err(Error::Config(format!("quantizer levels must be in 1..=130, got {}", self.levels)));
        }
        if !(self.probation > 0.0 && self.probation <= 1.0) {
            return Err(Error::Config(format!("probation must be in (0, 1], got {}", self.probation)));
        }
        if self.spacing == 0 {
            return Err(Error::Config("quantizer spacing must be positive".into()));
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("quantizer bounds ({lo}, {hi}) are not an ordered finite pair")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub lo: f64,
    pub hi: f64,
    pub levels: u32,
    pub spacing: u64,
}

impl Quantizer {
    pub fn fit(samples: &[f64], cfg: &QuantizerConfig) -> Result<Self> {
        cfg.validate()?;
        let (lo, hi) = match cfg.bounds {
            Some(b) => b,
            None => {
                if samples.is_empty() {
                    return Err(Error::Usage("no samples to fit the quantizer".into()));
                }
                let n = ((samples.len() as f64 * cfg.probation).ceil() as usize).clamp(1, samples.len());
                samples[..n].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
            }
        };
        Ok(Self { lo, hi, levels: cfg.levels, spacing: cfg.spacing })
    }

    pub fn level(&self, x: f64) -> u32 {
        let top = self.levels - 1;
        if self.hi <= self.lo || top == 0 {
            return 0;
        }
        let scaled = ((x - self.lo) / (self.hi - self.lo) * top as f64).round();
        scaled.clamp(0.0, top as f64) as u32
    }

    pub fn encode_input(&self, x: f64) -> u64 {
        self.level(x) as u64 * self.spacing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ingested {
    pub values: Vec<u64>,
    pub raw: Vec<f64>,
    pub quantizer: Quantizer,
    /// Rows dropped because the value was missing or not a finite number.
    pub skipped_rows: usize,
}

/// Reads column `column` of a headed CSV file and quantizes it.
pub fn ingest_csv(path: &Path, column: &str, cfg: &QuantizerConfig) -> Result<Ingested> {
    cfg.validate()?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let Some(idx) = headers.iter().position(|h| h.trim() == column) else {
        return Err(Error::Usage(format!("column {column:?} not found in {}", path.display())));
    };
    let mut raw = Vec::new();
    let mut skipped_rows = 0;
    for record in reader.records() {
        let parsed = record
            .ok()
            .and_then(|r| r.get(idx).and_then(|v| v.trim().parse::<f64>().ok()))
            .filter(|v| v.is_finite());
        match parsed {
            Some(v) => raw.push(v),
            None => skipped_rows += 1,
        }
    }
    if raw.is_empty() {
        return Err(Error::Usage(format!("{} holds no usable samples in column {column:?}", path.display())));
    }
    let quantizer = Quantizer::fit(&raw, cfg)?;
    let values = raw.iter().map(|&x| quantizer.encode_input(x)).collect();
    Ok(Ingested { values, raw, quantizer, skipped_rows })
}

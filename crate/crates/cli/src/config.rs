//! Flat `key = value` experiment configuration.
//!
//! A file holds one assignment per line; `#` starts a comment. Keys are
//! applied in order on top of a preset chosen by `scale` (`desk` or `full`),
//! and command-line overrides are applied after the file. The full resolved
//! configuration is written back, one `key=value` per line, into every
//! output file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use claasic::accel::{MachineConfig, Schedule};
use claasic::workload::QuantizerConfig;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadKind {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scale: Scale,
    pub machine: MachineConfig,
    pub workload: WorkloadKind,
    /// Number of polynomial series, seeded `first_seed..first_seed + series`.
    pub series: u32,
    pub first_seed: u64,
    pub max_reps: usize,
    pub csv_path: Option<PathBuf>,
    pub csv_column: String,
    pub quantizer: QuantizerConfig,
    /// Run the reference model alongside and compare every epoch.
    pub verify: bool,
}

/// Every key, in the order used when the configuration is written out.
pub const KEYS: &[&str] = &[
    "scale",
    "columns",
    "cells",
    "density",
    "input_bits",
    "receptive_field",
    "proximal_capacity",
    "perm_levels",
    "connected_fraction",
    "sp_increment",
    "sp_decrement",
    "tm_increment",
    "tm_decrement",
    "activation_threshold",
    "matching_threshold",
    "max_segments",
    "max_synapses",
    "learning",
    "cortex_seed",
    "encoder_w",
    "encoder_seed",
    "grid",
    "link_width",
    "router_pipeline",
    "link_latency",
    "buffer_bytes",
    "max_packet_bytes",
    "clock_period_ns",
    "coalescing",
    "core_cycles_per_record",
    "energy_router",
    "energy_link",
    "energy_buffer_write",
    "energy_buffer_read",
    "schedule",
    "zones",
    "watchdog",
    "workload",
    "series",
    "first_seed",
    "max_reps",
    "csv_path",
    "csv_column",
    "levels",
    "probation",
    "spacing",
    "verify",
    "trace",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

pub fn parse_grid(value: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Config(format!("grid: expected WIDTHxHEIGHT, got {value:?}"));
    let (w, h) = value.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

impl ExperimentConfig {
    pub fn preset(scale: Scale) -> Self {
        let machine = match scale {
            Scale::Desk => MachineConfig::desk(),
            Scale::Full => MachineConfig::full(),
        };
        Self {
            scale,
            machine,
            workload: WorkloadKind::Synthetic,
            series: 5,
            first_seed: 0,
            max_reps: 50,
            csv_path: None,
            csv_column: "value".into(),
            quantizer: QuantizerConfig::default(),
            verify: false,
        }
    }

    /// Resolves a list of assignments: the last `scale` picks the preset,
    /// the other keys are applied in order.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, CliError> {
        let scale = match pairs.iter().rev().find(|(k, _)| k == "scale") {
            Some((_, v)) => parse_scale(v)?,
            None => Scale::Desk,
        };
        let mut cfg = Self::preset(scale);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "scale") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let c = &mut self.machine.cortex;
        let n = &mut self.machine.net;
        match key {
            "scale" => *self = Self::preset(parse_scale(value)?),
            "columns" => c.num_columns = parse(key, value)?,
            "cells" => c.cells_per_column = parse(key, value)?,
            "density" => c.density = parse(key, value)?,
            "input_bits" => {
                c.input_bits = parse(key, value)?;
                self.machine.encoder.k = c.input_bits;
            }
            "receptive_field" => c.receptive_field = parse(key, value)?,
            "proximal_capacity" => c.proximal_capacity = parse(key, value)?,
            "perm_levels" => c.perm_levels = parse(key, value)?,
            "connected_fraction" => c.connected_fraction = parse(key, value)?,
            "sp_increment" => c.sp_increment = parse(key, value)?,
            "sp_decrement" => c.sp_decrement = parse(key, value)?,
            "tm_increment" => c.tm_increment = parse(key, value)?,
            "tm_decrement" => c.tm_decrement = parse(key, value)?,
            "activation_threshold" => c.activation_threshold = parse(key, value)?,
            "matching_threshold" => c.matching_threshold = parse(key, value)?,
            "max_segments" => c.max_segments_per_cell = parse(key, value)?,
            "max_synapses" => c.max_synapses_per_segment = parse(key, value)?,
            "learning" => c.learning = parse_bool(key, value)?,
            "cortex_seed" => c.seed = parse(key, value)?,
            "encoder_w" => self.machine.encoder.w = parse(key, value)?,
            "encoder_seed" => self.machine.encoder.master_seed = parse(key, value)?,
            "grid" => (n.width, n.height) = parse_grid(value)?,
            "link_width" => n.link_width = parse(key, value)?,
            "router_pipeline" => n.router_pipeline = parse(key, value)?,
            "link_latency" => n.link_latency = parse(key, value)?,
            "buffer_bytes" => n.buffer_bytes = parse(key, value)?,
            "max_packet_bytes" => n.max_packet_bytes = parse(key, value)?,
            "clock_period_ns" => n.clock_period_ns = parse(key, value)?,
            "coalescing" => n.coalescing = parse_bool(key, value)?,
            "core_cycles_per_record" => n.core_cycles_per_record = parse(key, value)?,
            "energy_router" => n.energy.router_traversal = parse(key, value)?,
            "energy_link" => n.energy.link_flit = parse(key, value)?,
            "energy_buffer_write" => n.energy.buffer_write = parse(key, value)?,
            "energy_buffer_read" => n.energy.buffer_read = parse(key, value)?,
            "schedule" => self.machine.schedule = value.parse().map_err(|e: claasic::Error| CliError::Config(format!("schedule: {e}")))?,
            "zones" => self.machine.zones = parse(key, value)?,
            "watchdog" => self.machine.watchdog = parse(key, value)?,
            "workload" => {
                self.workload = match value {
                    "synthetic" => WorkloadKind::Synthetic,
                    "csv" => WorkloadKind::Csv,
                    _ => return Err(CliError::Config(format!("workload: expected synthetic or csv, got {value:?}"))),
                }
            }
            "series" => self.series = parse(key, value)?,
            "first_seed" => self.first_seed = parse(key, value)?,
            "max_reps" => self.max_reps = parse(key, value)?,
            "csv_path" => self.csv_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            "csv_column" => self.csv_column = value.to_string(),
            "levels" => self.quantizer.levels = parse(key, value)?,
            "probation" => self.quantizer.probation = parse(key, value)?,
            "spacing" => self.quantizer.spacing = parse(key, value)?,
            "verify" => self.verify = parse_bool(key, value)?,
            "trace" => self.machine.net.trace = parse_bool(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let c = &self.machine.cortex;
        let n = &self.machine.net;
        match key {
            "scale" => match self.scale {
                Scale::Desk => "desk".into(),
                Scale::Full => "full".into(),
            },
            "columns" => c.num_columns.to_string(),
            "cells" => c.cells_per_column.to_string(),
            "density" => c.density.to_string(),
            "input_bits" => c.input_bits.to_string(),
            "receptive_field" => c.receptive_field.to_string(),
            "proximal_capacity" => c.proximal_capacity.to_string(),
            "perm_levels" => c.perm_levels.to_string(),
            "connected_fraction" => c.connected_fraction.to_string(),
            "sp_increment" => c.sp_increment.to_string(),
            "sp_decrement" => c.sp_decrement.to_string(),
            "tm_increment" => c.tm_increment.to_string(),
            "tm_decrement" => c.tm_decrement.to_string(),
            "activation_threshold" => c.activation_threshold.to_string(),
            "matching_threshold" => c.matching_threshold.to_string(),
            "max_segments" => c.max_segments_per_cell.to_string(),
            "max_synapses" => c.max_synapses_per_segment.to_string(),
            "learning" => c.learning.to_string(),
            "cortex_seed" => c.seed.to_string(),
            "encoder_w" => self.machine.encoder.w.to_string(),
            "encoder_seed" => self.machine.encoder.master_seed.to_string(),
            "grid" => format!("{}x{}", n.width, n.height),
            "link_width" => n.link_width.to_string(),
            "router_pipeline" => n.router_pipeline.to_string(),
            "link_latency" => n.link_latency.to_string(),
            "buffer_bytes" => n.buffer_bytes.to_string(),
            "max_packet_bytes" => n.max_packet_bytes.to_string(),
            "clock_period_ns" => n.clock_period_ns.to_string(),
            "coalescing" => n.coalescing.to_string(),
            "core_cycles_per_record" => n.core_cycles_per_record.to_string(),
            "energy_router" => n.energy.router_traversal.to_string(),
            "energy_link" => n.energy.link_flit.to_string(),
            "energy_buffer_write" => n.energy.buffer_write.to_string(),
            "energy_buffer_read" => n.energy.buffer_read.to_string(),
            "schedule" => match self.machine.schedule {
                Schedule::Sequential => "sequential".into(),
                Schedule::Pipelined => "pipelined".into(),
            },
            "zones" => self.machine.zones.to_string(),
            "watchdog" => self.machine.watchdog.to_string(),
            "workload" => match self.workload {
                WorkloadKind::Synthetic => "synthetic".into(),
                WorkloadKind::Csv => "csv".into(),
            },
            "series" => self.series.to_string(),
            "first_seed" => self.first_seed.to_string(),
            "max_reps" => self.max_reps.to_string(),
            "csv_path" => self.csv_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "csv_column" => self.csv_column.clone(),
            "levels" => self.quantizer.levels.to_string(),
            "probation" => self.quantizer.probation.to_string(),
            "spacing" => self.quantizer.spacing.to_string(),
            "verify" => self.verify.to_string(),
            "trace" => self.machine.net.trace.to_string(),
            _ => unreachable!("get called with unknown key {key}"),
        }
    }

    /// Resolved configuration as `key=value` lines, in [`KEYS`] order.
    pub fn to_lines(&self) -> Vec<String> {
        KEYS.iter().map(|k| format!("{k}={}", self.get(k))).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.machine.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.quantizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match self.workload {
            WorkloadKind::Synthetic => {
                if self.series == 0 || self.max_reps == 0 {
                    return Err(CliError::Config("series and max_reps must be positive".into()));
                }
            }
            WorkloadKind::Csv => {
                if self.csv_path.is_none() {
                    return Err(CliError::Config("csv_path: required when workload=csv".into()));
                }
            }
        }
        Ok(())
    }
}

fn parse_scale(value: &str) -> Result<Scale, CliError> {
    match value.trim() {
        "desk" => Ok(Scale::Desk),
        "full" => Ok(Scale::Full),
        other => Err(CliError::Config(format!("scale: expected desk or full, got {other:?}"))),
    }
}

/// Splits `key=value`.
pub fn parse_assignment(text: &str) -> Result<(String, String), CliError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected key=value, got {text:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Reads the assignments of a configuration file.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(parse_assignment)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_round_trips() {
        let cfg = ExperimentConfig::preset(Scale::Full);
        let pairs: Vec<(String, String)> = cfg.to_lines().iter().map(|l| parse_assignment(l).unwrap()).collect();
        let back = ExperimentConfig::from_pairs(&pairs).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_apply_in_order() {
        let pairs = vec![
            ("grid".to_string(), "2x2".to_string()),
            ("scale".to_string(), "desk".to_string()),
            ("coalescing".to_string(), "on".to_string()),
            ("grid".to_string(), "8x4".to_string()),
        ];
        let cfg = ExperimentConfig::from_pairs(&pairs).unwrap();
        assert_eq!((cfg.machine.net.width, cfg.machine.net.height), (8, 4));
        assert!(cfg.machine.net.coalescing);
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = ExperimentConfig::preset(Scale::Desk);
        let e = cfg.set("link_width", "wide").unwrap_err().to_string();
        assert!(e.contains("link_width"), "{e}");
        let e = cfg.set("nonsense", "1").unwrap_err().to_string();
        assert!(e.contains("nonsense"), "{e}");
        assert!(parse_grid("4by4").is_err());
        cfg.set("zones", "3").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn input_bits_moves_encoder_width() {
        let mut cfg = ExperimentConfig::preset(Scale::Desk);
        cfg.set("input_bits", "1024").unwrap();
        assert_eq!(cfg.machine.encoder.k, 1024);
        cfg.validate().unwrap();
    }
}

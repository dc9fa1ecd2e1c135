//! The accelerator: cortical columns distributed over the torus, one block of
//! columns per columnar core.
//!
//! Each epoch moves through three communication stages, each closed by a
//! drain barrier:
//!
//! 1. the encoder multicasts one proximal record per active input bit to the
//!    cores whose columns see that bit; cores compute overlaps;
//! 2. cores broadcast inhibition records `(column, overlap)` for positive
//!    overlaps; every core ranks them and learns which of its columns won;
//! 3. winning columns broadcast distal records for their active cells; every
//!    core rebuilds the active-cell set and computes its predictions, which
//!    travel to the classifier with the next stage's traffic.
//!
//! [`Schedule::Sequential`] runs the stages one after another (three drains
//! per epoch). [`Schedule::Pipelined`] overlaps three consecutive epochs so
//! that one barrier closes stage 1 of epoch `e`, stage 2 of `e - 1` and
//! stage 3 of `e - 2`.
//!
//! With `zones > 1` the grid is split into equal sub-grids; each zone is a
//! closed cortex over its own columns and consumes every `zones`-th input.
//! Inhibition and distal traffic never leave a zone.
//!
//! All decisions are made by the column rules of [`crate::cla`] from the
//! records a core actually received, so results match the reference model
//! bit for bit.

mod formats;
mod placement;
mod verify;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cla::{
    anomaly_score, global_inhibition, snapshot, winner_count, CellRef, CellSet, Column, Cortex, CortexParams,
    EpochResult, Region,
};
use crate::error::{config, Error, Result};
use crate::noc::{NetConfig, NetStats, Network, NodeSet, Packet, PacketKind};
use crate::sdr::{encode, Sdr, SdrParams};

pub use formats::{ceil_log2, make_packets, PacketFormats, FLAG_BURST};
pub use placement::Placement;
pub use verify::{verify_against_reference, Divergence, VerifyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Sequential,
    Pipelined,
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Schedule::Sequential),
            "pipelined" => Ok(Schedule::Pipelined),
            other => Err(Error::Config(format!("schedule must be sequential or pipelined, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub cortex: CortexParams,
    pub encoder: SdrParams,
    pub net: NetConfig,
    pub schedule: Schedule,
    pub zones: u32,
    /// Cycles without network progress before a drain counts as stuck.
    pub watchdog: u64,
}

impl MachineConfig {
    /// 512 columns of 16 cells on a 4x4 torus.
    pub fn desk() -> Self {
        Self {
            cortex: CortexParams::desk(),
            encoder: SdrParams::default(),
            net: NetConfig::with_dims(4, 4),
            schedule: Schedule::Sequential,
            zones: 1,
            watchdog: 100_000,
        }
    }

    /// 2025 columns of 32 cells on a 16x16 torus.
    pub fn full() -> Self {
        Self { cortex: CortexParams::full(), net: NetConfig::with_dims(16, 16), ..Self::desk() }
    }

    pub fn validate(&self) -> Result<()> {
        self.cortex.validate()?;
        self.encoder.validate()?;
        self.net.validate()?;
        if self.encoder.k != self.cortex.input_bits {
            return config(format!(
                "encoder.k ({}) must equal cortex.input_bits ({})",
                self.encoder.k, self.cortex.input_bits
            ));
        }
        if self.watchdog == 0 {
            return config("watchdog must be positive");
        }
        PacketFormats::for_params(&self.cortex)?;
        Placement::new(self.cortex.num_columns, self.net.width, self.net.height, self.zones)?;
        Ok(())
    }
}

/// Result of one input epoch plus the machine cost attributed to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub result: EpochResult,
    /// Network cycles of the barrier steps this epoch entered in. Zones that
    /// share a step each report its full length.
    pub cycles: u64,
    /// Drain barriers charged to this epoch.
    pub drains: u64,
    pub net: NetStats,
}

#[derive(Debug, Clone)]
struct Outgoing {
    kind: PacketKind,
    dest: NodeSet,
    record: u64,
    flags: u8,
}

#[derive(Debug, Clone, Default)]
struct Inbox {
    bits: Vec<u32>,
    inhibition: Vec<(u32, u32)>,
    distal: Vec<(u32, u16, bool)>,
}

#[derive(Debug, Clone)]
struct Core {
    zone: usize,
    columns: Vec<Column>,
    outbox: Vec<Outgoing>,
    inbox: Inbox,
    prev_active: CellSet,
    prev_winners: Vec<CellRef>,
    /// Input bitmap of the epoch waiting for its inhibition stage.
    staged_input: Vec<u64>,
    /// Own columns predicted for the next epoch.
    predicted: Vec<u32>,
}

#[derive(Debug, Clone)]
struct Zone {
    columns: Vec<u32>,
    n_win: usize,
    mask: NodeSet,
    interface: usize,
    /// Epochs this zone has taken in; seeds the learning randomness.
    epoch: u64,
    /// Predictions received by the classifier for the next epoch to finish.
    predicted_next: Vec<u32>,
    /// Per input bit, the nodes with a column whose receptive field holds it.
    proximal_masks: Vec<NodeSet>,
}

#[derive(Debug, Clone)]
struct Slot {
    stream_epoch: u64,
    zone: usize,
    zone_epoch: u64,
    input: Sdr,
    cycles: u64,
    drains: u64,
    net: NetStats,
    result: Option<EpochResult>,
}

#[derive(Debug, Default)]
struct StepPlan {
    proximal: Vec<usize>,
    inhibition: Vec<usize>,
    distal: Vec<usize>,
    /// Slots charged with this step's cycles and traffic.
    owners: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Machine {
    cfg: MachineConfig,
    placement: Placement,
    formats: PacketFormats,
    net: Network,
    cores: Vec<Core>,
    zones: Vec<Zone>,
    step_tag: u32,
    stream_epoch: u64,
    drains: u64,
    cross_zone_deliveries: u64,
}

/// Fresh per-zone reference regions for a configuration.
pub fn reference_regions(cfg: &MachineConfig) -> Result<Vec<Region>> {
    cfg.validate()?;
    let placement = Placement::new(cfg.cortex.num_columns, cfg.net.width, cfg.net.height, cfg.zones)?;
    (0..placement.zones())
        .map(|z| Ok(Region::new(Cortex::new(cfg.cortex.clone(), &placement.zone_columns(z))?)))
        .collect()
}

impl Machine {
    pub fn new(cfg: MachineConfig) -> Result<Self> {
        let regions = reference_regions(&cfg)?;
        Self::from_regions(cfg, regions)
    }

    /// Builds a machine whose cortex state is `regions`, one per zone.
    pub fn from_regions(cfg: MachineConfig, regions: Vec<Region>) -> Result<Self> {
        cfg.validate()?;
        let placement = Placement::new(cfg.cortex.num_columns, cfg.net.width, cfg.net.height, cfg.zones)?;
        let formats = PacketFormats::for_params(&cfg.cortex)?;
        if regions.len() != placement.zones() {
            return Err(Error::Snapshot(format!(
                "snapshot holds {} regions, configuration has {} zones",
                regions.len(),
                placement.zones()
            )));
        }
        let total_cells = cfg.cortex.total_cells();
        let mut cores: Vec<Core> = (0..placement.nodes())
            .map(|n| Core {
                zone: placement.zone_of(n),
                columns: Vec::new(),
                outbox: Vec::new(),
                inbox: Inbox::default(),
                prev_active: CellSet::new(total_cells),
                prev_winners: Vec::new(),
                staged_input: Vec::new(),
                predicted: Vec::new(),
            })
            .collect();
        let mut zones = Vec::with_capacity(regions.len());
        for (z, region) in regions.into_iter().enumerate() {
            let columns = placement.zone_columns(z);
            if region.cortex.column_ids() != columns {
                return Err(Error::Snapshot(format!("region {z} does not hold the columns of zone {z}")));
            }
            if region.params().num_columns != cfg.cortex.num_columns
                || region.params().cells_per_column != cfg.cortex.cells_per_column
                || region.params().input_bits != cfg.cortex.input_bits
            {
                return Err(Error::Snapshot(format!("region {z} has a different cortex geometry")));
            }
            let interface = placement.interface_node(z);
            let mut proximal_masks = vec![NodeSet::new(placement.nodes()); cfg.cortex.input_bits as usize];
            for &n in placement.zone_nodes(z) {
                for col in placement.columns(n) {
                    let column = region.cortex.column(col).expect("zone column present");
                    for &(bit, _) in &column.proximal.synapses {
                        proximal_masks[bit as usize].insert(n);
                    }
                }
            }
            for &n in placement.zone_nodes(z) {
                let core = &mut cores[n];
                core.columns = placement
                    .columns(n)
                    .map(|c| region.cortex.column(c).expect("zone column present").clone())
                    .collect();
                core.prev_active = region.prev_active.clone();
                core.prev_winners = region.prev_winners.clone();
                let range = placement.columns(n);
                core.predicted = region.predicted_columns.iter().copied().filter(|c| range.contains(c)).collect();
                for &col in &core.predicted {
                    core.outbox.push(Outgoing {
                        kind: PacketKind::Prediction,
                        dest: NodeSet::single(placement.nodes(), interface),
                        record: col as u64,
                        flags: 0,
                    });
                }
            }
            zones.push(Zone {
                n_win: winner_count(cfg.cortex.density, columns.len()),
                mask: placement.zone_mask(z),
                interface,
                columns,
                epoch: region.epoch,
                predicted_next: Vec::new(),
                proximal_masks,
            });
        }
        let net = Network::new(cfg.net.clone())?;
        let stream_epoch = zones.iter().map(|z| z.epoch).sum();
        Ok(Self {
            cfg,
            placement,
            formats,
            net,
            cores,
            zones,
            step_tag: 0,
            stream_epoch,
            drains: 0,
            cross_zone_deliveries: 0,
        })
    }

    /// Per-zone cortex state in the reference model's form.
    pub fn to_regions(&self) -> Vec<Region> {
        self.zones
            .iter()
            .enumerate()
            .map(|(z, zone)| {
                let nodes = self.placement.zone_nodes(z);
                let columns: Vec<Column> = nodes.iter().flat_map(|&n| self.cores[n].columns.iter().cloned()).collect();
                let cortex = Cortex::from_parts(self.cfg.cortex.clone(), columns).expect("machine columns are valid");
                let head = &self.cores[zone.interface];
                let mut predicted: Vec<u32> = nodes.iter().flat_map(|&n| self.cores[n].predicted.iter().copied()).collect();
                predicted.sort_unstable();
                Region {
                    cortex,
                    prev_active: head.prev_active.clone(),
                    prev_winners: head.prev_winners.clone(),
                    predicted_columns: predicted,
                    epoch: zone.epoch,
                }
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        snapshot::save(path, &self.to_regions())
    }

    pub fn load(cfg: MachineConfig, path: &Path) -> Result<Self> {
        let regions = snapshot::load(path)?;
        Self::from_regions(cfg, regions)
    }

    pub fn config(&self) -> &MachineConfig {
        &self.cfg
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn formats(&self) -> &PacketFormats {
        &self.formats
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn stats(&self) -> NetStats {
        self.net.stats()
    }

    /// Drain barriers executed so far.
    pub fn drains(&self) -> u64 {
        self.drains
    }

    /// Inhibition or distal packets delivered outside their source zone.
    pub fn cross_zone_deliveries(&self) -> u64 {
        self.cross_zone_deliveries
    }

    pub fn set_learning(&mut self, on: bool) {
        self.cfg.cortex.learning = on;
    }

    pub fn set_schedule(&mut self, schedule: Schedule) {
        self.cfg.schedule = schedule;
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        self.net.take_trace()
    }

    /// Encodes and runs a stream of scalar values.
    pub fn run_values(&mut self, values: &[u64]) -> Result<Vec<EpochReport>> {
        let inputs = values.iter().map(|&v| encode(v, &self.cfg.encoder)).collect::<Result<Vec<_>>>()?;
        self.run_sdrs(&inputs)
    }

    /// Runs a batch of input epochs to completion and returns one report per
    /// input, in input order.
    pub fn run_sdrs(&mut self, inputs: &[Sdr]) -> Result<Vec<EpochReport>> {
        if let Some(bad) = inputs.iter().find(|s| s.width() != self.cfg.cortex.input_bits) {
            return Err(Error::Usage(format!(
                "input width {} does not match cortex input_bits {}",
                bad.width(),
                self.cfg.cortex.input_bits
            )));
        }
        let n_zones = self.zones.len();
        let mut slots: Vec<Slot> = inputs
            .iter()
            .enumerate()
            .map(|(i, input)| Slot {
                stream_epoch: self.stream_epoch + i as u64,
                zone: ((self.stream_epoch + i as u64) % n_zones as u64) as usize,
                zone_epoch: 0,
                input: input.clone(),
                cycles: 0,
                drains: 0,
                net: NetStats::default(),
                result: None,
            })
            .collect();
        let waves: Vec<Vec<usize>> = (0..slots.len()).collect::<Vec<_>>().chunks(n_zones).map(<[usize]>::to_vec).collect();
        match self.cfg.schedule {
            Schedule::Sequential => {
                for wave in &waves {
                    let plans = [
                        StepPlan { proximal: wave.clone(), owners: wave.clone(), ..Default::default() },
                        StepPlan { inhibition: wave.clone(), owners: wave.clone(), ..Default::default() },
                        StepPlan { distal: wave.clone(), owners: wave.clone(), ..Default::default() },
                    ];
                    for plan in &plans {
                        self.step(plan, &mut slots)?;
                    }
                }
            }
            Schedule::Pipelined => {
                let m = waves.len();
                for s in 0..m + 2 {
                    let at = |offset: usize| {
                        s.checked_sub(offset).and_then(|i| waves.get(i)).cloned().unwrap_or_default()
                    };
                    let proximal = at(0);
                    let owners = if proximal.is_empty() { waves.last().cloned().unwrap_or_default() } else { proximal.clone() };
                    let plan = StepPlan { proximal, inhibition: at(1), distal: at(2), owners };
                    self.step(&plan, &mut slots)?;
                }
            }
        }
        self.stream_epoch += inputs.len() as u64;
        Ok(slots
            .into_iter()
            .map(|s| EpochReport {
                result: s.result.expect("every slot completes"),
                cycles: s.cycles,
                drains: s.drains,
                net: s.net,
            })
            .collect())
    }

    /// One barrier step: inject every outbox, drain, then run the stage
    /// computations the plan calls for.
    fn step(&mut self, plan: &StepPlan, slots: &mut [Slot]) -> Result<()> {
        for &s in &plan.proximal {
            let slot = &mut slots[s];
            let zone = &mut self.zones[slot.zone];
            slot.zone_epoch = zone.epoch;
            zone.epoch += 1;
            let encoder = &mut self.cores[zone.interface];
            for &bit in slot.input.active() {
                let dest = &zone.proximal_masks[bit as usize];
                if !dest.is_empty() {
                    encoder.outbox.push(Outgoing {
                        kind: PacketKind::Proximal,
                        dest: dest.clone(),
                        record: bit as u64,
                        flags: 0,
                    });
                }
            }
        }

        let tag = self.step_tag;
        let before = self.net.stats();
        let start = self.net.cycle();
        for n in 0..self.cores.len() {
            for out in std::mem::take(&mut self.cores[n].outbox) {
                let bits = self.formats.width(out.kind);
                self.net
                    .inject(Packet::new(out.kind, n, out.dest, tag, bits, vec![out.record]).with_flags(out.flags))?;
            }
        }
        self.net.launch_brooms(tag, self.cfg.schedule == Schedule::Pipelined);
        self.net.run_until_drained(self.cfg.watchdog)?;
        let busy = (0..self.cores.len()).map(|n| self.net.core_busy_until(n)).max().unwrap_or(0);
        while self.net.cycle() < busy {
            self.net.tick();
        }
        self.step_tag += 1;
        self.drains += 1;
        let cycles = self.net.cycle() - start;
        let delta = self.net.stats().since(&before);
        for &s in &plan.owners {
            slots[s].cycles += cycles;
            slots[s].drains += 1;
            slots[s].net.add(&delta);
        }

        for d in self.net.take_deliveries() {
            let p = &d.payload;
            let core = &mut self.cores[d.node];
            if matches!(p.kind, PacketKind::Inhibition | PacketKind::Distal) && self.placement.zone_of(p.src) != core.zone {
                self.cross_zone_deliveries += 1;
            }
            match p.kind {
                PacketKind::Proximal => core.inbox.bits.extend(p.records.iter().map(|&r| r as u32)),
                PacketKind::Inhibition => {
                    core.inbox.inhibition.extend(p.records.iter().map(|&r| self.formats.split_inhibition(r)))
                }
                PacketKind::Distal => {
                    let burst = p.flags & FLAG_BURST != 0;
                    core.inbox.distal.extend(p.records.iter().map(|&r| {
                        let (col, cell) = self.formats.split_distal(r);
                        (col, cell, burst)
                    }))
                }
                PacketKind::Prediction => {
                    let zone = core.zone;
                    self.zones[zone].predicted_next.extend(p.records.iter().map(|&r| r as u32))
                }
                PacketKind::Broom => {}
            }
        }

        for &s in &plan.distal {
            self.finish_distal(&mut slots[s]);
        }
        for &s in &plan.inhibition {
            self.finish_inhibition(&slots[s]);
        }
        for &s in &plan.proximal {
            self.finish_proximal(&slots[s]);
        }
        for core in &mut self.cores {
            core.inbox = Inbox::default();
        }
        Ok(())
    }

    /// Stage 1 close: overlaps from the received input bits.
    fn finish_proximal(&mut self, slot: &Slot) {
        let params = &self.cfg.cortex;
        let zone = &self.zones[slot.zone];
        let words = (params.input_bits as usize).div_ceil(64);
        for &n in self.placement.zone_nodes(slot.zone) {
            let core = &mut self.cores[n];
            let mut bitmap = vec![0u64; words];
            for &bit in &core.inbox.bits {
                bitmap[bit as usize / 64] |= 1 << (bit % 64);
            }
            for col in &core.columns {
                let overlap = col.overlap(&bitmap, params);
                if overlap > 0 {
                    core.outbox.push(Outgoing {
                        kind: PacketKind::Inhibition,
                        dest: zone.mask.clone(),
                        record: self.formats.inhibition_record(col.id, overlap),
                        flags: 0,
                    });
                }
            }
            core.staged_input = bitmap;
        }
    }

    /// Stage 2 close: rank the received overlaps, activate and train the
    /// winning local columns, emit their active cells.
    fn finish_inhibition(&mut self, slot: &Slot) {
        let params = &self.cfg.cortex;
        let zone = &self.zones[slot.zone];
        let t = params.cells_per_column;
        for &n in self.placement.zone_nodes(slot.zone) {
            let core = &mut self.cores[n];
            let mut overlaps: Vec<(u32, u32)> = zone.columns.iter().map(|&c| (c, 0)).collect();
            for &(col, overlap) in &core.inbox.inhibition {
                if let Ok(i) = zone.columns.binary_search(&col) {
                    overlaps[i].1 = overlap;
                }
            }
            let winners = global_inhibition(&overlaps, zone.n_win);
            let Some(first) = core.columns.first().map(|c| c.id) else { continue };
            let lo = winners.partition_point(|&c| c < first);
            let hi = winners.partition_point(|&c| c < first + core.columns.len() as u32);
            for &id in &winners[lo..hi] {
                let col = &mut core.columns[(id - first) as usize];
                let act = col.activate();
                if params.learning {
                    col.adapt_proximal(&core.staged_input, params, slot.zone_epoch);
                    col.adapt_distal(&act, &core.prev_active, &core.prev_winners, params, slot.zone_epoch);
                }
                let (cells, flags) = if act.bursting {
                    (&act.winner_cells, FLAG_BURST)
                } else {
                    (&act.active_cells, 0)
                };
                debug_assert!(cells.iter().all(|&c| (c as u32) < t));
                for &cell in cells {
                    core.outbox.push(Outgoing {
                        kind: PacketKind::Distal,
                        dest: zone.mask.clone(),
                        record: self.formats.distal_record(id, cell),
                        flags,
                    });
                }
            }
            core.staged_input = Vec::new();
        }
    }

    /// Stage 3 close: rebuild the active cells, predict, and let the
    /// classifier score the epoch.
    fn finish_distal(&mut self, slot: &mut Slot) {
        let params = &self.cfg.cortex;
        let t = params.cells_per_column;
        let total = params.total_cells();
        let nodes = self.placement.nodes();
        let zone = &mut self.zones[slot.zone];
        let mut next_predicted = Vec::new();
        for &n in self.placement.zone_nodes(slot.zone) {
            let core = &mut self.cores[n];
            let mut active = CellSet::new(total);
            let mut winners = Vec::new();
            for &(col, cell, burst) in &core.inbox.distal {
                if burst {
                    for c in 0..t as u16 {
                        active.insert(CellRef::new(col, c, t));
                    }
                } else {
                    active.insert(CellRef::new(col, cell, t));
                }
                winners.push(CellRef::new(col, cell, t));
            }
            winners.sort_unstable();
            core.predicted = core.columns.iter_mut().filter_map(|c| c.predict(&active, params).then_some(c.id)).collect();
            for &col in &core.predicted {
                core.outbox.push(Outgoing {
                    kind: PacketKind::Prediction,
                    dest: NodeSet::single(nodes, zone.interface),
                    record: col as u64,
                    flags: 0,
                });
            }
            next_predicted.extend_from_slice(&core.predicted);
            core.prev_active = active;
            core.prev_winners = winners;
        }

        let classifier = &self.cores[zone.interface];
        let active: Vec<u32> =
            classifier.inbox.distal.iter().map(|d| d.0).collect::<BTreeSet<_>>().into_iter().collect();
        let bursting: Vec<u32> = classifier
            .inbox
            .distal
            .iter()
            .filter(|d| d.2)
            .map(|d| d.0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut predicted = std::mem::take(&mut zone.predicted_next);
        predicted.sort_unstable();
        predicted.dedup();
        next_predicted.sort_unstable();
        slot.result = Some(EpochResult {
            epoch: slot.stream_epoch,
            zone: slot.zone as u32,
            anomaly: anomaly_score(&active, &predicted),
            active_columns: active,
            predicted_columns: predicted,
            next_predicted,
            bursting_columns: bursting,
        });
    }
}

/// The reference model arranged like a zoned machine: one region per zone,
/// input `i` of the stream going to zone `i mod zones`.
#[derive(Debug, Clone)]
pub struct Reference {
    encoder: SdrParams,
    regions: Vec<Region>,
    stream_epoch: u64,
}

impl Reference {
    pub fn new(cfg: &MachineConfig) -> Result<Self> {
        Ok(Self { encoder: cfg.encoder, regions: reference_regions(cfg)?, stream_epoch: 0 })
    }

    pub fn from_regions(encoder: SdrParams, regions: Vec<Region>) -> Self {
        let stream_epoch = regions.iter().map(|r| r.epoch).sum();
        Self { encoder, regions, stream_epoch }
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn set_learning(&mut self, on: bool) {
        for r in &mut self.regions {
            r.cortex.set_learning(on);
        }
    }

    pub fn run_values(&mut self, values: &[u64]) -> Result<Vec<EpochResult>> {
        let inputs = values.iter().map(|&v| encode(v, &self.encoder)).collect::<Result<Vec<_>>>()?;
        self.run_sdrs(&inputs)
    }

    pub fn run_sdrs(&mut self, inputs: &[Sdr]) -> Result<Vec<EpochResult>> {
        let zones = self.regions.len();
        inputs
            .iter()
            .map(|input| {
                let z = (self.stream_epoch % zones as u64) as usize;
                let mut r = self.regions[z].epoch(input)?;
                r.epoch = self.stream_epoch;
                r.zone = z as u32;
                self.stream_epoch += 1;
                Ok(r)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;

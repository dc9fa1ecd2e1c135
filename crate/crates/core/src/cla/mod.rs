//! Sequential, network-free reference implementation of the cortical learning
//! algorithm: spatial pooling with global inhibition, temporal memory with
//! bursting, and the anomaly score.
//!
//! [`Region::epoch`] is the golden model that the accelerator is checked
//! against. The per-column rules live in [`column`] and are shared by both.

pub mod column;
pub mod inhibition;
pub mod snapshot;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::sdr::Sdr;

pub use column::{Activation, Cell, Column, DistalSegment, DistalSynapse, Permanence, ProximalSegment};
pub use inhibition::{global_inhibition, winner_count, wins_locally};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CortexParams {
    pub num_columns: u32,
    pub cells_per_column: u32,
    /// Fraction of columns that win inhibition.
    pub density: f64,
    /// Encoder width `k`; receptive fields index into it.
    pub input_bits: u32,
    pub receptive_field: u32,
    pub proximal_capacity: u32,
    /// Number of permanence levels (16 for 4-bit storage).
    pub perm_levels: u32,
    /// Connected threshold as a fraction of full scale (8/15 by default).
    pub connected_fraction: f64,
    pub sp_increment: f64,
    pub sp_decrement: f64,
    pub tm_increment: f64,
    pub tm_decrement: f64,
    /// Connected active synapses for a segment to become active.
    pub activation_threshold: u32,
    /// Potential active synapses for a segment to be reused on a burst.
    pub matching_threshold: u32,
    pub max_segments_per_cell: u32,
    pub max_synapses_per_segment: u32,
    pub learning: bool,
    pub seed: u64,
}

/// Permanence constants resolved to integer levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermanenceScale {
    pub max: u8,
    pub connected: u8,
    pub init_low: u8,
    pub init_high: u8,
    pub distal_initial: u8,
    pub sp_increment: f64,
    pub sp_decrement: f64,
    pub tm_increment: f64,
    pub tm_decrement: f64,
}

impl CortexParams {
    /// 45x45 columns, 32 cells, 2045-bit input.
    pub fn full() -> Self {
        Self {
            num_columns: 2025,
            cells_per_column: 32,
            density: 0.02,
            input_bits: 2045,
            receptive_field: 32,
            proximal_capacity: 128,
            perm_levels: 16,
            connected_fraction: 8.0 / 15.0,
            sp_increment: 0.08,
            sp_decrement: 0.003,
            tm_increment: 0.1,
            tm_decrement: 0.1,
            activation_threshold: 20,
            matching_threshold: 10,
            max_segments_per_cell: 128,
            max_synapses_per_segment: 40,
            learning: true,
            seed: 42,
        }
    }

    /// Small cortex for quick runs: 512 columns, 16 cells, 10 winners.
    pub fn desk() -> Self {
        Self {
            num_columns: 512,
            cells_per_column: 16,
            activation_threshold: 5,
            matching_threshold: 3,
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_columns == 0 || self.cells_per_column == 0 {
            return config("cortex needs at least one column and one cell");
        }
        if self.cells_per_column > u16::MAX as u32 {
            return config("cells_per_column exceeds 65535");
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return config(format!("density {} outside (0, 1]", self.density));
        }
        if !(2..=256).contains(&self.perm_levels) {
            return config(format!("perm_levels {} outside [2, 256]", self.perm_levels));
        }
        if self.input_bits == 0 || self.receptive_field == 0 || self.proximal_capacity == 0 {
            return config("input_bits, receptive_field and proximal_capacity must be positive");
        }
        if self.max_segments_per_cell == 0 || self.max_synapses_per_segment == 0 {
            return config("segment and synapse caps must be positive");
        }
        if self.activation_threshold == 0 {
            return config("activation_threshold must be positive");
        }
        Ok(())
    }

    pub fn scale(&self) -> PermanenceScale {
        let max = (self.perm_levels - 1) as f64;
        let level = |f: f64| (f * max).round() as u8;
        PermanenceScale {
            max: max as u8,
            connected: level(self.connected_fraction),
            init_low: level(6.0 / 15.0),
            init_high: level(9.0 / 15.0),
            distal_initial: level(0.6),
            sp_increment: self.sp_increment * max,
            sp_decrement: self.sp_decrement * max,
            tm_increment: self.tm_increment * max,
            tm_decrement: self.tm_decrement * max,
        }
    }

    pub fn total_cells(&self) -> usize {
        self.num_columns as usize * self.cells_per_column as usize
    }
}

/// Global cell identifier: `column * cells_per_column + cell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellRef(pub u32);

impl CellRef {
    pub fn new(column: u32, cell: u16, cells_per_column: u32) -> Self {
        Self(column * cells_per_column + cell as u32)
    }

    pub fn column(self, cells_per_column: u32) -> u32 {
        self.0 / cells_per_column
    }

    pub fn cell(self, cells_per_column: u32) -> u16 {
        (self.0 % cells_per_column) as u16
    }
}

/// Dense set of global cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    words: Vec<u64>,
}

impl CellSet {
    pub fn new(total_cells: usize) -> Self {
        Self { words: vec![0; total_cells.div_ceil(64)] }
    }

    pub fn from_cells(total_cells: usize, cells: &[CellRef]) -> Self {
        let mut set = Self::new(total_cells);
        for &c in cells {
            set.insert(c);
        }
        set
    }

    pub fn insert(&mut self, c: CellRef) {
        self.words[c.0 as usize / 64] |= 1 << (c.0 % 64);
    }

    pub fn contains(&self, c: CellRef) -> bool {
        self.words
            .get(c.0 as usize / 64)
            .is_some_and(|w| w & (1 << (c.0 % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = CellRef> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| CellRef((i * 64 + b) as u32))
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn from_words(words: Vec<u64>) -> Self {
        Self { words }
    }
}

/// The columns of one inhibition domain (the whole cortex, or one zone).
#[derive(Debug, Clone, PartialEq)]
pub struct Cortex {
    params: CortexParams,
    columns: Vec<Column>,
    /// Global column id to position in `columns`, `u32::MAX` when absent.
    index: Vec<u32>,
    n_win: usize,
}

impl Cortex {
    /// A cortex owning the given global column ids (ascending, unique).
    pub fn new(params: CortexParams, ids: &[u32]) -> Result<Self> {
        params.validate()?;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage("column ids must be strictly ascending".into()));
        }
        if ids.last().is_some_and(|&id| id >= params.num_columns) {
            return Err(Error::Usage("column id beyond num_columns".into()));
        }
        let mut index = vec![u32::MAX; params.num_columns as usize];
        for (i, &id) in ids.iter().enumerate() {
            index[id as usize] = i as u32;
        }
        let columns = ids.iter().map(|&id| Column::new(id, &params)).collect();
        let n_win = winner_count(params.density, ids.len());
        Ok(Self { params, columns, index, n_win })
    }

    pub fn full(params: CortexParams) -> Result<Self> {
        let ids: Vec<u32> = (0..params.num_columns).collect();
        Self::new(params, &ids)
    }

    pub fn params(&self) -> &CortexParams {
        &self.params
    }

    pub fn set_learning(&mut self, on: bool) {
        self.params.learning = on;
    }

    pub fn n_win(&self) -> usize {
        self.n_win
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_ids(&self) -> Vec<u32> {
        self.columns.iter().map(|c| c.id).collect()
    }

    pub fn column(&self, id: u32) -> Option<&Column> {
        let i = *self.index.get(id as usize)?;
        self.columns.get(i as usize)
    }

    pub fn column_mut(&mut self, id: u32) -> Option<&mut Column> {
        let i = *self.index.get(id as usize)?;
        self.columns.get_mut(i as usize)
    }

    pub(crate) fn from_parts(params: CortexParams, columns: Vec<Column>) -> Result<Self> {
        let ids: Vec<u32> = columns.iter().map(|c| c.id).collect();
        let mut cortex = Self::new(params, &ids)?;
        cortex.columns = columns;
        Ok(cortex)
    }

    /// Per-column overlap with `input`, as `(column id, overlap)`.
    pub fn compute_overlaps(&self, input: &Sdr) -> Result<Vec<(u32, u32)>> {
        if input.width() != self.params.input_bits {
            return Err(Error::Usage(format!(
                "input width {} does not match cortex input_bits {}",
                input.width(),
                self.params.input_bits
            )));
        }
        let bitmap = input.to_bitmap();
        Ok(self
            .columns
            .iter()
            .map(|c| (c.id, c.overlap(&bitmap, &self.params)))
            .collect())
    }
}

/// `|active \ predicted| / |active|`; both slices ascending. Defined as 0 for
/// an empty active set.
pub fn anomaly_score(active: &[u32], predicted: &[u32]) -> f64 {
    if active.is_empty() {
        return 0.0;
    }
    let missed = active.iter().filter(|c| predicted.binary_search(c).is_err()).count();
    missed as f64 / active.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochResult {
    pub epoch: u64,
    /// Scale-out zone that processed this epoch (0 when unzoned).
    pub zone: u32,
    pub active_columns: Vec<u32>,
    /// Columns that had been predicted for this epoch.
    pub predicted_columns: Vec<u32>,
    /// Columns predicted for the following epoch.
    pub next_predicted: Vec<u32>,
    pub bursting_columns: Vec<u32>,
    pub anomaly: f64,
}

/// Outcome of the temporal step for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalStep {
    pub activations: Vec<Activation>,
    pub active_cells: Vec<CellRef>,
    pub winner_cells: Vec<CellRef>,
    pub bursting_columns: Vec<u32>,
}

/// A cortex together with the activity carried from one epoch to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub cortex: Cortex,
    pub prev_active: CellSet,
    pub prev_winners: Vec<CellRef>,
    /// Columns predicted for the upcoming epoch.
    pub predicted_columns: Vec<u32>,
    /// Epochs processed so far.
    pub epoch: u64,
}

impl Region {
    pub fn new(cortex: Cortex) -> Self {
        let total = cortex.params().total_cells();
        Self {
            cortex,
            prev_active: CellSet::new(total),
            prev_winners: Vec::new(),
            predicted_columns: Vec::new(),
            epoch: 0,
        }
    }

    pub fn params(&self) -> &CortexParams {
        self.cortex.params()
    }

    /// Activates the winning columns using the predictions left by the
    /// previous epoch. Does not learn.
    pub fn temporal_step(&self, winners: &[u32]) -> TemporalStep {
        let t = self.params().cells_per_column;
        let mut step = TemporalStep {
            activations: Vec::with_capacity(winners.len()),
            active_cells: Vec::new(),
            winner_cells: Vec::new(),
            bursting_columns: Vec::new(),
        };
        for &id in winners {
            let act = self.cortex.column(id).expect("winner belongs to cortex").activate();
            step.active_cells.extend(act.active_cells.iter().map(|&c| CellRef::new(id, c, t)));
            step.winner_cells.extend(act.winner_cells.iter().map(|&c| CellRef::new(id, c, t)));
            if act.bursting {
                step.bursting_columns.push(id);
            }
            step.activations.push(act);
        }
        step
    }

    pub fn adapt_proximal(&mut self, input: &Sdr, winners: &[u32]) {
        let bitmap = input.to_bitmap();
        let epoch = self.epoch;
        let params = self.cortex.params().clone();
        for &id in winners {
            if let Some(col) = self.cortex.column_mut(id) {
                col.adapt_proximal(&bitmap, &params, epoch);
            }
        }
    }

    pub fn adapt_distal(&mut self, step: &TemporalStep) {
        let epoch = self.epoch;
        let params = self.cortex.params().clone();
        for act in &step.activations {
            let col = self.cortex.column_mut(act.column).expect("active column belongs to cortex");
            col.adapt_distal(act, &self.prev_active, &self.prev_winners, &params, epoch);
        }
    }

    /// Recomputes every column's prediction state against `active` and
    /// returns the predicted column ids, ascending.
    pub fn compute_predictions(&mut self, active: &CellSet) -> Vec<u32> {
        let params = self.cortex.params().clone();
        self.cortex
            .columns
            .iter_mut()
            .filter_map(|c| c.predict(active, &params).then_some(c.id))
            .collect()
    }

    /// One full epoch: overlap, inhibition, activation, learning, prediction.
    pub fn epoch(&mut self, input: &Sdr) -> Result<EpochResult> {
        let overlaps = self.cortex.compute_overlaps(input)?;
        let winners = global_inhibition(&overlaps, self.cortex.n_win());
        let predicted_before = std::mem::take(&mut self.predicted_columns);
        let step = self.temporal_step(&winners);
        if self.params().learning {
            self.adapt_proximal(input, &winners);
            self.adapt_distal(&step);
        }
        let active = CellSet::from_cells(self.params().total_cells(), &step.active_cells);
        let next = self.compute_predictions(&active);
        let result = EpochResult {
            epoch: self.epoch,
            zone: 0,
            anomaly: anomaly_score(&winners, &predicted_before),
            active_columns: winners,
            predicted_columns: predicted_before,
            next_predicted: next.clone(),
            bursting_columns: step.bursting_columns,
        };
        self.prev_active = active;
        self.prev_winners = step.winner_cells;
        self.predicted_columns = next;
        self.epoch += 1;
        Ok(result)
    }
}

//! Columns, cells, segments and the per-column learning rules.
//!
//! Every rule here touches exactly one column and draws randomness from a
//! stream keyed by `(seed, column, epoch)`, so a set of columns can be
//! processed in any order (or on different simulated cores) with identical
//! results.

use crate::rng::{Purpose, XorShift64Star};

use super::{CellRef, CellSet, CortexParams};

/// A quantized synapse strength in `[0, levels - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Permanence(pub u8);

impl Permanence {
    pub fn is_connected(self, threshold: u8) -> bool {
        self.0 >= threshold
    }

    pub fn increase(&mut self, levels: u32, max: u8) {
        self.0 = (self.0 as u32 + levels).min(max as u32) as u8;
    }

    pub fn decrease(&mut self, levels: u32) {
        self.0 = (self.0 as u32).saturating_sub(levels) as u8;
    }
}

/// Feed-forward synapses of one column, sorted by input bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProximalSegment {
    pub synapses: Vec<(u32, Permanence)>,
}

impl ProximalSegment {
    pub fn connected_count(&self, input: &[u64], threshold: u8) -> u32 {
        self.synapses
            .iter()
            .filter(|(bit, p)| p.is_connected(threshold) && bit_set(input, *bit))
            .count() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistalSynapse {
    pub presynaptic: CellRef,
    pub permanence: Permanence,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DistalSegment {
    pub synapses: Vec<DistalSynapse>,
    /// Epoch of the last reinforcement; drives eviction.
    pub last_used: u64,
}

impl DistalSegment {
    fn has_presynaptic(&self, cell: CellRef) -> bool {
        self.synapses.iter().any(|s| s.presynaptic == cell)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cell {
    pub segments: Vec<DistalSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentRef {
    pub cell: u16,
    pub segment: u16,
}

/// Outcome of the latest prediction pass over a column.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredictionState {
    /// Segments with at least `activation_threshold` connected active synapses.
    pub active_segments: Vec<SegmentRef>,
    /// Segment with the most potential (permanence > 0) active synapses, if
    /// that count reached `matching_threshold`.
    pub best_match: Option<(SegmentRef, u32)>,
}

impl PredictionState {
    pub fn is_predicted(&self) -> bool {
        !self.active_segments.is_empty()
    }

    pub fn predictive_cells(&self) -> Vec<u16> {
        let mut cells: Vec<u16> = self.active_segments.iter().map(|s| s.cell).collect();
        cells.dedup();
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LearnTarget {
    Reinforce,
    Extend(SegmentRef),
    Grow(u16),
}

/// What an active column contributes to the current epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activation {
    pub column: u32,
    /// Active cells, ascending. All cells when bursting.
    pub active_cells: Vec<u16>,
    /// Cells whose context is carried into the next epoch: the predicted
    /// cells, or the single learning cell of a burst.
    pub winner_cells: Vec<u16>,
    pub bursting: bool,
    target: LearnTarget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub id: u32,
    pub proximal: ProximalSegment,
    pub cells: Vec<Cell>,
    pub prediction: PredictionState,
}

pub(crate) fn bit_set(bitmap: &[u64], bit: u32) -> bool {
    bitmap
        .get(bit as usize / 64)
        .is_some_and(|w| w & (1 << (bit % 64)) != 0)
}

/// Input bits of the receptive field of `column`: a contiguous window of
/// `params.receptive_field` bits centered on `column * k / num_columns`,
/// wrapped modulo `k`, in ascending order.
pub fn receptive_field(column: u32, params: &CortexParams) -> Vec<u32> {
    let k = params.input_bits as i64;
    let diameter = params.receptive_field.min(params.input_bits) as i64;
    let center = (column as i64 * k) / params.num_columns as i64;
    let start = center - diameter / 2;
    let mut bits: Vec<u32> = (0..diameter).map(|i| (start + i).rem_euclid(k) as u32).collect();
    bits.sort_unstable();
    bits
}

impl Column {
    /// Boot-time state: one synapse per receptive-field bit, permanences
    /// uniform in the configured initial range.
    pub fn new(id: u32, params: &CortexParams) -> Self {
        let scale = params.scale();
        let mut rng = XorShift64Star::for_site(params.seed, Purpose::ProximalInit, id as u64, 0);
        let synapses = receptive_field(id, params)
            .into_iter()
            .take(params.proximal_capacity as usize)
            .map(|bit| {
                let level = rng.range_inclusive(scale.init_low as i64, scale.init_high as i64);
                (bit, Permanence(level as u8))
            })
            .collect();
        Self {
            id,
            proximal: ProximalSegment { synapses },
            cells: vec![Cell::default(); params.cells_per_column as usize],
            prediction: PredictionState::default(),
        }
    }

    pub fn overlap(&self, input: &[u64], params: &CortexParams) -> u32 {
        self.proximal.connected_count(input, params.scale().connected)
    }

    /// Spatial-pooler learning for a winning column.
    pub fn adapt_proximal(&mut self, input: &[u64], params: &CortexParams, epoch: u64) {
        let scale = params.scale();
        let mut rng = XorShift64Star::for_site(params.seed, Purpose::ProximalLearn, self.id as u64, epoch);
        for (bit, perm) in &mut self.proximal.synapses {
            if bit_set(input, *bit) {
                perm.increase(rng.stochastic_round(scale.sp_increment), scale.max);
            } else {
                perm.decrease(rng.stochastic_round(scale.sp_decrement));
            }
        }
    }

    /// Cell activation for a column that won inhibition, based on the
    /// prediction state left by the previous epoch.
    pub fn activate(&self) -> Activation {
        if self.prediction.is_predicted() {
            let cells = self.prediction.predictive_cells();
            return Activation {
                column: self.id,
                active_cells: cells.clone(),
                winner_cells: cells,
                bursting: false,
                target: LearnTarget::Reinforce,
            };
        }
        let (learner, target) = match self.prediction.best_match {
            Some((seg, _)) => (seg.cell, LearnTarget::Extend(seg)),
            None => {
                let cell = self
                    .cells
                    .iter()
                    .enumerate()
                    .min_by_key(|(i, c)| (c.segments.len(), *i))
                    .map(|(i, _)| i as u16)
                    .unwrap_or(0);
                (cell, LearnTarget::Grow(cell))
            }
        };
        Activation {
            column: self.id,
            active_cells: (0..self.cells.len() as u16).collect(),
            winner_cells: vec![learner],
            bursting: true,
            target,
        }
    }

    /// Temporal-memory learning for an active column.
    pub fn adapt_distal(
        &mut self,
        activation: &Activation,
        prev_active: &CellSet,
        prev_winners: &[CellRef],
        params: &CortexParams,
        epoch: u64,
    ) {
        debug_assert_eq!(activation.column, self.id);
        let mut rng = XorShift64Star::for_site(params.seed, Purpose::DistalLearn, self.id as u64, epoch);
        match activation.target {
            LearnTarget::Reinforce => {
                let segs = self.prediction.active_segments.clone();
                for seg in segs {
                    self.reinforce(seg, prev_active, prev_winners, params, &mut rng, epoch);
                }
            }
            LearnTarget::Extend(seg) => {
                self.reinforce(seg, prev_active, prev_winners, params, &mut rng, epoch);
            }
            LearnTarget::Grow(cell) => {
                if prev_winners.is_empty() {
                    return;
                }
                let scale = params.scale();
                let picks = rng.sample(prev_winners, params.max_synapses_per_segment as usize);
                let segment = DistalSegment {
                    synapses: picks
                        .into_iter()
                        .map(|presynaptic| DistalSynapse {
                            presynaptic,
                            permanence: Permanence(scale.distal_initial),
                        })
                        .collect(),
                    last_used: epoch,
                };
                let segments = &mut self.cells[cell as usize].segments;
                if segments.len() < params.max_segments_per_cell as usize {
                    segments.push(segment);
                } else {
                    let victim = segments
                        .iter()
                        .enumerate()
                        .min_by_key(|(i, s)| (s.last_used, *i))
                        .map(|(i, _)| i)
                        .expect("segment cap is positive");
                    segments[victim] = segment;
                }
            }
        }
    }

    fn reinforce(
        &mut self,
        seg: SegmentRef,
        prev_active: &CellSet,
        prev_winners: &[CellRef],
        params: &CortexParams,
        rng: &mut XorShift64Star,
        epoch: u64,
    ) {
        let scale = params.scale();
        let cap = params.max_synapses_per_segment as usize;
        let segment = &mut self.cells[seg.cell as usize].segments[seg.segment as usize];
        segment.last_used = epoch;
        let mut active_potential = 0usize;
        for syn in &mut segment.synapses {
            if prev_active.contains(syn.presynaptic) {
                syn.permanence.increase(rng.stochastic_round(scale.tm_increment), scale.max);
                active_potential += 1;
            } else {
                syn.permanence.decrease(rng.stochastic_round(scale.tm_decrement));
            }
        }
        // Dead synapses make room for new ones.
        segment.synapses.retain(|s| s.permanence.0 > 0);

        let wanted = cap.saturating_sub(active_potential);
        let room = cap.saturating_sub(segment.synapses.len());
        let count = wanted.min(room);
        if count == 0 {
            return;
        }
        let candidates: Vec<CellRef> = prev_winners
            .iter()
            .copied()
            .filter(|c| !segment.has_presynaptic(*c))
            .collect();
        for presynaptic in rng.sample(&candidates, count) {
            segment.synapses.push(DistalSynapse {
                presynaptic,
                permanence: Permanence(scale.distal_initial),
            });
        }
    }

    /// Recomputes the prediction state against this epoch's active cells.
    /// Returns whether the column is predicted for the next epoch.
    pub fn predict(&mut self, active: &CellSet, params: &CortexParams) -> bool {
        let connected = params.scale().connected;
        let mut state = PredictionState::default();
        for (ci, cell) in self.cells.iter().enumerate() {
            for (si, segment) in cell.segments.iter().enumerate() {
                let mut connected_active = 0u32;
                let mut potential_active = 0u32;
                for syn in &segment.synapses {
                    if active.contains(syn.presynaptic) {
                        if syn.permanence.0 > 0 {
                            potential_active += 1;
                        }
                        if syn.permanence.is_connected(connected) {
                            connected_active += 1;
                        }
                    }
                }
                let seg = SegmentRef { cell: ci as u16, segment: si as u16 };
                if connected_active >= params.activation_threshold {
                    state.active_segments.push(seg);
                }
                if potential_active >= params.matching_threshold
                    && state.best_match.is_none_or(|(_, best)| potential_active > best)
                {
                    state.best_match = Some((seg, potential_active));
                }
            }
        }
        self.prediction = state;
        self.prediction.is_predicted()
    }

    pub fn segment_count(&self) -> usize {
        self.cells.iter().map(|c| c.segments.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> CortexParams {
        CortexParams {
            num_columns: 8,
            cells_per_column: 4,
            input_bits: 64,
            receptive_field: 8,
            activation_threshold: 3,
            matching_threshold: 2,
            ..CortexParams::desk()
        }
    }

    fn bitmap(bits: &[u32]) -> Vec<u64> {
        let mut m = vec![0u64; 2];
        for &b in bits {
            m[b as usize / 64] |= 1 << (b % 64);
        }
        m
    }

    fn segment_on(cells: &[CellRef], level: u8) -> DistalSegment {
        DistalSegment {
            synapses: cells
                .iter()
                .map(|&c| DistalSynapse { presynaptic: c, permanence: Permanence(level) })
                .collect(),
            last_used: 0,
        }
    }

    #[test]
    fn receptive_field_wraps() {
        let p = params();
        let rf = receptive_field(0, &p);
        assert_eq!(rf, vec![0, 1, 2, 3, 60, 61, 62, 63]);
        assert_eq!(receptive_field(4, &p), (28..36).collect::<Vec<_>>());
    }

    #[test]
    fn overlap_counts_connected_active_only() {
        let p = params();
        let mut col = Column::new(4, &p);
        for (i, (_, perm)) in col.proximal.synapses.iter_mut().enumerate() {
            *perm = Permanence(if i < 5 { 9 } else { 7 });
        }
        // 28..33 connected, 33..36 below threshold
        assert_eq!(col.overlap(&bitmap(&[28, 29, 30, 31, 32]), &p), 5);
        assert_eq!(col.overlap(&bitmap(&[33, 34, 35]), &p), 0);
    }

    #[test]
    fn permanence_saturates() {
        let mut p = Permanence(15);
        p.increase(2, 15);
        assert_eq!(p, Permanence(15));
        let mut q = Permanence(1);
        q.decrease(3);
        assert_eq!(q, Permanence(0));
    }

    #[test]
    fn burst_picks_least_used_cell_and_grows() {
        let p = params();
        let mut col = Column::new(2, &p);
        col.cells[0].segments.push(DistalSegment::default());
        let act = col.activate();
        assert!(act.bursting);
        assert_eq!(act.active_cells, vec![0, 1, 2, 3]);
        assert_eq!(act.winner_cells, vec![1]);
        let prev: Vec<CellRef> = (0..3).map(|c| CellRef::new(c, 0, 4)).collect();
        let set = CellSet::from_cells(32, &prev);
        col.adapt_distal(&act, &set, &prev, &p, 1);
        assert_eq!(col.cells[1].segments.len(), 1);
        assert_eq!(col.cells[1].segments[0].synapses.len(), 3);
    }

    #[test]
    fn empty_previous_activity_grows_nothing() {
        let p = params();
        let mut col = Column::new(2, &p);
        let act = col.activate();
        col.adapt_distal(&act, &CellSet::new(32), &[], &p, 1);
        assert_eq!(col.segment_count(), 0);
    }

    #[test]
    fn prediction_threshold_boundary() {
        let p = params();
        let mut col = Column::new(1, &p);
        let pre: Vec<CellRef> = (4..7).map(|c| CellRef::new(c, 1, 4)).collect();
        col.cells[2].segments.push(segment_on(&pre, 8));
        let active = CellSet::from_cells(32, &pre);
        assert!(col.predict(&active, &p));
        assert_eq!(col.prediction.predictive_cells(), vec![2]);

        // one synapse below the connection threshold: only 2 connected
        col.cells[2].segments[0].synapses[0].permanence = Permanence(7);
        assert!(!col.predict(&active, &p));
        // still matching, since potential count is 3 >= 2
        assert_eq!(col.prediction.best_match.map(|(_, n)| n), Some(3));
    }

    #[test]
    fn predicted_column_activates_predictive_cells() {
        let p = params();
        let mut col = Column::new(1, &p);
        let pre: Vec<CellRef> = (4..7).map(|c| CellRef::new(c, 0, 4)).collect();
        col.cells[0].segments.push(segment_on(&pre, 9));
        col.cells[3].segments.push(segment_on(&pre, 9));
        col.predict(&CellSet::from_cells(32, &pre), &p);
        let act = col.activate();
        assert!(!act.bursting);
        assert_eq!(act.active_cells, vec![0, 3]);
    }

    #[test]
    fn full_segment_stays_at_capacity() {
        let p = CortexParams { max_synapses_per_segment: 4, ..params() };
        let mut col = Column::new(0, &p);
        let pre: Vec<CellRef> = (1..5).map(|c| CellRef::new(c, 0, 4)).collect();
        col.cells[0].segments.push(segment_on(&pre, 12));
        col.prediction.best_match = Some((SegmentRef { cell: 0, segment: 0 }, 2));
        let act = col.activate();
        let winners: Vec<CellRef> = (5..8).map(|c| CellRef::new(c, 1, 4)).collect();
        let mut active = winners.clone();
        active.push(pre[0]);
        col.adapt_distal(&act, &CellSet::from_cells(32, &active), &winners, &p, 3);
        assert_eq!(col.cells[0].segments[0].synapses.len(), 4);
    }

    #[test]
    fn segment_cap_evicts_least_recent() {
        let p = CortexParams { max_segments_per_cell: 2, ..params() };
        let mut col = Column::new(0, &p);
        for used in [5, 2] {
            col.cells[0].segments.push(DistalSegment { synapses: vec![], last_used: used });
        }
        for c in 1..4 {
            col.cells[c].segments = vec![DistalSegment::default(); 2];
        }
        let act = col.activate();
        assert_eq!(act.winner_cells, vec![0]);
        let prev = vec![CellRef::new(3, 1, 4)];
        col.adapt_distal(&act, &CellSet::from_cells(32, &prev), &prev, &p, 9);
        assert_eq!(col.cells[0].segments.len(), 2);
        assert_eq!(col.cells[0].segments[0].last_used, 5);
        assert_eq!(col.cells[0].segments[1].last_used, 9);
    }
}

//! Record layouts of the four data traffic classes.
//!
//! | kind        | record                         | width                          |
//! |-------------|--------------------------------|--------------------------------|
//! | proximal    | input bit                      | ceil(log2 k)                   |
//! | inhibition  | column id, overlap             | ceil(log2 C) + ceil(log2 k)    |
//! | distal      | column id, cell id             | ceil(log2 C) + ceil(log2 t)    |
//! | prediction  | column id                      | ceil(log2 C)                   |
//!
//! A bursting column sends a single distal record naming its learning cell,
//! inside a packet whose header carries [`FLAG_BURST`].

use crate::cla::CortexParams;
use crate::error::{config, Result};
use crate::noc::{records_per_packet, NodeSet, Packet, PacketKind};

/// Header flag: the distal records of this packet stand for bursting columns.
pub const FLAG_BURST: u8 = 1;

pub fn ceil_log2(n: u32) -> u32 {
    if n <= 1 {
        0
    } else {
        32 - (n - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketFormats {
    pub column_bits: u32,
    pub input_bits: u32,
    pub cell_bits: u32,
}

impl PacketFormats {
    pub fn new(num_columns: u32, input_width: u32, cells_per_column: u32) -> Self {
        Self {
            column_bits: ceil_log2(num_columns).max(1),
            input_bits: ceil_log2(input_width).max(1),
            cell_bits: ceil_log2(cells_per_column).max(1),
        }
    }

    pub fn for_params(p: &CortexParams) -> Result<Self> {
        let f = Self::new(p.num_columns, p.input_bits, p.cells_per_column);
        let max_overlap = p.receptive_field.min(p.proximal_capacity).min(p.input_bits);
        if max_overlap >= 1 << f.input_bits {
            return config("receptive_field too wide for the overlap field of inhibition records");
        }
        Ok(f)
    }

    pub fn width(&self, kind: PacketKind) -> u32 {
        match kind {
            PacketKind::Proximal => self.proximal(),
            PacketKind::Inhibition => self.inhibition(),
            PacketKind::Distal => self.distal(),
            PacketKind::Prediction => self.prediction(),
            PacketKind::Broom => 0,
        }
    }

    pub fn proximal(&self) -> u32 {
        self.input_bits
    }

    pub fn inhibition(&self) -> u32 {
        self.column_bits + self.input_bits
    }

    pub fn distal(&self) -> u32 {
        self.column_bits + self.cell_bits
    }

    pub fn prediction(&self) -> u32 {
        self.column_bits
    }

    pub fn inhibition_record(&self, column: u32, overlap: u32) -> u64 {
        ((column as u64) << self.input_bits) | overlap as u64
    }

    pub fn split_inhibition(&self, record: u64) -> (u32, u32) {
        ((record >> self.input_bits) as u32, (record & ((1 << self.input_bits) - 1)) as u32)
    }

    pub fn distal_record(&self, column: u32, cell: u16) -> u64 {
        ((column as u64) << self.cell_bits) | cell as u64
    }

    pub fn split_distal(&self, record: u64) -> (u32, u16) {
        ((record >> self.cell_bits) as u32, (record & ((1 << self.cell_bits) - 1)) as u16)
    }
}

/// Turns one event's records into packets: one packet per record, or, with
/// `batch`, as few full packets as the size cap allows.
#[allow(clippy::too_many_arguments)]
pub fn make_packets(
    kind: PacketKind,
    src: usize,
    dest: &NodeSet,
    epoch: u32,
    record_bits: u32,
    records: &[u64],
    flags: u8,
    batch: Option<u32>,
) -> Vec<Packet> {
    let per_packet = batch.map_or(1, |max_bytes| records_per_packet(record_bits, max_bytes).max(1));
    records
        .chunks(per_packet)
        .map(|chunk| Packet::new(kind, src, dest.clone(), epoch, record_bits, chunk.to_vec()).with_flags(flags))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_at_2048() {
        let f = PacketFormats::new(2048, 2048, 32);
        assert_eq!((f.inhibition(), f.distal(), f.prediction(), f.proximal()), (22, 16, 11, 11));
        let f = PacketFormats::for_params(&CortexParams::full()).unwrap();
        assert_eq!((f.inhibition(), f.distal(), f.prediction(), f.proximal()), (22, 16, 11, 11));
    }

    #[test]
    fn record_round_trip() {
        let f = PacketFormats::new(2025, 2045, 32);
        assert_eq!(f.split_inhibition(f.inhibition_record(2024, 31)), (2024, 31));
        assert_eq!(f.split_distal(f.distal_record(77, 31)), (77, 31));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(
            [1, 2, 3, 4, 5, 2045, 2048, 2049].map(ceil_log2),
            [0, 1, 2, 2, 3, 11, 11, 12]
        );
    }

    #[test]
    fn batching_respects_cap() {
        let dest = NodeSet::single(4, 1);
        let records: Vec<u64> = (0..100).collect();
        assert_eq!(make_packets(PacketKind::Inhibition, 0, &dest, 0, 22, &records, 0, None).len(), 100);
        let batched = make_packets(PacketKind::Inhibition, 0, &dest, 0, 22, &records, 0, Some(80));
        assert_eq!(batched.len(), 4);
        assert!(batched.iter().all(|p| p.size_bytes() <= 80));
    }
}

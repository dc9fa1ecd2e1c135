use std::fmt;

use serde::{Deserialize, Serialize};

/// Fixed header: kind, epoch tag and record count.
pub const HEADER_BITS: u32 = 16;

/// Set of network nodes, used as a multicast destination mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeSet {
    words: Box<[u64]>,
}

impl NodeSet {
    pub fn new(nodes: usize) -> Self {
        Self { words: vec![0; nodes.div_ceil(64).max(1)].into_boxed_slice() }
    }

    pub fn single(nodes: usize, node: usize) -> Self {
        let mut s = Self::new(nodes);
        s.insert(node);
        s
    }

    pub fn full(nodes: usize) -> Self {
        let mut s = Self::new(nodes);
        for n in 0..nodes {
            s.insert(n);
        }
        s
    }

    pub fn from_nodes(nodes: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new(nodes);
        for n in members {
            s.insert(n);
        }
        s
    }

    pub fn insert(&mut self, node: usize) {
        self.words[node / 64] |= 1 << (node % 64);
    }

    pub fn remove(&mut self, node: usize) {
        self.words[node / 64] &= !(1 << (node % 64));
    }

    pub fn contains(&self, node: usize) -> bool {
        self.words.get(node / 64).is_some_and(|w| w & (1 << (node % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union_with(&mut self, other: &NodeSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.words.iter().zip(other.words.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i * 64 + b)
            })
        })
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Traffic classes. The discriminant indexes per-kind statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PacketKind {
    Proximal = 0,
    Inhibition = 1,
    Distal = 2,
    Prediction = 3,
    Broom = 4,
}

impl PacketKind {
    pub const ALL: [PacketKind; 5] = [
        PacketKind::Proximal,
        PacketKind::Inhibition,
        PacketKind::Distal,
        PacketKind::Prediction,
        PacketKind::Broom,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PacketKind::Proximal => "proximal",
            PacketKind::Inhibition => "inhibition",
            PacketKind::Distal => "distal",
            PacketKind::Prediction => "prediction",
            PacketKind::Broom => "broom",
        }
    }
}

/// A multicast message. Records are opaque fixed-width payload words; the
/// producer decides their layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub kind: PacketKind,
    pub src: usize,
    pub dest: NodeSet,
    pub epoch: u32,
    pub record_bits: u32,
    pub records: Vec<u64>,
    /// Spare header bits, free for the producer to use.
    pub flags: u8,
}

impl Packet {
    pub fn new(kind: PacketKind, src: usize, dest: NodeSet, epoch: u32, record_bits: u32, records: Vec<u64>) -> Self {
        Self { kind, src, dest, epoch, record_bits, records, flags: 0 }
    }

    pub fn with_flags(mut self, flags: u8) -> Self {
        self.flags = flags;
        self
    }

    pub fn size_bits(&self) -> u32 {
        HEADER_BITS + self.record_bits * self.records.len() as u32
    }

    pub fn size_bytes(&self) -> u32 {
        self.size_bits().div_ceil(8)
    }

    /// Link cycles (flits) needed to move the packet over a link that carries
    /// `link_width` bytes per cycle.
    pub fn flits(&self, link_width: u32) -> u32 {
        self.size_bits().div_ceil(8 * link_width).max(1)
    }
}

/// How many `record_bits`-wide records fit in one packet of at most
/// `max_packet_bytes`.
pub fn records_per_packet(record_bits: u32, max_packet_bytes: u32) -> usize {
    ((8 * max_packet_bytes).saturating_sub(HEADER_BITS) / record_bits.max(1)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_set_ops() {
        let mut s = NodeSet::new(130);
        s.insert(0);
        s.insert(64);
        s.insert(129);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(s.len(), 3);
        s.remove(64);
        assert!(!s.contains(64));
        assert!(s.is_subset(&NodeSet::full(130)));
        assert!(!NodeSet::full(130).is_subset(&s));
    }

    #[test]
    fn sizes() {
        let p = Packet::new(PacketKind::Inhibition, 0, NodeSet::single(4, 1), 0, 22, vec![0; 3]);
        assert_eq!(p.size_bits(), 16 + 66);
        assert_eq!(p.size_bytes(), 11);
        assert_eq!(p.flits(16), 1);
        assert_eq!(p.flits(8), 2);
        assert_eq!(records_per_packet(22, 80), 28);
    }
}

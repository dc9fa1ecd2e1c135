//! Activity counters and the energy model.
//!
//! The CSV dump has one row per epoch with these columns, in order:
//!
//! ```text
//! epoch,cycles,
//! injected_<kind>   x5  (proximal, inhibition, distal, prediction, broom)
//! delivered_<kind>  x5
//! flit_hops_<kind>  x5
//! router_traversals,link_flits,buffer_writes,buffer_reads,energy
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::packet::PacketKind;

const KINDS: usize = PacketKind::ALL.len();

/// Relative cost per counted event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCosts {
    pub router_traversal: f64,
    pub link_flit: f64,
    pub buffer_write: f64,
    pub buffer_read: f64,
}

impl Default for EnergyCosts {
    fn default() -> Self {
        Self { router_traversal: 2.0, link_flit: 1.0, buffer_write: 1.0, buffer_read: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetStats {
    pub cycles: u64,
    /// Packets accepted by `inject` before coalescing.
    pub injected: [u64; KINDS],
    /// Packets that entered an injection queue after coalescing.
    pub queued: [u64; KINDS],
    /// Leaf deliveries, one per destination node.
    pub delivered: [u64; KINDS],
    /// Multicast expansion of queued packets: the sum of their destination
    /// counts.
    pub expected_deliveries: [u64; KINDS],
    pub records_delivered: [u64; KINDS],
    pub flit_hops: [u64; KINDS],
    pub router_traversals: u64,
    pub link_flits: u64,
    pub buffer_writes: u64,
    pub buffer_reads: u64,
    /// Data deliveries to a node that had already reported drained for an
    /// epoch at or after the packet's tag.
    pub late_deliveries: u64,
    /// Brooms carrying an epoch other than the one being drained.
    pub stale_brooms: u64,
}

impl NetStats {
    pub fn energy(&self, costs: &EnergyCosts) -> f64 {
        self.router_traversals as f64 * costs.router_traversal
            + self.link_flits as f64 * costs.link_flit
            + self.buffer_writes as f64 * costs.buffer_write
            + self.buffer_reads as f64 * costs.buffer_read
    }

    pub fn total_flit_hops(&self) -> u64 {
        self.flit_hops.iter().sum()
    }

    pub fn data_flit_hops(&self) -> u64 {
        self.flit_hops[..PacketKind::Broom.index()].iter().sum()
    }

    /// Counter-wise difference `self - earlier`.
    pub fn since(&self, earlier: &NetStats) -> NetStats {
        fn sub(a: &[u64; KINDS], b: &[u64; KINDS]) -> [u64; KINDS] {
            std::array::from_fn(|i| a[i] - b[i])
        }
        NetStats {
            cycles: self.cycles - earlier.cycles,
            injected: sub(&self.injected, &earlier.injected),
            queued: sub(&self.queued, &earlier.queued),
            delivered: sub(&self.delivered, &earlier.delivered),
            expected_deliveries: sub(&self.expected_deliveries, &earlier.expected_deliveries),
            records_delivered: sub(&self.records_delivered, &earlier.records_delivered),
            flit_hops: sub(&self.flit_hops, &earlier.flit_hops),
            router_traversals: self.router_traversals - earlier.router_traversals,
            link_flits: self.link_flits - earlier.link_flits,
            buffer_writes: self.buffer_writes - earlier.buffer_writes,
            buffer_reads: self.buffer_reads - earlier.buffer_reads,
            late_deliveries: self.late_deliveries - earlier.late_deliveries,
            stale_brooms: self.stale_brooms - earlier.stale_brooms,
        }
    }

    pub fn add(&mut self, other: &NetStats) {
        fn acc(a: &mut [u64; KINDS], b: &[u64; KINDS]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.cycles += other.cycles;
        acc(&mut self.injected, &other.injected);
        acc(&mut self.queued, &other.queued);
        acc(&mut self.delivered, &other.delivered);
        acc(&mut self.expected_deliveries, &other.expected_deliveries);
        acc(&mut self.records_delivered, &other.records_delivered);
        acc(&mut self.flit_hops, &other.flit_hops);
        self.router_traversals += other.router_traversals;
        self.link_flits += other.link_flits;
        self.buffer_writes += other.buffer_writes;
        self.buffer_reads += other.buffer_reads;
        self.late_deliveries += other.late_deliveries;
        self.stale_brooms += other.stale_brooms;
    }

    pub fn csv_header() -> String {
        let mut cols = vec!["epoch".to_string(), "cycles".to_string()];
        for prefix in ["injected", "delivered", "flit_hops"] {
            cols.extend(PacketKind::ALL.iter().map(|k| format!("{prefix}_{}", k.name())));
        }
        cols.extend(
            ["router_traversals", "link_flits", "buffer_writes", "buffer_reads", "energy"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    pub fn csv_row(&self, epoch: u64, costs: &EnergyCosts) -> String {
        let mut cols = vec![epoch.to_string(), self.cycles.to_string()];
        for arr in [&self.injected, &self.delivered, &self.flit_hops] {
            cols.extend(arr.iter().map(u64::to_string));
        }
        cols.extend(
            [self.router_traversals, self.link_flits, self.buffer_writes, self.buffer_reads]
                .iter()
                .map(u64::to_string),
        );
        cols.push(format!("{}", self.energy(costs)));
        cols.join(",")
    }

    pub fn write_csv<W: Write>(rows: &[(u64, NetStats)], costs: &EnergyCosts, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::csv_header())?;
        for (epoch, s) in rows {
            writeln!(out, "{}", s.csv_row(*epoch, costs))?;
        }
        Ok(())
    }
}

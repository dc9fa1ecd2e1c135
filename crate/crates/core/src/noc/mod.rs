//! Cycle-level packet network on a 2-D torus.
//!
//! Packets are modeled whole (virtual cut-through): a packet occupies an
//! output link for `flits` cycles, the head reaches the next router after
//! `link_latency` cycles, and the router needs `router_pipeline` cycles before
//! forwarding it. Ejection to the local core happens when the tail has
//! arrived. Each input port owns one byte-budgeted FIFO; the injection queue
//! is unbounded and may coalesce packets. Multicast packets are split in
//! dimension order and each branch is forwarded independently; the buffer
//! slot is released once every branch has left.
//!
//! Deadlock avoidance uses the bubble rule: a packet entering a ring (from
//! the injection queue or by turning from X to Y) needs room for two
//! maximum-size packets in the target buffer.
//!
//! # Drain
//!
//! [`Network::launch_brooms`] starts a barrier. Each node queues a broom for
//! itself in its injection queue, behind its data. Routers combine brooms:
//! an output link carries a single 2-byte broom per barrier, sent once the
//! brooms of every source whose dimension-order broadcast tree uses that
//! link have reached the head of their input FIFOs. Since each source's data
//! follows the links of its own broadcast tree and every queue and buffer is
//! FIFO, the broom covering source `s` on a link always trails all of `s`'s
//! data on it. A node is drained once brooms covering all sources have
//! arrived. Brooms win output arbitration. A broom may enter a buffer only
//! if a maximum-size packet still fits behind it, so it never takes a ring's
//! last bubble; while it waits, data may use the link. In gated mode a node holds its own broom, and its
//! drained flag, until its core is idle.

mod packet;
mod stats;
mod topology;

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

pub use packet::{records_per_packet, NodeSet, Packet, PacketKind, HEADER_BITS};
pub use stats::{EnergyCosts, NetStats};
pub use topology::{
    opposite, port_dim, Dim, RouteSplit, Torus, NEIGHBOR_PORTS, PORT_LOCAL, PORT_XM, PORT_XP, PORT_YM, PORT_YP,
};

const BROOM_BYTES: u32 = HEADER_BITS / 8;
/// Broom flag: covers its origin node only.
const BROOM_SOURCE: u8 = 0;
/// Broom flag: covers every node in its origin's row.
const BROOM_ROW: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub width: u32,
    pub height: u32,
    /// Bytes per cycle per link.
    pub link_width: u32,
    pub router_pipeline: u32,
    pub link_latency: u32,
    /// Capacity of each input-port buffer.
    pub buffer_bytes: u32,
    pub max_packet_bytes: u32,
    pub clock_period_ns: f64,
    pub coalescing: bool,
    /// Core time charged per delivered proximal or distal record: one local
    /// memory access per spike.
    pub core_cycles_per_record: u32,
    pub energy: EnergyCosts,
    /// Record one text line per network event.
    pub trace: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            width: 4,
            height: 4,
            link_width: 16,
            router_pipeline: 4,
            link_latency: 1,
            buffer_bytes: 160,
            max_packet_bytes: 80,
            clock_period_ns: 1.0,
            coalescing: false,
            core_cycles_per_record: 1,
            energy: EnergyCosts::default(),
            trace: false,
        }
    }
}

impl NetConfig {
    pub fn with_dims(width: u32, height: u32) -> Self {
        Self { width, height, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("link_width", self.link_width),
            ("router_pipeline", self.router_pipeline),
            ("link_latency", self.link_latency),
            ("buffer_bytes", self.buffer_bytes),
            ("max_packet_bytes", self.max_packet_bytes),
        ];
        for (name, value) in positive {
            if value == 0 {
                return config(format!("net.{name} must be positive"));
            }
        }
        if self.width.checked_mul(self.height).is_none_or(|n| n > 1 << 16) {
            return config("net.width * net.height must not exceed 65536");
        }
        if 2 * self.max_packet_bytes > self.buffer_bytes {
            return config("net.max_packet_bytes must be at most net.buffer_bytes / 2");
        }
        if 8 * self.max_packet_bytes <= HEADER_BITS {
            return config("net.max_packet_bytes leaves no room for records");
        }
        if self.clock_period_ns.is_nan() || self.clock_period_ns <= 0.0 {
            return config("net.clock_period_ns must be positive");
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        (self.width * self.height) as usize
    }
}

/// The immutable body of a packet, shared by all of its multicast copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    pub kind: PacketKind,
    pub src: usize,
    pub epoch: u32,
    pub record_bits: u32,
    pub records: Vec<u64>,
    pub flags: u8,
}

impl Payload {
    fn size_bits(&self) -> u32 {
        HEADER_BITS + self.record_bits * self.records.len() as u32
    }
}

/// A packet copy handed to the core of `node`.
#[derive(Debug, Clone)]
pub struct Delivery {
    pub node: usize,
    pub cycle: u64,
    pub payload: Arc<Payload>,
}

#[derive(Debug, Clone, Hash)]
struct Entry {
    payload: Arc<Payload>,
    from_injection: bool,
    in_dim: Option<Dim>,
    head_at: u64,
    tail_at: u64,
    eligible_at: u64,
    local: bool,
    branches: [Option<NodeSet>; NEIGHBOR_PORTS],
    started: bool,
    last_send_end: u64,
    bytes: u32,
    flits: u32,
}

impl Hash for Payload {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.kind, self.src, self.epoch, self.record_bits, &self.records, self.flags).hash(state);
    }
}

impl Entry {
    fn is_finished(&self, now: u64) -> bool {
        !self.local && self.branches.iter().all(Option::is_none) && now >= self.last_send_end && now >= self.tail_at
    }
}

#[derive(Debug, Clone)]
struct Router {
    /// Four transit buffers followed by the injection queue.
    inputs: [VecDeque<Entry>; NEIGHBOR_PORTS + 1],
    used: [u32; NEIGHBOR_PORTS],
    out_busy: [u64; NEIGHBOR_PORTS],
    rr: [usize; NEIGHBOR_PORTS],
    core_busy_until: u64,
    /// Sources whose broom has arrived this barrier.
    swept: NodeSet,
    brooms: usize,
    broom_pending: bool,
    /// Per output: brooms waiting to leave, as (ready cycle, origin, flags).
    broom_out: [VecDeque<(u64, usize, u8)>; NEIGHBOR_PORTS],
    row_swept: bool,
    drained_at: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DrainRound {
    epoch: u32,
    gate_cores: bool,
}

#[derive(Debug, Clone)]
pub struct Network {
    cfg: NetConfig,
    torus: Torus,
    out_links: Vec<[Option<usize>; NEIGHBOR_PORTS]>,
    /// Sources whose broadcast tree uses each output link.
    tree_sources: Vec<[NodeSet; NEIGHBOR_PORTS]>,
    rows: Vec<NodeSet>,
    routers: Vec<Router>,
    cycle: u64,
    stats: NetStats,
    deliveries: Vec<Delivery>,
    trace: Vec<String>,
    drain: Option<DrainRound>,
    occupied: usize,
    last_progress: u64,
}

impl Network {
    pub fn new(cfg: NetConfig) -> Result<Self> {
        cfg.validate()?;
        let torus = Torus::new(cfg.width, cfg.height);
        let out_links = (0..torus.nodes())
            .map(|n| std::array::from_fn(|p| torus.neighbor(n, p)))
            .collect();
        let nodes = torus.nodes();
        let router = Router {
            inputs: Default::default(),
            used: [0; NEIGHBOR_PORTS],
            out_busy: [0; NEIGHBOR_PORTS],
            rr: [0; NEIGHBOR_PORTS],
            core_busy_until: 0,
            swept: NodeSet::new(nodes),
            brooms: 0,
            broom_pending: false,
            broom_out: Default::default(),
            row_swept: false,
            drained_at: None,
        };
        Ok(Self {
            routers: vec![router; nodes],
            tree_sources: tree_sources(&torus),
            rows: (0..cfg.height)
                .map(|y| NodeSet::from_nodes(nodes, (0..cfg.width).map(|x| torus.node(x, y))))
                .collect(),
            cfg,
            torus,
            out_links,
            cycle: 0,
            stats: NetStats::default(),
            deliveries: Vec::new(),
            trace: Vec::new(),
            drain: None,
            occupied: 0,
            last_progress: 0,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn nodes(&self) -> usize {
        self.routers.len()
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn stats(&self) -> NetStats {
        NetStats { cycles: self.cycle, ..self.stats.clone() }
    }

    pub fn take_deliveries(&mut self) -> Vec<Delivery> {
        std::mem::take(&mut self.deliveries)
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.trace)
    }

    fn log(&mut self, line: impl FnOnce() -> String) {
        if self.cfg.trace {
            let text = line();
            self.trace.push(format!("{} {}", self.cycle, text));
        }
    }

    /// Queues `packet` at its source node, merging it into a compatible
    /// queued packet when coalescing is on.
    pub fn inject(&mut self, packet: Packet) -> Result<()> {
        let nodes = self.nodes();
        if packet.src >= nodes {
            return Err(Error::Usage(format!("source node {} out of range", packet.src)));
        }
        if packet.dest.is_empty() {
            return Err(Error::Usage("empty destination mask".into()));
        }
        if packet.dest.iter().any(|d| d >= nodes) {
            return Err(Error::Usage("destination node out of range".into()));
        }
        if packet.size_bytes() > self.cfg.max_packet_bytes {
            return Err(Error::Usage(format!(
                "packet of {} bytes exceeds the {}-byte cap",
                packet.size_bytes(),
                self.cfg.max_packet_bytes
            )));
        }
        let kind = packet.kind;
        self.stats.injected[kind.index()] += 1;
        self.log(|| {
            format!(
                "inject node={} kind={} epoch={} dest={:?} records={}",
                packet.src,
                kind.name(),
                packet.epoch,
                packet.dest,
                packet.records.len()
            )
        });
        if self.cfg.coalescing && kind != PacketKind::Broom && self.try_coalesce(&packet) {
            return Ok(());
        }
        let payload = Payload {
            kind,
            src: packet.src,
            epoch: packet.epoch,
            record_bits: packet.record_bits,
            records: packet.records,
            flags: packet.flags,
        };
        self.enqueue(packet.src, packet.dest, payload);
        Ok(())
    }

    fn try_coalesce(&mut self, packet: &Packet) -> bool {
        let max_bits = 8 * self.cfg.max_packet_bytes;
        let link_width = self.cfg.link_width;
        let router = &mut self.routers[packet.src];
        let queue = &mut router.inputs[PORT_LOCAL];
        let dest_split = self.torus.route(packet.src, &packet.dest);
        for entry in queue.iter_mut() {
            if entry.started {
                continue;
            }
            let body = &entry.payload;
            let compatible = body.kind == packet.kind
                && body.epoch == packet.epoch
                && body.record_bits == packet.record_bits
                && body.flags == packet.flags
                && entry.local == dest_split.local
                && entry.branches == dest_split.ports;
            if !compatible || body.size_bits() + packet.record_bits * packet.records.len() as u32 > max_bits {
                continue;
            }
            let body = Arc::get_mut(&mut entry.payload).expect("undispatched payload is unshared");
            body.records.extend_from_slice(&packet.records);
            let bits = body.size_bits();
            entry.bytes = bits.div_ceil(8);
            entry.flits = bits.div_ceil(8 * link_width).max(1);
            return true;
        }
        false
    }

    fn enqueue(&mut self, node: usize, dest: NodeSet, payload: Payload) {
        let kind = payload.kind;
        let bits = payload.size_bits();
        let split = self.torus.route(node, &dest);
        let fanout = dest.len() as u64;
        let entry = Entry {
            payload: Arc::new(payload),
            from_injection: true,
            in_dim: None,
            head_at: self.cycle,
            tail_at: self.cycle,
            eligible_at: self.cycle + self.cfg.router_pipeline as u64,
            local: split.local,
            branches: split.ports,
            started: false,
            last_send_end: self.cycle,
            bytes: bits.div_ceil(8),
            flits: bits.div_ceil(8 * self.cfg.link_width).max(1),
        };
        self.stats.queued[kind.index()] += 1;
        self.stats.expected_deliveries[kind.index()] += fanout;
        self.routers[node].inputs[PORT_LOCAL].push_back(entry);
        self.occupied += 1;
    }

    /// Starts the drain of `epoch`: every node sends a broom broadcast behind
    /// its queued traffic. With `gate_cores`, a node waits for its core to go
    /// idle before sending, and reports drained only while idle.
    pub fn launch_brooms(&mut self, epoch: u32, gate_cores: bool) {
        self.drain = Some(DrainRound { epoch, gate_cores });
        let nodes = self.nodes();
        for r in &mut self.routers {
            r.swept = NodeSet::new(nodes);
            r.brooms = 0;
            r.broom_pending = true;
            r.broom_out = Default::default();
            r.row_swept = false;
            r.drained_at = None;
        }
        self.log(|| format!("drain epoch={epoch} gated={gate_cores}"));
        self.release_brooms();
        self.process_all_heads();
        self.update_drained();
    }

    fn release_brooms(&mut self) {
        let Some(round) = self.drain else { return };
        let nodes = self.nodes();
        for n in 0..nodes {
            let r = &self.routers[n];
            if !r.broom_pending || (round.gate_cores && r.core_busy_until > self.cycle) {
                continue;
            }
            self.routers[n].broom_pending = false;
            self.stats.injected[PacketKind::Broom.index()] += 1;
            let broom = Payload {
                kind: PacketKind::Broom,
                src: n,
                epoch: round.epoch,
                record_bits: 0,
                records: Vec::new(),
                flags: BROOM_SOURCE,
            };
            self.enqueue(n, NodeSet::single(nodes, n), broom);
        }
    }

    pub fn is_drained(&self, node: usize) -> bool {
        self.routers[node].drained_at.is_some()
    }

    pub fn drained_at(&self, node: usize) -> Option<u64> {
        self.routers[node].drained_at
    }

    pub fn all_drained(&self) -> bool {
        self.drain.is_some() && self.routers.iter().all(|r| r.drained_at.is_some())
    }

    fn update_drained(&mut self) {
        let Some(round) = self.drain else { return };
        let nodes = self.nodes();
        let now = self.cycle;
        for r in &mut self.routers {
            if r.drained_at.is_none() && r.brooms == nodes && (!round.gate_cores || r.core_busy_until <= now) {
                r.drained_at = Some(now);
            }
        }
    }

    /// Charges `cycles` of work to the core of `node`, starting no earlier
    /// than now.
    pub fn occupy_core(&mut self, node: usize, cycles: u64) {
        let r = &mut self.routers[node];
        r.core_busy_until = r.core_busy_until.max(self.cycle) + cycles;
    }

    pub fn core_busy_until(&self, node: usize) -> u64 {
        self.routers[node].core_busy_until
    }

    /// No packet is queued or buffered anywhere and no broom is held back.
    pub fn is_idle(&self) -> bool {
        self.occupied == 0 && self.routers.iter().all(|r| !r.broom_pending && r.broom_out.iter().all(VecDeque::is_empty))
    }

    /// Advances the network by one cycle.
    pub fn tick(&mut self) {
        if !self.is_idle() {
            self.release_brooms();
            self.process_all_heads();
            for n in 0..self.nodes() {
                self.allocate_outputs(n);
            }
        }
        self.update_drained();
        self.cycle += 1;
    }

    fn process_all_heads(&mut self) {
        for n in 0..self.nodes() {
            for port in 0..=NEIGHBOR_PORTS {
                self.process_head(n, port);
            }
        }
    }

    /// Ejects and retires entries at the front of one input FIFO.
    fn process_head(&mut self, node: usize, port: usize) {
        let now = self.cycle;
        loop {
            let Some(entry) = self.routers[node].inputs[port].front_mut() else { return };
            if entry.local {
                let is_broom = entry.payload.kind == PacketKind::Broom;
                let ready = if entry.from_injection {
                    is_broom || now >= entry.eligible_at
                } else {
                    now >= entry.tail_at
                };
                if !ready {
                    return;
                }
                entry.local = false;
                entry.started = true;
                let payload = entry.payload.clone();
                let flits = entry.flits as u64;
                let from_injection = entry.from_injection;
                if !from_injection {
                    self.stats.buffer_reads += flits;
                    self.stats.router_traversals += flits;
                }
                self.deliver(node, payload);
            }
            let entry = self.routers[node].inputs[port].front().expect("front exists");
            if !entry.is_finished(now) {
                return;
            }
            let bytes = entry.bytes;
            self.routers[node].inputs[port].pop_front();
            if port < NEIGHBOR_PORTS {
                self.routers[node].used[port] -= bytes;
            }
            self.occupied -= 1;
            self.last_progress = now;
        }
    }

    fn deliver(&mut self, node: usize, payload: Arc<Payload>) {
        let now = self.cycle;
        let kind = payload.kind;
        self.last_progress = now;
        self.stats.delivered[kind.index()] += 1;
        self.stats.records_delivered[kind.index()] += payload.records.len() as u64;
        self.log(|| {
            format!(
                "deliver node={node} kind={} epoch={} src={} records={}",
                kind.name(),
                payload.epoch,
                payload.src,
                payload.records.len()
            )
        });
        if kind == PacketKind::Broom {
            match self.drain {
                Some(round) if round.epoch == payload.epoch => self.sweep(node, &payload),
                _ => self.stats.stale_brooms += 1,
            }
            return;
        }
        let router = &mut self.routers[node];
        if let (Some(round), Some(_)) = (self.drain, router.drained_at) {
            if payload.epoch <= round.epoch {
                self.stats.late_deliveries += 1;
            }
        }
        if matches!(kind, PacketKind::Proximal | PacketKind::Distal) {
            let work = payload.records.len() as u64 * self.cfg.core_cycles_per_record as u64;
            router.core_busy_until = router.core_busy_until.max(now) + work;
        }
        self.deliveries.push(Delivery { node, cycle: now, payload });
    }

    /// Records the sources a broom stands for and schedules the brooms it
    /// unlocks. A source broom travels the X ring of its row; once a node
    /// has swept its whole row, one row broom per Y direction carries the
    /// row up and down the column.
    fn sweep(&mut self, node: usize, broom: &Payload) {
        let ready = self.cycle + self.cfg.router_pipeline as u64;
        let origin = broom.src;
        let tree = &self.tree_sources[node];
        let router = &mut self.routers[node];
        if broom.flags == BROOM_ROW {
            router.swept.union_with(&self.rows[self.torus.coords(origin).1 as usize]);
            for p in [PORT_YP, PORT_YM] {
                if tree[p].contains(origin) {
                    router.broom_out[p].push_back((ready, origin, BROOM_ROW));
                }
            }
        } else {
            router.swept.insert(origin);
            for p in [PORT_XP, PORT_XM] {
                if tree[p].contains(origin) {
                    router.broom_out[p].push_back((ready, origin, BROOM_SOURCE));
                }
            }
        }
        router.brooms = router.swept.len();
        let row = &self.rows[self.torus.coords(node).1 as usize];
        if !router.row_swept && row.is_subset(&router.swept) {
            router.row_swept = true;
            for p in [PORT_YP, PORT_YM] {
                if tree[p].contains(node) {
                    router.broom_out[p].push_back((ready, node, BROOM_ROW));
                }
            }
        }
    }

    fn wants_port(entry: &Entry, port: usize, now: u64) -> bool {
        entry.eligible_at <= now && entry.branches[port].is_some()
    }

    fn bubble_need(&self, entry: &Entry, port: usize) -> u32 {
        if entry.from_injection || entry.in_dim != port_dim(port) {
            2 * self.cfg.max_packet_bytes
        } else {
            entry.bytes
        }
    }

    /// Output arbitration and link traversal for one router.
    fn allocate_outputs(&mut self, node: usize) {
        let now = self.cycle;
        for port in 0..NEIGHBOR_PORTS {
            let Some(next) = self.out_links[node][port] else { continue };
            let router = &self.routers[node];
            if router.out_busy[port] > now {
                continue;
            }
            let in_port = opposite(port);
            let free = self.cfg.buffer_bytes - self.routers[next].used[in_port];
            if router.broom_out[port].front().is_some_and(|b| b.0 <= now) && free >= self.cfg.max_packet_bytes + BROOM_BYTES {
                self.send_broom(node, port, next);
                continue;
            }
            let mut pick = None;
            for k in 0..=NEIGHBOR_PORTS {
                let i = (router.rr[port] + k) % (NEIGHBOR_PORTS + 1);
                let Some(entry) = router.inputs[i].front() else { continue };
                if Self::wants_port(entry, port, now) && free >= self.bubble_need(entry, port) {
                    pick = Some(i);
                    break;
                }
            }
            let Some(i) = pick else { continue };
            self.send(node, i, port, next);
        }
    }

    fn send_broom(&mut self, node: usize, port: usize, next: usize) {
        let now = self.cycle;
        let round = self.drain.expect("brooms only exist during a drain");
        let link_latency = self.cfg.link_latency as u64;
        let router = &mut self.routers[node];
        let (_, origin, flags) = router.broom_out[port].pop_front().expect("broom is queued");
        router.out_busy[port] = now + 1;
        let payload = Payload {
            kind: PacketKind::Broom,
            src: origin,
            epoch: round.epoch,
            record_bits: 0,
            records: Vec::new(),
            flags,
        };
        let bytes = BROOM_BYTES;
        let entry = Entry {
            payload: Arc::new(payload),
            from_injection: false,
            in_dim: port_dim(port),
            head_at: now + link_latency,
            tail_at: now + 1 + link_latency,
            eligible_at: now + link_latency,
            local: true,
            branches: Default::default(),
            started: false,
            last_send_end: 0,
            bytes,
            flits: 1,
        };
        let in_port = opposite(port);
        let target = &mut self.routers[next];
        target.inputs[in_port].push_back(entry);
        target.used[in_port] += bytes;
        self.occupied += 1;
        self.last_progress = now;
        let b = PacketKind::Broom.index();
        self.stats.expected_deliveries[b] += 1;
        self.stats.flit_hops[b] += 1;
        self.stats.link_flits += 1;
        self.stats.router_traversals += 1;
        self.stats.buffer_writes += 1;
        self.log(|| format!("send node={node} port={port} to={next} kind=broom epoch={} flits=1", round.epoch));
    }

    fn send(&mut self, node: usize, input: usize, port: usize, next: usize) {
        let now = self.cycle;
        let link_latency = self.cfg.link_latency as u64;
        let pipeline = self.cfg.router_pipeline as u64;
        let router = &mut self.routers[node];
        let entry = router.inputs[input].front_mut().expect("picked entry exists");
        let dest = entry.branches[port].take().expect("picked branch exists");
        let flits = entry.flits as u64;
        entry.started = true;
        entry.last_send_end = entry.last_send_end.max(now + flits);
        let payload = entry.payload.clone();
        let bytes = entry.bytes;
        router.out_busy[port] = now + flits;
        router.rr[port] = (input + 1) % (NEIGHBOR_PORTS + 1);

        let split = self.torus.route(next, &dest);
        let head_at = now + link_latency;
        let kind = payload.kind;
        let epoch = payload.epoch;
        let copy = Entry {
            payload,
            from_injection: false,
            in_dim: port_dim(port),
            head_at,
            tail_at: now + flits + link_latency,
            eligible_at: head_at + pipeline,
            local: split.local,
            branches: split.ports,
            started: false,
            last_send_end: 0,
            bytes,
            flits: flits as u32,
        };
        let in_port = opposite(port);
        let target = &mut self.routers[next];
        target.inputs[in_port].push_back(copy);
        target.used[in_port] += bytes;
        debug_assert!(target.used[in_port] <= self.cfg.buffer_bytes);
        self.occupied += 1;
        self.last_progress = now;

        self.stats.flit_hops[kind.index()] += flits;
        self.stats.link_flits += flits;
        self.stats.router_traversals += flits;
        self.stats.buffer_reads += flits;
        self.stats.buffer_writes += flits;
        self.log(|| format!("send node={node} port={port} to={next} kind={} epoch={epoch} flits={flits}", kind.name()));
    }

    /// Ticks until every node reports drained. Fails if nothing moves for
    /// `watchdog` consecutive cycles while cores are idle.
    pub fn run_until_drained(&mut self, watchdog: u64) -> Result<u64> {
        if self.drain.is_none() {
            return Err(Error::Usage("run_until_drained called without launch_brooms".into()));
        }
        self.run_until(watchdog, |net| net.all_drained(), "drain")
    }

    /// Ticks until nothing is left in flight.
    pub fn run_until_idle(&mut self, watchdog: u64) -> Result<u64> {
        self.run_until(watchdog, |net| net.is_idle(), "idle")
    }

    fn run_until(&mut self, watchdog: u64, done: impl Fn(&Self) -> bool, what: &str) -> Result<u64> {
        self.last_progress = self.cycle;
        while !done(self) {
            self.tick();
            let busy_core = self.routers.iter().any(|r| r.core_busy_until >= self.cycle);
            if busy_core {
                self.last_progress = self.cycle;
            }
            if self.cycle - self.last_progress > watchdog {
                return Err(Error::Simulation {
                    cycle: self.cycle,
                    reason: format!("no progress for {watchdog} cycles while waiting for {what}"),
                });
            }
        }
        Ok(self.cycle)
    }

    /// Bytes currently held by an input buffer of `node`.
    pub fn buffer_used(&self, node: usize, port: usize) -> u32 {
        self.routers[node].used[port]
    }

    /// Checks the buffer accounting: every budget equals the bytes of its
    /// entries and stays within capacity.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut entries = 0;
        for (n, r) in self.routers.iter().enumerate() {
            for p in 0..NEIGHBOR_PORTS {
                let sum: u32 = r.inputs[p].iter().map(|e| e.bytes).sum();
                if sum != r.used[p] {
                    return Err(format!("node {n} port {p}: accounted {} bytes, holds {sum}", r.used[p]));
                }
                if sum > self.cfg.buffer_bytes {
                    return Err(format!("node {n} port {p}: {sum} bytes exceed capacity"));
                }
            }
            entries += r.inputs.iter().map(VecDeque::len).sum::<usize>();
        }
        if entries != self.occupied {
            return Err(format!("{entries} entries held, {} counted", self.occupied));
        }
        Ok(())
    }

    /// Hash of the complete dynamic state, for determinism checks.
    pub fn state_digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.cycle.hash(&mut h);
        for r in &self.routers {
            for q in &r.inputs {
                q.len().hash(&mut h);
                for e in q {
                    e.hash(&mut h);
                }
            }
            (r.used, r.out_busy, r.rr, r.core_busy_until, r.brooms, &r.broom_out, r.drained_at).hash(&mut h);
        }
        h.finish()
    }
}

/// For every node and output port, the sources whose dimension-order
/// broadcast tree crosses that link.
fn tree_sources(torus: &Torus) -> Vec<[NodeSet; NEIGHBOR_PORTS]> {
    let nodes = torus.nodes();
    let mut table: Vec<[NodeSet; NEIGHBOR_PORTS]> =
        (0..nodes).map(|_| std::array::from_fn(|_| NodeSet::new(nodes))).collect();
    let mut stack = Vec::new();
    for src in 0..nodes {
        stack.push((src, NodeSet::full(nodes)));
        while let Some((at, dest)) = stack.pop() {
            let split = torus.route(at, &dest);
            for (port, branch) in split.ports.into_iter().enumerate() {
                let Some(branch) = branch else { continue };
                table[at][port].insert(src);
                let next = torus.neighbor(at, port).expect("routed port has a link");
                stack.push((next, branch));
            }
        }
    }
    table
}

#[cfg(test)]
mod tests;

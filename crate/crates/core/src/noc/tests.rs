use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::rng::XorShift64Star;

fn net(width: u32, height: u32) -> Network {
    Network::new(NetConfig::with_dims(width, height)).unwrap()
}

fn unicast(src: usize, dst: usize, nodes: usize, kind: PacketKind, bits: u32, records: Vec<u64>) -> Packet {
    Packet::new(kind, src, NodeSet::single(nodes, dst), 0, bits, records)
}

fn tick_until_delivery(net: &mut Network, limit: u64) -> Vec<Delivery> {
    for _ in 0..limit {
        net.tick();
        let d = net.take_deliveries();
        if !d.is_empty() {
            return d;
        }
    }
    panic!("nothing delivered within {limit} cycles");
}

#[test]
fn config_validation() {
    assert!(Network::new(NetConfig::with_dims(0, 4)).is_err());
    assert!(Network::new(NetConfig { max_packet_bytes: 81, ..NetConfig::default() }).is_err());
    assert!(Network::new(NetConfig { link_width: 0, ..NetConfig::default() }).is_err());
}

#[test]
fn adjacent_unicast_takes_six_cycles() {
    // pipeline 4 + link 1 + one 16-byte flit for a 38-bit packet
    let mut n = net(4, 4);
    n.inject(unicast(0, 1, 16, PacketKind::Inhibition, 22, vec![0x2A])).unwrap();
    let d = tick_until_delivery(&mut n, 100);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].node, 1);
    assert_eq!(d[0].cycle, 6);
    assert_eq!(n.stats().flit_hops[PacketKind::Inhibition.index()], 1);
}

#[test]
fn two_hop_unicast_pays_pipeline_twice() {
    let mut n = net(4, 4);
    n.inject(unicast(0, 2, 16, PacketKind::Proximal, 11, vec![1])).unwrap();
    let d = tick_until_delivery(&mut n, 100);
    // second hop: head at 5, eligible at 9, tail arrives at 11
    assert_eq!(d[0].cycle, 11);
}

#[test]
fn narrow_links_serialize() {
    let mut n = Network::new(NetConfig { link_width: 8, ..NetConfig::default() }).unwrap();
    // 16 + 3*22 = 82 bits -> two 8-byte flits
    n.inject(unicast(0, 1, 16, PacketKind::Inhibition, 22, vec![1, 2, 3])).unwrap();
    let d = tick_until_delivery(&mut n, 100);
    assert_eq!(d[0].cycle, 7);
    assert_eq!(n.stats().flit_hops[PacketKind::Inhibition.index()], 2);
}

#[test]
fn idle_network_accumulates_nothing() {
    let mut n = net(4, 4);
    let before = n.stats();
    for _ in 0..1000 {
        n.tick();
    }
    let delta = n.stats().since(&before);
    assert_eq!(delta, NetStats { cycles: 1000, ..Default::default() });
}

#[test]
fn self_delivery_uses_no_links() {
    let mut n = net(4, 4);
    n.inject(unicast(5, 5, 16, PacketKind::Prediction, 11, vec![7])).unwrap();
    let d = tick_until_delivery(&mut n, 100);
    assert_eq!(d[0].cycle, 4);
    let s = n.stats();
    assert_eq!(s.total_flit_hops(), 0);
    assert_eq!(s.delivered.iter().sum::<u64>(), 1);
}

#[test]
fn coalescing_merges_same_mask_and_epoch() {
    let cfg = NetConfig { coalescing: true, ..NetConfig::default() };
    let mut n = Network::new(cfg).unwrap();
    n.inject(unicast(0, 3, 16, PacketKind::Proximal, 11, vec![1])).unwrap();
    n.inject(unicast(0, 3, 16, PacketKind::Proximal, 11, vec![2])).unwrap();
    assert_eq!(n.stats().queued[PacketKind::Proximal.index()], 1);
    let d = tick_until_delivery(&mut n, 100);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].payload.records, vec![1, 2]);

    let mut n = Network::new(NetConfig { coalescing: true, ..NetConfig::default() }).unwrap();
    n.inject(unicast(0, 3, 16, PacketKind::Proximal, 11, vec![1])).unwrap();
    n.inject(unicast(0, 2, 16, PacketKind::Proximal, 11, vec![1])).unwrap();
    assert_eq!(n.stats().queued[PacketKind::Proximal.index()], 2);
}

#[test]
fn coalescing_respects_epoch_and_size() {
    let mut n = Network::new(NetConfig { coalescing: true, ..NetConfig::default() }).unwrap();
    let dest = NodeSet::full(16);
    for i in 0..100u64 {
        n.inject(Packet::new(PacketKind::Inhibition, 0, dest.clone(), 0, 22, vec![i])).unwrap();
    }
    // 100 records of 22 bits, 640 - 16 bits of payload room per packet
    let expected = (100u32 * 22).div_ceil(8 * 80 - HEADER_BITS);
    assert_eq!(n.stats().queued[PacketKind::Inhibition.index()], expected as u64);
    n.inject(Packet::new(PacketKind::Inhibition, 0, dest, 1, 22, vec![0])).unwrap();
    assert_eq!(n.stats().queued[PacketKind::Inhibition.index()], expected as u64 + 1);
}

#[test]
fn oversized_and_malformed_packets_rejected() {
    let mut n = net(2, 2);
    assert!(n.inject(unicast(0, 1, 4, PacketKind::Distal, 17, vec![0; 40])).is_err());
    assert!(n.inject(Packet::new(PacketKind::Distal, 0, NodeSet::new(4), 0, 17, vec![1])).is_err());
    assert!(n.inject(unicast(9, 1, 4, PacketKind::Distal, 17, vec![1])).is_err());
}

/// Independent oracle: walks the dimension-order path to every destination
/// hop by hop and collects the distinct directed links used.
fn dor_tree_links(width: u32, height: u32, src: usize, dests: &[usize]) -> BTreeSet<(usize, usize)> {
    fn step(from: u32, to: u32, size: u32) -> i64 {
        let fwd = (to + size - from) % size;
        if fwd == 0 {
            0
        } else if fwd <= size - fwd {
            1
        } else {
            -1
        }
    }
    let mut links = BTreeSet::new();
    for &d in dests {
        let (mut x, mut y) = (src as u32 % width, src as u32 / width);
        let (dx, dy) = (d as u32 % width, d as u32 / width);
        while x != dx {
            let nx = (x as i64 + step(x, dx, width)).rem_euclid(width as i64) as u32;
            links.insert(((y * width + x) as usize, (y * width + nx) as usize));
            x = nx;
        }
        while y != dy {
            let ny = (y as i64 + step(y, dy, height)).rem_euclid(height as i64) as u32;
            links.insert(((y * width + x) as usize, (ny * width + x) as usize));
            y = ny;
        }
    }
    links
}

#[test]
fn broadcast_reaches_everyone_once_over_the_dor_tree() {
    for (w, h, src) in [(4, 4, 0), (5, 3, 7), (2, 3, 1), (8, 8, 27)] {
        let mut n = net(w, h);
        let nodes = (w * h) as usize;
        n.inject(Packet::new(PacketKind::Inhibition, src, NodeSet::full(nodes), 0, 22, vec![1])).unwrap();
        n.run_until_idle(1000).unwrap();
        let d = n.take_deliveries();
        let mut seen: Vec<usize> = d.iter().map(|d| d.node).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..nodes).collect::<Vec<_>>());
        let all: Vec<usize> = (0..nodes).collect();
        let tree = dor_tree_links(w, h, src, &all);
        assert_eq!(n.stats().flit_hops[PacketKind::Inhibition.index()], tree.len() as u64, "{w}x{h}");
    }
}

#[test]
fn degenerate_tori_deliver() {
    for (w, h) in [(1, 2), (2, 1), (2, 2), (1, 3), (3, 1)] {
        let mut n = net(w, h);
        let nodes = (w * h) as usize;
        for s in 0..nodes {
            n.inject(Packet::new(PacketKind::Distal, s, NodeSet::full(nodes), 0, 17, vec![s as u64])).unwrap();
        }
        n.run_until_idle(1000).unwrap();
        assert_eq!(n.take_deliveries().len(), nodes * nodes);
        n.check_invariants().unwrap();
    }
}

#[test]
fn single_router_drains_at_once() {
    let mut n = net(1, 1);
    n.launch_brooms(0, false);
    assert!(n.is_drained(0));
    assert_eq!(n.drained_at(0), Some(0));
}

#[test]
fn two_by_two_drain_matches_hand_trace() {
    // Own brooms count at cycle 0. The +X link of node v only carries v's
    // tree, so its broom leaves at 0 + 4 and its tail lands at 6. The +Y
    // link of v carries the trees of v and its row neighbor, so it waits for
    // that neighbor's broom (6), leaves at 10 and lands at 12. Each node
    // receives its own broom plus one per incoming link.
    let mut n = net(2, 2);
    n.launch_brooms(0, false);
    n.run_until_drained(100).unwrap();
    for v in 0..4 {
        assert_eq!(n.drained_at(v), Some(12), "node {v}");
    }
    assert_eq!(n.stats().delivered[PacketKind::Broom.index()], 12);
}

#[test]
fn stale_broom_is_reported() {
    let mut n = net(4, 4);
    n.launch_brooms(0, false);
    for _ in 0..5 {
        n.tick();
    }
    n.launch_brooms(1, false);
    n.run_until_drained(1000).unwrap();
    assert!(n.stats().stale_brooms > 0);
}

#[test]
fn gated_drain_waits_for_core() {
    let mut n = net(2, 2);
    n.occupy_core(3, 50);
    n.launch_brooms(0, true);
    let done = n.run_until_drained(1000).unwrap();
    assert!(done >= 50);
    assert!(n.drained_at(3).unwrap() >= 50);
}

fn random_packet(rng: &mut XorShift64Star, nodes: usize, epoch: u32) -> Packet {
    let src = rng.below(nodes as u64) as usize;
    let kind = PacketKind::ALL[rng.below(4) as usize];
    let (bits, cap) = match kind {
        PacketKind::Proximal | PacketKind::Prediction => (11, 8),
        PacketKind::Inhibition => (22, 20),
        _ => (17, 12),
    };
    let mut dest = NodeSet::new(nodes);
    let fanout = 1 + rng.below(nodes as u64) as usize;
    for _ in 0..fanout {
        dest.insert(rng.below(nodes as u64) as usize);
    }
    let records = (0..1 + rng.below(cap)).map(|_| rng.below(1 << bits)).collect();
    Packet::new(kind, src, dest, epoch, bits, records)
}

fn triples(deliveries: &[Delivery]) -> BTreeMap<(PacketKind, u64, usize), usize> {
    let mut m = BTreeMap::new();
    for d in deliveries {
        if d.payload.kind == PacketKind::Broom {
            continue;
        }
        for &r in &d.payload.records {
            *m.entry((d.payload.kind, r, d.node)).or_insert(0) += 1;
        }
    }
    m
}

#[test]
fn heavy_multicast_traffic_completes() {
    let mut n = net(4, 4);
    let mut rng = XorShift64Star::new(11);
    for cycle in 0..100_000u64 {
        if cycle < 90_000 && rng.below(2) == 0 {
            n.inject(random_packet(&mut rng, 16, 0)).unwrap();
        }
        n.tick();
        if cycle % 997 == 0 {
            n.check_invariants().unwrap();
        }
    }
    n.run_until_idle(10_000).unwrap();
    let s = n.stats();
    assert_eq!(s.delivered, s.expected_deliveries);
}

#[test]
fn coalescing_is_transparent() {
    let run = |coalescing: bool| {
        let mut n = Network::new(NetConfig { coalescing, ..NetConfig::default() }).unwrap();
        let mut rng = XorShift64Star::new(5);
        let mut all = Vec::new();
        for epoch in 0..20 {
            for _ in 0..60 {
                let mut p = random_packet(&mut rng, 16, epoch);
                // narrow masks give coalescing something to merge
                if rng.below(2) == 0 {
                    p.dest = NodeSet::single(16, (p.src + 1) % 16);
                }
                n.inject(p).unwrap();
            }
            n.launch_brooms(epoch, false);
            n.run_until_drained(10_000).unwrap();
            all.extend(n.take_deliveries());
        }
        (triples(&all), n.stats())
    };
    let (plain, s0) = run(false);
    let (merged, s1) = run(true);
    assert_eq!(plain, merged);
    assert!(s1.queued.iter().sum::<u64>() < s0.queued.iter().sum::<u64>());
}

#[test]
fn identical_inputs_give_identical_states() {
    let mut a = net(4, 4);
    let mut b = net(4, 4);
    let mut ra = XorShift64Star::new(3);
    let mut rb = XorShift64Star::new(3);
    for cycle in 0..3000 {
        if cycle % 3 == 0 {
            a.inject(random_packet(&mut ra, 16, 0)).unwrap();
            b.inject(random_packet(&mut rb, 16, 0)).unwrap();
        }
        a.tick();
        b.tick();
        assert_eq!(a.state_digest(), b.state_digest());
    }
}

#[test]
fn energy_recomputes_from_dumped_counters() {
    let mut n = net(4, 4);
    let mut rng = XorShift64Star::new(17);
    for _ in 0..200 {
        n.inject(random_packet(&mut rng, 16, 0)).unwrap();
    }
    n.run_until_idle(10_000).unwrap();
    let costs = EnergyCosts { router_traversal: 2.0, link_flit: 1.0, buffer_write: 1.0, buffer_read: 1.0 };
    let header = NetStats::csv_header();
    let row = n.stats().csv_row(0, &costs);
    let cols: BTreeMap<&str, f64> = header.split(',').zip(row.split(',').map(|v| v.parse().unwrap())).collect();
    let recomputed = 2.0 * cols["router_traversals"] + cols["link_flits"] + cols["buffer_writes"] + cols["buffer_reads"];
    assert_eq!(cols["energy"], recomputed);
    assert!(recomputed > 0.0);
}

#[test]
fn trace_logs_one_line_per_event() {
    let mut n = Network::new(NetConfig { trace: true, ..NetConfig::default() }).unwrap();
    n.inject(unicast(0, 1, 16, PacketKind::Proximal, 11, vec![3])).unwrap();
    n.run_until_idle(100).unwrap();
    let lines = n.take_trace();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("0 inject"));
    assert!(lines[1].starts_with("4 send"));
    assert!(lines[2].starts_with("6 deliver"));
}


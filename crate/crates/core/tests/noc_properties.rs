use claasic::noc::{NetConfig, Network, NodeSet, Packet, PacketKind};
use claasic::rng::XorShift64Star;

fn random_packet(rng: &mut XorShift64Star, nodes: usize, epoch: u32) -> Packet {
    let src = rng.below(nodes as u64) as usize;
    let kind = PacketKind::ALL[rng.below(4) as usize];
    let bits = [11, 22, 17, 11][kind.index()];
    let mut dest = NodeSet::new(nodes);
    for _ in 0..1 + rng.below(nodes as u64) {
        dest.insert(rng.below(nodes as u64) as usize);
    }
    let records = (0..1 + rng.below(12)).map(|_| rng.below(1 << bits)).collect();
    Packet::new(kind, src, dest, epoch, bits, records)
}

#[test]
fn million_cycle_multicast_stress_never_stalls() {
    let mut net = Network::new(NetConfig::with_dims(4, 4)).unwrap();
    let mut rng = XorShift64Star::new(2024);
    let mut last_delivered = 0u64;
    let mut last_change = 0u64;
    for cycle in 0..1_000_000u64 {
        // keep the network saturated but bounded
        let s = net.stats();
        let backlog = s.expected_deliveries.iter().sum::<u64>() - s.delivered.iter().sum::<u64>();
        if backlog < 400 && rng.below(3) != 0 {
            net.inject(random_packet(&mut rng, 16, 0)).unwrap();
        }
        net.tick();
        let delivered: u64 = net.stats().delivered.iter().sum();
        if delivered != last_delivered {
            last_delivered = delivered;
            last_change = cycle;
        }
        assert!(cycle - last_change < 5_000, "no delivery for 5000 cycles at {cycle}");
        net.take_deliveries();
    }
    net.run_until_idle(10_000).unwrap();
    net.check_invariants().unwrap();
    let s = net.stats();
    assert_eq!(s.delivered, s.expected_deliveries);
}

#[test]
fn ten_thousand_drains_have_no_late_deliveries() {
    let mut net = Network::new(NetConfig { coalescing: true, ..NetConfig::with_dims(4, 4) }).unwrap();
    let mut rng = XorShift64Star::new(99);
    for epoch in 0..10_000u32 {
        for _ in 0..rng.below(24) {
            net.inject(random_packet(&mut rng, 16, epoch)).unwrap();
        }
        net.launch_brooms(epoch, epoch % 2 == 1);
        // traffic of the next epoch may overlap the drain
        for _ in 0..rng.below(4) {
            net.inject(random_packet(&mut rng, 16, epoch + 1)).unwrap();
        }
        net.run_until_drained(10_000).unwrap();
        let drained: Vec<u64> = (0..16).map(|v| net.drained_at(v).unwrap()).collect();
        for d in net.take_deliveries() {
            if d.payload.epoch <= epoch {
                assert!(d.cycle <= drained[d.node], "epoch {epoch}: late delivery at node {}", d.node);
            }
        }
        // everything tagged with this epoch has arrived everywhere
        let s = net.stats();
        let pending = s.expected_deliveries.iter().sum::<u64>() - s.delivered.iter().sum::<u64>();
        assert!(pending <= 16 * 4 * 16, "epoch {epoch}");
    }
    net.run_until_idle(10_000).unwrap();
    let s = net.stats();
    assert_eq!(s.late_deliveries, 0);
    assert_eq!(s.stale_brooms, 0);
    assert_eq!(s.delivered, s.expected_deliveries);
}

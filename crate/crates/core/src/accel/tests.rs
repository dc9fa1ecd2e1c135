use super::*;
use crate::sdr::SdrParams;

fn small(schedule: Schedule, zones: u32) -> MachineConfig {
    let cortex = CortexParams {
        num_columns: 128,
        cells_per_column: 8,
        density: 0.04,
        input_bits: 512,
        receptive_field: 48,
        activation_threshold: 4,
        matching_threshold: 2,
        ..CortexParams::desk()
    };
    MachineConfig {
        cortex,
        encoder: SdrParams { k: 512, w: 16, master_seed: 7 },
        net: NetConfig::with_dims(4, 2),
        schedule,
        zones,
        watchdog: 100_000,
    }
}

fn sequence(n: usize) -> Vec<u64> {
    let pattern = [3u64, 40, 17, 90, 61, 5];
    (0..n).map(|i| pattern[i % pattern.len()] * 1000).collect()
}

fn check_equivalence(cfg: MachineConfig, values: &[u64]) -> Machine {
    let mut machine = Machine::new(cfg.clone()).unwrap();
    let mut reference = Reference::new(&cfg).unwrap();
    let got: Vec<EpochResult> = machine.run_values(values).unwrap().into_iter().map(|r| r.result).collect();
    let want = reference.run_values(values).unwrap();
    let report = verify_against_reference(&got, &want);
    assert!(report.is_match(), "{:?}", report.first());
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g.next_predicted, w.next_predicted);
        assert_eq!(g.bursting_columns, w.bursting_columns);
    }
    assert_eq!(machine.to_regions(), reference.regions());
    machine
}

#[test]
fn sequential_matches_reference() {
    let m = check_equivalence(small(Schedule::Sequential, 1), &sequence(40));
    assert_eq!(m.drains(), 3 * 40);
    let s = m.stats();
    assert_eq!(s.delivered, s.expected_deliveries);
    assert_eq!((s.late_deliveries, s.stale_brooms), (0, 0));
}

#[test]
fn pipelined_matches_reference() {
    let m = check_equivalence(small(Schedule::Pipelined, 1), &sequence(40));
    assert_eq!(m.drains(), 40 + 2);
    let mut fresh = Machine::new(small(Schedule::Pipelined, 1)).unwrap();
    let reports = fresh.run_values(&sequence(10)).unwrap();
    let drains: Vec<u64> = reports.iter().map(|r| r.drains).collect();
    assert_eq!(drains, [1, 1, 1, 1, 1, 1, 1, 1, 1, 3]);
    assert_eq!(m.stats().late_deliveries, 0);
}

#[test]
fn coalescing_keeps_results() {
    let mut cfg = small(Schedule::Pipelined, 1);
    cfg.net.coalescing = true;
    check_equivalence(cfg, &sequence(30));
}

#[test]
fn zones_match_per_zone_reference_and_stay_isolated() {
    for schedule in [Schedule::Sequential, Schedule::Pipelined] {
        let m = check_equivalence(small(schedule, 2), &sequence(31));
        assert_eq!(m.cross_zone_deliveries(), 0);
    }
}

#[test]
fn batches_continue_where_they_stopped() {
    let cfg = small(Schedule::Pipelined, 2);
    let values = sequence(24);
    let mut whole = Machine::new(cfg.clone()).unwrap();
    let a = whole.run_values(&values).unwrap();
    let mut split = Machine::new(cfg).unwrap();
    let mut b = split.run_values(&values[..11]).unwrap();
    b.extend(split.run_values(&values[11..]).unwrap());
    let ra: Vec<_> = a.into_iter().map(|r| r.result).collect();
    let rb: Vec<_> = b.into_iter().map(|r| r.result).collect();
    assert_eq!(ra, rb);
}

#[test]
fn snapshot_round_trip_resumes_identically() {
    let cfg = small(Schedule::Sequential, 1);
    let values = sequence(30);
    let mut a = Machine::new(cfg.clone()).unwrap();
    a.run_values(&values[..18]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.clas");
    a.save(&path).unwrap();
    let mut b = Machine::load(cfg, &path).unwrap();
    let ra: Vec<_> = a.run_values(&values[18..]).unwrap().into_iter().map(|r| r.result).collect();
    let rb: Vec<_> = b.run_values(&values[18..]).unwrap().into_iter().map(|r| r.result).collect();
    assert_eq!(ra, rb);
}

#[test]
fn attribution_sums_to_totals() {
    for schedule in [Schedule::Sequential, Schedule::Pipelined] {
        let mut m = Machine::new(small(schedule, 1)).unwrap();
        let reports = m.run_values(&sequence(12)).unwrap();
        let cycles: u64 = reports.iter().map(|r| r.cycles).sum();
        let hops: u64 = reports.iter().map(|r| r.net.total_flit_hops()).sum();
        assert_eq!(cycles, m.network().cycle());
        assert_eq!(hops, m.stats().total_flit_hops());
    }
}

#[test]
fn steady_state_without_learning_repeats_costs() {
    let mut m = Machine::new(small(Schedule::Sequential, 1)).unwrap();
    m.run_values(&sequence(60)).unwrap();
    m.set_learning(false);
    let first = m.run_values(&sequence(6)).unwrap();
    let second = m.run_values(&sequence(6)).unwrap();
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a.result.active_columns, b.result.active_columns);
        assert_eq!(a.net.flit_hops, b.net.flit_hops);
    }
}

#[test]
fn rejects_bad_configs_and_inputs() {
    let mut cfg = small(Schedule::Sequential, 1);
    cfg.encoder.k = 500;
    assert!(Machine::new(cfg).is_err());
    assert!(Machine::new(small(Schedule::Sequential, 3)).is_err());
    let mut m = Machine::new(small(Schedule::Sequential, 1)).unwrap();
    assert!(m.run_sdrs(&[Sdr::empty(64)]).is_err());
    assert!("diagonal".parse::<Schedule>().is_err());
    assert_eq!("pipelined".parse::<Schedule>().unwrap(), Schedule::Pipelined);
}

#[test]
fn record_widths_follow_geometry() {
    let m = Machine::new(small(Schedule::Sequential, 1)).unwrap();
    let f = m.formats();
    assert_eq!((f.proximal(), f.inhibition(), f.distal(), f.prediction()), (9, 16, 10, 7));
}

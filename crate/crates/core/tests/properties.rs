use claasic::accel::{verify_against_reference, Machine, MachineConfig, PacketFormats, Reference, Schedule};
use claasic::cla::CortexParams;
use claasic::noc::NetConfig;
use claasic::sdr::{encode, overlap, SdrParams};
use proptest::prelude::*;

/// Smallest b with 2^b >= n, by counting.
fn bits_for(n: u32) -> u32 {
    let mut b = 0;
    while (1u64 << b) < n as u64 {
        b += 1;
    }
    b.max(1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn record_widths_follow_the_log_formulas(columns in 1u32..100_000, inputs in 1u32..100_000, cells in 1u32..1024) {
        let f = PacketFormats::new(columns, inputs, cells);
        prop_assert_eq!(f.proximal(), bits_for(inputs));
        prop_assert_eq!(f.inhibition(), bits_for(columns) + bits_for(inputs));
        prop_assert_eq!(f.distal(), bits_for(columns) + bits_for(cells));
        prop_assert_eq!(f.prediction(), bits_for(columns));
    }

    #[test]
    fn records_round_trip(columns in 2u32..5000, inputs in 2u32..5000, cells in 2u32..64, seed in any::<u64>()) {
        let f = PacketFormats::new(columns, inputs, cells);
        let column = (seed % columns as u64) as u32;
        let value = ((seed >> 20) % inputs as u64) as u32;
        let cell = ((seed >> 40) % cells as u64) as u16;
        prop_assert_eq!(f.split_inhibition(f.inhibition_record(column, value)), (column, value));
        prop_assert_eq!(f.split_distal(f.distal_record(column, cell)), (column, cell));
    }

    #[test]
    fn encoder_has_fixed_cardinality_and_close_neighbors(value in 0u64..1 << 40, w in 4u32..64, seed in any::<u64>()) {
        let p = SdrParams { k: 2048, w, master_seed: seed };
        let a = encode(value, &p).unwrap();
        let b = encode(value + 1, &p).unwrap();
        prop_assert_eq!(a.count(), w as usize);
        prop_assert_eq!(&a, &encode(value, &p).unwrap());
        let bucket = value / w as u64;
        let c = overlap(&encode(bucket * w as u64, &p).unwrap(), &encode((bucket + 1) * w as u64, &p).unwrap()).unwrap();
        prop_assert!(overlap(&a, &b).unwrap() + 1 + c >= w as usize);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn machine_matches_reference_on_any_grid(width in 2u32..5, height in 1u32..4, seed in any::<u64>(), pipelined in any::<bool>()) {
        let cfg = MachineConfig {
            cortex: CortexParams {
                num_columns: 96,
                cells_per_column: 8,
                density: 0.05,
                input_bits: 512,
                receptive_field: 48,
                activation_threshold: 4,
                matching_threshold: 2,
                seed,
                ..CortexParams::desk()
            },
            encoder: SdrParams { k: 512, w: 16, master_seed: seed ^ 1 },
            net: NetConfig::with_dims(width, height),
            schedule: if pipelined { Schedule::Pipelined } else { Schedule::Sequential },
            zones: 1,
            watchdog: 100_000,
        };
        let values: Vec<u64> = (0..30).map(|i| [7u64, 300, 91, 4000][i % 4] + (seed % 50)).collect();
        let got: Vec<_> = Machine::new(cfg.clone()).unwrap().run_values(&values).unwrap().into_iter().map(|r| r.result).collect();
        let expected = Reference::new(&cfg).unwrap().run_values(&values).unwrap();
        let report = verify_against_reference(&got, &expected);
        prop_assert!(report.is_match(), "{:?}", report.first());
    }
}

use proptest::prelude::*;

use wiblock::config::ScenarioConfig;
use wiblock::des::{
    run_gb_sim, run_naive_sim, run_wiblock_sim, run_witness_queue_sim, EventKind, EventQueue,
    Payload,
};
use wiblock::experiments::scenario::deployment_and_links;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wiblock_conserves_transactions(
        v in 1usize..6,
        devices in 5usize..80,
        rate in 1e-4f64..5e-2,
        block_size in 1usize..50,
        seed in any::<u64>(),
    ) {
        let mut cfg = ScenarioConfig::with_witnesses(v).with_rate(rate);
        cfg.num_devices = devices;
        cfg.queue.block_size = block_size;
        let (dep, ps) = deployment_and_links(&cfg, 0);
        let r = run_wiblock_sim(&cfg, &dep, &ps, 5e3, seed).unwrap();
        prop_assert_eq!(r.generated_count, r.confirmed_count + r.dropped_count + r.in_flight_count);
        prop_assert_eq!(r.delivered_global_count + r.delivered_local_count + r.dropped_count, r.generated_count);
        prop_assert_eq!(r.ledger_tx_counts.gb, r.global_count);
        prop_assert_eq!(r.ledger_tx_counts.local.iter().sum::<u64>(), r.local_count);
        prop_assert!(r.global_count <= r.delivered_global_count);
        prop_assert!(r.block_count * block_size as u64 >= r.ledger_tx_counts.gb);
        if v == 1 {
            prop_assert_eq!(r.delivered_global_count, 0);
        }
        let again = run_wiblock_sim(&cfg, &dep, &ps, 5e3, seed).unwrap();
        prop_assert_eq!(r.to_json(), again.to_json());
    }

    #[test]
    fn naive_confirms_through_blocks_only(rate in 1e-4f64..1e-2, seed in any::<u64>()) {
        let mut cfg = ScenarioConfig::with_witnesses(2).with_rate(rate);
        cfg.num_devices = 50;
        cfg.queue.block_size = 20;
        cfg.queue.block_rate_bps = 0.05;
        let r = run_naive_sim(&cfg, 2e3, seed).unwrap();
        prop_assert_eq!(r.local_count, 0);
        prop_assert_eq!(r.dropped_count, 0);
        prop_assert_eq!(r.generated_count, r.confirmed_count + r.in_flight_count);
        prop_assert_eq!(r.ledger_tx_counts.gb, r.confirmed_count);
    }

    #[test]
    fn gb_levels_are_consistent(lambda in 0.01f64..0.5, b in 1usize..20, seed in any::<u64>()) {
        let r = run_gb_sim(lambda, 0.1, b, 2e4, seed).unwrap();
        prop_assert!(r.mean_gb_sojourn_s.is_nan() || r.mean_gb_sojourn_s > 0.0);
        prop_assert!(r.gb_mean_waiting_len <= r.gb_mean_queue_len + 1e-12);
    }

    #[test]
    fn witness_queue_phase_share(p in 0.0f64..=1.0, seed in any::<u64>()) {
        let r = run_witness_queue_sim(0.5, p, 2.0, 3.0, 2e4, seed).unwrap();
        let n = r.served_count as f64;
        prop_assert!(n > 0.0);
        let hw = 5.0 * (p * (1.0 - p) / n).sqrt() + 1.0 / n;
        prop_assert!((r.global_service_fraction - p).abs() <= hw);
    }

    #[test]
    fn event_queue_pops_in_order(times in prop::collection::vec(0.0f64..1e3, 1..200)) {
        let mut q = EventQueue::new();
        for (i, &t) in times.iter().enumerate() {
            let kind = match i % 3 {
                0 => EventKind::Arrival,
                1 => EventKind::WitnessServiceEnd,
                _ => EventKind::BlockComplete,
            };
            q.schedule(t, kind, Payload::Transaction(i as u64));
        }
        let mut last: Option<(f64, EventKind, u64)> = None;
        while let Some(e) = q.pop() {
            let key = (e.time, e.kind, e.seq);
            if let Some(prev) = last {
                prop_assert!(prev.0 < key.0 || (prev.0 == key.0 && (prev.1, prev.2) < (key.1, key.2)));
            }
            last = Some(key);
        }
    }
}

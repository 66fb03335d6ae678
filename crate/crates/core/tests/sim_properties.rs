use ebs_core::protocol::{BroadcastMessage, MessageKind};
use ebs_core::protocol::{Mode, ProtocolConfig};
use ebs_core::sim::{
    deliver_broadcast, run, DelayKind, DelayModel, EventQueue, LinkFaultModel, Protocol, Scenario, StartMode,
};
use ebs_core::topology::{make_random_geometric, make_regular_grid, parse_edge_list};
use ebs_core::{NodeId, PhaseDistance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(period: u64, epsilon: f64, sigma: f64) -> ProtocolConfig {
    ProtocolConfig {
        period,
        epsilon,
        sigma,
        ..ProtocolConfig::default()
    }
}

#[test]
fn pair_settles_within_window() {
    let t = parse_edge_list("0 1\n", false, None).unwrap();
    for seed in 0..20 {
        let mut s = Scenario::new(t.clone(), Protocol::Ebs(cfg(10_000, 0.01, 0.005)), 10, seed);
        s.start_mode = StartMode::Synchronization;
        let r = run(&s).unwrap();
        assert!(
            r.final_modes.values().all(|m| *m == Mode::SteadyDutyCycled),
            "seed {seed}"
        );
        let (a, b) = (r.final_phases[&NodeId(0)], r.final_phases[&NodeId(1)]);
        assert!(PhaseDistance::Circular.between(a, b) <= 0.01, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn same_seed_same_result(seed in any::<u64>()) {
        let t = make_regular_grid(4, 4, true).unwrap();
        let mut s = Scenario::new(t, Protocol::Ebs(cfg(2_000, 0.05, 0.02)), 12, seed);
        s.trace = true;
        s.faults = LinkFaultModel { loss_probability: 0.1, collisions: true, airtime: 3 };
        prop_assert_eq!(run(&s).unwrap(), run(&s).unwrap());
    }

    #[test]
    fn every_listener_gets_one_arrival(n in 2u32..40, radius in 0.1f64..0.6, seed in any::<u64>(), nu in 0u64..50) {
        let t = make_random_geometric(n, radius, seed).unwrap();
        let sender = NodeId((seed % n as u64) as u32);
        let msg = BroadcastMessage { sender, sent_at: 1_000, kind: MessageKind::Sync };
        let mut q = EventQueue::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = deliver_broadcast(
            &msg, &t, &DelayModel::new(DelayKind::Deterministic(nu)), &LinkFaultModel::lossless(), &mut rng, &mut q,
        );
        prop_assert_eq!(count, t.listeners(sender).count());
        let mut got = Vec::new();
        while let Some(e) = q.pop() {
            prop_assert_eq!(e.time, 1_000 + nu);
            got.push(e.node);
        }
        prop_assert_eq!(got, t.listeners(sender).collect::<Vec<_>>());
    }

    #[test]
    fn steady_torus_meets_pairwise_window(seed in any::<u64>()) {
        let t = make_regular_grid(5, 5, true).unwrap();
        let eps = 0.01;
        let mut s = Scenario::new(t.clone(), Protocol::Ebs(cfg(10_000, eps, 0.005)), 15, seed);
        s.start_mode = StartMode::Synchronization;
        let r = run(&s).unwrap();
        prop_assume!(r.final_modes.values().all(|m| *m == Mode::SteadyDutyCycled));
        for i in t.node_ids() {
            for j in t.neighbors(i) {
                let d = PhaseDistance::Circular.between(r.final_phases[&i], r.final_phases[&j]);
                // One tick of quantization on each side.
                prop_assert!(d <= eps + 2e-4, "{i}-{j}: {d}");
            }
        }
    }

    #[test]
    fn metrics_stay_in_range(
        n in 4u32..30,
        seed in any::<u64>(),
        eps in 0.01f64..0.2,
        frac in 0.1f64..0.9,
        s_th in 0.0f64..=100.0,
        collisions in any::<bool>(),
    ) {
        let t = make_random_geometric(n, 0.5, seed).unwrap();
        let sigma = frac * eps / (1.0 - eps);
        let mut c = cfg(1_000, eps, sigma);
        c.sync_threshold = s_th;
        let mut s = Scenario::new(t, Protocol::Ebs(c), 15, seed);
        s.faults = LinkFaultModel { loss_probability: 0.0, collisions, airtime: 2 };
        let r = run(&s).unwrap();
        prop_assert_eq!(r.series.len(), 15);
        for (k, row) in r.series.rows.iter().enumerate() {
            prop_assert_eq!(row.period as usize, k);
            prop_assert!((0.0..=100.0).contains(&row.duty_pct), "{row:?}");
            prop_assert!((0.0..=100.0 + 1e-9).contains(&row.thr_pct), "{row:?}");
            prop_assert!((0.0..=100.0).contains(&row.steady_pct));
            prop_assert!(row.dplus >= 0.0);
            prop_assert!(row.dphi_circular.is_nan() || row.dphi_circular <= 0.5);
        }
        let flaps: Vec<u32> = r.series.rows.iter().map(|r| r.flaps).collect();
        prop_assert!(flaps.windows(2).all(|w| w[0] <= w[1]));
    }
}

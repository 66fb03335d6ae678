use ebs_core::protocol::{Mode, ProtocolConfig};
use ebs_core::sim::{run, ChurnAction, ChurnEvent, JoinSpec, Protocol, Scenario, SimTime, StartMode};
use ebs_core::topology::{make_complete, make_regular_grid};
use ebs_core::NodeId;

const T: u64 = 10_000;

fn cfg(s_th: f64) -> ProtocolConfig {
    ProtocolConfig {
        period: T,
        epsilon: 0.01,
        sigma: 0.005,
        sync_threshold: s_th,
        ..ProtocolConfig::default()
    }
}

fn leave_from_k6(s_th: f64, seed: u64) -> ebs_core::sim::RunResult {
    let mut s = Scenario::new(make_complete(6).unwrap(), Protocol::Ebs(cfg(s_th)), 30, seed);
    s.start_mode = StartMode::Synchronization;
    s.churn.push(ChurnEvent {
        at: SimTime(15 * T),
        action: ChurnAction::Leave(NodeId(5)),
    });
    run(&s).unwrap()
}

#[test]
fn losing_one_of_five_keeps_eighty_percent() {
    for seed in 0..5 {
        let r = leave_from_k6(80.0, seed);
        assert_eq!(r.final_modes.len(), 5);
        assert!(
            r.final_modes.values().all(|m| *m == Mode::SteadyDutyCycled),
            "seed {seed}"
        );
        assert_eq!(r.series.rows.last().unwrap().flaps, 0, "seed {seed}");
    }
}

#[test]
fn losing_one_of_five_flaps_above_eighty() {
    for seed in 0..5 {
        let r = leave_from_k6(90.0, seed);
        let flapped: Vec<_> = r.mode_changes.iter().filter(|c| c.is_flap()).collect();
        assert_eq!(flapped.len(), 5, "seed {seed}");
        assert!(flapped.iter().all(|c| c.period >= 15));
    }
}

#[test]
fn joiner_syncs_and_incumbents_hold() {
    for seed in 0..5 {
        let t = make_regular_grid(5, 5, true).unwrap();
        let mut s = Scenario::new(t, Protocol::Ebs(cfg(80.0)), 40, seed);
        s.start_mode = StartMode::Synchronization;
        s.churn.push(ChurnEvent {
            at: SimTime(20 * T),
            action: ChurnAction::Join(JoinSpec {
                id: NodeId(25),
                links: vec![NodeId(0), NodeId(6), NodeId(12)],
            }),
        });
        let r = run(&s).unwrap();
        assert_eq!(r.final_modes[&NodeId(25)], Mode::SteadyDutyCycled, "seed {seed}");
        let incumbent_flaps = r
            .mode_changes
            .iter()
            .filter(|c| c.is_flap() && c.node != NodeId(25) && c.period >= 20)
            .count();
        assert_eq!(incumbent_flaps, 0, "seed {seed}");
    }
}

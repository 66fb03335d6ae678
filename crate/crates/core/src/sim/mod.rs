//! Deterministic discrete-event simulation of EBS (or MRF) networks.
//!
//! Time is integer ticks. Each node keeps its next fire instant; its phase at
//! `now` is `(P − (next_fire − now)) / P` for its own period `P`. Events that
//! share a tick run in `(priority, node, sender, insertion)` order, and a
//! per-node epoch discards fire, wake and sleep events that a later jump made
//! stale. Given the same scenario and seed a run is bit-for-bit repeatable.

pub mod medium;
pub mod models;
pub mod queue;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convergence::{avg_phase_advancement, avg_phase_difference_connected};
use crate::error::{Error, Result};
use crate::metrics::{duty_cycle, throughput, MetricsRow, MetricsSeries};
use crate::phase::{CouplingParams, Phase, PhaseDistance};
use crate::protocol::mrf::{MrfConfig, MrfNode};
use crate::protocol::{AwakePlan, BroadcastMessage, Mode, NodeState, ProtocolConfig, Transition};
use crate::topology::{NodeId, Topology};
use crate::Ticks;

pub use medium::{deliver_broadcast, Medium};
pub use models::{ClockDriftModel, DelayKind, DelayModel, LinkFaultModel};
pub use queue::{Event, EventKind, EventQueue};

/// A point in model time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub Ticks);

#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    Ebs(ProtocolConfig),
    Mrf {
        config: MrfConfig,
        coupling: CouplingParams,
    },
}

impl Protocol {
    pub fn period(&self) -> Ticks {
        match self {
            Protocol::Ebs(c) => c.period,
            Protocol::Mrf { config, .. } => config.period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Protocol::Ebs(c) => c.validate(),
            Protocol::Mrf { config, .. } => config.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPhases {
    /// Uniform over whole ticks of the period, from the run's RNG.
    Random,
    Explicit(BTreeMap<NodeId, Phase>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    Initialization,
    /// Skip initialization; each node starts with its true degree as the
    /// neighbour estimate.
    Synchronization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinSpec {
    pub id: NodeId,
    /// Links to existing nodes; both directions are added.
    pub links: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChurnAction {
    Join(JoinSpec),
    Leave(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChurnEvent {
    pub at: SimTime,
    pub action: ChurnAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub protocol: Protocol,
    pub delay: DelayModel,
    pub faults: LinkFaultModel,
    pub drift: ClockDriftModel,
    pub churn: Vec<ChurnEvent>,
    /// Number of periods `T` to simulate.
    pub horizon: u32,
    pub seed: u64,
    pub initial: InitialPhases,
    pub start_mode: StartMode,
    /// Probability that a node has an upper-layer payload queued for a period.
    pub payload_rate: f64,
    pub trace: bool,
}

impl Scenario {
    pub fn new(topology: Topology, protocol: Protocol, horizon: u32, seed: u64) -> Self {
        Scenario {
            topology,
            protocol,
            delay: DelayModel::default(),
            faults: LinkFaultModel::lossless(),
            drift: ClockDriftModel::default(),
            churn: Vec::new(),
            horizon,
            seed,
            initial: InitialPhases::Random,
            start_mode: StartMode::Initialization,
            payload_rate: 1.0,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least one period"));
        }
        if self.topology.is_empty() {
            return Err(Error::param("topology", "has no nodes"));
        }
        self.protocol.validate()?;
        self.delay.validate()?;
        self.faults.validate()?;
        if !(0.0..=1.0).contains(&self.payload_rate) {
            return Err(Error::param("payload_rate", "must lie in [0, 1]"));
        }
        if let InitialPhases::Explicit(map) = &self.initial {
            if let Some(id) = self.topology.node_ids().find(|id| !map.contains_key(id)) {
                return Err(Error::MissingPhase(id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeChange {
    pub time: SimTime,
    pub period: u32,
    pub node: NodeId,
    pub from: Mode,
    pub to: Mode,
}

impl ModeChange {
    pub fn is_flap(&self) -> bool {
        self.from == Mode::SteadyDutyCycled && self.to == Mode::Synchronization
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub event: &'static str,
    pub node: NodeId,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub series: MetricsSeries,
    pub mode_changes: Vec<ModeChange>,
    pub flaps: BTreeMap<NodeId, u32>,
    pub fire_log: Vec<(SimTime, NodeId)>,
    pub warnings: Vec<String>,
    /// Average degree from a fully awake, lossless reference period.
    pub avg_degree_measured: f64,
    /// Average degree read off the topology.
    pub avg_degree_topology: f64,
    pub final_modes: BTreeMap<NodeId, Mode>,
    pub final_phases: BTreeMap<NodeId, Phase>,
    pub trace: Vec<TraceRecord>,
}

/// Average number of receptions per node when every node broadcasts once,
/// all radios are on and no message is lost.
pub fn calibrate_average_degree(topology: &Topology) -> f64 {
    if topology.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut queue = EventQueue::new();
    let mut received = 0usize;
    for sender in topology.node_ids() {
        let msg = BroadcastMessage {
            sender,
            sent_at: 0,
            kind: crate::protocol::MessageKind::Sync,
        };
        received += deliver_broadcast(
            &msg,
            topology,
            &DelayModel::default(),
            &LinkFaultModel::lossless(),
            &mut rng,
            &mut queue,
        );
    }
    received as f64 / topology.len() as f64
}

/// Runs a scenario to its horizon.
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    Simulation::new(scenario)?.run()
}

#[derive(Debug, Clone)]
enum NodeProto {
    Ebs(NodeState),
    Mrf(MrfNode),
}

#[derive(Debug, Clone)]
struct SimNode {
    proto: NodeProto,
    period: Ticks,
    next_fire: Ticks,
    /// May be negative for the fictitious fire before a random start.
    last_fire: i64,
    plan: AwakePlan,
    epoch: u64,
    awake_since: Option<Ticks>,
    period_awake: Ticks,
    present_since: Ticks,
    period_jumps: Vec<(Phase, Phase)>,
}

impl SimNode {
    fn phase_at(&self, now: Ticks) -> Phase {
        let rem = self.next_fire.saturating_sub(now);
        Phase::saturating((self.period as f64 - rem as f64) / self.period as f64)
    }

    fn set_proto_phase(&mut self, phase: Phase) {
        match &mut self.proto {
            NodeProto::Ebs(n) => n.phase = phase,
            NodeProto::Mrf(n) => n.phase = phase,
        }
    }

    fn awake(&self) -> bool {
        self.awake_since.is_some()
    }

    fn set_awake(&mut self, awake: bool, now: Ticks) {
        match (awake, self.awake_since) {
            (true, None) => self.awake_since = Some(now),
            (false, Some(s)) => {
                self.period_awake += now - s;
                self.add_total(now - s);
                self.awake_since = None;
            }
            _ => {}
        }
        match &mut self.proto {
            NodeProto::Ebs(n) => n.awake = awake,
            NodeProto::Mrf(n) => n.awake = awake,
        }
    }

    fn add_total(&mut self, ticks: Ticks) {
        match &mut self.proto {
            NodeProto::Ebs(n) => n.awake_ticks_total += ticks,
            NodeProto::Mrf(n) => n.awake_ticks_total += ticks,
        }
    }

    fn flush_awake(&mut self, now: Ticks) {
        if let Some(s) = self.awake_since {
            self.period_awake += now - s;
            self.add_total(now - s);
            self.awake_since = Some(now);
        }
    }

    fn mode(&self) -> Option<Mode> {
        match &self.proto {
            NodeProto::Ebs(n) => Some(n.mode),
            NodeProto::Mrf(_) => None,
        }
    }
}

struct Simulation<'a> {
    scenario: &'a Scenario,
    period: Ticks,
    topology: Topology,
    nodes: BTreeMap<NodeId, SimNode>,
    queue: EventQueue,
    medium: Medium,
    rng: ChaCha8Rng,
    now: Ticks,
    avg_degree: f64,
    period_received: BTreeSet<(NodeId, NodeId)>,
    series: MetricsSeries,
    mode_changes: Vec<ModeChange>,
    flaps_total: u32,
    fire_log: Vec<(SimTime, NodeId)>,
    warnings: Vec<String>,
    warned: BTreeSet<NodeId>,
    trace: Vec<TraceRecord>,
    period_index: u32,
}

impl<'a> Simulation<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let period = scenario.protocol.period();
        let mut sim = Simulation {
            scenario,
            period,
            topology: scenario.topology.clone(),
            nodes: BTreeMap::new(),
            queue: EventQueue::new(),
            medium: Medium::new(&scenario.faults),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            now: 0,
            avg_degree: calibrate_average_degree(&scenario.topology),
            period_received: BTreeSet::new(),
            series: MetricsSeries::default(),
            mode_changes: Vec::new(),
            flaps_total: 0,
            fire_log: Vec::new(),
            warnings: Vec::new(),
            warned: BTreeSet::new(),
            trace: Vec::new(),
            period_index: 0,
        };
        let ids: Vec<NodeId> = sim.topology.node_ids().collect();
        for id in ids {
            let start = match &scenario.initial {
                InitialPhases::Random => None,
                InitialPhases::Explicit(map) => Some(map[&id]),
            };
            sim.spawn(id, start, scenario.start_mode);
        }
        for k in 1..=scenario.horizon {
            sim.queue.push(Event {
                time: k as Ticks * period,
                node: NodeId(0),
                sender: NodeId(0),
                kind: EventKind::PeriodBoundary { index: k },
            });
        }
        for (index, c) in scenario.churn.iter().enumerate() {
            sim.queue.push(Event {
                time: c.at.0,
                node: NodeId(0),
                sender: NodeId(0),
                kind: EventKind::Churn { index },
            });
        }
        Ok(sim)
    }

    fn spawn(&mut self, id: NodeId, start: Option<Phase>, mode: StartMode) {
        let p = self.scenario.drift.period_of(id, self.period);
        let elapsed = match start {
            Some(phi) => (libm::round(phi.value() * p as f64) as Ticks).min(p),
            None => self.rng.random_range(0..p),
        };
        let proto = match &self.scenario.protocol {
            Protocol::Ebs(cfg) => {
                let mut s = match mode {
                    StartMode::Initialization => NodeState::new(id, cfg),
                    StartMode::Synchronization => NodeState::synchronizing(id, cfg, self.topology.degree(id) as u32),
                };
                s.period = p;
                s.payload_queued = self.draw_payload();
                NodeProto::Ebs(s)
            }
            Protocol::Mrf { config, .. } => {
                let mut m = MrfNode::new(id, config);
                m.period = p;
                NodeProto::Mrf(m)
            }
        };
        let plan = match (&proto, &self.scenario.protocol) {
            (NodeProto::Mrf(_), Protocol::Mrf { config, .. }) => config.awake_plan(p),
            _ => AwakePlan::Always,
        };
        let node = SimNode {
            proto,
            period: p,
            next_fire: self.now + (p - elapsed),
            last_fire: self.now as i64 - elapsed as i64,
            plan,
            epoch: 0,
            awake_since: None,
            period_awake: 0,
            present_since: self.now,
            period_jumps: Vec::new(),
        };
        self.nodes.insert(id, node);
        self.schedule_fire(id);
        self.plan_awake(id);
    }

    fn draw_payload(&mut self) -> bool {
        let rate = self.scenario.payload_rate;
        if rate >= 1.0 {
            true
        } else if rate <= 0.0 {
            false
        } else {
            self.rng.random::<f64>() < rate
        }
    }

    fn record(&mut self, event: &'static str, node: NodeId, detail: impl FnOnce() -> String) {
        if self.scenario.trace {
            self.trace.push(TraceRecord {
                time: SimTime(self.now),
                event,
                node,
                detail: detail(),
            });
        }
    }

    fn schedule_fire(&mut self, id: NodeId) {
        let n = &self.nodes[&id];
        self.queue.push(Event {
            time: n.next_fire,
            node: id,
            sender: id,
            kind: EventKind::Fire { epoch: n.epoch },
        });
    }

    /// Sets the radio state for `now` and schedules the next wake or sleep.
    fn plan_awake(&mut self, id: NodeId) {
        let now = self.now;
        let n = self.nodes.get_mut(&id).expect("planned node exists");
        let (before, after) = match n.plan {
            AwakePlan::Always => {
                n.set_awake(true, now);
                return;
            }
            AwakePlan::Window { before, after } => (before, after),
        };
        let sleep_at = n.last_fire + after as i64;
        let in_after = (now as i64) < sleep_at;
        let in_before = n.next_fire - now <= before;
        let epoch = n.epoch;
        if in_after || in_before {
            n.set_awake(true, now);
            if in_after && !in_before && (n.next_fire as i64 - sleep_at) > before as i64 {
                self.queue.push(Event {
                    time: sleep_at as Ticks,
                    node: id,
                    sender: id,
                    kind: EventKind::Sleep { epoch },
                });
            }
        } else {
            n.set_awake(false, now);
            let wake_at = n.next_fire - before;
            self.queue.push(Event {
                time: wake_at,
                node: id,
                sender: id,
                kind: EventKind::Wake { epoch },
            });
        }
    }

    fn run(mut self) -> Result<RunResult> {
        while let Some(ev) = self.queue.pop() {
            debug_assert!(ev.time >= self.now);
            self.now = ev.time;
            match ev.kind {
                EventKind::PeriodBoundary { index } => {
                    self.close_period();
                    if index >= self.scenario.horizon {
                        break;
                    }
                }
                EventKind::Churn { index } => self.apply_churn(index)?,
                EventKind::Wake { epoch } => {
                    if let Some(n) = self.nodes.get_mut(&ev.node) {
                        if n.epoch == epoch {
                            n.set_awake(true, ev.time);
                        }
                    }
                }
                EventKind::Sleep { epoch } => {
                    if self.nodes.get(&ev.node).is_some_and(|n| n.epoch == epoch) {
                        let n = self.nodes.get_mut(&ev.node).expect("checked");
                        n.set_awake(false, ev.time);
                        if let AwakePlan::Window { before, .. } = n.plan {
                            let wake_at = n.next_fire - before;
                            self.queue.push(Event {
                                time: wake_at,
                                node: ev.node,
                                sender: ev.node,
                                kind: EventKind::Wake { epoch },
                            });
                        }
                    }
                }
                EventKind::Fire { epoch } => {
                    if self.nodes.get(&ev.node).is_some_and(|n| n.epoch == epoch) {
                        self.fire(ev.node)?;
                    }
                }
                EventKind::Arrival => self.arrival(ev.node, ev.sender),
                EventKind::Deliver { reception } => self.deliver(ev.node, ev.sender, reception),
            }
        }
        let final_modes = self
            .nodes
            .iter()
            .filter_map(|(id, n)| n.mode().map(|m| (*id, m)))
            .collect();
        let final_phases = self.nodes.iter().map(|(id, n)| (*id, n.phase_at(self.now))).collect();
        let flaps = self
            .nodes
            .iter()
            .map(|(id, n)| {
                let f = match &n.proto {
                    NodeProto::Ebs(s) => s.flap_count,
                    NodeProto::Mrf(_) => 0,
                };
                (*id, f)
            })
            .collect();
        Ok(RunResult {
            series: self.series,
            mode_changes: self.mode_changes,
            flaps,
            fire_log: self.fire_log,
            warnings: self.warnings,
            avg_degree_measured: self.avg_degree,
            avg_degree_topology: self.topology.average_degree(),
            final_modes,
            final_phases,
            trace: self.trace,
        })
    }

    fn fire(&mut self, id: NodeId) -> Result<()> {
        let now = self.now;
        let protocol = &self.scenario.protocol;
        let n = self.nodes.get_mut(&id).expect("fire for live node");
        n.set_proto_phase(Phase::ONE);
        let mut transitions: [Option<Transition>; 2] = [None, None];
        let mut warning = None;
        let message = match (&mut n.proto, protocol) {
            (NodeProto::Ebs(s), Protocol::Ebs(cfg)) => {
                let out = s.fire(cfg, now)?;
                transitions = out.transitions;
                warning = out.warning;
                n.plan = out.plan;
                out.message
            }
            (NodeProto::Mrf(m), Protocol::Mrf { .. }) => Some(m.on_fire(now)),
            _ => unreachable!("node kind always matches the scenario protocol"),
        };
        n.next_fire = now + n.period;
        n.last_fire = now as i64;
        n.epoch += 1;
        self.fire_log.push((SimTime(now), id));
        self.record("fire", id, || {
            String::from(if message.is_some() { "broadcast" } else { "silent" })
        });
        for t in transitions.into_iter().flatten() {
            if t.from == Mode::SteadyDutyCycled && t.to == Mode::Synchronization {
                self.flaps_total += 1;
            }
            self.mode_changes.push(ModeChange {
                time: SimTime(now),
                period: self.period_index,
                node: id,
                from: t.from,
                to: t.to,
            });
            self.record("mode", id, || format!("{} -> {}", t.from.as_str(), t.to.as_str()));
        }
        if let Some(e) = warning {
            if self.warned.insert(id) {
                self.warnings.push(format!("{e}"));
            }
        }
        if matches!(self.scenario.protocol, Protocol::Ebs(_)) {
            let payload = self.draw_payload();
            if let Some(NodeProto::Ebs(s)) = self.nodes.get_mut(&id).map(|n| &mut n.proto) {
                s.payload_queued = payload;
            }
        }
        self.schedule_fire(id);
        self.plan_awake(id);
        if let Some(msg) = message {
            let Simulation {
                topology,
                scenario,
                rng,
                queue,
                ..
            } = self;
            deliver_broadcast(&msg, topology, &scenario.delay, &scenario.faults, rng, queue);
        }
        Ok(())
    }

    fn arrival(&mut self, receiver: NodeId, sender: NodeId) {
        let Some(n) = self.nodes.get(&receiver) else {
            return;
        };
        if !n.awake() {
            self.record("drop", receiver, || format!("asleep from={sender}"));
            return;
        }
        let (reception, end) = self.medium.begin(receiver, self.now);
        self.queue.push(Event {
            time: end,
            node: receiver,
            sender,
            kind: EventKind::Deliver { reception },
        });
    }

    fn deliver(&mut self, receiver: NodeId, sender: NodeId, reception: u64) {
        let clean = self.medium.finish(receiver, reception);
        if !self.nodes.contains_key(&receiver) {
            return;
        }
        if !clean {
            self.record("drop", receiver, || format!("collision from={sender}"));
            return;
        }
        let now = self.now;
        self.period_received.insert((receiver, sender));
        let n = self.nodes.get_mut(&receiver).expect("checked");
        let old = n.phase_at(now);
        n.set_proto_phase(old);
        let jump = match (&mut n.proto, &self.scenario.protocol) {
            (NodeProto::Ebs(s), Protocol::Ebs(cfg)) => {
                // The radio was on at reception start; finish it even if
                // the window closed meanwhile.
                let was = s.awake;
                s.awake = true;
                let j = s.on_message(sender, cfg);
                s.awake = was;
                j
            }
            (NodeProto::Mrf(m), Protocol::Mrf { config, coupling }) => {
                let was = m.awake;
                m.awake = true;
                let j = m.on_message(config, coupling);
                m.awake = was;
                j
            }
            _ => unreachable!("node kind always matches the scenario protocol"),
        };
        let Some(j) = jump else {
            return;
        };
        let target = now + j.delay;
        if target >= n.next_fire {
            n.set_proto_phase(old);
            return;
        }
        n.next_fire = target;
        n.epoch += 1;
        let new = n.phase_at(now);
        n.set_proto_phase(new);
        n.period_jumps.push((old, new));
        self.record("jump", receiver, || {
            format!("from={sender} old={} new={}", old.value(), new.value())
        });
        self.schedule_fire(receiver);
        self.plan_awake(receiver);
    }

    fn apply_churn(&mut self, index: usize) -> Result<()> {
        let action = self.scenario.churn[index].action.clone();
        match action {
            ChurnAction::Leave(id) => {
                if !self.nodes.contains_key(&id) {
                    return Err(Error::UnknownNode(id));
                }
                self.topology.remove_node(id)?;
                self.nodes.remove(&id);
                self.medium.forget(id);
                self.record("leave", id, String::new);
            }
            ChurnAction::Join(spec) => {
                if self.nodes.contains_key(&spec.id) {
                    return Err(Error::DuplicateNode(spec.id));
                }
                self.topology.add_node(spec.id)?;
                for &l in &spec.links {
                    if !self.topology.contains(l) {
                        return Err(Error::UnknownNode(l));
                    }
                    self.topology.add_edge(spec.id, l)?;
                    if self.topology.is_directed() {
                        self.topology.add_edge(l, spec.id)?;
                    }
                }
                self.spawn(spec.id, None, StartMode::Initialization);
                self.record("join", spec.id, || format!("links={}", spec.links.len()));
            }
        }
        self.avg_degree = calibrate_average_degree(&self.topology);
        Ok(())
    }

    fn close_period(&mut self) {
        let now = self.now;
        let period_start = now.saturating_sub(self.period);
        let mut phases = BTreeMap::new();
        let mut jumps = Vec::new();
        let mut duty = Vec::new();
        let mut steady = 0usize;
        for (id, n) in self.nodes.iter_mut() {
            n.flush_awake(now);
            phases.insert(*id, n.phase_at(now));
            jumps.append(&mut n.period_jumps);
            duty.push((n.period_awake, now - n.present_since.max(period_start)));
            n.period_awake = 0;
            if n.mode() == Some(Mode::SteadyDutyCycled) {
                steady += 1;
            }
        }
        let count = self.nodes.len();
        let dphi = |d| {
            avg_phase_difference_connected(&phases, &self.topology, d)
                .ok()
                .flatten()
                .unwrap_or(f64::NAN)
        };
        let row = MetricsRow {
            period: self.period_index,
            dphi_literal: dphi(PhaseDistance::Literal),
            dphi_circular: dphi(PhaseDistance::Circular),
            dplus: avg_phase_advancement(jumps, count),
            duty_pct: duty_cycle(duty),
            thr_pct: throughput(self.period_received.len() as u64, self.avg_degree, count),
            steady_pct: if count == 0 {
                0.0
            } else {
                100.0 * steady as f64 / count as f64
            },
            flaps: self.flaps_total,
        };
        self.series.push(row);
        self.period_received.clear();
        self.period_index += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{make_regular_grid, parse_edge_list};

    fn ebs(period: Ticks, eps: f64, sigma: f64) -> ProtocolConfig {
        ProtocolConfig {
            period,
            epsilon: eps,
            sigma,
            ..ProtocolConfig::default()
        }
    }

    #[test]
    fn pair_synchronizes() {
        let t = parse_edge_list("0 1\n", false, None).unwrap();
        let mut s = Scenario::new(t, Protocol::Ebs(ebs(1000, 0.05, 0.04)), 20, 3);
        s.start_mode = StartMode::Synchronization;
        let r = run(&s).unwrap();
        assert_eq!(
            r.final_modes.values().filter(|m| **m == Mode::SteadyDutyCycled).count(),
            2
        );
        let last = r.series.rows.last().unwrap();
        assert!(last.dphi_circular <= 0.05);
        assert_eq!(last.dplus, 0.0);
    }

    #[test]
    fn horizon_must_be_positive() {
        let t = make_regular_grid(2, 2, false).unwrap();
        let s = Scenario::new(t, Protocol::Ebs(ebs(1000, 0.05, 0.04)), 0, 3);
        assert!(run(&s).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let t = make_regular_grid(5, 5, true).unwrap();
        let mut s = Scenario::new(t, Protocol::Ebs(ebs(1000, 0.05, 0.02)), 30, 11);
        s.trace = true;
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a, b);
        s.seed = 12;
        assert_ne!(run(&s).unwrap().fire_log, a.fire_log);
    }

    #[test]
    fn calibration_matches_degree() {
        let t = make_regular_grid(5, 5, true).unwrap();
        assert_eq!(calibrate_average_degree(&t), 4.0);
    }

    #[test]
    fn steady_duty_matches_window() {
        let t = make_regular_grid(3, 3, true).unwrap();
        let mut s = Scenario::new(t, Protocol::Ebs(ebs(1000, 0.05, 0.04)), 40, 5);
        s.start_mode = StartMode::Synchronization;
        let r = run(&s).unwrap();
        let last = r.series.rows.last().unwrap();
        assert_eq!(last.steady_pct, 100.0);
        assert!((last.duty_pct - 10.0).abs() < 1e-9, "{}", last.duty_pct);
        assert!((last.thr_pct - 100.0).abs() < 1e-9);
    }

    #[test]
    fn leave_unknown_node_fails() {
        let t = make_regular_grid(3, 3, true).unwrap();
        let mut s = Scenario::new(t, Protocol::Ebs(ebs(1000, 0.05, 0.04)), 5, 5);
        s.churn.push(ChurnEvent {
            at: SimTime(1500),
            action: ChurnAction::Leave(NodeId(42)),
        });
        assert_eq!(run(&s), Err(Error::UnknownNode(NodeId(42))));
    }
}

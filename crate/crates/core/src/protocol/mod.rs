//! The per-node EBS state machine.
//!
//! A node moves through three modes: [`Mode::Initialization`] (fully awake,
//! counting distinct senders), [`Mode::Synchronization`] (fully awake, coupling
//! to every fire it hears) and [`Mode::SteadyDutyCycled`] (awake only inside
//! its SETW). Timing lives in the simulator; the node sees its phase as a
//! value the simulator refreshes before each call.

pub mod mrf;

use alloc::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::params::adaptive_c;
use crate::phase::{in_setw, phase_advance, CouplingParams, Phase};
use crate::topology::NodeId;
use crate::Ticks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Every fire emits a broadcast, a bare sync message when nothing is queued.
    NoReachback,
    /// Fires only carry upper-layer payloads; with nothing queued the node
    /// stays silent and only its phase resets.
    PartialReachback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Initialization,
    Synchronization,
    SteadyDutyCycled,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Initialization => "init",
            Mode::Synchronization => "sync",
            Mode::SteadyDutyCycled => "steady",
        }
    }
}

/// Full parameterization of EBS for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub period: Ticks,
    pub epsilon: f64,
    pub sigma: f64,
    /// `S_Th`, percent.
    pub sync_threshold: f64,
    /// Minimum per-message receive budget `C₀`.
    pub c0: Ticks,
    pub variant: Variant,
    pub adaptive_c: bool,
    pub init_listen_periods: u32,
    /// When false, steady nodes keep listening for the whole period. Used by
    /// the pure convergence experiments.
    pub duty_cycling: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            period: 10_000,
            epsilon: 0.01,
            sigma: 0.005,
            sync_threshold: 80.0,
            c0: 50,
            variant: Variant::NoReachback,
            adaptive_c: false,
            init_listen_periods: 5,
            duty_cycling: true,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::param("period", "must be positive"));
        }
        CouplingParams::new(self.epsilon, self.sigma)?;
        if !(0.0..=100.0).contains(&self.sync_threshold) {
            return Err(Error::param("sync_threshold", "must lie in [0, 100]"));
        }
        if self.c0 == 0 {
            return Err(Error::param("c0", "must be positive"));
        }
        if self.init_listen_periods == 0 {
            return Err(Error::param("init_listen_periods", "must be at least 1"));
        }
        Ok(())
    }

    /// SETW half-width for a node with `neighborhood` known neighbours. With
    /// adaptive C the window widens to `C^i / 2T` when that exceeds `ε`.
    pub fn effective_epsilon(&self, neighborhood: u32) -> f64 {
        if !self.adaptive_c {
            return self.epsilon;
        }
        let c = adaptive_c(self.c0, neighborhood, self.sync_threshold);
        let widened = c as f64 / (2.0 * self.period as f64);
        self.epsilon.max(widened).min(0.5)
    }

    pub fn coupling(&self, neighborhood: u32) -> CouplingParams {
        // Validated config: epsilon and sigma are in range by construction.
        CouplingParams::new(self.effective_epsilon(neighborhood), self.sigma).expect("validated protocol config")
    }
}

/// When a node is listening during one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AwakePlan {
    Always,
    /// Awake while at most `before` ticks remain until the next fire, or
    /// fewer than `after` ticks have passed since the last one.
    Window {
        before: Ticks,
        after: Ticks,
    },
}

impl AwakePlan {
    pub fn awake_ticks(self, period: Ticks) -> Ticks {
        match self {
            AwakePlan::Always => period,
            AwakePlan::Window { before, after } => (before + after).min(period),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Sync,
    /// Upper-layer payload carrying the sync byte.
    Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BroadcastMessage {
    pub sender: NodeId,
    pub sent_at: Ticks,
    pub kind: MessageKind,
}

/// Phase jump caused by one received message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub old: Phase,
    pub new: Phase,
    /// Ticks until the node's own (delayed) fire, never below 1.
    pub delay: Ticks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: Mode,
    pub to: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub mode: Mode,
    pub phase: Phase,
    /// Own period length in ticks (differs from `T` under clock drift).
    pub period: Ticks,
    pub neighbor_count_estimate: u32,
    /// `H_i`: senders heard inside the SETW during the current period.
    pub heard_this_period: BTreeSet<NodeId>,
    /// Every distinct sender heard, inside the window or not. Feeds the
    /// neighbour estimate during initialization and recovery.
    pub overheard: BTreeSet<NodeId>,
    pub synchronicity: f64,
    pub pending_tx_delay: Option<Ticks>,
    pub stored_advance: Option<Phase>,
    pub awake: bool,
    pub awake_ticks_total: Ticks,
    pub flap_count: u32,
    pub payload_queued: bool,
    init_periods_left: u32,
    /// Set on a flap: the next synchronization period re-counts neighbours.
    recount: bool,
}

impl NodeState {
    /// A freshly booted node in initialization mode.
    pub fn new(id: NodeId, cfg: &ProtocolConfig) -> Self {
        NodeState {
            id,
            mode: Mode::Initialization,
            phase: Phase::ZERO,
            period: cfg.period,
            neighbor_count_estimate: 0,
            heard_this_period: BTreeSet::new(),
            overheard: BTreeSet::new(),
            synchronicity: 0.0,
            pending_tx_delay: None,
            stored_advance: None,
            awake: true,
            awake_ticks_total: 0,
            flap_count: 0,
            payload_queued: false,
            init_periods_left: cfg.init_listen_periods,
            recount: false,
        }
    }

    /// A node that skips initialization with a known neighbour count.
    pub fn synchronizing(id: NodeId, cfg: &ProtocolConfig, neighbors: u32) -> Self {
        let mut n = NodeState::new(id, cfg);
        n.mode = Mode::Synchronization;
        n.neighbor_count_estimate = neighbors;
        n.init_periods_left = 0;
        n
    }

    pub fn effective_epsilon(&self, cfg: &ProtocolConfig) -> f64 {
        cfg.effective_epsilon(self.neighbor_count_estimate)
    }

    /// Half-width of the SETW in ticks, rounded down so that every awake tick
    /// lies inside the window.
    pub fn window_ticks(&self, cfg: &ProtocolConfig) -> Ticks {
        let w = libm::floor(self.effective_epsilon(cfg) * self.period as f64) as Ticks;
        w.max(1)
    }

    pub fn awake_plan(&self, cfg: &ProtocolConfig) -> AwakePlan {
        if self.mode != Mode::SteadyDutyCycled || !cfg.duty_cycling {
            return AwakePlan::Always;
        }
        let w = self.window_ticks(cfg);
        if 2 * w >= self.period {
            AwakePlan::Always
        } else {
            AwakePlan::Window { before: w, after: w }
        }
    }

    /// Handles one received broadcast. Asleep nodes hear nothing.
    pub fn on_message(&mut self, sender: NodeId, cfg: &ProtocolConfig) -> Option<Jump> {
        if !self.awake {
            return None;
        }
        let coupling = cfg.coupling(self.neighbor_count_estimate);
        self.overheard.insert(sender);
        if in_setw(self.phase, coupling.epsilon()) {
            self.heard_this_period.insert(sender);
        }
        let new = phase_advance(self.phase, &coupling);
        if new.value() <= self.phase.value() {
            return None;
        }
        let delay = (libm::round(new.remaining() * self.period as f64) as Ticks).max(1);
        match cfg.variant {
            Variant::NoReachback => self.pending_tx_delay = Some(delay),
            Variant::PartialReachback => self.stored_advance = Some(new),
        }
        let jump = Jump {
            old: self.phase,
            new,
            delay,
        };
        self.phase = new;
        Some(jump)
    }

    /// Resets the phase and produces the broadcast, if any.
    pub fn on_fire(&mut self, cfg: &ProtocolConfig, now: Ticks) -> Option<BroadcastMessage> {
        self.phase = Phase::ZERO;
        self.pending_tx_delay = None;
        self.stored_advance = None;
        let payload = core::mem::take(&mut self.payload_queued);
        let kind = match (cfg.variant, payload) {
            (_, true) => MessageKind::Payload,
            (Variant::NoReachback, false) => MessageKind::Sync,
            (Variant::PartialReachback, false) => return None,
        };
        Some(BroadcastMessage {
            sender: self.id,
            sent_at: now,
            kind,
        })
    }

    fn compute_synchronicity(&mut self) {
        self.synchronicity = if self.neighbor_count_estimate > 0 {
            100.0 * self.heard_this_period.len() as f64 / self.neighbor_count_estimate as f64
        } else {
            0.0
        };
    }

    /// Runs the synchronicity check that closes a period.
    ///
    /// A steady node whose `S` drops below `S_Th` flaps back to
    /// synchronization; its next period is spent fully awake re-counting
    /// neighbours before it is evaluated again.
    pub fn end_of_period_evaluation(&mut self, cfg: &ProtocolConfig) -> Result<Option<Transition>> {
        if self.mode == Mode::Initialization {
            return Ok(None);
        }
        if self.recount {
            self.neighbor_count_estimate = self.overheard.len() as u32;
            self.recount = false;
        }
        self.compute_synchronicity();
        if self.synchronicity > 100.0 {
            self.neighbor_count_estimate = self.heard_this_period.len() as u32;
            self.compute_synchronicity();
        }
        let from = self.mode;
        match self.mode {
            Mode::Synchronization => {
                if self.neighbor_count_estimate == 0 {
                    return Err(Error::IsolatedNode(self.id));
                }
                if self.synchronicity >= cfg.sync_threshold {
                    self.mode = Mode::SteadyDutyCycled;
                }
            }
            Mode::SteadyDutyCycled => {
                if self.synchronicity < cfg.sync_threshold {
                    self.mode = Mode::Synchronization;
                    self.flap_count += 1;
                    self.recount = true;
                }
            }
            Mode::Initialization => {}
        }
        Ok((self.mode != from).then_some(Transition { from, to: self.mode }))
    }

    /// Opens a new period right after a fire.
    pub fn on_period_start(&mut self, cfg: &ProtocolConfig) -> Result<(Option<Transition>, AwakePlan)> {
        if self.phase != Phase::ZERO {
            return Err(Error::NotAtPeriodStart {
                node: self.id,
                phase: self.phase.value(),
            });
        }
        self.heard_this_period.clear();
        let mut transition = None;
        if self.mode == Mode::Initialization {
            self.init_periods_left = self.init_periods_left.saturating_sub(1);
            if self.init_periods_left == 0 {
                self.neighbor_count_estimate = self.overheard.len() as u32;
                self.mode = Mode::Synchronization;
                transition = Some(Transition {
                    from: Mode::Initialization,
                    to: Mode::Synchronization,
                });
                self.overheard.clear();
            }
        } else {
            self.overheard.clear();
        }
        let plan = self.awake_plan(cfg);
        self.awake = true;
        Ok((transition, plan))
    }

    /// Fire plus period turnover: evaluation, broadcast, new period.
    pub fn fire(&mut self, cfg: &ProtocolConfig, now: Ticks) -> Result<FireOutcome> {
        let evaluation = self.end_of_period_evaluation(cfg);
        let (eval_transition, warning) = match evaluation {
            Ok(t) => (t, None),
            Err(e) => (None, Some(e)),
        };
        let message = self.on_fire(cfg, now);
        let (start_transition, plan) = self.on_period_start(cfg)?;
        Ok(FireOutcome {
            message,
            transitions: [eval_transition, start_transition],
            plan,
            warning,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FireOutcome {
    pub message: Option<BroadcastMessage>,
    /// At most one transition from evaluation and one from period start.
    pub transitions: [Option<Transition>; 2],
    pub plan: AwakePlan,
    /// Evaluation failure that does not stop the node, e.g. an isolated node.
    pub warning: Option<Error>,
}

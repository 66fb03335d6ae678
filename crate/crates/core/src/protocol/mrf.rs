//! Modified refractory period (MRF) baseline.
//!
//! A pulse-coupled oscillator that ignores fires during the first `T_Ref` of
//! its period and sleeps through that stretch, apart from a short listening
//! guard right after its own fire.

use crate::error::{Error, Result};
use crate::phase::{phase_advance, CouplingParams, Phase};
use crate::protocol::{AwakePlan, BroadcastMessage, Jump, MessageKind};
use crate::topology::NodeId;
use crate::Ticks;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MrfConfig {
    pub period: Ticks,
    pub refractory: Ticks,
    /// Ticks the node keeps listening after its own fire before sleeping.
    pub guard: Ticks,
}

impl MrfConfig {
    /// `T_Ref = T/2` with the guard set to the SETW half-width `⌊εT⌋`.
    pub fn half_period(period: Ticks, epsilon: f64) -> Self {
        MrfConfig {
            period,
            refractory: period / 2,
            guard: libm::floor(epsilon * period as f64) as Ticks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.refractory && self.refractory < self.period) {
            return Err(Error::param("refractory", "must lie strictly inside (0, T)"));
        }
        if self.guard > self.refractory {
            return Err(Error::param("guard", "must not exceed the refractory period"));
        }
        Ok(())
    }

    pub fn awake_plan(&self, period: Ticks) -> AwakePlan {
        let before = period.saturating_sub(self.refractory);
        if self.guard == self.refractory {
            AwakePlan::Always
        } else {
            AwakePlan::Window {
                before,
                after: self.guard,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrfNode {
    pub id: NodeId,
    pub phase: Phase,
    pub period: Ticks,
    pub awake: bool,
    pub awake_ticks_total: Ticks,
}

impl MrfNode {
    pub fn new(id: NodeId, cfg: &MrfConfig) -> Self {
        MrfNode {
            id,
            phase: Phase::ZERO,
            period: cfg.period,
            awake: true,
            awake_ticks_total: 0,
        }
    }

    fn refractory(&self, cfg: &MrfConfig) -> bool {
        self.phase.value() * (self.period as f64) < cfg.refractory as f64
    }

    /// Applies the EBS coupling unless the node is refractory or asleep.
    pub fn on_message(&mut self, cfg: &MrfConfig, coupling: &CouplingParams) -> Option<Jump> {
        if !self.awake || self.refractory(cfg) {
            return None;
        }
        let new = phase_advance(self.phase, coupling);
        if new.value() <= self.phase.value() {
            return None;
        }
        let delay = (libm::round(new.remaining() * self.period as f64) as Ticks).max(1);
        let jump = Jump {
            old: self.phase,
            new,
            delay,
        };
        self.phase = new;
        Some(jump)
    }

    pub fn on_fire(&mut self, now: Ticks) -> BroadcastMessage {
        self.phase = Phase::ZERO;
        self.awake = true;
        BroadcastMessage {
            sender: self.id,
            sent_at: now,
            kind: MessageKind::Sync,
        }
    }
}

//! Delay, link fault and clock drift models.

use alloc::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::topology::NodeId;
use crate::Ticks;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayKind {
    None,
    /// Fixed one-way delay `ν`; the phase delay is `δ = ν / T`.
    Deterministic(Ticks),
    /// Uniform over `lo..=hi`, drawn per (message, receiver).
    Uniform {
        lo: Ticks,
        hi: Ticks,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayModel {
    pub kind: DelayKind,
    /// Fixed delays for specific `(sender, receiver)` links.
    pub overrides: BTreeMap<(NodeId, NodeId), Ticks>,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel::new(DelayKind::None)
    }
}

impl DelayModel {
    pub fn new(kind: DelayKind) -> Self {
        DelayModel {
            kind,
            overrides: BTreeMap::new(),
        }
    }

    /// Deterministic delay for phase fraction `delta` of `period`.
    pub fn from_phase_delay(delta: f64, period: Ticks) -> Self {
        let nu = libm::round(delta * period as f64) as Ticks;
        DelayModel::new(if nu == 0 {
            DelayKind::None
        } else {
            DelayKind::Deterministic(nu)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let DelayKind::Uniform { lo, hi } = self.kind {
            if lo > hi {
                return Err(Error::param("delay", "uniform bounds need lo <= hi"));
            }
        }
        Ok(())
    }

    pub fn sample(&self, sender: NodeId, receiver: NodeId, rng: &mut ChaCha8Rng) -> Ticks {
        if let Some(&d) = self.overrides.get(&(sender, receiver)) {
            return d;
        }
        match self.kind {
            DelayKind::None => 0,
            DelayKind::Deterministic(nu) => nu,
            DelayKind::Uniform { lo, hi } => rng.random_range(lo..=hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFaultModel {
    pub loss_probability: f64,
    pub collisions: bool,
    /// Receive and process time `β` of one message.
    pub airtime: Ticks,
}

impl Default for LinkFaultModel {
    fn default() -> Self {
        LinkFaultModel::lossless()
    }
}

impl LinkFaultModel {
    pub fn lossless() -> Self {
        LinkFaultModel {
            loss_probability: 0.0,
            collisions: false,
            airtime: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(Error::param("loss_probability", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Draws the loss decision for one (message, receiver) pair. No random
    /// number is consumed on lossless links.
    pub fn lost(&self, rng: &mut ChaCha8Rng) -> bool {
        if self.loss_probability <= 0.0 {
            false
        } else if self.loss_probability >= 1.0 {
            true
        } else {
            rng.random::<f64>() < self.loss_probability
        }
    }
}

/// Per-node clock rate skew in parts per million.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClockDriftModel {
    pub default_ppm: f64,
    pub per_node_ppm: BTreeMap<NodeId, f64>,
}

impl ClockDriftModel {
    pub fn skew(&self, id: NodeId) -> f64 {
        self.per_node_ppm.get(&id).copied().unwrap_or(self.default_ppm)
    }

    /// `T · (1 + s·10⁻⁶)`, rounded to whole ticks and at least 2.
    pub fn period_of(&self, id: NodeId, period: Ticks) -> Ticks {
        let s = self.skew(id);
        if s == 0.0 {
            return period;
        }
        (libm::round(period as f64 * (1.0 + s * 1e-6)) as Ticks).max(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn delays() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = (NodeId(0), NodeId(1));
        assert_eq!(DelayModel::default().sample(a, b, &mut rng), 0);
        let mut d = DelayModel::new(DelayKind::Deterministic(10));
        assert_eq!(d.sample(a, b, &mut rng), 10);
        d.overrides.insert((a, b), 3);
        assert_eq!(d.sample(a, b, &mut rng), 3);
        assert_eq!(d.sample(b, a, &mut rng), 10);
        let u = DelayModel::new(DelayKind::Uniform { lo: 4, hi: 6 });
        for _ in 0..100 {
            assert!((4..=6).contains(&u.sample(a, b, &mut rng)));
        }
        assert!(DelayModel::new(DelayKind::Uniform { lo: 6, hi: 4 }).validate().is_err());
        assert_eq!(
            DelayModel::from_phase_delay(0.05, 10_000).kind,
            DelayKind::Deterministic(500)
        );
        assert_eq!(DelayModel::from_phase_delay(0.0, 10_000).kind, DelayKind::None);
    }

    #[test]
    fn drift_period() {
        let mut m = ClockDriftModel::default();
        assert_eq!(m.period_of(NodeId(0), 10_000), 10_000);
        m.per_node_ppm.insert(NodeId(1), 100.0);
        assert_eq!(m.period_of(NodeId(1), 10_000), 10_001);
    }

    #[test]
    fn loss_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut f = LinkFaultModel::lossless();
        assert!(!f.lost(&mut rng));
        f.loss_probability = 1.0;
        assert!(f.lost(&mut rng));
        f.loss_probability = 1.5;
        assert!(f.validate().is_err());
    }
}

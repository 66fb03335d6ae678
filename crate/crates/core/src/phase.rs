//! Phase arithmetic and the EBS phase advancement rule.

use crate::error::{Error, Result};

/// Fraction of the period elapsed since a node's last own broadcast.
///
/// Always within `[0, 1]`. A node fires when its phase reaches 1 and restarts
/// from 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Phase(f64);

impl Phase {
    pub const ZERO: Phase = Phase(0.0);
    pub const ONE: Phase = Phase(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Phase(value))
        } else {
            Err(Error::PhaseOutOfRange(value))
        }
    }

    /// Saturates into `[0, 1]`; NaN maps to 0.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Phase(0.0)
        } else {
            Phase(value.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The phase still to run before the next fire, `1 - φ`.
    #[inline]
    pub fn remaining(self) -> f64 {
        1.0 - self.0
    }
}

impl From<Phase> for f64 {
    fn from(p: Phase) -> f64 {
        p.0
    }
}

/// SETW half-width and coupling strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    epsilon: f64,
    sigma: f64,
}

impl CouplingParams {
    /// `epsilon` in `(0, 0.5]`, `sigma` in `(0, 1)`. A zero coupling is
    /// rejected: every listener would fire at the same instant.
    pub fn new(epsilon: f64, sigma: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(Error::param("epsilon", "must lie in (0, 0.5]"));
        }
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::param("sigma", "must lie in (0, 1)"));
        }
        Ok(CouplingParams { epsilon, sigma })
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same coupling with a different window half-width.
    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        CouplingParams::new(epsilon, self.sigma)
    }

    /// `g(φ) = σ(1 − φ)`: the remaining phase left after hearing a fire.
    #[inline]
    pub fn advancement(&self, phi: Phase) -> f64 {
        self.sigma * (1.0 - phi.value())
    }

    /// Pairwise stability without delay: `σ < ε / (1 − ε)`.
    pub fn is_stable(&self) -> bool {
        self.sigma < self.epsilon / (1.0 - self.epsilon)
    }
}

/// New phase of a node that hears a neighbour fire while at `phi`.
///
/// Outside the window (`ε < φ < 1 − ε`) the remaining phase shrinks to
/// `g(φ)`; inside it nothing changes. The result is never below `phi`.
pub fn phase_advance(phi: Phase, params: &CouplingParams) -> Phase {
    let eps = params.epsilon;
    let v = phi.value();
    if eps < v && v < 1.0 - eps {
        Phase::saturating(1.0 - params.sigma * (1.0 - v))
    } else {
        phi
    }
}

/// Whether `phi` lies in the SETW `[-εT, εT]` around the node's own fire.
pub fn in_setw(phi: Phase, epsilon: f64) -> bool {
    let v = phi.value();
    v <= epsilon || v >= 1.0 - epsilon
}

/// How to measure the distance between two phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseDistance {
    /// `|φi − φj|`, which reads 0.98 for phases 0.99 and 0.01.
    Literal,
    /// Distance on the circle, `min(d, 1 − d)`; never above 0.5.
    Circular,
}

impl PhaseDistance {
    pub fn between(self, a: Phase, b: Phase) -> f64 {
        let d = libm::fabs(a.value() - b.value());
        match self {
            PhaseDistance::Literal => d,
            PhaseDistance::Circular => d.min(1.0 - d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: f64) -> Phase {
        Phase::new(v).unwrap()
    }

    fn cp(eps: f64, sigma: f64) -> CouplingParams {
        CouplingParams::new(eps, sigma).unwrap()
    }

    #[test]
    fn advance_examples() {
        let r = phase_advance(p(0.5), &cp(0.01, 0.01)).value();
        assert!((r - 0.995).abs() < 1e-12);
        assert_eq!(phase_advance(p(0.005), &cp(0.01, 0.01)), p(0.005));
        assert_eq!(phase_advance(p(0.995), &cp(0.01, 0.01)), p(0.995));
        // 0.9 >= 1 - 0.2 sits inside the window: unchanged, even though
        // 1 - g(0.9) would be 0.99.
        let c = cp(0.2, 0.1);
        assert_eq!(phase_advance(p(0.9), &c), p(0.9));
        assert!((1.0 - c.advancement(p(0.9)) - 0.99).abs() < 1e-12);
        let r = phase_advance(p(0.7), &c).value();
        assert!((r - 0.97).abs() < 1e-12);
    }

    #[test]
    fn window_edges_are_strict() {
        let c = cp(0.25, 0.5);
        assert_eq!(phase_advance(p(0.25), &c), p(0.25));
        assert_eq!(phase_advance(p(0.75), &c), p(0.75));
        assert!(phase_advance(p(0.2500001), &c).value() > 0.25);
    }

    #[test]
    fn setw_examples() {
        assert!(in_setw(p(0.0), 0.01));
        assert!(!in_setw(p(0.5), 0.01));
        assert!(in_setw(p(0.991), 0.01));
        assert!(in_setw(p(1.0), 0.01));
    }

    #[test]
    fn params_validation() {
        assert!(CouplingParams::new(0.0, 0.1).is_err());
        assert!(CouplingParams::new(0.51, 0.1).is_err());
        assert!(CouplingParams::new(0.5, 0.0).is_err());
        assert!(CouplingParams::new(0.5, 1.0).is_err());
        assert!(CouplingParams::new(0.5, 0.99).is_ok());
        assert!(Phase::new(1.01).is_err());
        assert!(Phase::new(f64::NAN).is_err());
    }

    #[test]
    fn stability_predicate() {
        assert!(cp(0.01, 0.01).is_stable());
        assert!(!cp(0.01, 0.02).is_stable());
        assert!(cp(0.1, 0.111).is_stable());
        assert!(!cp(0.1, 0.1112).is_stable());
    }

    #[test]
    fn distances() {
        assert!((PhaseDistance::Literal.between(p(0.99), p(0.01)) - 0.98).abs() < 1e-12);
        assert!((PhaseDistance::Circular.between(p(0.99), p(0.01)) - 0.02).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn advance_never_decreases(phi in 0.0f64..=1.0, eps in 1e-4f64..=0.5, sigma in 1e-4f64..0.9999) {
            let c = cp(eps, sigma);
            prop_assert!(phase_advance(p(phi), &c).value() >= phi);
        }

        #[test]
        fn identity_inside_window(phi in 0.0f64..=1.0, eps in 1e-4f64..=0.5, sigma in 1e-4f64..0.9999) {
            prop_assume!(in_setw(p(phi), eps));
            prop_assert_eq!(phase_advance(p(phi), &cp(eps, sigma)), p(phi));
        }

        #[test]
        fn listener_lands_in_firer_window_when_stable(phi in 0.0f64..=1.0, eps in 1e-3f64..=0.5, frac in 0.01f64..0.99) {
            // σ strictly below the bound, as a fraction of it.
            let sigma = (frac * eps / (1.0 - eps)).min(0.9999);
            let c = cp(eps, sigma);
            prop_assume!(eps < phi && phi < 1.0 - eps);
            let after = phase_advance(p(phi), &c);
            let gap = 1.0 - after.value();
            prop_assert!((gap - sigma * (1.0 - phi)).abs() < 1e-12);
            prop_assert!(gap <= sigma * (1.0 - eps) + 1e-15);
            prop_assert!(gap < eps);
        }

        #[test]
        fn circular_distance_bounded(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            prop_assert!(PhaseDistance::Circular.between(p(a), p(b)) <= 0.5);
        }
    }
}

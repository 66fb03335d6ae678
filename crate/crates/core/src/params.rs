//! Closed-form parameter calculators: optimal window width, maximum coupling,
//! adaptive receive budget and the stability check.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::protocol::ProtocolConfig;
use crate::topology::{NodeId, Topology};
use crate::Ticks;

/// A computed value plus the warning raised while computing it, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checked {
    pub value: f64,
    pub warning: Option<ParamWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamWarning {
    /// The optimal window exceeded half a period and was clamped to 0.5.
    EpsilonClamped { unclamped: f64 },
    /// Delay eats the whole window; no positive coupling is stable.
    NoValidSigma { bound: f64 },
}

impl core::fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ParamWarning::EpsilonClamped { unclamped } => {
                write!(f, "optimal epsilon {unclamped} exceeds 0.5; clamped")
            }
            ParamWarning::NoValidSigma { bound } => {
                write!(f, "coupling bound {bound} is not positive; no stable sigma exists")
            }
        }
    }
}

/// `ε_opt = (β·|N| + 4ν) / 2T`, clamped to 0.5.
pub fn epsilon_opt(beta: Ticks, neighborhood: u32, nu: Ticks, period: Ticks) -> Result<Checked> {
    if period == 0 {
        return Err(Error::param("period", "must be positive"));
    }
    let raw = (beta as f64 * neighborhood as f64 + 4.0 * nu as f64) / (2.0 * period as f64);
    Ok(if raw > 0.5 {
        Checked {
            value: 0.5,
            warning: Some(ParamWarning::EpsilonClamped { unclamped: raw }),
        }
    } else {
        Checked {
            value: raw,
            warning: None,
        }
    })
}

/// `σ_max = (ε − 2ν/T) / (1 − ε)`.
pub fn sigma_max(epsilon: f64, nu: Ticks, period: Ticks) -> Result<Checked> {
    if period == 0 {
        return Err(Error::param("period", "must be positive"));
    }
    sigma_max_for_delay(epsilon, nu as f64 / period as f64)
}

/// [`sigma_max`] with the delay given directly as a phase fraction `δ`.
pub fn sigma_max_for_delay(epsilon: f64, delta: f64) -> Result<Checked> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", "must lie in (0, 1)"));
    }
    let value = (epsilon - 2.0 * delta) / (1.0 - epsilon);
    let warning = (value <= 0.0).then_some(ParamWarning::NoValidSigma { bound: value });
    Ok(Checked { value, warning })
}

/// `C^i = C₀ · |N_i| · S_Th / 100`, rounded to the nearest tick.
pub fn adaptive_c(c0: Ticks, neighborhood: u32, s_th: f64) -> Ticks {
    libm::round(c0 as f64 * neighborhood as f64 * s_th / 100.0) as Ticks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    /// `(ε − 2δ)/(1 − ε) − σ`; negative when the coupling is too strong.
    pub margin: f64,
}

/// Stable iff `ε > 2δ` and `σ < (ε − 2δ)/(1 − ε)`, both strict.
pub fn check_stability(epsilon: f64, sigma: f64, delta: f64) -> Stability {
    let bound = (epsilon - 2.0 * delta) / (1.0 - epsilon);
    Stability {
        stable: epsilon > 2.0 * delta && sigma < bound,
        margin: bound - sigma,
    }
}

/// [`check_stability`] with the delay as ticks, `δ = ν / T`.
pub fn check_stability_ticks(epsilon: f64, sigma: f64, nu: Ticks, period: Ticks) -> Stability {
    check_stability(epsilon, sigma, nu as f64 / period.max(1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamReport {
    pub epsilon: f64,
    pub sigma: f64,
    pub delta: f64,
    /// `ε_opt` for the largest neighbourhood in the topology.
    pub epsilon_opt: f64,
    pub sigma_max: f64,
    pub stable: bool,
    pub margin: f64,
    pub adaptive_c_per_node: BTreeMap<NodeId, Ticks>,
    /// Effective window half-width per node once the adaptive budget is applied.
    pub epsilon_per_node: BTreeMap<NodeId, f64>,
    pub warnings: Vec<String>,
}

/// Evaluates every closed form for one configuration. `nu` is the one-way
/// deterministic delay and `beta` the per-message receive budget, in ticks.
pub fn param_report(cfg: &ProtocolConfig, topology: &Topology, nu: Ticks, beta: Ticks) -> Result<ParamReport> {
    let mut warnings = Vec::new();
    let max_degree = topology.node_ids().map(|i| topology.degree(i)).max().unwrap_or(0) as u32;
    let eps_opt = epsilon_opt(beta, max_degree, nu, cfg.period)?;
    if let Some(w) = eps_opt.warning {
        warnings.push(format!("{w}"));
    }
    let smax = sigma_max(cfg.epsilon, nu, cfg.period)?;
    if let Some(w) = smax.warning {
        warnings.push(format!("{w}"));
    }
    let delta = nu as f64 / cfg.period as f64;
    let stab = check_stability(cfg.epsilon, cfg.sigma, delta);
    if !stab.stable {
        warnings.push(format!(
            "unstable: sigma {} vs bound {} (margin {})",
            cfg.sigma,
            cfg.sigma + stab.margin,
            stab.margin
        ));
    }
    if cfg.epsilon < eps_opt.value {
        warnings.push(format!(
            "epsilon {} below epsilon_opt {} for degree {max_degree}; expect flapping",
            cfg.epsilon, eps_opt.value
        ));
    }
    let mut adaptive = BTreeMap::new();
    let mut eps_nodes = BTreeMap::new();
    for id in topology.node_ids() {
        let deg = topology.degree(id) as u32;
        adaptive.insert(id, adaptive_c(cfg.c0, deg, cfg.sync_threshold));
        eps_nodes.insert(id, cfg.effective_epsilon(deg));
    }
    Ok(ParamReport {
        epsilon: cfg.epsilon,
        sigma: cfg.sigma,
        delta,
        epsilon_opt: eps_opt.value,
        sigma_max: smax.value,
        stable: stab.stable,
        margin: stab.margin,
        adaptive_c_per_node: adaptive,
        epsilon_per_node: eps_nodes,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn epsilon_opt_examples() {
        assert_eq!(epsilon_opt(0, 17, 0, 10_000).unwrap().value, 0.0);
        // Back-solved: 40 ms budget, 20 neighbours, T = 10 s gives 0.04.
        let e = epsilon_opt(40, 20, 0, 10_000).unwrap();
        assert!((e.value - 0.04).abs() < 1e-12);
        assert!(e.warning.is_none());
        assert!((epsilon_opt(50, 4, 0, 10_000).unwrap().value - 0.01).abs() < 1e-12);
        let c = epsilon_opt(1000, 20, 0, 10_000).unwrap();
        assert_eq!(c.value, 0.5);
        assert!(matches!(c.warning, Some(ParamWarning::EpsilonClamped { .. })));
        assert!(epsilon_opt(1, 1, 1, 0).is_err());
    }

    #[test]
    fn sigma_max_examples() {
        let s = sigma_max(0.1, 0, 10_000).unwrap();
        assert!((s.value - 0.1 / 0.9).abs() < 1e-12);
        assert!((sigma_max(0.01, 0, 10_000).unwrap().value - 0.01 / 0.99).abs() < 1e-12);
        let s = sigma_max(0.1, 500, 10_000).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(matches!(s.warning, Some(ParamWarning::NoValidSigma { .. })));
        assert!(sigma_max(1.0, 0, 10).is_err());
        assert!(sigma_max_for_delay(0.0, 0.0).is_err());
    }

    #[test]
    fn adaptive_c_examples() {
        assert_eq!(adaptive_c(50, 4, 80.0), 160);
        assert_eq!(adaptive_c(50, 20, 80.0), 800);
        assert_eq!(adaptive_c(50, 1, 100.0), 50);
    }

    #[test]
    fn stability_examples() {
        assert!(check_stability(0.1, 0.01, 0.01).stable);
        let s = check_stability(0.1, 0.01, 0.05);
        assert!(!s.stable);
        assert!(s.margin < 0.0);
        assert!(check_stability(0.5, 0.99, 0.0).stable);
        assert!(!check_stability(0.01, 0.02, 0.0).stable);
        assert!(check_stability_ticks(0.1, 0.01, 100, 10_000).stable);
    }

    proptest! {
        #[test]
        fn zero_delay_matches_pairwise_bound(eps in 1e-4f64..0.5, sigma in 1e-4f64..0.9999) {
            prop_assert_eq!(check_stability(eps, sigma, 0.0).stable, sigma < eps / (1.0 - eps));
        }

        #[test]
        fn epsilon_opt_monotone(beta in 0u64..200, n in 0u32..50, nu in 0u64..200, t in 1u64..100_000,
                                db in 0u64..50, dn in 0u32..10, dnu in 0u64..50, dt in 0u64..1000) {
            let base = epsilon_opt(beta, n, nu, t).unwrap().value;
            prop_assert!(epsilon_opt(beta + db, n, nu, t).unwrap().value >= base);
            prop_assert!(epsilon_opt(beta, n + dn, nu, t).unwrap().value >= base);
            prop_assert!(epsilon_opt(beta, n, nu + dnu, t).unwrap().value >= base);
            prop_assert!(epsilon_opt(beta, n, nu, t + dt).unwrap().value <= base);
        }

        #[test]
        fn full_threshold_budget(c0 in 0u64..1000, n in 0u32..100) {
            prop_assert_eq!(adaptive_c(c0, n, 100.0), c0 * n as u64);
        }
    }
}

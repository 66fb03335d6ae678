//! Parameter report for `ebs check`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ebs_core::params::{param_report, ParamReport};
use ebs_core::Ticks;

use crate::error::Result;
use crate::scenario::ScenarioConfig;

/// Evaluates the closed forms for the base configuration. The receive budget
/// `β` is the configured airtime, the delay the deterministic (or worst-case
/// uniform) one.
pub fn check_params(cfg: &ScenarioConfig) -> Result<ParamReport> {
    let topology = cfg.build_topology()?;
    let nu = cfg.delay.nu(cfg.protocol.period);
    Ok(param_report(&cfg.protocol, &topology, nu, cfg.faults.airtime)?)
}

/// Human-readable rendering. Per-node tables are folded by degree.
pub fn format_report(cfg: &ScenarioConfig, r: &ParamReport) -> String {
    let mut s = String::new();
    let p = &cfg.protocol;
    let _ = writeln!(s, "period        {} ticks", p.period);
    let _ = writeln!(s, "epsilon       {}", r.epsilon);
    let _ = writeln!(s, "sigma         {}", r.sigma);
    let _ = writeln!(s, "delta         {}", r.delta);
    let _ = writeln!(s, "epsilon_opt   {}", r.epsilon_opt);
    let _ = writeln!(s, "sigma_max     {}", r.sigma_max);
    let _ = writeln!(s, "stable        {}", if r.stable { "yes" } else { "no" });
    let _ = writeln!(s, "margin        {}", r.margin);
    let _ = writeln!(s, "adaptive_c    {}", if p.adaptive_c { "on" } else { "off" });
    let _ = writeln!(s, "\ndegree  nodes  C (ticks)  epsilon_eff");
    if let Ok(topology) = cfg.build_topology() {
        let mut by_degree: BTreeMap<usize, (usize, Ticks, f64)> = BTreeMap::new();
        for (id, c) in &r.adaptive_c_per_node {
            let e = by_degree
                .entry(topology.degree(*id))
                .or_insert((0, *c, r.epsilon_per_node[id]));
            e.0 += 1;
        }
        for (deg, (count, c, eps)) in by_degree {
            let _ = writeln!(s, "{deg:>6}  {count:>5}  {c:>9}  {eps}");
        }
    }
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn cfg(extra: &str) -> ScenarioConfig {
        parse_scenario(&format!(
            "[topology]\nkind = \"torus\"\nrows = 5\ncols = 5\n[protocol]\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn unstable_has_negative_margin() {
        let r = check_params(&cfg("epsilon = 0.01\nsigma = 0.02\n")).unwrap();
        assert!(!r.stable);
        assert!(r.margin < 0.0);
    }

    #[test]
    fn stable_without_delay() {
        let r = check_params(&cfg("epsilon = 0.1\nsigma = 0.01\n")).unwrap();
        assert!(r.stable);
        let text = format_report(&cfg("epsilon = 0.1\nsigma = 0.01\n"), &r);
        assert!(text.contains("stable        yes"));
    }

    #[test]
    fn adaptive_table_for_degree_twenty() {
        let c = parse_scenario(
            "[topology]\nkind = \"complete\"\nn = 21\n[protocol]\nperiod = 30000\ns_th = 80\nc0 = 50\nadaptive_c = true\n",
        )
        .unwrap();
        let r = check_params(&c).unwrap();
        assert!(r.adaptive_c_per_node.values().all(|&v| v == 800));
        assert!(format_report(&c, &r).contains("    20     21        800"));
    }
}

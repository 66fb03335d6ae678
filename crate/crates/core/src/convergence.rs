//! Convergence metrics: average phase difference `Δφ` and average phase
//! advancement `Δ⁺`.

use alloc::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::phase::{Phase, PhaseDistance};
use crate::topology::{NodeId, Topology};

/// Snapshot of both convergence metrics at the end of one period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsSnapshot {
    pub avg_phase_diff: f64,
    pub avg_phase_advancement: f64,
    pub period_index: u32,
}

/// `Δφ = (1/n) Σ_i (1/|N_i|) Σ_{j∈N_i} d(φi, φj)`.
///
/// Every node of `topology` must have a phase and at least one neighbour.
pub fn avg_phase_difference(
    phases: &BTreeMap<NodeId, Phase>,
    topology: &Topology,
    distance: PhaseDistance,
) -> Result<f64> {
    let mut total = 0.0;
    for i in topology.node_ids() {
        let phi = *phases.get(&i).ok_or(Error::MissingPhase(i))?;
        if topology.degree(i) == 0 {
            return Err(Error::IsolatedNode(i));
        }
        total += neighbourhood_mean(i, phi, phases, topology, distance)?;
    }
    Ok(total / topology.len() as f64)
}

/// Like [`avg_phase_difference`] but nodes without neighbours are left out
/// of the average. Returns `None` when no node has a neighbour.
pub fn avg_phase_difference_connected(
    phases: &BTreeMap<NodeId, Phase>,
    topology: &Topology,
    distance: PhaseDistance,
) -> Result<Option<f64>> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in topology.node_ids() {
        if topology.degree(i) == 0 {
            continue;
        }
        let phi = *phases.get(&i).ok_or(Error::MissingPhase(i))?;
        total += neighbourhood_mean(i, phi, phases, topology, distance)?;
        counted += 1;
    }
    Ok((counted > 0).then(|| total / counted as f64))
}

fn neighbourhood_mean(
    i: NodeId,
    phi: Phase,
    phases: &BTreeMap<NodeId, Phase>,
    topology: &Topology,
    distance: PhaseDistance,
) -> Result<f64> {
    let mut sum = 0.0;
    for j in topology.neighbors(i) {
        let pj = *phases.get(&j).ok_or(Error::MissingPhase(j))?;
        sum += distance.between(phi, pj);
    }
    Ok(sum / topology.degree(i) as f64)
}

/// `Δ⁺ = (1/n) Σ_i |φi(t⁺) − φi(t)|`, each node contributing the jumps it
/// took during the period. Nodes that did not jump simply have no entries.
pub fn avg_phase_advancement(jumps: impl IntoIterator<Item = (Phase, Phase)>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let total = jumps
        .into_iter()
        .fold(0.0, |acc, (old, new)| acc + libm::fabs(new.value() - old.value()));
    total / n as f64
}

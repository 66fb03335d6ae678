//! Emergent broadcast slot (EBS) synchronization for duty-cycled multi-hop
//! networks.
//!
//! Nodes are pulse-coupled oscillators: each broadcasts once per period `T`
//! and, on hearing a neighbour, shortens its own remaining phase. Once a node
//! hears enough of its neighbourhood inside its synchronization error
//! tolerance window (SETW), it sleeps outside that window.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that does
//! not touch the filesystem:
//!
//! - [`phase`]: phase arithmetic, the phase advancement rule and SETW membership.
//! - [`convergence`]: average phase difference and average phase advancement.
//! - [`protocol`]: the per-node EBS state machine and the refractory-period
//!   baseline ([`protocol::mrf`]).
//! - [`topology`]: graphs, generators and the edge-list parser.
//! - [`sim`]: the deterministic discrete-event engine.
//! - [`metrics`]: per-period duty-cycle, throughput and flap accounting.
//! - [`params`]: closed-form parameter calculators and stability checks.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod convergence;
pub mod error;
pub mod metrics;
pub mod params;
pub mod phase;
pub mod protocol;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
pub use phase::{in_setw, phase_advance, CouplingParams, Phase, PhaseDistance};
pub use topology::{NodeId, Topology};

/// Simulation time unit. One tick is one millisecond of model time unless a
/// scenario says otherwise.
pub type Ticks = u64;

//! Filesystem side of the EBS simulator: scenario files, edge-list
//! topologies, CSV and trace export, and the experiment runner behind the
//! `ebs` command.

pub mod check;
pub mod error;
pub mod experiment;
pub mod export;
pub mod scenario;
pub mod topology_file;

pub use error::{Error, Result};
pub use experiment::{run_experiment, RunOptions};
pub use scenario::{load_scenario, parse_scenario, ScenarioConfig};

use alloc::string::String;

use thiserror::Error;

use crate::topology::NodeId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("phase {0} outside [0, 1]")]
    PhaseOutOfRange(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("node {0} has no neighbours; average over its neighbourhood is undefined")]
    IsolatedNode(NodeId),

    #[error("node {0} is missing a phase entry")]
    MissingPhase(NodeId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("node {0} already exists")]
    DuplicateNode(NodeId),

    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("node {node} not at period start (phase {phase})")]
    NotAtPeriodStart { node: NodeId, phase: f64 },

    #[error("node {node} fired before its phase reached 1 (phase {phase})")]
    NotDue { node: NodeId, phase: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

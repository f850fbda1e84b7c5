use std::fmt;

use thiserror::Error;

use crate::model::{PairId, Update};

/// Why a pair has no transient path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransientFailure {
    /// The walk from the source reached this vertex, which has no active out-edge.
    DeadEnd(String),
    /// The walk entered this cycle of active edges.
    Loop(Vec<String>),
}

impl fmt::Display for TransientFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransientFailure::DeadEnd(v) => write!(f, "dead end at {v}"),
            TransientFailure::Loop(c) => write!(f, "loop {}", c.join(" -> ")),
        }
    }
}

/// A single reason an instance, state or schedule is not acceptable.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),
    #[error("malformed schedule: {0}")]
    MalformedSchedule(String),
    #[error("edge ({tail}, {head}) carries {load} but has capacity {capacity}")]
    CapacityExceeded { tail: String, head: String, load: u128, capacity: u64 },
    #[error("pair {pair} has no transient flow: {reason}")]
    NoTransientFlow { pair: PairId, reason: TransientFailure },
    #[error("update {0} is scheduled more than once")]
    DuplicateUpdate(Update),
    #[error("schedule leaves {} effective update(s) unresolved, first {}", .0.len(), .0.first().map(|u| u.to_string()).unwrap_or_default())]
    IncompleteSchedule(Vec<Update>),
}

/// Rejection of a schedule, with the round at which it failed.
///
/// Round 0 means the instance itself was rejected before any round ran.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("schedule rejected at round {round}: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ScheduleRejection {
    pub round: usize,
    pub violations: Vec<Violation>,
}

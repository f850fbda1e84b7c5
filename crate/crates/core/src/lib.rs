//! Congestion-free rerouting of unsplittable flows.
//!
//! An instance is a capacitated digraph with `k` flow pairs, each moving
//! from an old source-terminal path to a new one. A schedule resolves
//! per-vertex forwarding updates in rounds; it is feasible if after every
//! round each pair still reaches the terminal and no edge is overloaded.
//!
//! The crate provides the model and verifier, a solver for acyclic
//! instances that is polynomial for fixed `k`, an exhaustive oracle for
//! small instances of any shape, and instance generators (including the
//! two hardness gadgets built from 3-CNF formulas).

pub mod blocks;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod generators;
pub mod model;
pub mod oracle;
mod path_seq;
pub mod solver;
pub mod state;
pub mod verify;

pub use error::{ScheduleRejection, TransientFailure, Violation};
pub use model::{
    validate_network, Edge, FlowPair, NetworkBuilder, PairId, PairSpec, Schedule, Update, UpdateFlowNetwork, VertexId,
};
pub use state::{NetworkState, TransientResult};
pub use verify::{verify_schedule, verify_schedule_naive};

//! Instance generators: random acyclic instances and the two reductions
//! from 3-CNF formulas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{FormatError, FORMAT_VERSION};
use crate::model::PairId;

pub mod cnf;
pub mod random;
pub mod sat2;
pub mod satdag;

pub use cnf::{parse_dimacs, Assignment, CnfError, CnfFormula, Literal};
pub use random::{gen_random_dag, RandomParams, GENERATOR_VERSION};
pub use sat2::{gen_2flow_sat, schedule_2flow};
pub use satdag::{decode_assignment, gen_dag_sat, switch_rounds};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("assignment has {got} values, formula has {expected} variables")]
    AssignmentLength { expected: usize, got: usize },
    #[error("assignment does not satisfy the formula")]
    NotSatisfying,
    #[error("schedule does not encode an assignment: {0}")]
    MalformedSchedule(String),
    #[error("metadata is for a {found:?} gadget, expected {expected:?}")]
    WrongGadget { expected: GadgetKind, found: GadgetKind },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GadgetKind {
    TwoFlow,
    Dag,
}

/// Sidecar describing how a gadget instance was built: the formula, the
/// vertex name of every named gadget vertex and the id of every pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetMeta {
    pub formula: CnfFormula,
    pub kind: GadgetKind,
    pub pairs: BTreeMap<String, PairId>,
    pub vertices: BTreeMap<String, String>,
    pub version: u32,
}

impl GadgetMeta {
    pub(crate) fn new(kind: GadgetKind, formula: CnfFormula) -> Self {
        GadgetMeta { formula, kind, pairs: BTreeMap::new(), vertices: BTreeMap::new(), version: FORMAT_VERSION }
    }

    pub fn pair(&self, role: &str) -> Option<PairId> {
        self.pairs.get(role).copied()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let m: GadgetMeta = serde_json::from_str(text)?;
        if m.version != FORMAT_VERSION {
            return Err(FormatError::Version(m.version));
        }
        Ok(m)
    }
}

//! Canonical JSON encoding of instances and schedules.
//!
//! Output has sorted keys, two-space indentation and a trailing newline,
//! so equal values always serialize to identical bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{PairSpec, Schedule, Update, UpdateFlowNetwork};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unsupported format version {0}, expected {FORMAT_VERSION}")]
    Version(u32),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    cap: u64,
    from: String,
    to: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    demand: u64,
    id: u32,
    new: Vec<String>,
    old: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    edges: Vec<EdgeDoc>,
    pairs: Vec<PairDoc>,
    source: String,
    terminal: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    rounds: Vec<Vec<Update>>,
    version: u32,
}

fn to_canonical<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}

/// Parses an instance. Structural validity is left to `validate_network`.
pub fn parse_instance(text: &str) -> Result<UpdateFlowNetwork, FormatError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    if doc.version != FORMAT_VERSION {
        return Err(FormatError::Version(doc.version));
    }
    let edges = doc.edges.into_iter().map(|e| (e.from, e.to, e.cap)).collect();
    let pairs = doc
        .pairs
        .into_iter()
        .map(|p| PairSpec { id: p.id, demand: p.demand, old: p.old, new: p.new })
        .collect();
    Ok(UpdateFlowNetwork::from_parts(&doc.source, &doc.terminal, edges, pairs))
}

pub fn serialize_instance(net: &UpdateFlowNetwork) -> String {
    let names = |p: &[crate::model::VertexId]| p.iter().map(|v| net.name(*v).to_string()).collect();
    let doc = InstanceDoc {
        edges: net
            .edges()
            .iter()
            .map(|e| EdgeDoc { cap: e.capacity, from: net.name(e.tail).into(), to: net.name(e.head).into() })
            .collect(),
        pairs: net
            .pairs()
            .iter()
            .map(|p| PairDoc { demand: p.demand, id: p.id.0, new: names(&p.new_path), old: names(&p.old_path) })
            .collect(),
        source: net.name(net.source()).into(),
        terminal: net.name(net.terminal()).into(),
        version: FORMAT_VERSION,
    };
    to_canonical(&doc)
}

pub fn parse_schedule(text: &str) -> Result<Schedule, FormatError> {
    let doc: ScheduleDoc = serde_json::from_str(text)?;
    if doc.version != FORMAT_VERSION {
        return Err(FormatError::Version(doc.version));
    }
    Ok(Schedule::new(doc.rounds))
}

pub fn serialize_schedule(schedule: &Schedule) -> String {
    to_canonical(&ScheduleDoc { rounds: schedule.rounds().to_vec(), version: FORMAT_VERSION })
}

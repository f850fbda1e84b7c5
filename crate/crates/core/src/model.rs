//! Update flow networks: the capacitated digraph, its flow pairs and the
//! structural checks an instance has to pass before anything else runs.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Violation;

/// Index of a vertex in the network's vertex table.
///
/// The table is sorted lexicographically by vertex name, so comparing two
/// ids compares the names. That ordering is only used for deterministic
/// output and tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

/// Identifier of a flow pair, 1-based as in the instance format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairId(pub u32);

impl PairId {
    pub fn from_index(index: usize) -> Self {
        PairId(index as u32 + 1)
    }

    /// Zero-based position in [`UpdateFlowNetwork::pairs`].
    pub fn index(self) -> usize {
        (self.0 as usize).wrapping_sub(1)
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub capacity: u64,
}

/// One commodity: its current path, its target path and its demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowPair {
    pub id: PairId,
    pub demand: u64,
    pub old_path: Vec<VertexId>,
    pub new_path: Vec<VertexId>,
}

impl FlowPair {
    /// Old path equals new path: nothing to reroute.
    pub fn is_static(&self) -> bool {
        self.old_path == self.new_path
    }
}

/// Update `(vertex, pair)`: switch `pair`'s forwarding at `vertex` from
/// the old outgoing edge to the new one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Update {
    pub pair: PairId,
    pub vertex: String,
}

impl Update {
    pub fn new(vertex: impl Into<String>, pair: PairId) -> Self {
        Update { pair, vertex: vertex.into() }
    }
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.vertex, self.pair)
    }
}

/// Ordered rounds of simultaneous updates.
///
/// Updates inside a round are kept sorted (by pair, then vertex) so that
/// two schedules with the same rounds compare equal and serialize to the
/// same bytes. Duplicates are preserved; the verifier rejects them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    rounds: Vec<Vec<Update>>,
}

impl Schedule {
    pub fn new(rounds: Vec<Vec<Update>>) -> Self {
        let rounds = rounds
            .into_iter()
            .map(|mut r| {
                r.sort();
                r
            })
            .collect();
        Schedule { rounds }
    }

    /// One update per round, in the given order.
    pub fn sequence(updates: impl IntoIterator<Item = Update>) -> Self {
        Schedule { rounds: updates.into_iter().map(|u| vec![u]).collect() }
    }

    pub fn rounds(&self) -> &[Vec<Update>] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn updates(&self) -> impl Iterator<Item = &Update> {
        self.rounds.iter().flatten()
    }

    /// Splits every round into singleton rounds, keeping the order.
    pub fn into_singletons(self) -> Schedule {
        Schedule::sequence(self.rounds.into_iter().flatten())
    }

    /// 1-based round in which `update` first appears.
    pub fn round_of(&self, update: &Update) -> Option<usize> {
        self.rounds.iter().position(|r| r.contains(update)).map(|i| i + 1)
    }
}

/// Per-pair forwarding table in pair-local vertex numbering.
#[derive(Clone, Debug, Default)]
pub(crate) struct PairRouting {
    pub verts: Vec<VertexId>,
    pub local: HashMap<VertexId, u32>,
    pub old_next: Vec<Option<u32>>,
    pub new_next: Vec<Option<u32>>,
    pub old_edge: Vec<Option<usize>>,
    pub new_edge: Vec<Option<usize>>,
    pub source: u32,
    pub terminal: u32,
}

impl PairRouting {
    fn build(net_edges: &HashMap<(VertexId, VertexId), usize>, pair: &FlowPair, s: VertexId, t: VertexId) -> Self {
        let mut r = PairRouting::default();
        let intern = |r: &mut PairRouting, v: VertexId| -> u32 {
            if let Some(&l) = r.local.get(&v) {
                return l;
            }
            let l = r.verts.len() as u32;
            r.verts.push(v);
            r.local.insert(v, l);
            r.old_next.push(None);
            r.new_next.push(None);
            r.old_edge.push(None);
            r.new_edge.push(None);
            l
        };
        r.source = intern(&mut r, s);
        r.terminal = intern(&mut r, t);
        for v in pair.old_path.iter().chain(&pair.new_path) {
            intern(&mut r, *v);
        }
        for w in pair.old_path.windows(2) {
            let (a, b) = (r.local[&w[0]], r.local[&w[1]]);
            if r.old_next[a as usize].is_none() {
                r.old_next[a as usize] = Some(b);
                r.old_edge[a as usize] = net_edges.get(&(w[0], w[1])).copied();
            }
        }
        for w in pair.new_path.windows(2) {
            let (a, b) = (r.local[&w[0]], r.local[&w[1]]);
            if r.new_next[a as usize].is_none() {
                r.new_next[a as usize] = Some(b);
                r.new_edge[a as usize] = net_edges.get(&(w[0], w[1])).copied();
            }
        }
        r
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    /// The update at `v` changes the active edge set.
    pub fn is_effective(&self, v: u32) -> bool {
        self.old_next[v as usize] != self.new_next[v as usize]
    }

    pub fn active_next(&self, v: u32, resolved: bool) -> Option<u32> {
        if resolved {
            self.new_next[v as usize]
        } else {
            self.old_next[v as usize]
        }
    }

    pub fn active_edge(&self, v: u32, resolved: bool) -> Option<usize> {
        if resolved {
            self.new_edge[v as usize]
        } else {
            self.old_edge[v as usize]
        }
    }
}

/// Input record for one flow pair, by vertex name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSpec {
    pub id: u32,
    pub demand: u64,
    pub old: Vec<String>,
    pub new: Vec<String>,
}

/// Capacitated digraph with source, terminal and `k` update flow pairs.
///
/// Construction never fails: malformed input (unknown edges, non-simple
/// paths, zero capacities, ...) is kept as-is and reported by
/// [`validate_network`]. Every other operation assumes a validated
/// network.
#[derive(Clone, Debug)]
pub struct UpdateFlowNetwork {
    names: Vec<String>,
    by_name: HashMap<String, VertexId>,
    source: VertexId,
    terminal: VertexId,
    edges: Vec<Edge>,
    edge_index: HashMap<(VertexId, VertexId), usize>,
    pairs: Vec<FlowPair>,
    routing: Vec<PairRouting>,
}

impl PartialEq for UpdateFlowNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.source == other.source
            && self.terminal == other.terminal
            && self.edges == other.edges
            && self.pairs == other.pairs
    }
}

impl Eq for UpdateFlowNetwork {}

impl UpdateFlowNetwork {
    pub fn from_parts(source: &str, terminal: &str, edges: Vec<(String, String, u64)>, mut pairs: Vec<PairSpec>) -> Self {
        let mut names: Vec<String> = vec![source.to_string(), terminal.to_string()];
        for (a, b, _) in &edges {
            names.push(a.clone());
            names.push(b.clone());
        }
        for p in &pairs {
            names.extend(p.old.iter().cloned());
            names.extend(p.new.iter().cloned());
        }
        names.sort();
        names.dedup();
        let by_name: HashMap<String, VertexId> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), VertexId(i))).collect();
        let id = |n: &str| by_name[n];

        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|(a, b, c)| Edge { tail: id(&a), head: id(&b), capacity: c })
            .collect();
        edges.sort_by_key(|e| (e.tail, e.head, e.capacity));
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            edge_index.entry((e.tail, e.head)).or_insert(i);
        }

        pairs.sort_by_key(|p| p.id);
        let pairs: Vec<FlowPair> = pairs
            .into_iter()
            .map(|p| FlowPair {
                id: PairId(p.id),
                demand: p.demand,
                old_path: p.old.iter().map(|n| id(n)).collect(),
                new_path: p.new.iter().map(|n| id(n)).collect(),
            })
            .collect();
        let (s, t) = (id(source), id(terminal));
        let routing = pairs.iter().map(|p| PairRouting::build(&edge_index, p, s, t)).collect();
        UpdateFlowNetwork { names, by_name, source: s, terminal: t, edges, edge_index, pairs, routing }
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn terminal(&self) -> VertexId {
        self.terminal
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.names.len()).map(VertexId)
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.by_name.get(name).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn edge_between(&self, tail: VertexId, head: VertexId) -> Option<usize> {
        self.edge_index.get(&(tail, head)).copied()
    }

    pub fn pairs(&self) -> &[FlowPair] {
        &self.pairs
    }

    pub fn pair(&self, id: PairId) -> Option<&FlowPair> {
        self.pairs.get(id.index()).filter(|p| p.id == id)
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// `|V| + |E|`.
    pub fn size(&self) -> usize {
        self.names.len() + self.edges.len()
    }

    pub(crate) fn routing(&self, pair_index: usize) -> &PairRouting {
        &self.routing[pair_index]
    }

    /// Edge ids of a vertex path; `None` if some hop is not an edge.
    pub fn path_edges(&self, path: &[VertexId]) -> Option<Vec<usize>> {
        path.windows(2).map(|w| self.edge_between(w[0], w[1])).collect()
    }

    pub fn edge_label(&self, i: usize) -> (String, String) {
        let e = &self.edges[i];
        (self.name(e.tail).to_string(), self.name(e.head).to_string())
    }

    /// Every update that changes some active edge, in (pair, vertex) order.
    pub fn effective_updates(&self) -> Vec<Update> {
        let mut out = Vec::new();
        for (pi, p) in self.pairs.iter().enumerate() {
            let r = &self.routing[pi];
            let mut local: Vec<Update> = (0..r.len() as u32)
                .filter(|&l| r.is_effective(l))
                .map(|l| Update::new(self.name(r.verts[l as usize]), p.id))
                .collect();
            local.sort();
            out.extend(local);
        }
        out
    }

    /// Resolves an update to (pair index, pair-local vertex).
    pub(crate) fn locate(&self, u: &Update) -> Result<(usize, u32), Violation> {
        let pi = u.pair.index();
        if self.pair(u.pair).is_none() {
            return Err(Violation::MalformedSchedule(format!("update {u} names an unknown pair")));
        }
        let v = self
            .vertex(&u.vertex)
            .ok_or_else(|| Violation::MalformedSchedule(format!("update {u} names an unknown vertex")))?;
        let r = &self.routing[pi];
        let p = &self.pairs[pi];
        match r.local.get(&v) {
            // Only `s` and `t` are interned without lying on a path.
            Some(&l) if (l != r.source && l != r.terminal) || p.old_path.contains(&v) || p.new_path.contains(&v) => {
                Ok((pi, l))
            }
            _ => Err(Violation::MalformedSchedule(format!("vertex of update {u} is on neither path of the pair"))),
        }
    }
}

/// Small fluent builder used by the generators and tests.
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    source: String,
    terminal: String,
    edges: Vec<(String, String, u64)>,
    pairs: Vec<PairSpec>,
}

impl NetworkBuilder {
    pub fn new(source: &str, terminal: &str) -> Self {
        NetworkBuilder { source: source.into(), terminal: terminal.into(), ..Default::default() }
    }

    pub fn edge(mut self, tail: &str, head: &str, capacity: u64) -> Self {
        self.add_edge(tail, head, capacity);
        self
    }

    pub fn add_edge(&mut self, tail: &str, head: &str, capacity: u64) {
        self.edges.push((tail.into(), head.into(), capacity));
    }

    /// Adds a pair with the next free id.
    pub fn pair(mut self, demand: u64, old: &[&str], new: &[&str]) -> Self {
        self.add_pair(demand, old.iter().map(|s| s.to_string()).collect(), new.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn add_pair(&mut self, demand: u64, old: Vec<String>, new: Vec<String>) -> PairId {
        let id = self.pairs.len() as u32 + 1;
        self.pairs.push(PairSpec { id, demand, old, new });
        PairId(id)
    }

    /// Adds every hop of both paths of every pair that is not yet an edge,
    /// with capacity `capacity`.
    pub fn with_path_edges(mut self, capacity: u64) -> Self {
        let mut have: std::collections::HashSet<(String, String)> =
            self.edges.iter().map(|(a, b, _)| (a.clone(), b.clone())).collect();
        let hops: Vec<(String, String)> = self
            .pairs
            .iter()
            .flat_map(|p| p.old.windows(2).chain(p.new.windows(2)))
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        for (a, b) in hops {
            if have.insert((a.clone(), b.clone())) {
                self.edges.push((a, b, capacity));
            }
        }
        self
    }

    pub fn build(self) -> UpdateFlowNetwork {
        UpdateFlowNetwork::from_parts(&self.source, &self.terminal, self.edges, self.pairs)
    }
}

/// Checks every instance invariant and reports all failures.
pub fn validate_network(net: &UpdateFlowNetwork) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let malformed = |out: &mut Vec<Violation>, msg: String| out.push(Violation::MalformedInstance(msg));

    if net.source == net.terminal {
        malformed(&mut out, "source and terminal coincide".into());
    }
    if net.names.iter().any(|n| n.is_empty()) {
        malformed(&mut out, "empty vertex name".into());
    }
    for w in net.edges.windows(2) {
        if (w[0].tail, w[0].head) == (w[1].tail, w[1].head) {
            malformed(&mut out, format!("duplicate edge ({}, {})", net.name(w[0].tail), net.name(w[0].head)));
        }
    }
    for e in &net.edges {
        if e.capacity == 0 {
            malformed(&mut out, format!("edge ({}, {}) has capacity 0", net.name(e.tail), net.name(e.head)));
        }
        if e.tail == e.head {
            malformed(&mut out, format!("self-loop at {}", net.name(e.tail)));
        }
    }
    if net.pairs.is_empty() {
        malformed(&mut out, "instance has no flow pairs".into());
    }

    let mut used = vec![false; net.edges.len()];
    let mut old_load = vec![0u128; net.edges.len()];
    let mut new_load = vec![0u128; net.edges.len()];
    for (i, p) in net.pairs.iter().enumerate() {
        if p.id.0 as usize != i + 1 {
            malformed(&mut out, format!("pair ids must be 1..k in order; found {} at position {}", p.id.0, i + 1));
        }
        if p.demand == 0 {
            malformed(&mut out, format!("pair {} has demand 0", p.id));
        }
        for (label, path, load) in [("old", &p.old_path, &mut old_load), ("new", &p.new_path, &mut new_load)] {
            if path.len() < 2 {
                malformed(&mut out, format!("{label} path of pair {} has fewer than two vertices", p.id));
                continue;
            }
            if path[0] != net.source || *path.last().unwrap() != net.terminal {
                malformed(&mut out, format!("{label} path of pair {} does not run from source to terminal", p.id));
            }
            let mut seen = std::collections::HashSet::with_capacity(path.len());
            if let Some(v) = path.iter().find(|v| !seen.insert(**v)) {
                malformed(&mut out, format!("{label} path of pair {} repeats vertex {}", p.id, net.name(*v)));
            }
            for w in path.windows(2) {
                match net.edge_between(w[0], w[1]) {
                    Some(e) => {
                        used[e] = true;
                        load[e] += p.demand as u128;
                    }
                    None => malformed(
                        &mut out,
                        format!("{label} path of pair {} uses missing edge ({}, {})", p.id, net.name(w[0]), net.name(w[1])),
                    ),
                }
            }
        }
    }
    for (i, e) in net.edges.iter().enumerate() {
        if !used[i] {
            malformed(&mut out, format!("edge ({}, {}) lies on no flow path", net.name(e.tail), net.name(e.head)));
        }
    }
    for load in [&old_load, &new_load] {
        for (i, e) in net.edges.iter().enumerate() {
            if load[i] > e.capacity as u128 && e.capacity > 0 {
                let (tail, head) = net.edge_label(i);
                out.push(Violation::CapacityExceeded { tail, head, load: load[i], capacity: e.capacity });
            }
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

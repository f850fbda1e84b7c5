//! Exact solver for acyclic instances.
//!
//! Blocks are eliminated from largest to smallest. Each block `b` gets the
//! set of still-present blocks touching it and every order of that set
//! that can be switched without congestion (its labels). Labels of
//! consecutive eliminations that disagree on the relative order of common
//! blocks conflict. Picking one label per block with no conflicts gives a
//! precedence relation on blocks, and switching blocks in its topological
//! waves yields a feasible schedule. If some block has no label, or no
//! conflict-free choice exists, the instance is infeasible.
//!
//! The running time is polynomial in the instance for fixed `k` but
//! grows like `k!²`, so this is only practical for a handful of pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::blocks::{is_congestion_free, BlockId, BlockSet, CycleError, LoadState};
use crate::error::Violation;
use crate::model::{validate_network, PairId, Schedule, Update, UpdateFlowNetwork};
use crate::verify::verify_schedule;

/// `b` itself and every block in `remaining` touching it, in block order.
///
/// This is the direct definition and costs a scan over all blocks; the
/// solver uses an equivalent constant-per-pair shortcut.
pub fn touch_list(set: &BlockSet<'_>, b: BlockId, remaining: impl Fn(BlockId) -> bool) -> Vec<BlockId> {
    let blk = set.get(b);
    set.blocks()
        .iter()
        .filter(|x| x.id == b || (remaining(x.id) && crate::blocks::touches(blk, x, set.order())))
        .map(|x| x.id)
        .collect()
}

/// Touch list of `b` when exactly the blocks `<= b` remain.
///
/// Blocks of one pair are disjoint and ordered, so only the largest block
/// of each other pair below `b` can reach past `start(b)`.
pub(crate) fn touch_list_fast(set: &BlockSet<'_>, b: BlockId) -> Vec<BlockId> {
    let own = set.get(b).pair;
    let mut out: Vec<BlockId> = (0..set.network().pair_count())
        .map(PairId::from_index)
        .filter(|&p| p != own)
        .filter_map(|p| set.pred_of_pair(p, b))
        .filter(|&x| set.touches_below(x, b))
        .collect();
    out.push(b);
    out.sort();
    out
}

/// Every ordering of `tb` that passes [`is_congestion_free`], in
/// lexicographic order. Prefixes that already overload an edge are
/// pruned, which does not change the result.
pub fn congestion_free_labels(set: &BlockSet<'_>, tb: &[BlockId]) -> Vec<Vec<BlockId>> {
    fn rec(set: &BlockSet<'_>, tb: &[BlockId], used: &mut [bool], st: &LoadState, prefix: &mut Vec<BlockId>, out: &mut Vec<Vec<BlockId>>) {
        if prefix.len() == tb.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..tb.len() {
            if used[i] {
                continue;
            }
            let mut next = st.clone();
            if next.apply_block_update(set, tb[i]).is_ok() {
                used[i] = true;
                prefix.push(tb[i]);
                rec(set, tb, used, &next, prefix, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut sorted = tb.to_vec();
    sorted.sort();
    let mut out = Vec::new();
    let st = LoadState::new(set, &sorted);
    rec(set, &sorted, &mut vec![false; sorted.len()], &st, &mut Vec::new(), &mut out);
    debug_assert!(out.iter().all(|l| is_congestion_free(set, l)));
    out
}

/// Two labels agree on the relative order of the blocks they share.
pub fn labels_consistent(a: &[BlockId], b: &[BlockId]) -> bool {
    let common_a: Vec<BlockId> = a.iter().filter(|x| b.contains(x)).copied().collect();
    let common_b: Vec<BlockId> = b.iter().filter(|x| a.contains(x)).copied().collect();
    common_a == common_b
}

#[derive(Clone, Debug)]
pub struct RhGroup {
    pub block: BlockId,
    pub touch_list: Vec<BlockId>,
    pub labels: Vec<Vec<BlockId>>,
}

/// Label graph: one group per block (in ascending block order), one vertex
/// per label. Vertices of a group form a clique; vertices of consecutive
/// groups are joined when their labels are inconsistent.
#[derive(Clone, Debug)]
pub struct RhGraph {
    pub groups: Vec<RhGroup>,
    /// `conflicts[g][u][v]`: label `u` of group `g` and label `v` of group `g + 1` are inconsistent.
    conflicts: Vec<Vec<Vec<bool>>>,
}

/// Vertex of [`RhGraph`]: (group, label index).
pub type RhVertex = (usize, usize);

impl RhGraph {
    pub fn vertex_count(&self) -> usize {
        self.groups.iter().map(|g| g.labels.len()).sum()
    }

    pub fn conflict(&self, group: usize, u: usize, v: usize) -> bool {
        self.conflicts[group][u][v]
    }

    pub fn has_edge(&self, a: RhVertex, b: RhVertex) -> bool {
        if a == b {
            return false;
        }
        if a.0 == b.0 {
            return true;
        }
        let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
        hi.0 == lo.0 + 1 && self.conflicts[lo.0][lo.1][hi.1]
    }

    /// Edges between groups, each once with the lower group first.
    pub fn inter_group_edges(&self) -> Vec<(RhVertex, RhVertex)> {
        let mut out = Vec::new();
        for (g, m) in self.conflicts.iter().enumerate() {
            for (u, row) in m.iter().enumerate() {
                for (v, &c) in row.iter().enumerate() {
                    if c {
                        out.push(((g, u), (g + 1, v)));
                    }
                }
            }
        }
        out
    }

    pub fn label(&self, v: RhVertex) -> &[BlockId] {
        &self.groups[v.0].labels[v.1]
    }
}

/// Eliminates blocks from largest to smallest. Fails with the first block
/// (in elimination order) that has no congestion-free label.
pub fn build_rh(set: &BlockSet<'_>) -> Result<RhGraph, BlockId> {
    let n = set.len();
    let mut groups: Vec<Option<RhGroup>> = vec![None; n];
    for i in (0..n).rev() {
        let b = BlockId(i);
        let tb = touch_list_fast(set, b);
        let labels = congestion_free_labels(set, &tb);
        if labels.is_empty() {
            return Err(b);
        }
        groups[i] = Some(RhGroup { block: b, touch_list: tb, labels });
    }
    let groups: Vec<RhGroup> = groups.into_iter().map(|g| g.expect("every group built")).collect();
    let conflicts = groups
        .windows(2)
        .map(|w| {
            w[0].labels
                .iter()
                .map(|u| w[1].labels.iter().map(|v| !labels_consistent(u, v)).collect())
                .collect()
        })
        .collect();
    Ok(RhGraph { groups, conflicts })
}

/// One label per group with no conflict between consecutive groups.
///
/// Dynamic program over the groups: a label is reachable if some
/// reachable label of the previous group does not conflict with it; the
/// first such predecessor is recorded.
pub fn find_independent_set(rh: &RhGraph) -> Option<Vec<usize>> {
    let g = rh.groups.len();
    if g == 0 {
        return Some(Vec::new());
    }
    let mut pred: Vec<Vec<Option<usize>>> = Vec::with_capacity(g);
    pred.push(vec![Some(usize::MAX); rh.groups[0].labels.len()]);
    for i in 1..g {
        let row = (0..rh.groups[i].labels.len())
            .map(|v| (0..rh.groups[i - 1].labels.len()).find(|&u| pred[i - 1][u].is_some() && !rh.conflict(i - 1, u, v)))
            .collect();
        pred.push(row);
    }
    let mut v = pred[g - 1].iter().position(Option::is_some)?;
    let mut out = vec![0; g];
    for i in (0..g).rev() {
        out[i] = v;
        v = pred[i][v].unwrap_or(usize::MAX);
    }
    Some(out)
}

/// Blocks ordered by consecutive elements of the chosen labels.
#[derive(Clone, Debug, Default)]
pub struct PrecedenceDigraph {
    pub nodes: BTreeSet<BlockId>,
    pub edges: BTreeSet<(BlockId, BlockId)>,
}

impl PrecedenceDigraph {
    pub fn from_labels<'l>(labels: impl IntoIterator<Item = &'l [BlockId]>) -> Self {
        let mut g = PrecedenceDigraph::default();
        for l in labels {
            g.nodes.extend(l.iter().copied());
            for w in l.windows(2) {
                g.edges.insert((w[0], w[1]));
            }
        }
        g
    }

    /// Layers of a topological sort: each wave holds every node whose
    /// predecessors are all in earlier waves. `Err` carries a cycle.
    pub fn waves(&self) -> Result<Vec<Vec<BlockId>>, Vec<BlockId>> {
        let mut indeg: BTreeMap<BlockId, usize> = self.nodes.iter().map(|&n| (n, 0)).collect();
        let mut succ: HashMap<BlockId, Vec<BlockId>> = HashMap::new();
        for &(a, b) in &self.edges {
            *indeg.get_mut(&b).unwrap() += 1;
            succ.entry(a).or_default().push(b);
        }
        let mut wave: Vec<BlockId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
        let mut out = Vec::new();
        let mut done = 0;
        while !wave.is_empty() {
            done += wave.len();
            let mut next = Vec::new();
            for n in &wave {
                for s in succ.get(n).into_iter().flatten() {
                    let d = indeg.get_mut(s).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        next.push(*s);
                    }
                }
            }
            next.sort();
            out.push(std::mem::take(&mut wave));
            wave = next;
        }
        if done == self.nodes.len() {
            return Ok(out);
        }
        // Every leftover node has a leftover predecessor; walk backwards
        // until a node repeats.
        let left: BTreeSet<BlockId> = indeg.iter().filter(|(_, &d)| d > 0).map(|(&n, _)| n).collect();
        let mut trail = vec![*left.iter().next().unwrap()];
        loop {
            let cur = *trail.last().unwrap();
            let prev = self
                .edges
                .iter()
                .find(|(a, b)| *b == cur && left.contains(a))
                .map(|(a, _)| *a)
                .expect("leftover node has a leftover predecessor");
            if let Some(p) = trail.iter().position(|&x| x == prev) {
                let mut cycle = trail[p..].to_vec();
                cycle.reverse();
                return Err(cycle);
            }
            trail.push(prev);
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.waves().is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InfeasibleWitness {
    /// No order of this block's touch list can be switched without congestion.
    NoLabel { block: BlockId, pair: PairId, start: String, end: String },
    /// Every block has labels, but no conflict-free choice exists.
    NoConsistentChoice,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub blocks: usize,
    pub labels: usize,
    pub conflict_edges: usize,
    pub waves: usize,
    pub rounds: usize,
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Feasible { schedule: Schedule, stats: SolveStats },
    Infeasible { witness: InfeasibleWitness, stats: SolveStats },
    NotADag(CycleError),
    InvalidInstance(Vec<Violation>),
    InternalError(String),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    /// Emit one update per round instead of three rounds per wave.
    pub singleton_rounds: bool,
}

pub fn solve(net: &UpdateFlowNetwork) -> SolveOutcome {
    solve_with(net, SolveOptions::default())
}

pub fn solve_with(net: &UpdateFlowNetwork, opts: SolveOptions) -> SolveOutcome {
    if let Err(v) = validate_network(net) {
        return SolveOutcome::InvalidInstance(v);
    }
    let set = match BlockSet::for_network(net) {
        Ok(s) => s,
        Err(c) => return SolveOutcome::NotADag(c),
    };
    let mut stats = SolveStats { blocks: set.len(), ..Default::default() };
    let rh = match build_rh(&set) {
        Ok(rh) => rh,
        Err(b) => {
            let blk = set.get(b);
            let witness = InfeasibleWitness::NoLabel {
                block: b,
                pair: blk.pair,
                start: net.name(blk.start()).into(),
                end: net.name(blk.end()).into(),
            };
            return SolveOutcome::Infeasible { witness, stats };
        }
    };
    stats.labels = rh.vertex_count();
    stats.conflict_edges = rh.inter_group_edges().len();
    let Some(choice) = find_independent_set(&rh) else {
        return SolveOutcome::Infeasible { witness: InfeasibleWitness::NoConsistentChoice, stats };
    };
    match extract_schedule(&set, &rh, &choice, opts) {
        Ok((schedule, waves)) => {
            stats.waves = waves;
            stats.rounds = schedule.len();
            SolveOutcome::Feasible { schedule, stats }
        }
        Err(msg) => SolveOutcome::InternalError(msg),
    }
}

/// Turns a conflict-free label choice into a verified schedule.
///
/// Each precedence wave becomes up to three rounds: activate the new
/// interior vertices of every wave block, switch every block's start
/// vertex, then retire the old interior vertices. Rounds with nothing to
/// do are left out. Returns the schedule and the number of waves.
pub fn extract_schedule(
    set: &BlockSet<'_>,
    rh: &RhGraph,
    choice: &[usize],
    opts: SolveOptions,
) -> Result<(Schedule, usize), String> {
    let net = set.network();
    let prec = PrecedenceDigraph::from_labels(choice.iter().enumerate().map(|(g, &v)| rh.label((g, v))));
    let waves = prec.waves().map_err(|cycle| format!("precedence relation has a cycle through {cycle:?}"))?;
    let upd = |v, pair| Update::new(net.name(v), pair);
    let mut rounds = Vec::new();
    for wave in &waves {
        let blocks: Vec<_> = wave.iter().map(|&b| set.get(b)).collect();
        let a: Vec<Update> = blocks.iter().flat_map(|b| b.new_interior().iter().map(|&v| upd(v, b.pair))).collect();
        let s: Vec<Update> = blocks.iter().map(|b| upd(b.start(), b.pair)).collect();
        let c: Vec<Update> = blocks.iter().flat_map(|b| b.old_interior().iter().map(|&v| upd(v, b.pair))).collect();
        rounds.extend([a, s, c].into_iter().filter(|r| !r.is_empty()));
    }
    let mut schedule = Schedule::new(rounds);
    if opts.singleton_rounds {
        schedule = schedule.into_singletons();
    }
    verify_schedule(net, &schedule).map_err(|e| format!("extracted schedule failed verification: {e}"))?;
    Ok((schedule, waves.len()))
}

//! Exhaustive search for a consistent update order, for small instances
//! of any shape (cycles allowed).
//!
//! By default the search only branches over updates that swap one
//! outgoing edge for another. Updates that only add an edge are applied
//! up front (the vertex is off every transient path until some swap leads
//! there) and updates that only remove an edge are applied at the end
//! (after the last swap the vertex is off the new path). Any feasible
//! order can be rearranged this way, so the verdict is the same as for
//! the full search, which is kept as [`SearchMode::Full`] for cross-checks.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::error::Violation;
use crate::model::{validate_network, Schedule, Update, UpdateFlowNetwork};
use crate::state::{transient_walk, TransientResult};

#[derive(Clone, Copy, Debug)]
pub struct OracleLimits {
    pub max_states: u64,
    /// Longest update sequence explored; defaults to `|V| * k`.
    pub max_depth: Option<usize>,
    pub max_time: Option<Duration>,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_states: 10_000_000, max_depth: None, max_time: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    States,
    Depth,
    Time,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    /// A consistent order, one update per round.
    Feasible(Schedule),
    Infeasible,
    LimitExceeded(Limit),
}

impl OracleVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, OracleVerdict::Feasible(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub verdict: OracleVerdict,
    /// Distinct consistent states reached.
    pub states: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SearchMode {
    #[default]
    Reduced,
    Full,
}

pub fn brute_force(net: &UpdateFlowNetwork, limits: OracleLimits) -> Result<OracleReport, Vec<Violation>> {
    brute_force_with(net, limits, SearchMode::Reduced)
}

/// Update kinds by how they change a pair's out-edges at a vertex.
struct Classified {
    moves: Vec<(usize, u32)>,
    before: Vec<(usize, u32)>,
    after: Vec<(usize, u32)>,
}

fn classify(net: &UpdateFlowNetwork, mode: SearchMode) -> Classified {
    let mut c = Classified { moves: Vec::new(), before: Vec::new(), after: Vec::new() };
    for pi in 0..net.pair_count() {
        let r = net.routing(pi);
        let mut locals: Vec<u32> = (0..r.len() as u32).filter(|&l| r.is_effective(l)).collect();
        locals.sort_by_key(|&l| net.name(r.verts[l as usize]));
        for l in locals {
            let (old, new) = (r.old_next[l as usize], r.new_next[l as usize]);
            match (mode, old, new) {
                (SearchMode::Reduced, None, Some(_)) => c.before.push((pi, l)),
                (SearchMode::Reduced, Some(_), None) => c.after.push((pi, l)),
                _ => c.moves.push((pi, l)),
            }
        }
    }
    c
}

struct Checker<'a> {
    net: &'a UpdateFlowNetwork,
    base: Vec<Vec<bool>>,
    moves: &'a [(usize, u32)],
    load: Vec<u128>,
}

impl<'a> Checker<'a> {
    fn consistent(&mut self, bits: &[u64]) -> bool {
        let mut res = self.base.clone();
        for (i, &(pi, l)) in self.moves.iter().enumerate() {
            if bits[i / 64] >> (i % 64) & 1 == 1 {
                res[pi][l as usize] = true;
            }
        }
        self.load.iter_mut().for_each(|x| *x = 0);
        for (pi, p) in self.net.pairs().iter().enumerate() {
            let TransientResult::Path(path) = transient_walk(self.net, pi, &res[pi]) else {
                return false;
            };
            for w in path.windows(2) {
                let e = self.net.edge_between(w[0], w[1]).expect("active edges exist");
                self.load[e] += p.demand as u128;
                if self.load[e] > self.net.edge(e).capacity as u128 {
                    return false;
                }
            }
        }
        true
    }
}

fn to_update(net: &UpdateFlowNetwork, (pi, l): (usize, u32)) -> Update {
    Update::new(net.name(net.routing(pi).verts[l as usize]), net.pairs()[pi].id)
}

pub fn brute_force_with(net: &UpdateFlowNetwork, limits: OracleLimits, mode: SearchMode) -> Result<OracleReport, Vec<Violation>> {
    validate_network(net)?;
    let c = classify(net, mode);
    let mut base: Vec<Vec<bool>> = (0..net.pair_count()).map(|pi| vec![false; net.routing(pi).len()]).collect();
    for &(pi, l) in &c.before {
        base[pi][l as usize] = true;
    }
    let mut chk = Checker { net, base, moves: &c.moves, load: vec![0; net.edges().len()] };
    let max_depth = limits.max_depth.unwrap_or(net.vertex_count() * net.pair_count());
    let deadline = limits.max_time.map(|d| Instant::now() + d);
    let words = c.moves.len().div_ceil(64).max(1);
    let n = c.moves.len();

    let start = vec![0u64; words];
    if !chk.consistent(&start) {
        return Ok(OracleReport { verdict: OracleVerdict::Infeasible, states: 0 });
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    seen.insert(start.clone());
    let mut stack: Vec<(Vec<u64>, usize)> = vec![(start, 0)];
    let mut trail: Vec<usize> = Vec::new();
    let mut depth_cut = false;
    let finish = |trail: &[usize]| {
        let seq = c
            .before
            .iter()
            .copied()
            .chain(trail.iter().map(|&i| c.moves[i]))
            .chain(c.after.iter().copied())
            .map(|x| to_update(net, x));
        OracleVerdict::Feasible(Schedule::sequence(seq))
    };
    if n == 0 {
        return Ok(OracleReport { verdict: finish(&[]), states: 1 });
    }
    while let Some(top) = stack.last_mut() {
        let (bits, next) = (top.0.clone(), top.1);
        if next >= n {
            stack.pop();
            trail.pop();
            continue;
        }
        top.1 += 1;
        if bits[next / 64] >> (next % 64) & 1 == 1 {
            continue;
        }
        if trail.len() >= max_depth {
            depth_cut = true;
            continue;
        }
        let mut child = bits;
        child[next / 64] |= 1 << (next % 64);
        if seen.contains(&child) || !chk.consistent(&child) {
            continue;
        }
        seen.insert(child.clone());
        if seen.len() as u64 > limits.max_states {
            return Ok(OracleReport { verdict: OracleVerdict::LimitExceeded(Limit::States), states: seen.len() as u64 });
        }
        if seen.len().is_multiple_of(1024) && deadline.is_some_and(|d| Instant::now() > d) {
            return Ok(OracleReport { verdict: OracleVerdict::LimitExceeded(Limit::Time), states: seen.len() as u64 });
        }
        trail.push(next);
        if trail.len() == n {
            return Ok(OracleReport { verdict: finish(&trail), states: seen.len() as u64 });
        }
        stack.push((child, 0));
    }
    let verdict = if depth_cut { OracleVerdict::LimitExceeded(Limit::Depth) } else { OracleVerdict::Infeasible };
    Ok(OracleReport { verdict, states: seen.len() as u64 })
}

/// Distinct sets of effective updates reachable by consistent single
/// steps, grouped by size `0..=max_depth`. Each set is returned as one
/// order that reaches it. Searches every effective update, without the
/// reduction used by [`brute_force`].
pub fn enumerate_feasible_levels(
    net: &UpdateFlowNetwork,
    max_depth: usize,
    limits: OracleLimits,
) -> Result<Vec<Vec<Vec<Update>>>, Limit> {
    let c = classify(net, SearchMode::Full);
    let base = (0..net.pair_count()).map(|pi| vec![false; net.routing(pi).len()]).collect();
    let mut chk = Checker { net, base, moves: &c.moves, load: vec![0; net.edges().len()] };
    let n = c.moves.len();
    let words = n.div_ceil(64).max(1);
    let deadline = limits.max_time.map(|d| Instant::now() + d);
    let mut total = 1u64;
    let mut level: Vec<(Vec<u64>, Vec<usize>)> = vec![(vec![0; words], Vec::new())];
    let mut out = vec![vec![Vec::new()]];
    for _ in 0..max_depth.min(n) {
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for (bits, seq) in &level {
            for i in 0..n {
                if bits[i / 64] >> (i % 64) & 1 == 1 {
                    continue;
                }
                let mut child = bits.clone();
                child[i / 64] |= 1 << (i % 64);
                if seen.contains(&child) || !chk.consistent(&child) {
                    continue;
                }
                seen.insert(child.clone());
                total += 1;
                if total > limits.max_states {
                    return Err(Limit::States);
                }
                if deadline.is_some_and(|d| Instant::now() > d) {
                    return Err(Limit::Time);
                }
                let mut s = seq.clone();
                s.push(i);
                next.push((child, s));
            }
        }
        out.push(next.iter().map(|(_, s)| s.iter().map(|&i| to_update(net, c.moves[i])).collect()).collect());
        level = next;
        if level.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Consistent update sequences of length exactly `depth`, one per
/// reachable set of resolved updates.
pub fn enumerate_feasible_prefixes(net: &UpdateFlowNetwork, depth: usize, limits: OracleLimits) -> Result<Vec<Vec<Update>>, Limit> {
    let mut levels = enumerate_feasible_levels(net, depth, limits)?;
    Ok(if depth < levels.len() { levels.swap_remove(depth) } else { Vec::new() })
}

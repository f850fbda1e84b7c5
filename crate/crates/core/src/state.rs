//! Network states: which updates have been resolved, the transient path
//! each pair follows, and the consistency rule.

use crate::error::{TransientFailure, Violation};
use crate::model::{PairId, Update, UpdateFlowNetwork, VertexId};

/// Outcome of walking a pair's active edges from the source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransientResult {
    Path(Vec<VertexId>),
    DeadEnd(VertexId),
    Loop(Vec<VertexId>),
}

impl TransientResult {
    pub fn failure(&self, net: &UpdateFlowNetwork) -> Option<TransientFailure> {
        match self {
            TransientResult::Path(_) => None,
            TransientResult::DeadEnd(v) => Some(TransientFailure::DeadEnd(net.name(*v).to_string())),
            TransientResult::Loop(c) => Some(TransientFailure::Loop(c.iter().map(|v| net.name(*v).to_string()).collect())),
        }
    }
}

/// Set of resolved updates over a fixed network.
#[derive(Clone, Debug)]
pub struct NetworkState<'a> {
    net: &'a UpdateFlowNetwork,
    resolved: Vec<Vec<bool>>,
}

impl<'a> NetworkState<'a> {
    /// The state in which nothing has been resolved.
    pub fn initial(net: &'a UpdateFlowNetwork) -> Self {
        let resolved = (0..net.pair_count()).map(|i| vec![false; net.routing(i).len()]).collect();
        NetworkState { net, resolved }
    }

    pub fn network(&self) -> &'a UpdateFlowNetwork {
        self.net
    }

    pub fn is_resolved(&self, u: &Update) -> bool {
        self.net.locate(u).map(|(p, l)| self.resolved[p][l as usize]).unwrap_or(false)
    }

    /// Returns the successor state. Fails on unknown or already resolved updates.
    pub fn resolve_update(&self, u: &Update) -> Result<NetworkState<'a>, Violation> {
        let mut next = self.clone();
        next.resolve_in_place(u)?;
        Ok(next)
    }

    pub fn resolve_in_place(&mut self, u: &Update) -> Result<(), Violation> {
        let (p, l) = self.net.locate(u)?;
        let slot = &mut self.resolved[p][l as usize];
        if *slot {
            return Err(Violation::DuplicateUpdate(u.clone()));
        }
        *slot = true;
        Ok(())
    }

    /// Walks the active edges of `pair` from the source.
    pub fn transient_path(&self, pair: PairId) -> TransientResult {
        transient_walk(self.net, pair.index(), &self.resolved[pair.index()])
    }

    /// Consistency rule: every pair has a transient path and no edge is over capacity.
    ///
    /// Loads are counted only over pairs that do have a transient path.
    pub fn check_consistency(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let mut load = vec![0u128; self.net.edges().len()];
        for (pi, p) in self.net.pairs().iter().enumerate() {
            match self.transient_path(p.id) {
                TransientResult::Path(path) => {
                    for w in path.windows(2) {
                        if let Some(e) = self.net.edge_between(w[0], w[1]) {
                            load[e] += p.demand as u128;
                        }
                    }
                }
                other => out.push(Violation::NoTransientFlow {
                    pair: self.net.pairs()[pi].id,
                    reason: other.failure(self.net).expect("not a path"),
                }),
            }
        }
        for (i, e) in self.net.edges().iter().enumerate() {
            if load[i] > e.capacity as u128 {
                let (tail, head) = self.net.edge_label(i);
                out.push(Violation::CapacityExceeded { tail, head, load: load[i], capacity: e.capacity });
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.check_consistency().is_ok()
    }

    /// All effective updates are resolved.
    pub fn is_final(&self) -> bool {
        (0..self.net.pair_count()).all(|pi| {
            let r = self.net.routing(pi);
            (0..r.len() as u32).all(|l| !r.is_effective(l) || self.resolved[pi][l as usize])
        })
    }

    /// Effective updates not yet resolved, in (pair, vertex) order.
    pub fn pending(&self) -> Vec<Update> {
        let mut out = Vec::new();
        for (pi, p) in self.net.pairs().iter().enumerate() {
            let r = self.net.routing(pi);
            let mut local: Vec<Update> = (0..r.len() as u32)
                .filter(|&l| r.is_effective(l) && !self.resolved[pi][l as usize])
                .map(|l| Update::new(self.net.name(r.verts[l as usize]), p.id))
                .collect();
            local.sort();
            out.extend(local);
        }
        out
    }
}

pub(crate) fn transient_walk(net: &UpdateFlowNetwork, pi: usize, resolved: &[bool]) -> TransientResult {
    let r = net.routing(pi);
    let mut seen = vec![usize::MAX; r.len()];
    let mut path: Vec<u32> = Vec::new();
    let mut cur = r.source;
    loop {
        seen[cur as usize] = path.len();
        path.push(cur);
        if cur == r.terminal {
            return TransientResult::Path(path.iter().map(|&l| r.verts[l as usize]).collect());
        }
        let Some(next) = r.active_next(cur, resolved[cur as usize]) else {
            return TransientResult::DeadEnd(r.verts[cur as usize]);
        };
        if seen[next as usize] != usize::MAX {
            let cycle = path[seen[next as usize]..].iter().map(|&l| r.verts[l as usize]).collect();
            return TransientResult::Loop(cycle);
        }
        cur = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{loop_example, loop_example_update as up};

    fn names(net: &UpdateFlowNetwork, vs: &[VertexId]) -> Vec<String> {
        vs.iter().map(|v| net.name(*v).to_string()).collect()
    }

    #[test]
    fn initial_state_follows_old_path() {
        let net = loop_example();
        let st = NetworkState::initial(&net);
        match st.transient_path(PairId(1)) {
            TransientResult::Path(p) => assert_eq!(names(&net, &p), ["s", "v1", "v2", "t"]),
            other => panic!("{other:?}"),
        }
        assert!(st.is_consistent());
    }

    #[test]
    fn resolving_v2_first_loops() {
        let net = loop_example();
        let st = NetworkState::initial(&net).resolve_update(&up("v2")).unwrap();
        match st.transient_path(PairId(1)) {
            TransientResult::Loop(c) => assert_eq!(names(&net, &c), ["v1", "v2"]),
            other => panic!("{other:?}"),
        }
        let errs = st.check_consistency().unwrap_err();
        assert!(matches!(&errs[0], Violation::NoTransientFlow { reason: TransientFailure::Loop(c), .. } if c == &["v1", "v2"]));
    }

    #[test]
    fn known_good_order_stays_consistent() {
        let net = loop_example();
        let mut st = NetworkState::initial(&net);
        for v in ["v1", "v2", "s"] {
            st = st.resolve_update(&up(v)).unwrap();
            assert!(st.is_consistent(), "after {v}");
        }
        assert!(st.is_final());
        match st.transient_path(PairId(1)) {
            TransientResult::Path(p) => assert_eq!(names(&net, &p), ["s", "v2", "v1", "t"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn double_resolve_is_rejected() {
        let net = loop_example();
        let st = NetworkState::initial(&net).resolve_update(&up("v1")).unwrap();
        assert_eq!(st.resolve_update(&up("v1")).unwrap_err(), Violation::DuplicateUpdate(up("v1")));
    }

    #[test]
    fn dead_end_when_new_only_vertex_deactivated_path() {
        // Old s->a->t, new s->b->t. Resolving a (old-only) removes a's out-edge.
        let net = crate::model::NetworkBuilder::new("s", "t")
            .pair(1, &["s", "a", "t"], &["s", "b", "t"])
            .with_path_edges(1)
            .build();
        let st = NetworkState::initial(&net).resolve_update(&Update::new("a", PairId(1))).unwrap();
        assert_eq!(st.transient_path(PairId(1)), TransientResult::DeadEnd(net.vertex("a").unwrap()));
    }
}

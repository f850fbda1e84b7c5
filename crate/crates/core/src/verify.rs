//! Schedule verification.
//!
//! [`verify_schedule`] keeps every pair's transient path in a treap and
//! only re-walks the parts a round actually changes, so a whole schedule
//! is checked in time roughly proportional to the instance plus the number
//! of updates. [`verify_schedule_naive`] recomputes everything from scratch
//! after each round and serves as the reference implementation.

use crate::error::{ScheduleRejection, Violation};
use crate::model::{validate_network, Schedule, UpdateFlowNetwork};
use crate::path_seq::{PathSeq, NIL};
use crate::state::NetworkState;

pub fn verify_schedule(net: &UpdateFlowNetwork, schedule: &Schedule) -> Result<(), ScheduleRejection> {
    validate_network(net).map_err(|violations| ScheduleRejection { round: 0, violations })?;
    let mut v = Incremental::new(net);
    for (ri, round) in schedule.rounds().iter().enumerate() {
        v.apply_round(ri + 1, round)?;
    }
    v.finish(schedule.len())
}

/// Reference verifier: replays every round on a [`NetworkState`] and runs
/// the full consistency check after each one.
pub fn verify_schedule_naive(net: &UpdateFlowNetwork, schedule: &Schedule) -> Result<(), ScheduleRejection> {
    validate_network(net).map_err(|violations| ScheduleRejection { round: 0, violations })?;
    let mut st = NetworkState::initial(net);
    for (ri, round) in schedule.rounds().iter().enumerate() {
        let round_no = ri + 1;
        let reject = |violations| ScheduleRejection { round: round_no, violations };
        if round.is_empty() {
            return Err(reject(vec![Violation::MalformedSchedule("empty round".into())]));
        }
        for u in round {
            st.resolve_in_place(u).map_err(|v| reject(vec![v]))?;
        }
        st.check_consistency().map_err(reject)?;
    }
    let pending = st.pending();
    if pending.is_empty() {
        Ok(())
    } else {
        Err(ScheduleRejection { round: schedule.len(), violations: vec![Violation::IncompleteSchedule(pending)] })
    }
}

struct Track {
    resolved: Vec<bool>,
    touched: Vec<bool>,
    on_path: Vec<bool>,
    scratch: Vec<bool>,
    seq: PathSeq,
    root: u32,
}

struct Incremental<'a> {
    net: &'a UpdateFlowNetwork,
    tracks: Vec<Track>,
    load: Vec<u128>,
}

enum Piece {
    Kept { seg: usize },
    Fresh(Vec<u32>),
}

impl<'a> Incremental<'a> {
    fn new(net: &'a UpdateFlowNetwork) -> Self {
        let mut load = vec![0u128; net.edges().len()];
        let tracks = (0..net.pair_count())
            .map(|pi| {
                let r = net.routing(pi);
                let p = &net.pairs()[pi];
                let locals: Vec<u32> = p.old_path.iter().map(|v| r.local[v]).collect();
                let mut on_path = vec![false; r.len()];
                for &l in &locals {
                    on_path[l as usize] = true;
                    if let Some(e) = r.old_edge[l as usize] {
                        load[e] += p.demand as u128;
                    }
                }
                let mut seq = PathSeq::new(r.len());
                let root = seq.build(&locals);
                Track {
                    resolved: vec![false; r.len()],
                    touched: vec![false; r.len()],
                    on_path,
                    scratch: vec![false; r.len()],
                    seq,
                    root,
                }
            })
            .collect();
        Incremental { net, tracks, load }
    }

    fn apply_round(&mut self, round_no: usize, round: &[crate::model::Update]) -> Result<(), ScheduleRejection> {
        let reject = |violations| ScheduleRejection { round: round_no, violations };
        if round.is_empty() {
            return Err(reject(vec![Violation::MalformedSchedule("empty round".into())]));
        }
        let mut touched_by_pair: Vec<Vec<u32>> = vec![Vec::new(); self.tracks.len()];
        let mut err = None;
        for u in round {
            let (pi, l) = match self.net.locate(u) {
                Ok(x) => x,
                Err(v) => {
                    err = Some(v);
                    break;
                }
            };
            let tr = &mut self.tracks[pi];
            if tr.resolved[l as usize] {
                err = Some(Violation::DuplicateUpdate(u.clone()));
                break;
            }
            tr.resolved[l as usize] = true;
            tr.touched[l as usize] = true;
            touched_by_pair[pi].push(l);
        }
        if let Some(v) = err {
            return Err(reject(vec![v]));
        }

        let mut increased: Vec<usize> = Vec::new();
        let mut failed = false;
        for (pi, touched) in touched_by_pair.iter().enumerate() {
            if touched.is_empty() {
                continue;
            }
            if self.splice(pi, touched, &mut increased).is_err() {
                failed = true;
            }
        }
        for (pi, touched) in touched_by_pair.iter().enumerate() {
            for &l in touched {
                self.tracks[pi].touched[l as usize] = false;
            }
        }
        let over = increased.iter().any(|&e| self.load[e] > self.net.edge(e).capacity as u128);
        if failed || over {
            // Produce the exact violation list from the authoritative state.
            let mut st = NetworkState::initial(self.net);
            for (pi, tr) in self.tracks.iter().enumerate() {
                let r = self.net.routing(pi);
                for (l, &res) in tr.resolved.iter().enumerate() {
                    if res {
                        let u = crate::model::Update::new(self.net.name(r.verts[l]), self.net.pairs()[pi].id);
                        st.resolve_in_place(&u).expect("replaying resolved set");
                    }
                }
            }
            let violations = st.check_consistency().err().unwrap_or_else(|| {
                vec![Violation::MalformedSchedule("internal verifier disagreement".into())]
            });
            return Err(reject(violations));
        }
        Ok(())
    }

    /// Rewrites pair `pi`'s path after the updates `touched` were resolved.
    fn splice(&mut self, pi: usize, touched: &[u32], increased: &mut Vec<usize>) -> Result<(), ()> {
        let r = self.net.routing(pi);
        let demand = self.net.pairs()[pi].demand as u128;
        let tr = &mut self.tracks[pi];

        let mut cs: Vec<(usize, u32)> = touched
            .iter()
            .filter(|&&l| tr.on_path[l as usize] && r.is_effective(l))
            .map(|&l| (tr.seq.position(l), l))
            .collect();
        if cs.is_empty() {
            return Ok(());
        }
        cs.sort_unstable();
        let seg_start = |j: usize| if j == 0 { 0 } else { cs[j - 1].0 + 1 };
        let nseg = cs.len() + 1;

        let mut used: Vec<Option<usize>> = vec![None; nseg];
        let mut pieces: Vec<Piece> = Vec::new();
        let mut marked: Vec<u32> = Vec::new();
        let mut cur = r.source;
        let outcome = loop {
            let q = tr.seq.position(cur);
            let j = cs.partition_point(|&(p, _)| p < q);
            if used[j].is_some() {
                break Err(());
            }
            used[j] = Some(q);
            pieces.push(Piece::Kept { seg: j });
            if j == cs.len() {
                break Ok(());
            }
            let c = cs[j].1;
            let mut fresh = Vec::new();
            let mut x = r.new_next[c as usize];
            let stop = loop {
                let Some(v) = x else { break Err(()) };
                if tr.on_path[v as usize] {
                    break Ok(v);
                }
                if tr.scratch[v as usize] {
                    break Err(());
                }
                tr.scratch[v as usize] = true;
                marked.push(v);
                fresh.push(v);
                x = r.active_next(v, tr.resolved[v as usize]);
            };
            match stop {
                Ok(v) => {
                    pieces.push(Piece::Fresh(fresh));
                    cur = v;
                }
                Err(()) => break Err(()),
            }
        };
        for v in marked {
            tr.scratch[v as usize] = false;
        }
        outcome?;

        // Cut the old path into its segments.
        let mut segs = vec![NIL; nseg];
        let mut rest = tr.root;
        for j in (0..nseg).rev() {
            let (a, b) = tr.seq.split(rest, seg_start(j));
            segs[j] = b;
            rest = a;
        }

        let mut removed: Vec<u32> = Vec::new();
        let mut kept = vec![NIL; nseg];
        for j in 0..nseg {
            match used[j] {
                Some(q) => {
                    let (a, b) = tr.seq.split(segs[j], q - seg_start(j));
                    tr.seq.collect(a, &mut removed);
                    kept[j] = b;
                }
                None => tr.seq.collect(segs[j], &mut removed),
            }
        }
        for &v in &removed {
            tr.on_path[v as usize] = false;
            // Out-edge the vertex had before this round.
            let before = tr.resolved[v as usize] && !tr.touched[v as usize];
            if let Some(e) = r.active_edge(v, before) {
                self.load[e] -= demand;
            }
        }
        let mut root = NIL;
        for piece in &pieces {
            match piece {
                Piece::Kept { seg, .. } => {
                    if *seg < cs.len() {
                        let c = cs[*seg].1 as usize;
                        if let Some(e) = r.old_edge[c] {
                            self.load[e] -= demand;
                        }
                        if let Some(e) = r.new_edge[c] {
                            self.load[e] += demand;
                            increased.push(e);
                        }
                    }
                    root = tr.seq.merge(root, kept[*seg]);
                }
                Piece::Fresh(vs) => {
                    for &v in vs {
                        tr.on_path[v as usize] = true;
                        if let Some(e) = r.active_edge(v, tr.resolved[v as usize]) {
                            self.load[e] += demand;
                            increased.push(e);
                        }
                        let s = tr.seq.singleton(v);
                        root = tr.seq.merge(root, s);
                    }
                }
            }
        }
        tr.root = root;
        Ok(())
    }

    fn finish(self, rounds: usize) -> Result<(), ScheduleRejection> {
        let mut pending = Vec::new();
        for (pi, tr) in self.tracks.iter().enumerate() {
            let r = self.net.routing(pi);
            let mut local: Vec<crate::model::Update> = (0..r.len() as u32)
                .filter(|&l| r.is_effective(l) && !tr.resolved[l as usize])
                .map(|l| crate::model::Update::new(self.net.name(r.verts[l as usize]), self.net.pairs()[pi].id))
                .collect();
            local.sort();
            pending.extend(local);
        }
        if pending.is_empty() {
            Ok(())
        } else {
            Err(ScheduleRejection { round: rounds, violations: vec![Violation::IncompleteSchedule(pending)] })
        }
    }
}

/// Edge ids of all paths currently tracked; used by tests to compare
/// incremental loads against a recount.
#[cfg(test)]
fn tracked_paths(v: &Incremental<'_>) -> Vec<Vec<u32>> {
    v.tracks
        .iter()
        .map(|tr| {
            let mut out = Vec::new();
            tr.seq.collect(tr.root, &mut out);
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, loop_example, loop_example_update as up};
    use crate::model::{PairId, Update};
    use crate::state::TransientResult;

    #[test]
    fn loop_example_orders() {
        let net = loop_example();
        let good = Schedule::sequence(["v1", "v2", "s"].map(up));
        assert_eq!(verify_schedule(&net, &good), Ok(()));
        let bad = Schedule::sequence(["v2", "v1", "s"].map(up));
        let rej = verify_schedule(&net, &bad).unwrap_err();
        assert_eq!(rej.round, 1);
        assert_eq!(rej, verify_schedule_naive(&net, &bad).unwrap_err());
    }

    #[test]
    fn single_round_with_everything_is_fine_for_loop_example() {
        // All at once: the final state is the new path, which is consistent.
        let net = loop_example();
        let sched = Schedule::new(vec![["s", "v1", "v2"].map(up).to_vec()]);
        assert_eq!(verify_schedule(&net, &sched), Ok(()));
    }

    #[test]
    fn incomplete_and_duplicate() {
        let net = loop_example();
        let rej = verify_schedule(&net, &Schedule::sequence(["v1"].map(up))).unwrap_err();
        assert_eq!(rej.round, 1);
        assert!(matches!(&rej.violations[0], Violation::IncompleteSchedule(p) if p.len() == 2));
        let rej = verify_schedule(&net, &Schedule::sequence(["v1", "v1"].map(up))).unwrap_err();
        assert_eq!(rej, ScheduleRejection { round: 2, violations: vec![Violation::DuplicateUpdate(up("v1"))] });
    }

    #[test]
    fn unknown_vertex_is_malformed() {
        let net = loop_example();
        let rej = verify_schedule(&net, &Schedule::sequence([Update::new("zz", PairId(1))])).unwrap_err();
        assert!(matches!(rej.violations[0], Violation::MalformedSchedule(_)));
        let rej = verify_schedule(&net, &Schedule::sequence([Update::new("s", PairId(7))])).unwrap_err();
        assert!(matches!(rej.violations[0], Violation::MalformedSchedule(_)));
    }

    #[test]
    fn non_effective_updates_are_accepted() {
        // t has no out-edge on either path; resolving it changes nothing.
        let net = loop_example();
        let sched = Schedule::sequence(["t", "v1", "v2", "s"].map(up));
        assert_eq!(verify_schedule(&net, &sched), Ok(()));
    }

    #[test]
    fn lane_swap_order_matters() {
        let net = fixtures::lane_swap();
        let p1 = |v: &str| Update::new(v, PairId(1));
        let p2 = |v: &str| Update::new(v, PairId(2));
        let good = Schedule::new(vec![vec![p1("a")], vec![p1("x"), p1("y"), p2("x"), p2("y")], vec![p2("b")]]);
        assert_eq!(verify_schedule(&net, &good), Ok(()));
        assert_eq!(verify_schedule_naive(&net, &good), Ok(()));
        let bad = Schedule::new(vec![vec![p2("x"), p2("y")], vec![p2("b")], vec![p1("a")], vec![p1("x"), p1("y")]]);
        let a = verify_schedule(&net, &bad).unwrap_err();
        assert_eq!(a, verify_schedule_naive(&net, &bad).unwrap_err());
        assert_eq!(a.round, 2);
        assert!(matches!(&a.violations[0], Violation::CapacityExceeded { tail, .. } if tail == "x"));
    }

    #[test]
    fn tracked_path_matches_walk_after_rounds() {
        let net = fixtures::lane_swap();
        let mut inc = Incremental::new(&net);
        let p1 = |v: &str| Update::new(v, PairId(1));
        inc.apply_round(1, &[p1("a")]).unwrap();
        let paths = tracked_paths(&inc);
        let r = net.routing(0);
        let names: Vec<&str> = paths[0].iter().map(|&l| net.name(r.verts[l as usize])).collect();
        assert_eq!(names, ["s", "a", "t"]);
        let st = NetworkState::initial(&net).resolve_update(&p1("a")).unwrap();
        assert!(matches!(st.transient_path(PairId(1)), TransientResult::Path(p) if p.len() == 3));
    }
}

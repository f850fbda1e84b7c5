//! Two-flow reduction from 3-SAT on general (cyclic) graphs.
//!
//! A blue pair `B` carries one gadget per variable and a red pair `R` one
//! gadget per clause; all demands are 1. Every clause gadget has vertices
//! `u{i}_1 .. u{i}_8`, every variable gadget `v{j}_1 .. v{j}_4`, plus the
//! blocking vertices `w1, w2, z1, z2`. The instance is feasible iff the
//! formula is satisfiable.
//!
//! Capacities are 1 except where both old paths run over the same edge
//! (a literal chain of `B` entering the next clause over `R`'s connecting
//! edge); such an edge gets the larger of its old and new load.

use std::collections::HashMap;

use super::{Assignment, CnfFormula, GadgetKind, GadgetMeta, GenError, Literal};
use crate::model::{NetworkBuilder, PairId, Schedule, Update, UpdateFlowNetwork};
use crate::state::NetworkState;
use crate::verify::verify_schedule;

pub const BLUE: PairId = PairId(1);
pub const RED: PairId = PairId(2);

fn u(i: usize, j: usize) -> String {
    format!("u{i}_{j}")
}

fn v(j: usize, k: usize) -> String {
    format!("v{j}_{k}")
}

/// 1-based position of `lit` in clause `i`.
fn position(f: &CnfFormula, i: usize, lit: Literal) -> usize {
    f.clauses()[i - 1].iter().position(|l| *l == lit).expect("literal occurs in clause") + 1
}

/// The chain of `B`'s old path through the clauses containing `lit`.
fn literal_chain(f: &CnfFormula, lit: Literal) -> Vec<String> {
    f.occurrences(lit)
        .into_iter()
        .flat_map(|i| {
            let p = position(f, i, lit);
            [u(i, p), u(i, p + 5)]
        })
        .collect()
}

struct Paths {
    b_old: Vec<String>,
    b_new: Vec<String>,
    r_old: Vec<String>,
    r_new: Vec<String>,
}

fn paths(f: &CnfFormula) -> Paths {
    let (n, m) = (f.vars(), f.clauses().len());
    let s = |x: &str| x.to_string();

    let mut r_old = vec![s("s"), s("z1")];
    for j in 1..=n {
        r_old.extend([v(j, 3), v(j, 2)]);
    }
    r_old.push(s("z2"));
    for i in 1..=m {
        r_old.extend((1..=8).map(|k| u(i, k)));
    }
    r_old.push(s("t"));

    let mut r_new = vec![s("s"), s("z1"), s("w1"), s("w2"), s("z2")];
    for i in 1..=m {
        // Skip over each literal position; positions beyond the clause
        // width have no skip, so R must run along its old edges there.
        let width = f.clauses()[i - 1].len();
        r_new.push(u(i, 1));
        for h in 1..=width {
            r_new.push(u(i, h + 5));
            if h < width {
                r_new.push(u(i, h + 1));
            }
        }
        r_new.extend((width + 6..=8).map(|k| u(i, k)));
    }
    r_new.push(s("t"));

    let mut b_old = vec![s("s"), s("w1"), s("w2")];
    for j in 1..=n {
        b_old.push(v(j, 1));
        b_old.extend(literal_chain(f, Literal::pos(j)));
        b_old.extend([v(j, 2), v(j, 3)]);
        b_old.extend(literal_chain(f, Literal::neg(j)));
        b_old.push(v(j, 4));
    }
    b_old.push(s("t"));

    let mut b_new = vec![s("s"), s("w1")];
    for i in 1..=m {
        b_new.extend([u(i, 4), u(i, 5)]);
    }
    b_new.push(s("w2"));
    for j in 1..=n {
        b_new.extend([v(j, 1), v(j, 3), v(j, 2), v(j, 4)]);
    }
    b_new.push(s("t"));

    Paths { b_old, b_new, r_old, r_new }
}

/// Edges of both families with capacity `max(1, old load, new load)`.
fn add_edges(b: &mut NetworkBuilder, p: &Paths) {
    let mut old: HashMap<(String, String), u64> = HashMap::new();
    let mut new: HashMap<(String, String), u64> = HashMap::new();
    for (path, is_old) in [(&p.b_old, true), (&p.r_old, true), (&p.b_new, false), (&p.r_new, false)] {
        let load = if is_old { &mut old } else { &mut new };
        for w in path.windows(2) {
            *load.entry((w[0].clone(), w[1].clone())).or_default() += 1;
        }
    }
    let mut keys: Vec<&(String, String)> = old.keys().chain(new.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        let cap = 1.max(old.get(k).copied().unwrap_or(0)).max(new.get(k).copied().unwrap_or(0));
        b.add_edge(&k.0, &k.1, cap);
    }
}

pub fn gen_2flow_sat(f: &CnfFormula) -> (UpdateFlowNetwork, GadgetMeta) {
    let p = paths(f);
    let mut b = NetworkBuilder::new("s", "t");
    add_edges(&mut b, &p);
    let blue = b.add_pair(1, p.b_old.clone(), p.b_new.clone());
    let red = b.add_pair(1, p.r_old.clone(), p.r_new.clone());
    debug_assert_eq!((blue, red), (BLUE, RED));

    let mut meta = GadgetMeta::new(GadgetKind::TwoFlow, f.clone());
    meta.pairs.insert("B".into(), BLUE);
    meta.pairs.insert("R".into(), RED);
    for name in ["s", "t", "w1", "w2", "z1", "z2"] {
        meta.vertices.insert(name.into(), name.into());
    }
    for i in 1..=f.clauses().len() {
        for k in 1..=8 {
            meta.vertices.insert(format!("u^{i}_{k}"), u(i, k));
        }
    }
    for j in 1..=f.vars() {
        for k in 1..=4 {
            meta.vertices.insert(format!("v^{j}_{k}"), v(j, k));
        }
    }
    (b.build(), meta)
}

/// Feasible schedule for the gadget of `f`, built from a satisfying
/// assignment.
///
/// Follows the ten phases of the satisfiable direction of the reduction;
/// inside a phase, updates are taken greedily (the first one that keeps
/// the state consistent). Updates that change nothing are left out. The
/// result has one update per round and is verified before it is returned.
pub fn schedule_2flow(f: &CnfFormula, a: &Assignment) -> Result<Schedule, GenError> {
    if a.len() != f.vars() {
        return Err(GenError::AssignmentLength { expected: f.vars(), got: a.len() });
    }
    if !f.is_satisfied_by(a) {
        return Err(GenError::NotSatisfying);
    }
    let (net, _) = gen_2flow_sat(f);
    let p = paths(f);
    let (n, m) = (f.vars(), f.clauses().len());
    let bu = |x: String| Update::new(x, BLUE);
    let ru = |x: String| Update::new(x, RED);
    let interior = |path: &[String], from: &str, to: &str| -> Vec<String> {
        let a = path.iter().position(|x| x == from).expect("vertex on path");
        let b = path.iter().position(|x| x == to).expect("vertex on path");
        path[a + 1..b].to_vec()
    };

    let mut phases: Vec<Vec<Update>> = Vec::new();
    phases.push((1..=n).map(|j| bu(v(j, if a.value(j) { 1 } else { 2 }))).collect());
    phases.push(
        (1..=m)
            .map(|i| {
                let h = f.clauses()[i - 1].iter().position(|l| a.value(l.var) == l.positive).expect("clause satisfied");
                ru(u(i, h + 1))
            })
            .collect(),
    );
    phases.push(interior(&p.b_new, "w1", "w2").into_iter().map(bu).collect());
    phases.push(vec![bu("w1".into())]);
    phases.push(vec![ru("w1".into()), ru("w2".into())]);
    phases.push(vec![ru("z1".into())]);
    phases.push(
        (1..=n)
            .flat_map(|j| {
                if a.value(j) {
                    let mut x: Vec<Update> = interior(&p.b_old, &v(j, 1), &v(j, 2)).into_iter().map(bu).collect();
                    x.push(bu(v(j, 2)));
                    x
                } else {
                    let mut x = vec![bu(v(j, 3))];
                    x.extend(interior(&p.b_old, &v(j, 3), &v(j, 4)).into_iter().map(bu));
                    x
                }
            })
            .collect(),
    );
    phases.push(net.effective_updates().into_iter().filter(|x| x.pair == BLUE).collect());
    let mut nine: Vec<Update> = vec![ru(v(1, 3))];
    nine.extend(interior(&p.r_old, &v(1, 3), &v(n, 2)).into_iter().map(ru));
    nine.push(ru(v(n, 2)));
    for i in 1..=m {
        nine.extend((1..=3).map(|k| ru(u(i, k))));
    }
    phases.push(nine);
    phases.push(net.effective_updates().into_iter().filter(|x| x.pair == RED).collect());

    let effective: std::collections::HashSet<Update> = net.effective_updates().into_iter().collect();
    let mut st = NetworkState::initial(&net);
    let mut order = Vec::new();
    for (k, phase) in phases.into_iter().enumerate() {
        let mut todo: Vec<Update> = phase.into_iter().filter(|x| effective.contains(x) && !st.is_resolved(x)).collect();
        todo.dedup();
        while !todo.is_empty() {
            let pick = todo
                .iter()
                .position(|x| st.resolve_update(x).map(|s| s.is_consistent()).unwrap_or(false))
                .ok_or_else(|| GenError::Internal(format!("phase {} is stuck before {}", k + 1, todo[0])))?;
            let x = todo.remove(pick);
            st.resolve_in_place(&x).expect("fresh update");
            order.push(x);
        }
    }
    let schedule = Schedule::sequence(order);
    verify_schedule(&net, &schedule).map_err(|e| GenError::Internal(e.to_string()))?;
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_network;
    use crate::oracle::{brute_force, OracleLimits, OracleVerdict};

    fn f(vars: usize, clauses: &[&[i64]]) -> CnfFormula {
        CnfFormula::from_ints(vars, clauses).unwrap()
    }

    #[test]
    fn sizes_and_validity() {
        let formula = f(3, &[&[1, 2, 3], &[-1, -2, 3]]);
        let (net, meta) = gen_2flow_sat(&formula);
        assert_eq!(validate_network(&net), Ok(()));
        assert_eq!(net.vertex_count(), 8 * 2 + 4 * 3 + 6);
        assert_eq!(net.pair_count(), 2);
        assert_eq!(meta.vertices["u^2_5"], "u2_5");
        assert!(net.edges().iter().all(|e| e.capacity == 1));
    }

    #[test]
    fn shared_connector_edge_gets_capacity_two() {
        // x3 sits at position 3 of clause 1 and position 1 of clause 2, so
        // B's chain runs u1_8 -> u2_1, which R also uses.
        let (net, _) = gen_2flow_sat(&f(3, &[&[1, 2, 3], &[3]]));
        assert_eq!(validate_network(&net), Ok(()));
        let e = net.edge_between(net.vertex("u1_8").unwrap(), net.vertex("u2_1").unwrap()).unwrap();
        assert_eq!(net.edge(e).capacity, 2);
        assert_eq!(net.edges().iter().filter(|e| e.capacity != 1).count(), 1);
    }

    #[test]
    fn witness_schedules_verify() {
        let formula = f(3, &[&[1, 2, 3], &[-1, -2, 3], &[-3]]);
        let a = formula.solve_brute_force().unwrap();
        let s = schedule_2flow(&formula, &a).unwrap();
        let (net, _) = gen_2flow_sat(&formula);
        assert_eq!(verify_schedule(&net, &s), Ok(()));
    }

    #[test]
    fn unsatisfying_assignment_is_rejected() {
        let formula = f(1, &[&[1]]);
        assert!(matches!(schedule_2flow(&formula, &Assignment::new(vec![false])), Err(GenError::NotSatisfying)));
        assert!(matches!(schedule_2flow(&formula, &Assignment::new(vec![])), Err(GenError::AssignmentLength { .. })));
    }

    #[test]
    fn oracle_agrees_on_tiny_formulas() {
        let sat = gen_2flow_sat(&f(1, &[&[1]])).0;
        assert!(brute_force(&sat, OracleLimits::default()).unwrap().verdict.is_feasible());
        let unsat = gen_2flow_sat(&f(1, &[&[1], &[-1]])).0;
        assert_eq!(brute_force(&unsat, OracleLimits::default()).unwrap().verdict, OracleVerdict::Infeasible);
    }
}

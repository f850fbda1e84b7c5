//! Reduction from 3-SAT to rerouting many flows on an acyclic graph.
//!
//! Pairs, in id order: selectors `S_1..S_n`, clauses `C_1..C_m`, the
//! validator `V` (demand `m`), then literals `L_1..L_n` and
//! `Lbar_1..Lbar_n`. Every pair's old and new path share only `s` and
//! `t`, so each pair is a single block and "switching a pair" means
//! resolving its update at `s`.
//!
//! Path lengths count edges. Vertex `p(i)` of a path is its `i`-th vertex,
//! `p(1) = s`. The positional map of every path is stored in the
//! metadata under keys like `S_1^u(4)`.

use std::collections::{BTreeMap, HashMap};

use super::{Assignment, CnfFormula, GadgetKind, GadgetMeta, GenError, Literal};
use crate::model::{NetworkBuilder, Schedule, Update, UpdateFlowNetwork};
use crate::verify::verify_schedule;

struct Flow {
    role: String,
    demand: u64,
    old: Vec<String>,
    new: Vec<String>,
}

fn literal_role(lit: Literal) -> String {
    if lit.positive {
        format!("L_{}", lit.var)
    } else {
        format!("Lbar_{}", lit.var)
    }
}

pub fn gen_dag_sat(f: &CnfFormula) -> (UpdateFlowNetwork, GadgetMeta) {
    let (n, m) = (f.vars(), f.clauses().len());
    let s = || "s".to_string();
    let t = || "t".to_string();
    let mut flows: Vec<Flow> = Vec::new();
    // Capacities keyed by edge; an edge named by several rules gets the largest.
    let mut cap: HashMap<(String, String), u64> = HashMap::new();
    // Literal paths only set the capacity of edges they introduce.
    let mut set_caps = |path: &[String], caps: &[u64], fresh_only: bool| {
        for (w, &c) in path.windows(2).zip(caps) {
            let key = (w[0].clone(), w[1].clone());
            if fresh_only && cap.contains_key(&key) {
                continue;
            }
            let e = cap.entry(key).or_insert(0);
            *e = (*e).max(c);
        }
    };
    let mu = m as u64;

    for i in 1..=n {
        let old = vec![s(), format!("So{i}_2"), format!("So{i}_3"), t()];
        let new = vec![s(), format!("Su{i}_2"), format!("Su{i}_3"), format!("Su{i}_4"), format!("Su{i}_5"), t()];
        set_caps(&old, &[1, 2, 1], false);
        set_caps(&new, &[1, 2, 1, mu, 1], false);
        flows.push(Flow { role: format!("S_{i}"), demand: 1, old, new });
    }
    for k in 1..=m {
        let old = vec![s(), format!("Co{k}_2"), "Co_3".into(), "Co_4".into(), format!("Co{k}_5"), t()];
        let new = vec![s(), format!("Cu{k}_2"), format!("Cu{k}_3"), t()];
        set_caps(&old, &[1, 1, mu, 1, 1], false);
        // The middle edge carries every literal of the clause; a clause can
        // only switch once one of them has left.
        let width = f.clauses()[k - 1].len() as u64;
        set_caps(&new, &[3, width, 3], false);
        flows.push(Flow { role: format!("C_{k}"), demand: 1, old, new });
    }
    {
        let mut old = vec![s()];
        for i in 1..=n {
            old.extend([format!("Su{i}_4"), format!("Su{i}_5")]);
        }
        old.push(t());
        let new = vec![s(), "Co_3".into(), "Co_4".into(), t()];
        set_caps(&old, &vec![mu; old.len() - 1], false);
        set_caps(&new, &[mu, mu, mu], false);
        flows.push(Flow { role: "V".into(), demand: mu, old, new });
    }
    for positive in [true, false] {
        for i in 1..=n {
            let lit = Literal { var: i, positive };
            let tag = if positive { "Lp" } else { "Ln" };
            let mut old = vec![s(), format!("{tag}{i}_2")];
            for k in f.occurrences(lit) {
                old.extend([format!("Cu{k}_2"), format!("Cu{k}_3")]);
            }
            old.extend([format!("Su{i}_2"), format!("Su{i}_3"), format!("{tag}{i}_end"), t()]);
            let new = vec![s(), format!("So{i}_2"), format!("So{i}_3"), format!("{tag}{i}_4"), format!("{tag}{i}_5"), t()];
            set_caps(&old, &vec![3; old.len() - 1], true);
            set_caps(&new, &vec![3; new.len() - 1], true);
            flows.push(Flow { role: literal_role(lit), demand: 1, old, new });
        }
    }

    // Shared edges whose rules above disagree are lifted to the larger of
    // their old and new load so that both families stay valid.
    let mut old_load: HashMap<(String, String), u64> = HashMap::new();
    let mut new_load: HashMap<(String, String), u64> = HashMap::new();
    for fl in &flows {
        for w in fl.old.windows(2) {
            *old_load.entry((w[0].clone(), w[1].clone())).or_default() += fl.demand;
        }
        for w in fl.new.windows(2) {
            *new_load.entry((w[0].clone(), w[1].clone())).or_default() += fl.demand;
        }
    }
    let mut edges: Vec<(&(String, String), u64)> = cap.iter().map(|(k, &c)| (k, c)).collect();
    edges.sort();
    let mut b = NetworkBuilder::new("s", "t");
    for (k, c) in edges {
        let c = c.max(old_load.get(k).copied().unwrap_or(0)).max(new_load.get(k).copied().unwrap_or(0));
        b.add_edge(&k.0, &k.1, c);
    }
    let mut meta = GadgetMeta::new(GadgetKind::Dag, f.clone());
    for fl in flows {
        for (p, x) in fl.old.iter().enumerate() {
            meta.vertices.insert(format!("{}^o({})", fl.role, p + 1), x.clone());
        }
        for (p, x) in fl.new.iter().enumerate() {
            meta.vertices.insert(format!("{}^u({})", fl.role, p + 1), x.clone());
        }
        let id = b.add_pair(fl.demand, fl.old, fl.new);
        meta.pairs.insert(fl.role, id);
    }
    (b.build(), meta)
}

/// Round in which each pair of a DAG gadget switches at `s`, by role.
pub fn switch_rounds(meta: &GadgetMeta, sched: &Schedule) -> BTreeMap<String, Option<usize>> {
    meta.pairs.iter().map(|(role, &id)| (role.clone(), sched.round_of(&Update::new("s", id)))).collect()
}

/// Reads the assignment off a feasible schedule of the DAG gadget.
///
/// `X_j = 1` iff `L_j` switches strictly before `S_j`, `0` iff `Lbar_j`
/// does. If neither does, the literal switched together with `S_j` is
/// taken (no clause depended on it). The schedule is verified first.
pub fn decode_assignment(meta: &GadgetMeta, sched: &Schedule) -> Result<Assignment, GenError> {
    if meta.kind != GadgetKind::Dag {
        return Err(GenError::WrongGadget { expected: GadgetKind::Dag, found: meta.kind });
    }
    let (net, _) = gen_dag_sat(&meta.formula);
    verify_schedule(&net, sched).map_err(|e| GenError::MalformedSchedule(format!("schedule is not feasible: {e}")))?;
    let rounds = switch_rounds(meta, sched);
    let get = |role: String| -> Result<usize, GenError> {
        rounds
            .get(&role)
            .copied()
            .flatten()
            .ok_or_else(|| GenError::MalformedSchedule(format!("pair {role} never switches")))
    };
    let mut values = Vec::with_capacity(meta.formula.vars());
    for j in 1..=meta.formula.vars() {
        let sel = get(format!("S_{j}"))?;
        let pos = get(format!("L_{j}"))?;
        let neg = get(format!("Lbar_{j}"))?;
        let value = match (pos < sel, neg < sel) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => {
                return Err(GenError::MalformedSchedule(format!("both literal pairs of x{j} switch before S_{j}")));
            }
            (false, false) if pos == sel => true,
            (false, false) if neg == sel => false,
            (false, false) => {
                return Err(GenError::MalformedSchedule(format!("no literal pair of x{j} switches before S_{j}")));
            }
        };
        values.push(value);
    }
    let a = Assignment::new(values);
    if !meta.formula.is_satisfied_by(&a) {
        return Err(GenError::Internal("decoded assignment does not satisfy the formula".into()));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::topological_order;
    use crate::model::validate_network;
    use crate::oracle::{brute_force, OracleLimits, OracleVerdict};

    fn f(vars: usize, clauses: &[&[i64]]) -> CnfFormula {
        CnfFormula::from_ints(vars, clauses).unwrap()
    }

    #[test]
    fn single_literal_formula() {
        let (net, meta) = gen_dag_sat(&f(1, &[&[1]]));
        assert_eq!(validate_network(&net), Ok(()));
        assert_eq!(net.pair_count(), 5);
        assert!(topological_order(&net).is_ok());
        let v = |k: &str| net.vertex(&meta.vertices[k]).unwrap();
        let cap = |a: &str, b: &str| net.edge(net.edge_between(v(a), v(b)).unwrap()).capacity;
        assert_eq!(cap("S_1^o(2)", "S_1^o(3)"), 2);
        assert_eq!(cap("S_1^u(4)", "S_1^u(5)"), 1);
        assert_eq!(meta.vertices["V^u(2)"], meta.vertices["C_1^o(3)"]);
        assert_eq!(meta.vertices["L_1^o(3)"], meta.vertices["C_1^u(2)"]);
        assert_eq!(meta.vertices["L_1^o(5)"], meta.vertices["S_1^u(2)"]);
        assert_eq!(meta.vertices["Lbar_1^o(3)"], meta.vertices["S_1^u(2)"]);
        assert_eq!(meta.vertices["L_1^u(2)"], meta.vertices["S_1^o(2)"]);
    }

    #[test]
    fn decode_from_oracle() {
        for (formula, expect) in [(f(1, &[&[1]]), true), (f(1, &[&[-1]]), false)] {
            let (net, meta) = gen_dag_sat(&formula);
            let rep = brute_force(&net, OracleLimits::default()).unwrap();
            let OracleVerdict::Feasible(s) = rep.verdict else { panic!("{:?}", rep.verdict) };
            assert_eq!(decode_assignment(&meta, &s).unwrap().values(), &[expect]);
        }
    }

    #[test]
    fn contradiction_is_infeasible() {
        let (net, _) = gen_dag_sat(&f(1, &[&[1], &[-1]]));
        assert_eq!(brute_force(&net, OracleLimits::default()).unwrap().verdict, OracleVerdict::Infeasible);
    }

    #[test]
    fn unverified_schedule_is_refused() {
        let (_, meta) = gen_dag_sat(&f(1, &[&[1]]));
        assert!(matches!(decode_assignment(&meta, &Schedule::default()), Err(GenError::MalformedSchedule(_))));
    }
}

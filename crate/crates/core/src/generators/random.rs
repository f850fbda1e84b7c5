//! Seeded random instances on layered acyclic graphs.
//!
//! The generator is ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`; [`GENERATOR_VERSION`] changes whenever the
//! sequence of draws changes, so a `(seed, version)` pair names one
//! instance.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GenError;
use crate::model::{NetworkBuilder, UpdateFlowNetwork};

pub const GENERATOR_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomParams {
    pub seed: u64,
    /// Upper bound on the vertex count, `s` and `t` included.
    pub vertices: usize,
    pub pairs: usize,
    pub cap_min: u64,
    pub cap_max: u64,
    pub demand_min: u64,
    pub demand_max: u64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { seed: 0, vertices: 8, pairs: 2, cap_min: 1, cap_max: 2, demand_min: 1, demand_max: 1 }
    }
}

impl RandomParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidParams(m.into()));
        if self.vertices < 2 {
            return bad("need at least 2 vertices");
        }
        if self.pairs == 0 {
            return bad("need at least one pair");
        }
        if self.cap_min == 0 || self.cap_min > self.cap_max {
            return bad("capacity range must satisfy 1 <= min <= max");
        }
        if self.demand_min == 0 || self.demand_min > self.demand_max {
            return bad("demand range must satisfy 1 <= min <= max");
        }
        Ok(())
    }
}

/// Random instance whose old and new families are both valid.
///
/// Inner vertices are spread over layers; every path visits the layers in
/// order and takes at most one vertex from each, and a new path reuses the
/// old path's vertex on about half of the layers. Edges are exactly the
/// path edges. Capacities are drawn from the range and then raised to the
/// larger of the old and new load.
///
/// # Panics
///
/// If `p` fails [`RandomParams::validate`].
pub fn gen_random_dag(p: &RandomParams) -> UpdateFlowNetwork {
    p.validate().expect("valid random parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let inner = p.vertices - 2;
    let mut layers: Vec<Vec<String>> = Vec::new();
    if inner > 0 {
        let count = rng.gen_range(1..=inner);
        let mut sizes = vec![1usize; count];
        for _ in count..inner {
            sizes[rng.gen_range(0..count)] += 1;
        }
        layers = sizes.iter().enumerate().map(|(l, &n)| (1..=n).map(|i| format!("v{}_{}", l + 1, i)).collect()).collect();
    }

    let pick = |rng: &mut ChaCha8Rng, layer: &[String]| layer[rng.gen_range(0..layer.len())].clone();
    let mut pairs = Vec::with_capacity(p.pairs);
    for _ in 0..p.pairs {
        let demand = rng.gen_range(p.demand_min..=p.demand_max);
        let mut old = vec!["s".to_string()];
        let mut new = vec!["s".to_string()];
        for layer in &layers {
            let o = rng.gen_bool(0.5).then(|| pick(&mut rng, layer));
            let n = if rng.gen_bool(0.5) { o.clone() } else { rng.gen_bool(0.5).then(|| pick(&mut rng, layer)) };
            old.extend(o);
            new.extend(n);
        }
        old.push("t".into());
        new.push("t".into());
        pairs.push((demand, old, new));
    }

    let mut old_load: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut new_load: BTreeMap<(String, String), u64> = BTreeMap::new();
    for (d, old, new) in &pairs {
        for w in old.windows(2) {
            *old_load.entry((w[0].clone(), w[1].clone())).or_default() += d;
        }
        for w in new.windows(2) {
            *new_load.entry((w[0].clone(), w[1].clone())).or_default() += d;
        }
    }
    let mut keys: Vec<&(String, String)> = old_load.keys().chain(new_load.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut b = NetworkBuilder::new("s", "t");
    for k in keys {
        let drawn = rng.gen_range(p.cap_min..=p.cap_max);
        let cap = drawn.max(old_load.get(k).copied().unwrap_or(0)).max(new_load.get(k).copied().unwrap_or(0));
        b.add_edge(&k.0, &k.1, cap);
    }
    for (d, old, new) in pairs {
        b.add_pair(d, old, new);
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::topological_order;
    use crate::format::serialize_instance;
    use crate::model::validate_network;
    use crate::solver::{solve, SolveOutcome};
    use crate::verify::verify_schedule;

    fn params(seed: u64) -> RandomParams {
        RandomParams { seed, vertices: 10, pairs: 3, cap_min: 1, cap_max: 3, demand_min: 1, demand_max: 2 }
    }

    #[test]
    fn deterministic() {
        let a = serialize_instance(&gen_random_dag(&params(7)));
        let b = serialize_instance(&gen_random_dag(&params(7)));
        assert_eq!(a, b);
        assert_ne!(a, serialize_instance(&gen_random_dag(&params(8))));
    }

    #[test]
    fn valid_acyclic_and_within_budget() {
        for seed in 0..200 {
            let net = gen_random_dag(&params(seed));
            assert_eq!(validate_network(&net), Ok(()), "seed {seed}");
            assert!(topological_order(&net).is_ok());
            assert!(net.vertex_count() <= 10);
        }
        let tiny = RandomParams { vertices: 2, ..params(1) };
        assert_eq!(gen_random_dag(&tiny).vertex_count(), 2);
    }

    #[test]
    fn capacity_floor_makes_every_instance_feasible() {
        for seed in 0..20 {
            let p = RandomParams { cap_min: 6, cap_max: 6, ..params(seed) };
            let net = gen_random_dag(&p);
            match solve(&net) {
                SolveOutcome::Feasible { schedule, .. } => assert_eq!(verify_schedule(&net, &schedule), Ok(())),
                other => panic!("seed {seed}: {other:?}"),
            }
        }
    }

    #[test]
    fn invalid_params() {
        assert!(RandomParams { vertices: 1, ..params(0) }.validate().is_err());
        assert!(RandomParams { cap_min: 3, cap_max: 2, ..params(0) }.validate().is_err());
        assert!(RandomParams { pairs: 0, ..params(0) }.validate().is_err());
    }
}

use std::cmp::Ordering;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flowreroute::blocks::{compare_blocks, touches, BlockId, BlockSet, LoadState};
use flowreroute::format::{parse_instance, parse_schedule, serialize_instance, serialize_schedule};
use flowreroute::generators::{gen_random_dag, RandomParams};
use flowreroute::oracle::{brute_force_with, OracleLimits, SearchMode};
use flowreroute::solver::{solve, SolveOutcome};
use flowreroute::{verify_schedule, verify_schedule_naive, PairSpec, Schedule, UpdateFlowNetwork};

fn instance(seed: u64, vertices: usize, pairs: usize, cap_max: u64) -> UpdateFlowNetwork {
    gen_random_dag(&RandomParams { seed, vertices, pairs, cap_min: 1, cap_max, demand_min: 1, demand_max: 2 })
}

fn arb_instance() -> impl Strategy<Value = UpdateFlowNetwork> {
    (any::<u64>(), 2usize..12, 1usize..4, 1u64..3).prop_map(|(s, v, k, c)| instance(s, v, k, c))
}

/// Effective updates in random order, cut into rounds of random size.
fn random_schedule(net: &UpdateFlowNetwork, seed: u64) -> Schedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ups = net.effective_updates();
    ups.shuffle(&mut rng);
    if rng.gen_bool(0.2) && !ups.is_empty() {
        ups.pop();
    }
    let mut rounds = Vec::new();
    while !ups.is_empty() {
        let n = rng.gen_range(1..=ups.len().min(3));
        rounds.push(ups.drain(..n).collect());
    }
    Schedule::new(rounds)
}

fn feasible(o: &SolveOutcome) -> Option<bool> {
    match o {
        SolveOutcome::Feasible { .. } => Some(true),
        SolveOutcome::Infeasible { .. } => Some(false),
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn block_order_is_total(net in arb_instance()) {
        let set = BlockSet::for_network(&net).unwrap();
        let bs = set.blocks();
        for a in bs {
            for b in bs {
                prop_assert_eq!(compare_blocks(a, b), compare_blocks(b, a).reverse());
                prop_assert_eq!(compare_blocks(a, b) == Ordering::Equal, a.id == b.id);
                prop_assert_eq!(touches(a, b, set.order()), touches(b, a, set.order()));
                for c in bs {
                    if compare_blocks(a, b).is_lt() && compare_blocks(b, c).is_lt() {
                        prop_assert!(compare_blocks(a, c).is_lt());
                    }
                }
            }
        }
        prop_assert!(bs.windows(2).all(|w| compare_blocks(&w[0], &w[1]).is_lt()));
    }

    #[test]
    fn incremental_and_naive_verifier_agree(net in arb_instance(), seed in any::<u64>()) {
        let s = random_schedule(&net, seed);
        prop_assert_eq!(verify_schedule(&net, &s), verify_schedule_naive(&net, &s));
    }

    #[test]
    fn reduced_and_full_oracle_agree(net in arb_instance()) {
        let lim = OracleLimits::default();
        let r = brute_force_with(&net, lim, SearchMode::Reduced).unwrap();
        let f = brute_force_with(&net, lim, SearchMode::Full).unwrap();
        prop_assert_eq!(r.verdict.is_feasible(), f.verdict.is_feasible());
        if let flowreroute::oracle::OracleVerdict::Feasible(s) = &r.verdict {
            prop_assert_eq!(verify_schedule(&net, s), Ok(()));
        }
    }

    #[test]
    fn text_round_trip(net in arb_instance(), seed in any::<u64>()) {
        let text = serialize_instance(&net);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(serialize_instance(&back), text);
        let s = random_schedule(&net, seed);
        prop_assert_eq!(parse_schedule(&serialize_schedule(&s)).unwrap(), s);
    }

    #[test]
    fn block_loads_recount(seed in any::<u64>(), v in 2usize..12, k in 1usize..4) {
        let p = RandomParams { seed, vertices: v, pairs: k, cap_min: 100, cap_max: 100, demand_min: 1, demand_max: 3 };
        let net = gen_random_dag(&p);
        let set = BlockSet::for_network(&net).unwrap();
        let mut ids: Vec<BlockId> = set.blocks().iter().map(|b| b.id).collect();
        let mut st = LoadState::new(&set, &ids);
        let family_load = |old: bool, e: usize| -> u128 {
            net.pairs().iter().map(|p| {
                let path = if old { &p.old_path } else { &p.new_path };
                let edge = net.edge(e);
                let on = path.windows(2).any(|w| (w[0], w[1]) == (edge.tail, edge.head));
                if on { p.demand as u128 } else { 0 }
            }).sum()
        };
        for e in 0..net.edges().len() {
            if let Some(l) = st.load(e) {
                prop_assert_eq!(l, family_load(true, e));
            }
        }
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for &b in &ids {
            prop_assert!(st.apply_block_update(&set, b).is_ok());
        }
        for e in 0..net.edges().len() {
            if let Some(l) = st.load(e) {
                prop_assert_eq!(l, family_load(false, e));
            }
        }
    }

    #[test]
    fn more_capacity_never_hurts(net in arb_instance(), extra in 1u64..3) {
        let before = feasible(&solve(&net)).unwrap();
        let edges = net.edges().iter().map(|e| (net.name(e.tail).to_string(), net.name(e.head).to_string(), e.capacity + extra)).collect();
        let names = |path: &[flowreroute::VertexId]| path.iter().map(|&v| net.name(v).to_string()).collect();
        let pairs = net
            .pairs()
            .iter()
            .map(|p| PairSpec { id: p.id.0, demand: p.demand, old: names(&p.old_path), new: names(&p.new_path) })
            .collect();
        let bigger = UpdateFlowNetwork::from_parts(net.name(net.source()), net.name(net.terminal()), edges, pairs);
        let after = feasible(&solve(&bigger)).unwrap();
        prop_assert!(!before || after);
    }
}

//! Small hand-made instances shared by tests, examples and the CLI.

use crate::model::{NetworkBuilder, PairId, Update, UpdateFlowNetwork};

/// Single pair swapping the order of `v1` and `v2`; all capacities and
/// the demand are 1.
///
/// Old path `s, v1, v2, t`, new path `s, v2, v1, t`. The only consistent
/// singleton order is `v1`, `v2`, `s`.
pub fn loop_example() -> UpdateFlowNetwork {
    NetworkBuilder::new("s", "t")
        .pair(1, &["s", "v1", "v2", "t"], &["s", "v2", "v1", "t"])
        .with_path_edges(1)
        .build()
}

pub fn loop_example_update(vertex: &str) -> Update {
    Update::new(vertex, PairId(1))
}

/// Two unit flows that must swap lanes through a shared unit edge
/// `x -> y`; feasible only if the flow leaving it moves first.
pub fn lane_swap() -> UpdateFlowNetwork {
    NetworkBuilder::new("s", "t")
        .pair(1, &["s", "a", "x", "y", "t"], &["s", "a", "t"])
        .pair(1, &["s", "b", "t"], &["s", "b", "x", "y", "t"])
        .with_path_edges(1)
        .build()
}

/// Two unit flows exchanging two unit lanes: infeasible in any order.
pub fn deadlock() -> UpdateFlowNetwork {
    NetworkBuilder::new("s", "t")
        .pair(1, &["s", "a", "t"], &["s", "b", "t"])
        .pair(1, &["s", "b", "t"], &["s", "a", "t"])
        .edge("s", "a", 2)
        .edge("s", "b", 2)
        .edge("a", "t", 1)
        .edge("b", "t", 1)
        .build()
}

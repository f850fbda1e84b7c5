//! Block decomposition of acyclic instances.
//!
//! For every pair, the vertices shared by its old and new path are visited
//! in the same topological order by both paths. Between two consecutive
//! shared vertices the paths either run along the same single edge or
//! diverge; each divergent stretch is a block. Blocks are ordered by start
//! vertex, then end vertex (both in topological order), then pair.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;

use thiserror::Error;

use crate::model::{PairId, UpdateFlowNetwork, VertexId};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("graph is not acyclic; cycle {}", .cycle.join(" -> "))]
pub struct CycleError {
    pub cycle: Vec<String>,
}

/// Topological order, ties broken by vertex name.
#[derive(Clone, Debug)]
pub struct TopoOrder {
    order: Vec<VertexId>,
    rank: Vec<usize>,
}

impl TopoOrder {
    pub fn order(&self) -> &[VertexId] {
        &self.order
    }

    /// 1-based position of `v`.
    pub fn rank(&self, v: VertexId) -> usize {
        self.rank[v.0] + 1
    }

    pub fn precedes(&self, a: VertexId, b: VertexId) -> bool {
        self.rank[a.0] < self.rank[b.0]
    }
}

pub fn topological_order(net: &UpdateFlowNetwork) -> Result<TopoOrder, CycleError> {
    let n = net.vertex_count();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for e in net.edges() {
        succ[e.tail.0].push(e.head.0);
        pred[e.head.0].push(e.tail.0);
        indeg[e.head.0] += 1;
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(VertexId(v));
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                heap.push(Reverse(w));
            }
        }
    }
    if order.len() < n {
        // Every leftover vertex has a leftover predecessor; walk backwards
        // until a vertex repeats.
        let start = (0..n).find(|&v| indeg[v] > 0).expect("leftover vertex");
        let mut pos: HashMap<usize, usize> = HashMap::new();
        let mut trail = vec![];
        let mut cur = start;
        while !pos.contains_key(&cur) {
            pos.insert(cur, trail.len());
            trail.push(cur);
            cur = *pred[cur].iter().find(|&&u| indeg[u] > 0).expect("leftover predecessor");
        }
        let mut cycle: Vec<String> = trail[pos[&cur]..].iter().map(|&v| net.name(VertexId(v)).to_string()).collect();
        cycle.reverse();
        return Err(CycleError { cycle });
    }
    let mut rank = vec![0; n];
    for (i, v) in order.iter().enumerate() {
        rank[v.0] = i;
    }
    Ok(TopoOrder { order, rank })
}

/// Position of a block in the global block order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    pub pair: PairId,
    /// 1-based index among the blocks of `pair`.
    pub index: usize,
    pub demand: u64,
    /// Old path from start to end, both inclusive.
    pub old_path: Vec<VertexId>,
    pub new_path: Vec<VertexId>,
    pub old_edges: Vec<usize>,
    pub new_edges: Vec<usize>,
    start_rank: usize,
    end_rank: usize,
}

impl Block {
    pub fn start(&self) -> VertexId {
        self.old_path[0]
    }

    pub fn end(&self) -> VertexId {
        *self.old_path.last().unwrap()
    }

    pub fn old_interior(&self) -> &[VertexId] {
        &self.old_path[1..self.old_path.len() - 1]
    }

    pub fn new_interior(&self) -> &[VertexId] {
        &self.new_path[1..self.new_path.len() - 1]
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.old_path.iter().chain(self.new_interior()).copied()
    }

    fn key(&self) -> (usize, usize, PairId) {
        (self.start_rank, self.end_rank, self.pair)
    }
}

/// Total order on blocks: start, then end, then pair id.
pub fn compare_blocks(a: &Block, b: &Block) -> Ordering {
    a.key().cmp(&b.key())
}

/// Some vertex of one block lies strictly between start and end of the other.
pub fn touches(a: &Block, b: &Block, order: &TopoOrder) -> bool {
    let inside = |x: &Block, y: &Block| {
        x.vertices().any(|v| {
            let r = order.rank(v);
            r > y.start_rank && r < y.end_rank
        })
    };
    inside(a, b) || inside(b, a)
}

/// All blocks of an acyclic instance in block order, plus the load that
/// never changes: every pair's shared edges outside its blocks.
#[derive(Clone, Debug)]
pub struct BlockSet<'a> {
    net: &'a UpdateFlowNetwork,
    order: TopoOrder,
    blocks: Vec<Block>,
    by_pair: Vec<Vec<BlockId>>,
    static_load: Vec<u128>,
}

impl<'a> BlockSet<'a> {
    pub fn for_network(net: &'a UpdateFlowNetwork) -> Result<Self, CycleError> {
        let order = topological_order(net)?;
        Ok(decompose_blocks(net, order))
    }

    pub fn network(&self) -> &'a UpdateFlowNetwork {
        self.net
    }

    pub fn order(&self) -> &TopoOrder {
        &self.order
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn get(&self, id: BlockId) -> &Block {
        &self.blocks[id.0]
    }

    /// Blocks of one pair in block order.
    pub fn of_pair(&self, pair: PairId) -> &[BlockId] {
        &self.by_pair[pair.index()]
    }

    pub fn static_load(&self, edge: usize) -> u128 {
        self.static_load[edge]
    }

    /// Largest block of `pair` strictly below `b` in block order.
    pub(crate) fn pred_of_pair(&self, pair: PairId, b: BlockId) -> Option<BlockId> {
        let list = &self.by_pair[pair.index()];
        let i = list.partition_point(|x| *x < b);
        i.checked_sub(1).map(|i| list[i])
    }

    /// `a < b` in block order and `a` touches `b`, using the endpoint test:
    /// a smaller block touches `b` exactly when it ends after `b` starts.
    pub(crate) fn touches_below(&self, a: BlockId, b: BlockId) -> bool {
        debug_assert!(a < b);
        self.blocks[a.0].end_rank > self.blocks[b.0].start_rank
    }
}

pub fn decompose_blocks<'a>(net: &'a UpdateFlowNetwork, order: TopoOrder) -> BlockSet<'a> {
    let mut blocks = Vec::new();
    let mut static_load = vec![0u128; net.edges().len()];
    for p in net.pairs() {
        let new_pos: HashMap<VertexId, usize> = p.new_path.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let common: Vec<(usize, usize)> =
            p.old_path.iter().enumerate().filter_map(|(i, v)| new_pos.get(v).map(|&j| (i, j))).collect();
        debug_assert!(common.windows(2).all(|w| w[0].1 < w[1].1), "shared vertices out of order in a DAG");
        let mut index = 0;
        for w in common.windows(2) {
            let ((oi, ni), (oj, nj)) = (w[0], w[1]);
            if oj == oi + 1 && nj == ni + 1 {
                if let Some(e) = net.edge_between(p.old_path[oi], p.old_path[oj]) {
                    static_load[e] += p.demand as u128;
                }
                continue;
            }
            index += 1;
            let old_path = p.old_path[oi..=oj].to_vec();
            let new_path = p.new_path[ni..=nj].to_vec();
            blocks.push(Block {
                id: BlockId(0),
                pair: p.id,
                index,
                demand: p.demand,
                old_edges: net.path_edges(&old_path).expect("validated path"),
                new_edges: net.path_edges(&new_path).expect("validated path"),
                start_rank: order.rank(old_path[0]),
                end_rank: order.rank(*old_path.last().unwrap()),
                old_path,
                new_path,
            });
        }
    }
    blocks.sort_by(compare_blocks);
    let mut by_pair = vec![Vec::new(); net.pair_count()];
    for (i, b) in blocks.iter_mut().enumerate() {
        b.id = BlockId(i);
        by_pair[b.pair.index()].push(b.id);
    }
    BlockSet { net, order, blocks, by_pair, static_load }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BlockUpdateError {
    #[error("block {0:?} was already updated")]
    AlreadyUpdated(BlockId),
    #[error("block {0:?} does not take part in this check")]
    NotParticipating(BlockId),
    #[error("edge {edge} would carry {load} over capacity {capacity}")]
    CapacityExceeded { edge: usize, load: u128, capacity: u64 },
}

/// Edge loads while a set of blocks is switched one at a time.
#[derive(Clone, Debug)]
pub struct LoadState {
    load: HashMap<usize, u128>,
    pending: HashMap<BlockId, bool>,
}

impl LoadState {
    /// Static loads plus the old segments of `participants`.
    pub fn new(set: &BlockSet<'_>, participants: &[BlockId]) -> Self {
        let mut load = HashMap::new();
        for &b in participants {
            let blk = set.get(b);
            for &e in blk.old_edges.iter().chain(&blk.new_edges) {
                load.entry(e).or_insert_with(|| set.static_load(e));
            }
        }
        for &b in participants {
            let blk = set.get(b);
            for e in &blk.old_edges {
                *load.get_mut(e).unwrap() += blk.demand as u128;
            }
        }
        LoadState { load, pending: participants.iter().map(|&b| (b, true)).collect() }
    }

    pub fn load(&self, edge: usize) -> Option<u128> {
        self.load.get(&edge).copied()
    }

    /// Moves `b`'s demand from its old to its new segment. On failure the
    /// state is left unchanged.
    pub fn apply_block_update(&mut self, set: &BlockSet<'_>, b: BlockId) -> Result<(), BlockUpdateError> {
        match self.pending.get(&b) {
            None => return Err(BlockUpdateError::NotParticipating(b)),
            Some(false) => return Err(BlockUpdateError::AlreadyUpdated(b)),
            Some(true) => {}
        }
        let blk = set.get(b);
        let d = blk.demand as u128;
        // Old and new segments of a block share no edge, so the new loads
        // can be checked before anything is moved.
        for &e in &blk.new_edges {
            let after = self.load[&e] + d;
            let capacity = set.network().edge(e).capacity;
            if after > capacity as u128 {
                return Err(BlockUpdateError::CapacityExceeded { edge: e, load: after, capacity });
            }
        }
        for e in &blk.old_edges {
            *self.load.get_mut(e).unwrap() -= d;
        }
        for e in &blk.new_edges {
            *self.load.get_mut(e).unwrap() += d;
        }
        self.pending.insert(b, false);
        Ok(())
    }
}

/// Switching the blocks of `perm` one by one, in that order, never exceeds
/// a capacity.
pub fn is_congestion_free(set: &BlockSet<'_>, perm: &[BlockId]) -> bool {
    let mut st = LoadState::new(set, perm);
    perm.iter().all(|&b| st.apply_block_update(set, b).is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::NetworkBuilder;

    #[test]
    fn cycle_is_reported() {
        let err = topological_order(&fixtures::loop_example()).unwrap_err();
        let mut c = err.cycle.clone();
        c.sort();
        assert_eq!(c, ["v1", "v2"]);
    }

    #[test]
    fn topological_ties_use_names() {
        let net = NetworkBuilder::new("s", "t").pair(1, &["s", "b", "t"], &["s", "a", "t"]).with_path_edges(1).build();
        let ord = topological_order(&net).unwrap();
        let names: Vec<&str> = ord.order().iter().map(|v| net.name(*v)).collect();
        assert_eq!(names, ["s", "a", "b", "t"]);
    }

    #[test]
    fn identical_paths_have_no_blocks() {
        let net = NetworkBuilder::new("s", "t").pair(1, &["s", "a", "t"], &["s", "a", "t"]).with_path_edges(1).build();
        let set = BlockSet::for_network(&net).unwrap();
        assert!(set.is_empty());
        assert_eq!(set.static_load(0), 1);
    }

    #[test]
    fn blocks_split_at_shared_vertices() {
        // Old s-a-m-b-t, new s-c-m-t: two blocks, s..m and m..t.
        let net = NetworkBuilder::new("s", "t")
            .pair(2, &["s", "a", "m", "b", "t"], &["s", "c", "m", "t"])
            .with_path_edges(2)
            .build();
        let set = BlockSet::for_network(&net).unwrap();
        let spans: Vec<(&str, &str, usize)> =
            set.blocks().iter().map(|b| (net.name(b.start()), net.name(b.end()), b.index)).collect();
        assert_eq!(spans, [("s", "m", 1), ("m", "t", 2)]);
        let b = set.get(BlockId(1));
        assert!(b.new_interior().is_empty());
        assert_eq!(net.name(b.old_interior()[0]), "b");
        assert!(!touches(set.get(BlockId(0)), b, set.order()));
    }

    #[test]
    fn lane_swap_labels() {
        let net = fixtures::lane_swap();
        let set = BlockSet::for_network(&net).unwrap();
        assert_eq!(set.len(), 2);
        let (b0, b1) = (BlockId(0), BlockId(1));
        assert!(touches(set.get(b0), set.get(b1), set.order()));
        let first = |b: BlockId| set.get(b).pair;
        let p1_first = if first(b0) == PairId(1) { [b0, b1] } else { [b1, b0] };
        let p2_first = [p1_first[1], p1_first[0]];
        assert!(is_congestion_free(&set, &p1_first));
        assert!(!is_congestion_free(&set, &p2_first));
    }

    #[test]
    fn apply_twice_and_foreign_block() {
        let net = fixtures::lane_swap();
        let set = BlockSet::for_network(&net).unwrap();
        let mut st = LoadState::new(&set, &[BlockId(0)]);
        assert_eq!(st.apply_block_update(&set, BlockId(1)), Err(BlockUpdateError::NotParticipating(BlockId(1))));
        st.apply_block_update(&set, BlockId(0)).unwrap();
        assert_eq!(st.apply_block_update(&set, BlockId(0)), Err(BlockUpdateError::AlreadyUpdated(BlockId(0))));
    }

    #[test]
    fn static_load_counts_against_blocks() {
        // Pair 3 permanently uses x->y (capacity 2). Pair 2 must leave it
        // before pair 1 arrives.
        let net = NetworkBuilder::new("s", "t")
            .pair(1, &["s", "a", "t"], &["s", "x", "y", "t"])
            .pair(1, &["s", "x", "y", "t"], &["s", "b", "t"])
            .pair(1, &["s", "c", "x", "y", "t"], &["s", "c", "x", "y", "t"])
            .with_path_edges(2)
            .build();
        crate::model::validate_network(&net).unwrap();
        let set = BlockSet::for_network(&net).unwrap();
        let p1 = set.of_pair(PairId(1))[0];
        let p2 = set.of_pair(PairId(2))[0];
        assert!(is_congestion_free(&set, &[p2, p1]));
        assert!(!is_congestion_free(&set, &[p1, p2]));
    }
}

// Implicit treap over a fixed node arena, used by the incremental verifier
// to keep each pair's current transient path as a sequence that supports
// position queries, splits and concatenation in expected O(log n).

pub(crate) const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub(crate) struct PathSeq {
    left: Vec<u32>,
    right: Vec<u32>,
    parent: Vec<u32>,
    size: Vec<u32>,
    prio: Vec<u64>,
}

impl PathSeq {
    pub fn new(n: usize) -> Self {
        let prio = (0..n as u64).map(splitmix).collect();
        PathSeq { left: vec![NIL; n], right: vec![NIL; n], parent: vec![NIL; n], size: vec![1; n], prio }
    }

    fn sz(&self, t: u32) -> usize {
        if t == NIL {
            0
        } else {
            self.size[t as usize] as usize
        }
    }

    fn pull(&mut self, t: u32) {
        let (l, r) = (self.left[t as usize], self.right[t as usize]);
        self.size[t as usize] = 1 + self.sz(l) as u32 + self.sz(r) as u32;
        if l != NIL {
            self.parent[l as usize] = t;
        }
        if r != NIL {
            self.parent[r as usize] = t;
        }
    }

    fn detach_root(&mut self, t: u32) -> u32 {
        if t != NIL {
            self.parent[t as usize] = NIL;
        }
        t
    }

    /// Resets `v` to a single-node sequence.
    pub fn singleton(&mut self, v: u32) -> u32 {
        let i = v as usize;
        self.left[i] = NIL;
        self.right[i] = NIL;
        self.parent[i] = NIL;
        self.size[i] = 1;
        v
    }

    pub fn build(&mut self, seq: &[u32]) -> u32 {
        let mut root = NIL;
        for &v in seq {
            let s = self.singleton(v);
            root = self.merge(root, s);
        }
        root
    }

    pub fn merge(&mut self, a: u32, b: u32) -> u32 {
        let r = self.merge_rec(a, b);
        self.detach_root(r)
    }

    fn merge_rec(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.prio[a as usize] > self.prio[b as usize] {
            let r = self.merge_rec(self.right[a as usize], b);
            self.right[a as usize] = r;
            self.pull(a);
            a
        } else {
            let l = self.merge_rec(a, self.left[b as usize]);
            self.left[b as usize] = l;
            self.pull(b);
            b
        }
    }

    /// Splits into the first `k` nodes and the rest.
    pub fn split(&mut self, t: u32, k: usize) -> (u32, u32) {
        let (a, b) = self.split_rec(t, k);
        (self.detach_root(a), self.detach_root(b))
    }

    fn split_rec(&mut self, t: u32, k: usize) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        let ls = self.sz(self.left[t as usize]);
        if k <= ls {
            let (a, b) = self.split_rec(self.left[t as usize], k);
            self.left[t as usize] = b;
            self.pull(t);
            self.parent[t as usize] = NIL;
            if a != NIL {
                self.parent[a as usize] = NIL;
            }
            (a, t)
        } else {
            let (a, b) = self.split_rec(self.right[t as usize], k - ls - 1);
            self.right[t as usize] = a;
            self.pull(t);
            self.parent[t as usize] = NIL;
            if b != NIL {
                self.parent[b as usize] = NIL;
            }
            (t, b)
        }
    }

    /// Zero-based position of node `v` inside its sequence.
    pub fn position(&self, v: u32) -> usize {
        let mut pos = self.sz(self.left[v as usize]);
        let mut cur = v;
        loop {
            let p = self.parent[cur as usize];
            if p == NIL {
                return pos;
            }
            if self.right[p as usize] == cur {
                pos += self.sz(self.left[p as usize]) + 1;
            }
            cur = p;
        }
    }

    pub fn collect(&self, t: u32, out: &mut Vec<u32>) {
        // Iterative in-order walk; treap depth is only logarithmic in
        // expectation, so avoid recursion here.
        let mut stack = Vec::new();
        let mut cur = t;
        while cur != NIL || !stack.is_empty() {
            while cur != NIL {
                stack.push(cur);
                cur = self.left[cur as usize];
            }
            let n = stack.pop().unwrap();
            out.push(n);
            cur = self.right[n as usize];
        }
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

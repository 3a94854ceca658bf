//! An AVL-balanced interval tree over inclusive operator-index intervals.
//!
//! Nodes are ordered by `(lo, hi, insertion sequence)` and augmented with the
//! largest `hi` in their subtree, which is enough for overlap queries and for
//! locating the nearest interval on either side of a query.

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    #[inline]
    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo.max(other.lo) <= self.hi.min(other.hi)
    }
}

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Node {
    iv: Interval,
    seq: usize,
    max_hi: usize,
    height: u8,
    left: usize,
    right: usize,
}

#[derive(Debug, Clone)]
pub struct IntervalTree {
    nodes: Vec<Node>,
    root: usize,
}

impl Default for IntervalTree {
    fn default() -> Self {
        Self::new()
    }
}

impl IntervalTree {
    pub fn new() -> Self {
        IntervalTree {
            nodes: Vec::new(),
            root: NIL,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn insert(&mut self, iv: Interval) {
        let id = self.nodes.len();
        self.nodes.push(Node {
            iv,
            seq: id,
            max_hi: iv.hi,
            height: 1,
            left: NIL,
            right: NIL,
        });
        self.root = self.insert_at(self.root, id);
    }

    /// True iff some stored interval intersects `q`.
    pub fn overlaps(&self, q: Interval) -> bool {
        let mut cur = self.root;
        while cur != NIL {
            let n = &self.nodes[cur];
            if n.iv.intersects(&q) {
                return true;
            }
            // If the left subtree reaches q.lo but holds no overlap, its
            // highest interval starts after q.hi, and so does everything to
            // the right.
            if n.left != NIL && self.nodes[n.left].max_hi >= q.lo {
                cur = n.left;
            } else {
                cur = n.right;
            }
        }
        false
    }

    /// Largest `hi` among intervals with `lo <= bound`.
    pub fn max_hi_starting_at_or_before(&self, bound: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        let mut cur = self.root;
        while cur != NIL {
            let n = &self.nodes[cur];
            if n.iv.lo <= bound {
                let mut m = n.iv.hi;
                if n.left != NIL {
                    m = m.max(self.nodes[n.left].max_hi);
                }
                best = Some(best.map_or(m, |b| b.max(m)));
                cur = n.right;
            } else {
                cur = n.left;
            }
        }
        best
    }

    /// Smallest `lo` strictly greater than `bound`.
    pub fn min_lo_after(&self, bound: usize) -> Option<usize> {
        let mut best = None;
        let mut cur = self.root;
        while cur != NIL {
            let n = &self.nodes[cur];
            if n.iv.lo > bound {
                best = Some(n.iv.lo);
                cur = n.left;
            } else {
                cur = n.right;
            }
        }
        best
    }

    /// Distance from `q` to the closest stored interval, assuming none of
    /// them intersects `q`. `None` when the tree is empty.
    pub fn gap(&self, q: Interval) -> Option<usize> {
        let before = self
            .max_hi_starting_at_or_before(q.hi)
            .map(|hi| q.lo.saturating_sub(hi));
        let after = self.min_lo_after(q.hi).map(|lo| lo - q.hi);
        match (before, after) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Interval> + '_ {
        self.nodes.iter().map(|n| n.iv)
    }

    fn key(&self, id: usize) -> (usize, usize, usize) {
        let n = &self.nodes[id];
        (n.iv.lo, n.iv.hi, n.seq)
    }

    fn height(&self, id: usize) -> u8 {
        if id == NIL {
            0
        } else {
            self.nodes[id].height
        }
    }

    fn update(&mut self, id: usize) {
        let (l, r) = (self.nodes[id].left, self.nodes[id].right);
        let mut max_hi = self.nodes[id].iv.hi;
        if l != NIL {
            max_hi = max_hi.max(self.nodes[l].max_hi);
        }
        if r != NIL {
            max_hi = max_hi.max(self.nodes[r].max_hi);
        }
        let height = 1 + self.height(l).max(self.height(r));
        let n = &mut self.nodes[id];
        n.max_hi = max_hi;
        n.height = height;
    }

    fn rotate_right(&mut self, id: usize) -> usize {
        let l = self.nodes[id].left;
        self.nodes[id].left = self.nodes[l].right;
        self.nodes[l].right = id;
        self.update(id);
        self.update(l);
        l
    }

    fn rotate_left(&mut self, id: usize) -> usize {
        let r = self.nodes[id].right;
        self.nodes[id].right = self.nodes[r].left;
        self.nodes[r].left = id;
        self.update(id);
        self.update(r);
        r
    }

    fn insert_at(&mut self, root: usize, id: usize) -> usize {
        if root == NIL {
            return id;
        }
        if self.key(id) < self.key(root) {
            let l = self.insert_at(self.nodes[root].left, id);
            self.nodes[root].left = l;
        } else {
            let r = self.insert_at(self.nodes[root].right, id);
            self.nodes[root].right = r;
        }
        self.update(root);
        self.rebalance(root)
    }

    fn rebalance(&mut self, id: usize) -> usize {
        let (l, r) = (self.nodes[id].left, self.nodes[id].right);
        let balance = self.height(l) as i16 - self.height(r) as i16;
        if balance > 1 {
            let (ll, lr) = (self.nodes[l].left, self.nodes[l].right);
            if self.height(ll) < self.height(lr) {
                let nl = self.rotate_left(l);
                self.nodes[id].left = nl;
            }
            return self.rotate_right(id);
        }
        if balance < -1 {
            let (rl, rr) = (self.nodes[r].left, self.nodes[r].right);
            if self.height(rr) < self.height(rl) {
                let nr = self.rotate_right(r);
                self.nodes[id].right = nr;
            }
            return self.rotate_left(id);
        }
        id
    }

    #[cfg(test)]
    fn check_invariants(&self) {
        fn walk(t: &IntervalTree, id: usize, out: &mut Vec<(usize, usize, usize)>) -> (u8, usize) {
            if id == NIL {
                return (0, 0);
            }
            let n = &t.nodes[id];
            let (hl, ml) = walk(t, n.left, out);
            out.push(t.key(id));
            let (hr, mr) = walk(t, n.right, out);
            assert!((hl as i16 - hr as i16).abs() <= 1, "unbalanced");
            assert_eq!(n.height, 1 + hl.max(hr));
            assert_eq!(n.max_hi, n.iv.hi.max(ml).max(mr));
            (n.height, n.max_hi)
        }
        let mut keys = Vec::new();
        walk(self, self.root, &mut keys);
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(keys.len(), self.nodes.len());
    }
}

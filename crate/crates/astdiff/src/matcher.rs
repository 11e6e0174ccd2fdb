//! GumTree matching: a greedy top-down phase over isomorphic subtrees
//! followed by a bottom-up phase over containers, with simple recovery
//! among the children of every container pair.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use crate::tree::{NodeId, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    /// Smallest subtree height considered by the top-down phase.
    pub min_height: usize,
    /// Minimum dice similarity for a bottom-up container match.
    pub sim_threshold: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self { min_height: 2, sim_threshold: 0.5 }
    }
}

/// An injective partial mapping from old nodes to new nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    src_to_dst: Vec<Option<NodeId>>,
    dst_to_src: Vec<Option<NodeId>>,
}

impl Mapping {
    pub fn new(src_len: usize, dst_len: usize) -> Self {
        Self { src_to_dst: vec![None; src_len], dst_to_src: vec![None; dst_len] }
    }

    pub fn link(&mut self, src: NodeId, dst: NodeId) {
        debug_assert!(self.src_to_dst[src].is_none() && self.dst_to_src[dst].is_none());
        self.src_to_dst[src] = Some(dst);
        self.dst_to_src[dst] = Some(src);
    }

    pub fn dst(&self, src: NodeId) -> Option<NodeId> {
        self.src_to_dst[src]
    }

    pub fn src(&self, dst: NodeId) -> Option<NodeId> {
        self.dst_to_src[dst]
    }

    pub fn is_src_mapped(&self, src: NodeId) -> bool {
        self.src_to_dst[src].is_some()
    }

    pub fn is_dst_mapped(&self, dst: NodeId) -> bool {
        self.dst_to_src[dst].is_some()
    }

    pub fn len(&self) -> usize {
        self.src_to_dst.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(old, new)` pairs in old-node order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.src_to_dst.iter().enumerate().filter_map(|(s, d)| d.map(|d| (s, d)))
    }
}

struct Matcher<'a> {
    old: &'a SyntaxTree,
    new: &'a SyntaxTree,
    options: MatchOptions,
    m: Mapping,
}

/// Height-ordered work list; ties pop in pre-order.
struct PriorityList<'a> {
    tree: &'a SyntaxTree,
    heap: BinaryHeap<(usize, Reverse<usize>, NodeId)>,
    rank: HashMap<NodeId, usize>,
}

impl<'a> PriorityList<'a> {
    fn new(tree: &'a SyntaxTree) -> Self {
        let rank = tree.preorder().iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut list = Self { tree, heap: BinaryHeap::new(), rank };
        list.push(SyntaxTree::ROOT);
        list
    }

    fn push(&mut self, id: NodeId) {
        self.heap.push((self.tree.height(id), Reverse(self.rank[&id]), id));
    }

    fn peek_height(&self) -> usize {
        self.heap.peek().map_or(0, |e| e.0)
    }

    fn pop_level(&mut self) -> Vec<NodeId> {
        let h = self.peek_height();
        let mut out = Vec::new();
        while self.heap.peek().is_some_and(|e| e.0 == h) {
            out.push(self.heap.pop().expect("peeked").2);
        }
        out
    }

    fn open(&mut self, id: NodeId) {
        for &c in self.tree.children(id) {
            self.push(c);
        }
    }
}

impl<'a> Matcher<'a> {
    fn link_subtrees(&mut self, a: NodeId, b: NodeId) {
        for (&x, &y) in self.old.subtree(a).iter().zip(self.new.subtree(b)) {
            self.m.link(x, y);
        }
    }

    /// Share of descendants of `a` mapped into descendants of `b`.
    fn dice(&self, a: Option<NodeId>, b: Option<NodeId>) -> f64 {
        let (Some(a), Some(b)) = (a, b) else { return 0.0 };
        let (da, db) = (self.old.descendants(a), self.new.descendants(b));
        if da.is_empty() && db.is_empty() {
            return 0.0;
        }
        let common = da.iter().filter(|&&d| self.m.dst(d).is_some_and(|t| self.new.is_descendant(t, b))).count();
        2.0 * common as f64 / (da.len() + db.len()) as f64
    }

    fn top_down(&mut self) {
        let mut l1 = PriorityList::new(self.old);
        let mut l2 = PriorityList::new(self.new);
        let mut ambiguous: Vec<(NodeId, NodeId)> = Vec::new();
        loop {
            let (h1, h2) = (l1.peek_height(), l2.peek_height());
            if h1.min(h2) < self.options.min_height {
                break;
            }
            match h1.cmp(&h2) {
                Ordering::Greater => {
                    for t in l1.pop_level() {
                        l1.open(t);
                    }
                    continue;
                }
                Ordering::Less => {
                    for t in l2.pop_level() {
                        l2.open(t);
                    }
                    continue;
                }
                Ordering::Equal => {}
            }
            let level1 = l1.pop_level();
            let level2 = l2.pop_level();
            let mut by_hash: HashMap<u64, Vec<NodeId>> = HashMap::new();
            for &t2 in &level2 {
                by_hash.entry(self.new.subtree_hash(t2)).or_default().push(t2);
            }
            let mut pairs = Vec::new();
            let mut partners1: HashMap<NodeId, usize> = HashMap::new();
            let mut partners2: HashMap<NodeId, usize> = HashMap::new();
            for &t1 in &level1 {
                for &t2 in by_hash.get(&self.old.subtree_hash(t1)).into_iter().flatten() {
                    if self.old.isomorphic(t1, self.new, t2) {
                        pairs.push((t1, t2));
                        *partners1.entry(t1).or_default() += 1;
                        *partners2.entry(t2).or_default() += 1;
                    }
                }
            }
            for &(t1, t2) in &pairs {
                if partners1[&t1] == 1 && partners2[&t2] == 1 {
                    self.link_subtrees(t1, t2);
                } else {
                    ambiguous.push((t1, t2));
                }
            }
            for t1 in level1.into_iter().filter(|t| !partners1.contains_key(t)) {
                l1.open(t1);
            }
            for t2 in level2.into_iter().filter(|t| !partners2.contains_key(t)) {
                l2.open(t2);
            }
        }

        // Ambiguous pairs: prefer those whose parents are already similar,
        // then those at similar positions.
        let mut scored: Vec<(f64, usize, (NodeId, NodeId))> = ambiguous
            .into_iter()
            .map(|(a, b)| {
                let sim = self.dice(self.old.parent(a), self.new.parent(b));
                let pos = self.old.position_in_parent(a).abs_diff(self.new.position_in_parent(b));
                (sim, pos, (a, b))
            })
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        for (_, _, (a, b)) in scored {
            if !self.m.is_src_mapped(a) && !self.m.is_dst_mapped(b) {
                self.link_subtrees(a, b);
            }
        }
    }

    fn bottom_up(&mut self) {
        for t1 in self.old.postorder() {
            if t1 == SyntaxTree::ROOT {
                let t2 = SyntaxTree::ROOT;
                if !self.m.is_src_mapped(t1) && !self.m.is_dst_mapped(t2) && self.old.kind(t1) == self.new.kind(t2) {
                    self.m.link(t1, t2);
                    self.last_chance(t1, t2);
                }
                break;
            }
            if self.m.is_src_mapped(t1) || self.old.is_leaf(t1) {
                continue;
            }
            let mut candidates = Vec::new();
            for &d in self.old.descendants(t1) {
                let Some(mapped) = self.m.dst(d) else { continue };
                for a in self.new.ancestors(mapped) {
                    if !self.m.is_dst_mapped(a) && self.new.kind(a) == self.old.kind(t1) && !candidates.contains(&a) {
                        candidates.push(a);
                    }
                }
            }
            candidates.sort_unstable();
            let mut best: Option<(f64, NodeId)> = None;
            for c in candidates {
                let sim = self.dice(Some(t1), Some(c));
                if best.is_none_or(|(s, _)| sim > s) {
                    best = Some((sim, c));
                }
            }
            if let Some((sim, t2)) = best {
                if sim >= self.options.sim_threshold {
                    self.m.link(t1, t2);
                    self.last_chance(t1, t2);
                }
            }
        }
    }

    fn unmapped_children(&self, a: NodeId, b: NodeId) -> (Vec<NodeId>, Vec<NodeId>) {
        let s: Vec<NodeId> = self.old.children(a).iter().copied().filter(|&c| !self.m.is_src_mapped(c)).collect();
        let d: Vec<NodeId> = self.new.children(b).iter().copied().filter(|&c| !self.m.is_dst_mapped(c)).collect();
        (s, d)
    }

    fn subtrees_unmapped(&self, a: NodeId, b: NodeId) -> bool {
        self.old.subtree(a).iter().all(|&x| !self.m.is_src_mapped(x))
            && self.new.subtree(b).iter().all(|&y| !self.m.is_dst_mapped(y))
    }

    fn lcs_match(&mut self, a: NodeId, b: NodeId, values: bool) {
        let (s, d) = self.unmapped_children(a, b);
        let eq = |x: NodeId, y: NodeId| {
            if values {
                self.old.isomorphic(x, self.new, y)
            } else {
                self.old.same_shape(x, self.new, y)
            }
        };
        for (x, y) in lcs(&s, &d, eq) {
            if self.subtrees_unmapped(x, y) {
                self.link_subtrees(x, y);
            }
        }
    }

    fn histogram_match(&mut self, a: NodeId, b: NodeId) {
        let (s, d) = self.unmapped_children(a, b);
        let mut kinds: Vec<&str> = s.iter().map(|&x| self.old.kind(x)).collect();
        kinds.sort_unstable();
        kinds.dedup();
        let mut pairs = Vec::new();
        for kind in kinds {
            let xs: Vec<NodeId> = s.iter().copied().filter(|&x| self.old.kind(x) == kind).collect();
            let ys: Vec<NodeId> = d.iter().copied().filter(|&y| self.new.kind(y) == kind).collect();
            if let ([x], [y]) = (xs.as_slice(), ys.as_slice()) {
                pairs.push((*x, *y));
            }
        }
        for (x, y) in pairs {
            if !self.m.is_src_mapped(x) && !self.m.is_dst_mapped(y) {
                self.m.link(x, y);
                self.last_chance(x, y);
            }
        }
    }

    fn last_chance(&mut self, a: NodeId, b: NodeId) {
        self.lcs_match(a, b, true);
        self.lcs_match(a, b, false);
        self.histogram_match(a, b);
    }
}

/// Longest common subsequence under `eq`, as index pairs in order.
pub(crate) fn lcs<T: Copy>(xs: &[T], ys: &[T], eq: impl Fn(T, T) -> bool) -> Vec<(T, T)> {
    let (n, m) = (xs.len(), ys.len());
    let mut table = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[i][j] = if eq(xs[i], ys[j]) { table[i + 1][j + 1] + 1 } else { table[i + 1][j].max(table[i][j + 1]) };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < n && j < m {
        if eq(xs[i], ys[j]) {
            out.push((xs[i], ys[j]));
            i += 1;
            j += 1;
        } else if table[i + 1][j] >= table[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

pub fn match_trees(old: &SyntaxTree, new: &SyntaxTree, options: MatchOptions) -> Mapping {
    let mut matcher = Matcher { old, new, options, m: Mapping::new(old.len(), new.len()) };
    matcher.top_down();
    matcher.bottom_up();
    matcher.m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_sexpr;

    fn t(s: &str) -> SyntaxTree {
        parse_sexpr(s).unwrap()
    }

    #[test]
    fn identical_trees_map_totally() {
        let a = t("(unit (fn:f (p:a) (body (call:g (arg:1)))) (fn:h (body)))");
        let m = match_trees(&a, &a, MatchOptions::default());
        assert_eq!(m.len(), a.len());
        assert!(m.pairs().all(|(x, y)| x == y));
    }

    #[test]
    fn disjoint_trees_map_nothing() {
        let a = t("(unit (fn:f (p:a)))");
        let b = t("(module (class:C (field:x)))");
        assert!(match_trees(&a, &b, MatchOptions::default()).is_empty());
    }

    #[test]
    fn renamed_function_matched_by_container() {
        let body = |n: u32| format!("(body (stmt (call:log (arg:{n}))) (stmt (call:emit (arg:{n}))))");
        let fns = |renamed: &str| {
            (0..5)
                .map(|i| format!("(fn:{} {})", if i == 2 { renamed } else { ["a", "b", "c", "d", "e"][i] }, body(i as u32)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let old = t(&format!("(unit {})", fns("c")));
        let new = t(&format!("(unit {})", fns("renamed")));
        let m = match_trees(&old, &new, MatchOptions::default());
        assert_eq!(m.len(), old.len());
        for (&f_old, &f_new) in old.children(0).iter().zip(new.children(0)) {
            assert_eq!(m.dst(f_old), Some(f_new));
            let (b_old, b_new) = (old.children(f_old)[0], new.children(f_new)[0]);
            assert_eq!(m.dst(b_old), Some(b_new));
        }
    }

    #[test]
    fn ambiguous_subtrees_prefer_similar_parents() {
        let old = t("(unit (fn:a (ret (lit:0)) (x:1)) (fn:b (ret (lit:0)) (y:2)))");
        let new = t("(unit (fn:b (ret (lit:0)) (y:2)) (fn:a (ret (lit:0)) (x:1)))");
        let m = match_trees(&old, &new, MatchOptions::default());
        assert_eq!(m.len(), old.len());
        let kids_old = old.children(0);
        let kids_new = new.children(0);
        assert_eq!(m.dst(kids_old[0]), Some(kids_new[1]));
        assert_eq!(m.dst(kids_old[1]), Some(kids_new[0]));
    }

    #[test]
    fn lcs_basic() {
        let pairs = lcs(&[1, 2, 3, 4], &[2, 4, 5], |a, b| a == b);
        assert_eq!(pairs, vec![(2, 2), (4, 4)]);
    }
}

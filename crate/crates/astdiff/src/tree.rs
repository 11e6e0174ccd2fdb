//! Arena-backed syntax trees.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    /// 1-based line of `start`.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: String,
    /// Token text for leaves and operator nodes; empty otherwise.
    pub value: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub span: Span,
}

/// An immutable tree whose root is node 0. Height, size, pre-order rank and
/// subtree hashes are precomputed for the matcher.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    nodes: Vec<Node>,
    height: Vec<usize>,
    size: Vec<usize>,
    preorder: Vec<NodeId>,
    rank: Vec<usize>,
    hash: Vec<u64>,
    shape_hash: Vec<u64>,
}

#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a node as the last child of `parent` (the first node pushed
    /// must be the root, with no parent).
    pub fn push(&mut self, parent: Option<NodeId>, kind: impl Into<String>, value: impl Into<String>, span: Span) -> NodeId {
        let id = self.nodes.len();
        assert_eq!(parent.is_none(), id == 0, "exactly the first node is the root");
        self.nodes.push(Node { kind: kind.into(), value: value.into(), children: Vec::new(), parent, span });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn finish(self) -> SyntaxTree {
        assert!(!self.nodes.is_empty(), "a tree needs a root");
        SyntaxTree::from_nodes(self.nodes)
    }
}

impl SyntaxTree {
    fn from_nodes(nodes: Vec<Node>) -> Self {
        let n = nodes.len();
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            preorder.push(id);
            stack.extend(nodes[id].children.iter().rev());
        }
        let mut rank = vec![0; n];
        for (i, &id) in preorder.iter().enumerate() {
            rank[id] = i;
        }
        let mut height = vec![1; n];
        let mut size = vec![1; n];
        let mut hash = vec![0; n];
        let mut shape_hash = vec![0; n];
        for &id in preorder.iter().rev() {
            let node = &nodes[id];
            let mut h = DefaultHasher::new();
            let mut sh = DefaultHasher::new();
            node.kind.hash(&mut h);
            node.value.hash(&mut h);
            node.kind.hash(&mut sh);
            for &c in &node.children {
                height[id] = height[id].max(height[c] + 1);
                size[id] += size[c];
                hash[c].hash(&mut h);
                shape_hash[c].hash(&mut sh);
            }
            node.children.len().hash(&mut h);
            node.children.len().hash(&mut sh);
            hash[id] = h.finish();
            shape_hash[id] = sh.finish();
        }
        Self { nodes, height, size, preorder, rank, hash, shape_hash }
    }

    /// A single-node tree.
    pub fn leaf(kind: &str, value: &str) -> Self {
        let mut b = TreeBuilder::new();
        b.push(None, kind, value, Span::default());
        b.finish()
    }

    pub const ROOT: NodeId = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn kind(&self, id: NodeId) -> &str {
        &self.nodes[id].kind
    }

    pub fn value(&self, id: NodeId) -> &str {
        &self.nodes[id].value
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Leaves have height 1.
    pub fn height(&self, id: NodeId) -> usize {
        self.height[id]
    }

    /// Number of nodes in the subtree rooted at `id`.
    pub fn size(&self, id: NodeId) -> usize {
        self.size[id]
    }

    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    /// Nodes of the subtree rooted at `id`, in pre-order, `id` first.
    pub fn subtree(&self, id: NodeId) -> &[NodeId] {
        let r = self.rank[id];
        &self.preorder[r..r + self.size[id]]
    }

    /// Proper descendants of `id` in pre-order.
    pub fn descendants(&self, id: NodeId) -> &[NodeId] {
        &self.subtree(id)[1..]
    }

    pub fn is_descendant(&self, node: NodeId, ancestor: NodeId) -> bool {
        let (r, a) = (self.rank[node], self.rank[ancestor]);
        r > a && r < a + self.size[ancestor]
    }

    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(Self::ROOT, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
            } else {
                stack.push((id, true));
                stack.extend(self.children(id).iter().rev().map(|&c| (c, false)));
            }
        }
        out
    }

    pub fn breadth_first(&self) -> Vec<NodeId> {
        let mut out = vec![Self::ROOT];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(self.children(out[i]));
            i += 1;
        }
        out
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |&p| self.parent(p))
    }

    pub fn position_in_parent(&self, id: NodeId) -> usize {
        self.parent(id).map_or(0, |p| self.children(p).iter().position(|&c| c == id).expect("child of its parent"))
    }

    /// Hash of kinds, values and shape of the subtree.
    pub fn subtree_hash(&self, id: NodeId) -> u64 {
        self.hash[id]
    }

    /// Hash of kinds and shape only.
    pub fn shape_hash(&self, id: NodeId) -> u64 {
        self.shape_hash[id]
    }

    /// Subtrees equal in kinds, values and child order.
    pub fn isomorphic(&self, a: NodeId, other: &SyntaxTree, b: NodeId) -> bool {
        self.hash[a] == other.hash[b] && self.deep_eq(a, other, b, true)
    }

    /// Subtrees equal in kinds and child order, ignoring values.
    pub fn same_shape(&self, a: NodeId, other: &SyntaxTree, b: NodeId) -> bool {
        self.shape_hash[a] == other.shape_hash[b] && self.deep_eq(a, other, b, false)
    }

    fn deep_eq(&self, a: NodeId, other: &SyntaxTree, b: NodeId, values: bool) -> bool {
        let mut stack = vec![(a, b)];
        while let Some((x, y)) = stack.pop() {
            let (nx, ny) = (&self.nodes[x], &other.nodes[y]);
            if nx.kind != ny.kind || (values && nx.value != ny.value) || nx.children.len() != ny.children.len() {
                return false;
            }
            stack.extend(nx.children.iter().copied().zip(ny.children.iter().copied()));
        }
        true
    }

    /// Whole-tree isomorphism.
    pub fn isomorphic_to(&self, other: &SyntaxTree) -> bool {
        self.isomorphic(Self::ROOT, other, Self::ROOT)
    }

    /// Renders the tree as an s-expression, see [`crate::sexpr`].
    pub fn to_sexpr(&self) -> String {
        crate::sexpr::render(self)
    }
}

#[cfg(test)]
mod tests {
    use crate::sexpr::parse_sexpr;

    #[test]
    fn metrics() {
        let t = parse_sexpr("(a (b (c:1) (d:2)) (e:3))").unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.height(0), 3);
        assert_eq!(t.size(1), 3);
        assert_eq!(t.kind(t.preorder()[3]), "d");
        assert_eq!(t.postorder().iter().map(|&n| t.kind(n)).collect::<String>(), "cdbea");
        assert_eq!(t.breadth_first().iter().map(|&n| t.kind(n)).collect::<String>(), "abecd");
        assert!(t.is_descendant(2, 0) && !t.is_descendant(4, 1));
        assert_eq!(t.ancestors(2).collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn isomorphism() {
        let a = parse_sexpr("(a (b:1) (c (d:2)))").unwrap();
        let b = parse_sexpr("(a (b:1) (c (d:2)))").unwrap();
        let c = parse_sexpr("(a (b:1) (c (d:3)))").unwrap();
        assert!(a.isomorphic_to(&b));
        assert!(!a.isomorphic_to(&c));
        assert!(a.same_shape(0, &c, 0));
    }
}

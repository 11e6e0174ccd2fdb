//! Edit-script generation after Chawathe et al., in the form used by
//! GumTree: a breadth-first walk over the new tree that inserts, updates and
//! moves nodes of a working copy of the old tree, aligning the children of
//! every matched pair, followed by post-order deletion of unmatched nodes.
//!
//! Node references use working ids: ids below the size of the old tree are
//! old nodes, larger ids are inserted nodes numbered in insertion order.

use serde::{Deserialize, Serialize};

use crate::matcher::{lcs, Mapping};
use crate::tree::{NodeId, SyntaxTree};

pub type WorkId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    Insert,
    Delete,
    Update,
    Move,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [Self::Insert, Self::Delete, Self::Update, Self::Move];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum EditOp {
    /// A single node with no children, placed at `position` under `parent`
    /// (`None` for the top level).
    Insert {
        node: WorkId,
        dst: NodeId,
        parent: Option<WorkId>,
        position: usize,
        kind: String,
        value: String,
    },
    Delete {
        node: WorkId,
    },
    Update {
        node: WorkId,
        dst: NodeId,
        old_value: String,
        new_value: String,
    },
    /// Detach, then insert at `position` under `parent`.
    Move {
        node: WorkId,
        dst: NodeId,
        parent: Option<WorkId>,
        position: usize,
    },
}

impl EditOp {
    pub fn kind(&self) -> ActionKind {
        match self {
            Self::Insert { .. } => ActionKind::Insert,
            Self::Delete { .. } => ActionKind::Delete,
            Self::Update { .. } => ActionKind::Update,
            Self::Move { .. } => ActionKind::Move,
        }
    }
}

/// Where an action is counted in a change summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Attribution {
    Cell { category: crate::category::Category, action: ActionKind },
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EditAction {
    #[serde(flatten)]
    pub op: EditOp,
    /// Kind of the node acted on.
    pub node_kind: String,
    /// 1-based line, in the new source for inserts and the old otherwise.
    pub line: usize,
    pub attribution: Attribution,
}

struct Work {
    kind: Vec<String>,
    value: Vec<String>,
    children: Vec<Vec<WorkId>>,
    parent: Vec<Option<WorkId>>,
    /// work id -> new node; the top-level fake root maps to `dst_fake`.
    w2d: Vec<Option<NodeId>>,
    d2w: Vec<Option<WorkId>>,
    src_in_order: Vec<bool>,
    dst_in_order: Vec<bool>,
}

struct Generator<'a> {
    new: &'a SyntaxTree,
    w: Work,
    fake: WorkId,
    dst_fake: NodeId,
    ops: Vec<EditOp>,
}

impl<'a> Generator<'a> {
    fn new(old: &'a SyntaxTree, new: &'a SyntaxTree, mapping: &Mapping) -> Self {
        let fake = old.len();
        let dst_fake = new.len();
        let mut w = Work {
            kind: old.nodes().iter().map(|n| n.kind.clone()).collect(),
            value: old.nodes().iter().map(|n| n.value.clone()).collect(),
            children: old.nodes().iter().map(|n| n.children.clone()).collect(),
            parent: old.nodes().iter().map(|n| Some(n.parent.unwrap_or(fake))).collect(),
            w2d: (0..old.len()).map(|i| mapping.dst(i)).collect(),
            d2w: (0..new.len()).map(|i| mapping.src(i)).collect(),
            src_in_order: vec![false; old.len() + 1],
            dst_in_order: vec![false; new.len() + 1],
        };
        w.kind.push(String::new());
        w.value.push(String::new());
        w.children.push(vec![SyntaxTree::ROOT]);
        w.parent.push(None);
        w.w2d.push(Some(dst_fake));
        w.d2w.push(Some(fake));
        Self { new, w, fake, dst_fake, ops: Vec::new() }
    }

    fn dst_parent(&self, x: NodeId) -> NodeId {
        self.new.parent(x).unwrap_or(self.dst_fake)
    }

    fn dst_children(&self, y: NodeId) -> &[NodeId] {
        if y == self.dst_fake {
            std::slice::from_ref(&SyntaxTree::ROOT)
        } else {
            self.new.children(y)
        }
    }

    fn public_parent(&self, p: WorkId) -> Option<WorkId> {
        (p != self.fake).then_some(p)
    }

    fn position(&self, w: WorkId) -> usize {
        let p = self.w.parent[w].expect("attached node");
        self.w.children[p].iter().position(|&c| c == w).expect("child of its parent")
    }

    fn detach(&mut self, w: WorkId) {
        let p = self.w.parent[w].expect("attached node");
        self.w.children[p].retain(|&c| c != w);
        self.w.parent[w] = None;
    }

    fn attach(&mut self, w: WorkId, parent: WorkId, k: usize) {
        self.w.children[parent].insert(k, w);
        self.w.parent[w] = Some(parent);
    }

    fn find_pos(&self, x: NodeId) -> usize {
        let y = self.dst_parent(x);
        let siblings = self.dst_children(y);
        for &c in siblings {
            if self.w.dst_in_order[c] {
                if c == x {
                    return 0;
                }
                break;
            }
        }
        let xpos = siblings.iter().position(|&c| c == x).expect("child of its parent");
        let Some(v) = siblings[..xpos].iter().rev().copied().find(|&c| self.w.dst_in_order[c]) else {
            return 0;
        };
        let u = self.w.d2w[v].expect("in-order nodes are mapped");
        self.position(u) + 1
    }

    fn run(mut self) -> Vec<EditOp> {
        for x in self.new.breadth_first() {
            let y = self.dst_parent(x);
            let z = self.w.d2w[y].expect("parents are processed first");
            let w = match self.w.d2w[x] {
                None => {
                    let k = self.find_pos(x);
                    let w = self.w.kind.len();
                    self.w.kind.push(self.new.kind(x).to_string());
                    self.w.value.push(self.new.value(x).to_string());
                    self.w.children.push(Vec::new());
                    self.w.parent.push(None);
                    self.w.w2d.push(Some(x));
                    self.w.src_in_order.push(false);
                    self.w.d2w[x] = Some(w);
                    self.attach(w, z, k);
                    self.ops.push(EditOp::Insert {
                        node: w,
                        dst: x,
                        parent: self.public_parent(z),
                        position: k,
                        kind: self.new.kind(x).to_string(),
                        value: self.new.value(x).to_string(),
                    });
                    w
                }
                Some(w) => {
                    if self.w.value[w] != self.new.value(x) {
                        self.ops.push(EditOp::Update {
                            node: w,
                            dst: x,
                            old_value: std::mem::replace(&mut self.w.value[w], self.new.value(x).to_string()),
                            new_value: self.new.value(x).to_string(),
                        });
                    }
                    let v = self.w.parent[w].expect("attached node");
                    if z != v {
                        let k = self.find_pos(x);
                        self.ops.push(EditOp::Move { node: w, dst: x, parent: self.public_parent(z), position: k });
                        self.detach(w);
                        self.attach(w, z, k);
                    }
                    w
                }
            };
            self.w.src_in_order[w] = true;
            self.w.dst_in_order[x] = true;
            self.align_children(w, x);
        }

        let mut post = Vec::new();
        let mut stack = vec![(self.fake, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                post.push(id);
            } else {
                stack.push((id, true));
                stack.extend(self.w.children[id].iter().rev().map(|&c| (c, false)));
            }
        }
        for w in post {
            if w != self.fake && self.w.w2d[w].is_none() {
                self.ops.push(EditOp::Delete { node: w });
                self.detach(w);
            }
        }
        let fake = self.fake;
        let public = |w: WorkId| if w > fake { w - 1 } else { w };
        for op in &mut self.ops {
            match op {
                EditOp::Insert { node, parent, .. } | EditOp::Move { node, parent, .. } => {
                    *node = public(*node);
                    *parent = parent.map(public);
                }
                EditOp::Delete { node } | EditOp::Update { node, .. } => *node = public(*node),
            }
        }
        self.ops
    }

    fn align_children(&mut self, w: WorkId, x: NodeId) {
        for &c in &self.w.children[w] {
            self.w.src_in_order[c] = false;
        }
        for c in self.dst_children(x).to_vec() {
            self.w.dst_in_order[c] = false;
        }
        let s1: Vec<WorkId> =
            self.w.children[w].iter().copied().filter(|&c| self.w.w2d[c].is_some_and(|d| self.dst_parent(d) == x)).collect();
        let s2: Vec<NodeId> = self
            .dst_children(x)
            .iter()
            .copied()
            .filter(|&c| self.w.d2w[c].is_some_and(|s| self.w.parent[s] == Some(w)))
            .collect();
        let common = lcs(&s1, &s2, |a, b| self.w.w2d[a] == Some(b));
        for &(a, b) in &common {
            self.w.src_in_order[a] = true;
            self.w.dst_in_order[b] = true;
        }
        for &b in &s2 {
            for &a in &s1 {
                if self.w.w2d[a] == Some(b) && !common.contains(&(a, b)) {
                    self.detach(a);
                    let k = self.find_pos(b);
                    self.ops.push(EditOp::Move { node: a, dst: b, parent: self.public_parent(w), position: k });
                    self.attach(a, w, k);
                    self.w.src_in_order[a] = true;
                    self.w.dst_in_order[b] = true;
                }
            }
        }
    }
}

/// Raw edit operations turning `old` into `new` under `mapping`.
pub fn edit_ops(old: &SyntaxTree, new: &SyntaxTree, mapping: &Mapping) -> Vec<EditOp> {
    Generator::new(old, new, mapping).run()
}

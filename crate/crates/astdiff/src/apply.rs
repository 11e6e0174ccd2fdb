//! Replays an edit script on a copy of the old tree. Kept separate from the
//! generator so that tests can check scripts against the new tree.

use thiserror::Error;

use crate::script::{EditOp, WorkId};
use crate::tree::{Span, SyntaxTree, TreeBuilder};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApplyError {
    #[error("operation {index}: unknown node {node}")]
    UnknownNode { index: usize, node: WorkId },
    #[error("operation {index}: inserted node must be {expected}, got {node}")]
    InsertId { index: usize, expected: WorkId, node: WorkId },
    #[error("operation {index}: position {position} is out of range")]
    Position { index: usize, position: usize },
    #[error("operation {index}: node {node} is detached")]
    Detached { index: usize, node: WorkId },
    #[error("operation {index}: node {node} still has children")]
    DeleteNonLeaf { index: usize, node: WorkId },
    #[error("operation {index}: moving node {node} under its own subtree")]
    Cycle { index: usize, node: WorkId },
    #[error("script leaves {0} top-level nodes")]
    TopLevel(usize),
}

struct Slot {
    kind: String,
    value: String,
    children: Vec<WorkId>,
    parent: Option<Option<WorkId>>,
}

/// Applies `ops` to `old` and returns the resulting tree.
pub fn apply_script(old: &SyntaxTree, ops: &[EditOp]) -> Result<SyntaxTree, ApplyError> {
    let mut slots: Vec<Slot> = old
        .nodes()
        .iter()
        .map(|n| Slot { kind: n.kind.clone(), value: n.value.clone(), children: n.children.clone(), parent: Some(n.parent) })
        .collect();
    let mut top: Vec<WorkId> = vec![SyntaxTree::ROOT];

    for (index, op) in ops.iter().enumerate() {
        let known = |slots: &Vec<Slot>, node: WorkId| {
            if node < slots.len() {
                Ok(())
            } else {
                Err(ApplyError::UnknownNode { index, node })
            }
        };
        match op {
            EditOp::Insert { node, parent, position, kind, value, .. } => {
                if *node != slots.len() {
                    return Err(ApplyError::InsertId { index, expected: slots.len(), node: *node });
                }
                if let Some(p) = parent {
                    known(&slots, *p)?;
                }
                slots.push(Slot { kind: kind.clone(), value: value.clone(), children: Vec::new(), parent: None });
                attach(&mut slots, &mut top, *node, *parent, *position, index)?;
            }
            EditOp::Delete { node } => {
                known(&slots, *node)?;
                if !slots[*node].children.is_empty() {
                    return Err(ApplyError::DeleteNonLeaf { index, node: *node });
                }
                detach(&mut slots, &mut top, *node, index)?;
            }
            EditOp::Update { node, new_value, .. } => {
                known(&slots, *node)?;
                slots[*node].value = new_value.clone();
            }
            EditOp::Move { node, parent, position, .. } => {
                known(&slots, *node)?;
                if let Some(p) = parent {
                    known(&slots, *p)?;
                    let mut cur = Some(*p);
                    while let Some(c) = cur {
                        if c == *node {
                            return Err(ApplyError::Cycle { index, node: *node });
                        }
                        cur = slots[c].parent.flatten();
                    }
                }
                detach(&mut slots, &mut top, *node, index)?;
                attach(&mut slots, &mut top, *node, *parent, *position, index)?;
            }
        }
    }

    match top.as_slice() {
        &[root] => {
            let mut b = TreeBuilder::new();
            let mut stack = vec![(root, None)];
            while let Some((w, parent)) = stack.pop() {
                let id = b.push(parent, slots[w].kind.clone(), slots[w].value.clone(), Span::default());
                stack.extend(slots[w].children.iter().rev().map(|&c| (c, Some(id))));
            }
            Ok(b.finish())
        }
        more => Err(ApplyError::TopLevel(more.len())),
    }
}

fn attach(
    slots: &mut [Slot],
    top: &mut Vec<WorkId>,
    node: WorkId,
    parent: Option<WorkId>,
    position: usize,
    index: usize,
) -> Result<(), ApplyError> {
    let list = match parent {
        Some(p) => &mut slots[p].children,
        None => top,
    };
    if position > list.len() {
        return Err(ApplyError::Position { index, position });
    }
    list.insert(position, node);
    slots[node].parent = Some(parent);
    Ok(())
}

fn detach(slots: &mut [Slot], top: &mut Vec<WorkId>, node: WorkId, index: usize) -> Result<(), ApplyError> {
    let parent = slots[node].parent.take().ok_or(ApplyError::Detached { index, node })?;
    let list = match parent {
        Some(p) => &mut slots[p].children,
        None => top,
    };
    list.retain(|&c| c != node);
    Ok(())
}

//! Syntax tree differencing: GumTree matching, Chawathe edit scripts and
//! per-category change summaries, with a Solidity front-end.

pub mod apply;
pub mod category;
pub mod dirs;
pub mod matcher;
pub mod script;
pub mod sexpr;
pub mod solidity;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use apply::{apply_script, ApplyError};
pub use category::{ActionCounts, Category, CategoryTable, ChangeSummary};
pub use dirs::{diff_dirs, diff_source_sets, DirDiff, DirError, FileDiff, FileStatus};
pub use matcher::{match_trees, Mapping, MatchOptions};
pub use script::{ActionKind, Attribution, EditAction, EditOp};
pub use sexpr::parse_sexpr;
pub use solidity::{parse_solidity, ParseError, ParsedSource};
pub use tree::{NodeId, Span, SyntaxTree, TreeBuilder};

/// Edit script and summary for one pair of trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeDiff {
    pub old_nodes: usize,
    pub new_nodes: usize,
    pub mapped: usize,
    pub actions: Vec<EditAction>,
    pub summary: ChangeSummary,
}

impl TreeDiff {
    pub fn ops(&self) -> impl Iterator<Item = &EditOp> {
        self.actions.iter().map(|a| &a.op)
    }

    pub fn count(&self, kind: ActionKind) -> usize {
        self.ops().filter(|op| op.kind() == kind).count()
    }
}

pub fn diff_trees(old: &SyntaxTree, new: &SyntaxTree, options: MatchOptions, table: &CategoryTable) -> TreeDiff {
    let mapping = match_trees(old, new, options);
    let ops = script::edit_ops(old, new, &mapping);
    let mut summary = ChangeSummary::default();
    let actions = ops
        .into_iter()
        .map(|op| {
            let (tree, node) = match op {
                EditOp::Insert { dst, .. } => (new, dst),
                EditOp::Delete { node } | EditOp::Update { node, .. } | EditOp::Move { node, .. } => (old, node),
            };
            let attribution = table.attribute(&op, old, new, &mapping);
            let node_kind = tree.kind(node).to_string();
            summary.record(attribution, &node_kind);
            EditAction { op, node_kind, line: tree.node(node).span.line, attribution }
        })
        .collect();
    TreeDiff { old_nodes: old.len(), new_nodes: new.len(), mapped: mapping.len(), actions, summary }
}

/// Diff of two Solidity sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceDiff {
    pub old_has_errors: bool,
    pub new_has_errors: bool,
    #[serde(flatten)]
    pub diff: TreeDiff,
}

pub fn diff_sources(old: &str, new: &str, options: MatchOptions, table: &CategoryTable) -> Result<SourceDiff, ParseError> {
    let (a, b) = (parse_solidity(old)?, parse_solidity(new)?);
    Ok(SourceDiff {
        old_has_errors: a.has_errors,
        new_has_errors: b.has_errors,
        diff: diff_trees(&a.tree, &b.tree, options, table),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(old: &str, new: &str) -> TreeDiff {
        let (a, b) = (parse_sexpr(old).unwrap(), parse_sexpr(new).unwrap());
        let d = diff_trees(&a, &b, MatchOptions::default(), &CategoryTable::default());
        let ops: Vec<EditOp> = d.ops().cloned().collect();
        let rebuilt = apply_script(&a, &ops).unwrap();
        assert!(rebuilt.isomorphic_to(&b), "{}\n!=\n{}\n{:#?}", rebuilt.to_sexpr(), b.to_sexpr(), ops);
        d
    }

    #[test]
    fn identical_trees_need_no_actions() {
        let d = check("(a (b:1) (c (d:2) (e:3)))", "(a (b:1) (c (d:2) (e:3)))");
        assert!(d.actions.is_empty());
        assert_eq!(d.mapped, 5);
    }

    #[test]
    fn update_insert_delete_move() {
        check("(a (b:1) (c (d:2) (e:3)))", "(a (b:9) (c (d:2) (e:3)))");
        check("(a (b:1) (c (d:2) (e:3)))", "(a (b:1) (c (d:2) (x:7) (e:3)))");
        check("(a (b:1) (c (d:2) (e:3)))", "(a (c (d:2) (e:3)))");
        check("(a (b:1) (c (d:2) (e:3)) (f (g:4) (h:5)))", "(a (f (g:4) (h:5)) (b:1) (c (d:2) (e:3)))");
        check("(a (b:1))", "(z (y (x:1)))");
        check("(a:1)", "(a:2)");
    }

    #[test]
    fn equality_to_assignment_is_one_update() {
        let old = "(source_file (contract_declaration (identifier:C) (contract_body (function_definition (identifier:f) (function_body (expression_statement (binary_expression:== (identifier:x) (number_literal:1))))))))";
        let new = old.replace("binary_expression:==", "binary_expression:=");
        let d = check(old, &new);
        assert_eq!(d.actions.len(), 1);
        assert_eq!(d.summary.get(Category::ExpressionStatement, ActionKind::Update), 1);
    }

    #[test]
    fn inserted_subtree_counts_once() {
        let old = "(source_file (contract_declaration (identifier:C) (contract_body (function_definition (identifier:f) (function_body (return_statement (identifier:x)))))))";
        let new = "(source_file (contract_declaration (identifier:C) (contract_body (function_definition (identifier:f) (function_body (emit_statement (call_expression (identifier:E) (identifier:y))) (return_statement (identifier:x)))))))";
        let d = check(old, new);
        assert_eq!(d.summary.get(Category::EmitStatement, ActionKind::Insert), 1);
        assert_eq!(d.summary.counted(), 1);
        assert_eq!(d.summary.excluded.values().sum::<u64>(), 3);
    }
}

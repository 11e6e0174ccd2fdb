//! Attribution of edit actions to Solidity construct categories.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::matcher::Mapping;
use crate::script::{ActionKind, Attribution, EditOp};
use crate::tree::{NodeId, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "contract")]
    Contract,
    #[serde(rename = "state variable")]
    StateVariable,
    #[serde(rename = "event")]
    Event,
    #[serde(rename = "modifier")]
    Modifier,
    #[serde(rename = "function")]
    Function,
    #[serde(rename = "parameter")]
    Parameter,
    #[serde(rename = "modifier invocation")]
    ModifierInvocation,
    #[serde(rename = "assembly statement")]
    AssemblyStatement,
    #[serde(rename = "expression statement")]
    ExpressionStatement,
    #[serde(rename = "if statement")]
    IfStatement,
    #[serde(rename = "for statement")]
    ForStatement,
    #[serde(rename = "while statement")]
    WhileStatement,
    #[serde(rename = "revert statement")]
    RevertStatement,
    #[serde(rename = "try statement")]
    TryStatement,
    #[serde(rename = "emit statement")]
    EmitStatement,
    #[serde(rename = "return statement")]
    ReturnStatement,
}

impl Category {
    pub const ALL: [Category; 16] = [
        Self::Contract,
        Self::StateVariable,
        Self::Event,
        Self::Modifier,
        Self::Function,
        Self::Parameter,
        Self::ModifierInvocation,
        Self::AssemblyStatement,
        Self::ExpressionStatement,
        Self::IfStatement,
        Self::ForStatement,
        Self::WhileStatement,
        Self::RevertStatement,
        Self::TryStatement,
        Self::EmitStatement,
        Self::ReturnStatement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Contract => "contract",
            Self::StateVariable => "state variable",
            Self::Event => "event",
            Self::Modifier => "modifier",
            Self::Function => "function",
            Self::Parameter => "parameter",
            Self::ModifierInvocation => "modifier invocation",
            Self::AssemblyStatement => "assembly statement",
            Self::ExpressionStatement => "expression statement",
            Self::IfStatement => "if statement",
            Self::ForStatement => "for statement",
            Self::WhileStatement => "while statement",
            Self::RevertStatement => "revert statement",
            Self::TryStatement => "try statement",
            Self::EmitStatement => "emit statement",
            Self::ReturnStatement => "return statement",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Node kinds per category, plus the kinds whose changes are never counted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    pub entries: Vec<(&'static str, Category)>,
    /// Changes at or below these kinds are dropped.
    pub exclusions: Vec<&'static str>,
    /// Containers that stop the search for an enclosing category, so that a
    /// body edit is not reported as a change of its function or contract.
    pub barriers: Vec<&'static str>,
}

impl Default for CategoryTable {
    fn default() -> Self {
        use Category::*;
        Self {
            entries: vec![
                ("contract_declaration", Contract),
                ("interface_declaration", Contract),
                ("library_declaration", Contract),
                ("state_variable_declaration", StateVariable),
                ("event_definition", Event),
                ("modifier_definition", Modifier),
                ("function_definition", Function),
                ("constructor_definition", Function),
                ("fallback_receive_definition", Function),
                ("parameter", Parameter),
                ("modifier_invocation", ModifierInvocation),
                ("assembly_statement", AssemblyStatement),
                ("expression_statement", ExpressionStatement),
                ("if_statement", IfStatement),
                ("for_statement", ForStatement),
                ("while_statement", WhileStatement),
                ("revert_statement", RevertStatement),
                ("try_statement", TryStatement),
                ("emit_statement", EmitStatement),
                ("return_statement", ReturnStatement),
            ],
            exclusions: vec!["comment", "variable_declaration_statement"],
            barriers: vec!["function_body", "contract_body"],
        }
    }
}

impl CategoryTable {
    pub fn category_of(&self, kind: &str) -> Option<Category> {
        self.entries.iter().find(|(k, _)| *k == kind).map(|&(_, c)| c)
    }

    pub fn is_excluded(&self, kind: &str) -> bool {
        self.exclusions.contains(&kind)
    }

    pub fn is_barrier(&self, kind: &str) -> bool {
        self.barriers.contains(&kind)
    }

    /// Decides where `op` is counted.
    ///
    /// A node of a tracked kind counts in its own cell. Any other node counts
    /// as an update of the nearest tracked ancestor, except that inside an
    /// inserted or deleted subtree only the subtree root is counted.
    pub fn attribute(&self, op: &EditOp, old: &SyntaxTree, new: &SyntaxTree, mapping: &Mapping) -> Attribution {
        let action = op.kind();
        let (tree, node, inside_changed_subtree): (&SyntaxTree, NodeId, bool) = match *op {
            EditOp::Insert { dst, .. } => (new, dst, new.parent(dst).is_some_and(|p| !mapping.is_dst_mapped(p))),
            EditOp::Delete { node } => (old, node, old.parent(node).is_some_and(|p| !mapping.is_src_mapped(p))),
            EditOp::Update { node, .. } | EditOp::Move { node, .. } => (old, node, false),
        };
        let kind = tree.kind(node);
        if let Some(category) = self.category_of(kind) {
            return Attribution::Cell { category, action };
        }
        if self.is_excluded(kind) {
            return Attribution::Excluded;
        }
        for a in tree.ancestors(node) {
            let k = tree.kind(a);
            if self.is_excluded(k) || self.is_barrier(k) {
                return Attribution::Excluded;
            }
            if let Some(category) = self.category_of(k) {
                return if inside_changed_subtree {
                    Attribution::Excluded
                } else {
                    Attribution::Cell { category, action: ActionKind::Update }
                };
            }
        }
        Attribution::Excluded
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub insert: u64,
    pub delete: u64,
    pub update: u64,
    #[serde(rename = "move")]
    pub moved: u64,
}

impl ActionCounts {
    pub fn get(&self, action: ActionKind) -> u64 {
        match action {
            ActionKind::Insert => self.insert,
            ActionKind::Delete => self.delete,
            ActionKind::Update => self.update,
            ActionKind::Move => self.moved,
        }
    }

    fn bump(&mut self, action: ActionKind) {
        match action {
            ActionKind::Insert => self.insert += 1,
            ActionKind::Delete => self.delete += 1,
            ActionKind::Update => self.update += 1,
            ActionKind::Move => self.moved += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.insert + self.delete + self.update + self.moved
    }

    pub fn add(&mut self, other: &ActionCounts) {
        self.insert += other.insert;
        self.delete += other.delete;
        self.update += other.update;
        self.moved += other.moved;
    }
}

/// Action counts for every category; all rows are present even when zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSummary {
    pub categories: BTreeMap<Category, ActionCounts>,
    /// Dropped actions by node kind.
    pub excluded: BTreeMap<String, u64>,
    pub total_actions: u64,
}

impl Default for ChangeSummary {
    fn default() -> Self {
        Self {
            categories: Category::ALL.iter().map(|&c| (c, ActionCounts::default())).collect(),
            excluded: BTreeMap::new(),
            total_actions: 0,
        }
    }
}

impl ChangeSummary {
    pub fn record(&mut self, attribution: Attribution, node_kind: &str) {
        self.total_actions += 1;
        match attribution {
            Attribution::Cell { category, action } => self.categories.entry(category).or_default().bump(action),
            Attribution::Excluded => *self.excluded.entry(node_kind.to_string()).or_default() += 1,
        }
    }

    pub fn get(&self, category: Category, action: ActionKind) -> u64 {
        self.categories.get(&category).map_or(0, |c| c.get(action))
    }

    pub fn merge(&mut self, other: &ChangeSummary) {
        for (c, counts) in &other.categories {
            self.categories.entry(*c).or_default().add(counts);
        }
        for (k, n) in &other.excluded {
            *self.excluded.entry(k.clone()).or_default() += n;
        }
        self.total_actions += other.total_actions;
    }

    pub fn counted(&self) -> u64 {
        self.categories.values().map(ActionCounts::total).sum()
    }

    /// Plain-text table with one row per category.
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<22}{:>8}{:>8}{:>8}{:>8}\n", "category", "insert", "delete", "update", "move");
        for (c, n) in &self.categories {
            out.push_str(&format!("{:<22}{:>8}{:>8}{:>8}{:>8}\n", c.as_str(), n.insert, n.delete, n.update, n.moved));
        }
        let excluded: u64 = self.excluded.values().sum();
        out.push_str(&format!("{} actions, {} counted, {} excluded\n", self.total_actions, self.counted(), excluded));
        out
    }
}

//! ABI breaking-change classification between implementation versions.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::abi::{Abi, AbiFunction, StateMutability};
use crate::primitives::{Address, Selector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BreakingKind {
    Removal,
    ParameterUpdate,
    ReturnChange,
}

impl BreakingKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Removal => "Removal",
            Self::ParameterUpdate => "ParameterUpdate",
            Self::ReturnChange => "ReturnChange",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BreakingChange {
    pub kind: BreakingKind,
    pub function_name: String,
    pub old_signature: String,
    pub new_signature: Option<String>,
    pub old_selector: Selector,
    pub new_selector: Option<Selector>,
    /// Output lists, set for ReturnChange only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_outputs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_outputs: Option<String>,
}

/// Interface differences that cannot break existing linkage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "note", rename_all = "camelCase")]
pub enum InformationalNote {
    FunctionAdded { signature: String },
    MutabilityChanged { signature: String, old: StateMutability, new: StateMutability },
    EventAdded { signature: String },
    EventRemoved { signature: String },
    FallbackChanged { old: bool, new: bool },
    ReceiveChanged { old: bool, new: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompatReport {
    pub proxy: Option<Address>,
    pub old_version: String,
    pub new_version: String,
    pub changes: Vec<BreakingChange>,
    pub informational: Vec<InformationalNote>,
}

impl CompatReport {
    pub fn count(&self, kind: BreakingKind) -> usize {
        self.changes.iter().filter(|c| c.kind == kind).count()
    }

    pub fn with_proxy(mut self, proxy: Address) -> Self {
        self.proxy = Some(proxy);
        self
    }

    /// Plain-text table of the breaking changes.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} -> {}", self.old_version, self.new_version);
        if self.changes.is_empty() {
            out.push_str("  no breaking changes\n");
        } else {
            let rows: Vec<[String; 4]> = self
                .changes
                .iter()
                .map(|c| {
                    let new = match (&c.new_signature, &c.new_outputs) {
                        (Some(sig), Some(outputs)) => format!("{sig} returns {outputs}"),
                        (Some(sig), None) => sig.clone(),
                        (None, _) => "-".to_string(),
                    };
                    let old = match &c.old_outputs {
                        Some(outputs) => format!("{} returns {outputs}", c.old_signature),
                        None => c.old_signature.clone(),
                    };
                    [c.kind.as_str().to_string(), c.old_selector.to_string(), old, new]
                })
                .collect();
            let header = ["kind", "selector", "old", "new"].map(String::from);
            let mut widths = header.clone().map(|h| h.len());
            for row in &rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            for row in std::iter::once(&header).chain(&rows) {
                let cells: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
                let _ = writeln!(out, "  {}", cells.join("  ").trim_end());
            }
        }
        if !self.informational.is_empty() {
            let _ = writeln!(out, "  {} informational note(s)", self.informational.len());
        }
        out
    }
}

/// Classifies every old function that no longer links against `new`.
pub fn diff_abis(old: &Abi, new: &Abi) -> CompatReport {
    let mut changes = Vec::new();
    let mut informational = Vec::new();

    for f in &old.functions {
        let signature = f.signature();
        if let Some(g) = new.function_by_signature(&signature) {
            if f.outputs.iter().map(|p| &p.ty).ne(g.outputs.iter().map(|p| &p.ty)) {
                changes.push(BreakingChange {
                    kind: BreakingKind::ReturnChange,
                    function_name: f.name.clone(),
                    old_signature: signature.clone(),
                    new_signature: Some(signature),
                    old_selector: f.selector(),
                    new_selector: Some(g.selector()),
                    old_outputs: Some(f.output_signature()),
                    new_outputs: Some(g.output_signature()),
                });
            } else if f.mutability != g.mutability {
                informational.push(InformationalNote::MutabilityChanged { signature, old: f.mutability, new: g.mutability });
            }
            continue;
        }
        let replacement = pick_replacement(old, new, &f.name);
        let kind = if replacement.is_some() { BreakingKind::ParameterUpdate } else { BreakingKind::Removal };
        changes.push(BreakingChange {
            kind,
            function_name: f.name.clone(),
            old_signature: signature,
            new_signature: replacement.map(AbiFunction::signature),
            old_selector: f.selector(),
            new_selector: replacement.map(AbiFunction::selector),
            old_outputs: None,
            new_outputs: None,
        });
    }

    for g in &new.functions {
        let signature = g.signature();
        if old.function_by_signature(&signature).is_none() {
            informational.push(InformationalNote::FunctionAdded { signature });
        }
    }
    let old_events: BTreeSet<&String> = old.events.iter().collect();
    let new_events: BTreeSet<&String> = new.events.iter().collect();
    for e in new.events.iter().filter(|e| !old_events.contains(e)) {
        informational.push(InformationalNote::EventAdded { signature: e.clone() });
    }
    for e in old.events.iter().filter(|e| !new_events.contains(e)) {
        informational.push(InformationalNote::EventRemoved { signature: e.clone() });
    }
    if old.has_fallback != new.has_fallback {
        informational.push(InformationalNote::FallbackChanged { old: old.has_fallback, new: new.has_fallback });
    }
    if old.has_receive != new.has_receive {
        informational.push(InformationalNote::ReceiveChanged { old: old.has_receive, new: new.has_receive });
    }

    CompatReport {
        proxy: None,
        old_version: old.version_tag.clone(),
        new_version: new.version_tag.clone(),
        changes,
        informational,
    }
}

/// The new-side counterpart of a changed function: prefer an overload that
/// did not exist before, else any survivor of the same name.
fn pick_replacement<'a>(old: &Abi, new: &'a Abi, name: &str) -> Option<&'a AbiFunction> {
    let survivors: Vec<&AbiFunction> = new.functions.iter().filter(|g| g.name == name).collect();
    survivors.iter().find(|g| old.function_by_signature(&g.signature()).is_none()).or(survivors.first()).copied()
}

/// One report per consecutive pair.
pub fn diff_history(abis: &[Abi]) -> Vec<CompatReport> {
    abis.windows(2).map(|w| diff_abis(&w[0], &w[1])).collect()
}

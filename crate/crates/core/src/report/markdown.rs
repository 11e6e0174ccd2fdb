use std::fmt::Write as _;

use super::{AnalysisReport, Section};

fn section_note<T>(s: &Section<T>) -> Option<String> {
    match s {
        Section::Ok { .. } => None,
        Section::Skipped { reason } => Some(format!("_skipped: {reason}_\n")),
        Section::Failed { error } => Some(format!("_failed: {error}_\n")),
    }
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|")
}

pub(super) fn render(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "# Upgrade analysis for {}\n", r.proxy);
    let _ = writeln!(w, "- tool version: {}", r.tool_version);
    let _ = writeln!(w, "- provider: {}", r.provider);
    let _ = writeln!(w, "- latest block checked: {}", r.history.latest_checked);
    let _ = writeln!(w, "- history queries: {}", r.history.query_count);
    let _ = writeln!(w, "- breaking changes: {}", r.breaking_changes());
    let _ = writeln!(w, "- storage collisions: {}\n", r.collisions());

    let _ = writeln!(w, "## History\n");
    if r.history.records.is_empty() {
        let _ = writeln!(w, "No implementation found.\n");
    } else {
        let _ = writeln!(w, "| # | implementation | activation block |\n|---|---|---|");
        for (i, rec) in r.history.records.iter().enumerate() {
            let _ = writeln!(w, "| {} | {} | {} |", i + 1, rec.implementation, rec.activation_block);
        }
        let _ = writeln!(w);
    }
    if r.history.assumptions_violated {
        let _ = writeln!(w, "**Warning:** the upgrade schedule breaks the search assumptions.\n");
    }

    for (i, p) in r.pairs.iter().enumerate() {
        let _ = writeln!(
            w,
            "## Upgrade {}: {} -> {} (block {})\n",
            i + 1,
            p.old.implementation,
            p.new.implementation,
            p.new.activation_block
        );

        let _ = writeln!(w, "### Interface\n");
        if let Some(note) = section_note(&p.compat) {
            let _ = writeln!(w, "{note}");
        } else if let Some(c) = p.compat.result() {
            if c.changes.is_empty() {
                let _ = writeln!(w, "No breaking changes.\n");
            } else {
                let _ = writeln!(w, "| kind | function | old signature | new signature |\n|---|---|---|---|");
                for ch in &c.changes {
                    let _ = writeln!(
                        w,
                        "| {} | {} | `{}` | {} |",
                        ch.kind.as_str(),
                        cell(&ch.function_name),
                        cell(&ch.old_signature),
                        ch.new_signature.as_deref().map_or("-".to_string(), |s| format!("`{}`", cell(s)))
                    );
                }
                let _ = writeln!(w);
            }
        }

        let _ = writeln!(w, "### Storage\n");
        if let Some(note) = section_note(&p.storage) {
            let _ = writeln!(w, "{note}");
        } else if let Some(s) = p.storage.result() {
            if s.findings.is_empty() {
                let _ = writeln!(w, "Layouts are compatible.\n");
            } else {
                let _ = writeln!(w, "| verdict | slot | offset | old | new | reason |\n|---|---|---|---|---|---|");
                for f in &s.findings {
                    let _ = writeln!(
                        w,
                        "| {:?} | {} | {} | {} {} | {} | {} |",
                        f.verdict,
                        f.slot,
                        f.offset,
                        cell(&f.old_var.type_label),
                        cell(&f.old_var.name),
                        f.new_var.as_ref().map_or("-".to_string(), |v| cell(&format!("{} {}", v.type_label, v.name))),
                        cell(&f.reason)
                    );
                }
                let _ = writeln!(w);
            }
        }

        let _ = writeln!(w, "### Code changes\n");
        if let Some(note) = section_note(&p.diff) {
            let _ = writeln!(w, "{note}");
        } else if let Some(d) = p.diff.result() {
            let _ = writeln!(w, "| structure | insert | delete | update | move |\n|---|---|---|---|---|");
            for (c, n) in d.summary.categories.iter().filter(|(_, n)| n.total() > 0) {
                let _ = writeln!(w, "| {} | {} | {} | {} | {} |", c, n.insert, n.delete, n.update, n.moved);
            }
            let excluded: u64 = d.summary.excluded.values().sum();
            let _ = writeln!(w, "\n{} actions in {} files, {} excluded.\n", d.summary.total_actions, d.files.len(), excluded);
        }
    }

    let _ = writeln!(w, "## Broken historical calls\n");
    if let Some(note) = section_note(&r.usage) {
        let _ = writeln!(w, "{note}");
    } else if let Some(u) = r.usage.result() {
        let _ = writeln!(w, "{} transactions scanned, {} broken.\n", u.scanned, u.broken.len());
        if !u.broken.is_empty() {
            let _ = writeln!(w, "| transaction | block | kind | called | active version |\n|---|---|---|---|---|");
            for b in &u.broken {
                let _ = writeln!(
                    w,
                    "| {} | {} | {} | `{}` | {} |",
                    b.tx_hash,
                    b.block,
                    b.kind.as_str(),
                    cell(&b.matched_old_signature),
                    b.active_version
                );
            }
            let _ = writeln!(w);
        }
    }

    let _ = writeln!(w, "## Initialization\n");
    if let Some(note) = section_note(&r.init) {
        let _ = writeln!(w, "{note}");
    } else if let Some(i) = r.init.result() {
        let _ = writeln!(w, "| target | role | function | status |\n|---|---|---|---|");
        for p in &i.results {
            let _ = writeln!(
                w,
                "| {} | {:?} | {} | {:?} |",
                p.target,
                p.role,
                p.function.as_deref().map_or("-".to_string(), cell),
                p.status
            );
        }
        let _ = writeln!(w);
        if i.results.iter().any(|p| p.status == crate::init_risk::InitStatus::Initializable) {
            let _ = writeln!(w, "A probe that does not revert may still be a no-op; confirm findings manually.\n");
        }
    }

    let _ = writeln!(w, "## Upgrade intentions\n");
    if let Some(note) = section_note(&r.labels) {
        let _ = writeln!(w, "{note}");
    } else if let Some(l) = r.labels.result() {
        let _ = writeln!(w, "{} labelled upgrades, {} label issues.\n", l.records.len(), l.issues.len());
        for (action, n) in l.summary.per_action.iter().filter(|(_, n)| **n > 0) {
            let _ = writeln!(w, "- {action}: {n}");
        }
        let _ = writeln!(w);
    }

    if !r.diagnostics.is_empty() {
        let _ = writeln!(w, "## Diagnostics\n");
        for d in &r.diagnostics {
            let _ = writeln!(w, "- {d}");
        }
    }
    out
}

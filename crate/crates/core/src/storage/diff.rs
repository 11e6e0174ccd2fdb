//! Cross-version comparison of storage layouts.

use serde::{Deserialize, Serialize};

use super::{SlotAssignment, StorageLayout, TypeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Collision,
    SafeDeprecation,
    SafeReservedGap,
    Renamed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VarRef {
    pub name: String,
    #[serde(rename = "type")]
    pub type_label: String,
}

impl From<&SlotAssignment> for VarRef {
    fn from(a: &SlotAssignment) -> Self {
        Self { name: a.name.clone(), type_label: a.type_label.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CollisionFinding {
    pub slot: u64,
    pub offset: u8,
    pub old_var: VarRef,
    pub new_var: Option<VarRef>,
    pub verdict: Verdict,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffOptions {
    /// Maximum edit distance between normalized names for a rename.
    pub fuzzy_threshold: usize,
}

impl Default for DiffOptions {
    fn default() -> Self {
        Self { fuzzy_threshold: 2 }
    }
}

const DEPRECATION_PREFIXES: [&str; 3] = ["_deprecated_", "deprecated_", "__unused"];

fn is_deprecated(name: &str) -> bool {
    DEPRECATION_PREFIXES.iter().any(|p| name.starts_with(p))
}

fn is_reserved_gap(a: &SlotAssignment) -> bool {
    a.class == TypeClass::StaticArray && (a.name.starts_with("__gap") || a.name.starts_with("_reserved"))
}

/// Case-folded, underscore-trimmed names equal or within `threshold` edits.
pub fn fuzzy_name_match(a: &str, b: &str, threshold: usize) -> bool {
    let norm = |s: &str| s.trim_matches('_').to_lowercase();
    let (a, b) = (norm(a), norm(b));
    a == b || strsim::levenshtein(&a, &b) <= threshold
}

fn same_placement(a: &SlotAssignment, b: &SlotAssignment) -> bool {
    a.slot == b.slot && a.offset == b.offset && a.size == b.size && a.spans == b.spans && a.class == b.class
}

fn placement_mismatch(a: &SlotAssignment, b: &SlotAssignment) -> String {
    let mut parts = Vec::new();
    if (a.slot, a.offset) != (b.slot, b.offset) {
        parts.push(format!("moved from slot {} offset {} to slot {} offset {}", a.slot, a.offset, b.slot, b.offset));
    }
    if (a.size, a.spans) != (b.size, b.spans) {
        parts.push(format!("width changed from {}x{} to {}x{}", a.size, a.spans, b.size, b.spans));
    }
    if a.class != b.class {
        parts.push(format!("type changed from {} to {}", a.type_label, b.type_label));
    }
    parts.join("; ")
}

/// Checks that every old variable is still found at its location in `new`.
pub fn diff_layouts(old: &StorageLayout, new: &StorageLayout, options: DiffOptions) -> Vec<CollisionFinding> {
    let mut findings = Vec::new();
    for a in &old.assignments {
        let finding = |b: Option<&SlotAssignment>, verdict, reason: String| CollisionFinding {
            slot: a.slot,
            offset: a.offset,
            old_var: a.into(),
            new_var: b.map(VarRef::from),
            verdict,
            reason,
        };

        if is_reserved_gap(a) {
            let (gap_start, gap_end) = a.byte_range();
            let overlapping: Vec<&SlotAssignment> = new
                .assignments
                .iter()
                .filter(|b| !is_reserved_gap(b) || b.name != a.name)
                .filter(|b| {
                    let (s, e) = b.byte_range();
                    s < gap_end && e > gap_start
                })
                .collect();
            for b in overlapping {
                if is_reserved_gap(b) {
                    continue;
                }
                let (s, e) = b.byte_range();
                if s >= gap_start && e <= gap_end {
                    findings.push(finding(
                        Some(b),
                        Verdict::SafeReservedGap,
                        format!("{} placed inside reserved region {}", b.name, a.name),
                    ));
                } else {
                    findings.push(finding(
                        Some(b),
                        Verdict::Collision,
                        format!("{} overruns reserved region {}", b.name, a.name),
                    ));
                }
            }
            continue;
        }

        let (start, _) = a.byte_range();
        let covering = new.assignments.iter().find(|b| {
            let (s, e) = b.byte_range();
            s <= start && start < e
        });
        let Some(b) = covering else {
            findings.push(finding(None, Verdict::Collision, format!("{} no longer has a variable at its location", a.name)));
            continue;
        };
        if !same_placement(a, b) {
            let reason = format!("{} overlaps {}: {}", a.name, b.name, placement_mismatch(a, b));
            findings.push(finding(Some(b), Verdict::Collision, reason));
        } else if a.name == b.name {
        } else if is_deprecated(&b.name) {
            findings.push(finding(Some(b), Verdict::SafeDeprecation, format!("{} deprecated as {}", a.name, b.name)));
        } else if fuzzy_name_match(&a.name, &b.name, options.fuzzy_threshold) {
            findings.push(finding(Some(b), Verdict::Renamed, format!("{} renamed to {}", a.name, b.name)));
        } else {
            findings.push(finding(Some(b), Verdict::Collision, format!("{} replaced by unrelated variable {}", a.name, b.name)));
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::super::{compute_layout, decl::parse_type, VarDecl};
    use super::*;

    fn layout(types: &[(&str, &str)]) -> StorageLayout {
        let decls: Vec<VarDecl> = types.iter().map(|(n, t)| VarDecl::new(*n, parse_type(t).unwrap())).collect();
        compute_layout(&decls)
    }

    fn verdicts(f: &[CollisionFinding]) -> Vec<(Verdict, Option<&str>)> {
        f.iter().map(|f| (f.verdict, f.new_var.as_ref().map(|v| v.name.as_str()))).collect()
    }

    #[test]
    fn fuzzy_names() {
        assert!(fuzzy_name_match("_owner", "owner", 2));
        assert!(fuzzy_name_match("rewardRate", "rewardrate", 0));
        assert!(!fuzzy_name_match("owner", "treasury", 2));
    }

    #[test]
    fn enum_inserted_into_packed_word() {
        let old = layout(&[
            ("redemptionAsset", "address"),
            ("vaultProxy", "address"),
            ("useDepositApprovals", "bool"),
            ("useRedemptionApprovals", "bool"),
            ("useTransferApprovals", "bool"),
        ]);
        let new = layout(&[
            ("redemptionAsset", "address"),
            ("vaultProxy", "address"),
            ("depositMode", "enum DepositMode{Direct,Approved,Blocked}"),
            ("useDepositApprovals", "bool"),
            ("useRedemptionApprovals", "bool"),
            ("useTransferApprovals", "bool"),
        ]);
        let findings = diff_layouts(&old, &new, DiffOptions::default());
        assert_eq!(findings[0].verdict, Verdict::Collision);
        assert_eq!(findings[0].old_var.name, "useDepositApprovals");
        assert_eq!(findings[0].new_var.as_ref().unwrap().name, "depositMode");
        assert_eq!((findings[0].slot, findings[0].offset), (1, 20));
        assert!(findings.iter().all(|f| f.verdict == Verdict::Collision));
    }

    #[test]
    fn deprecation_and_reserved_gap() {
        let old = layout(&[("rewardToken", "address"), ("x", "uint256"), ("_reserved", "uint256[100]")]);
        let new = layout(&[
            ("_deprecated_rewardToken", "address"),
            ("x", "uint256"),
            ("harvesterAddress", "address"),
            ("rewardTokenAddresses", "address[]"),
            ("_reserved", "uint256[98]"),
        ]);
        let findings = diff_layouts(&old, &new, DiffOptions::default());
        assert_eq!(
            verdicts(&findings),
            vec![
                (Verdict::SafeDeprecation, Some("_deprecated_rewardToken")),
                (Verdict::SafeReservedGap, Some("harvesterAddress")),
                (Verdict::SafeReservedGap, Some("rewardTokenAddresses")),
            ]
        );
    }

    #[test]
    fn gap_overrun_is_collision() {
        let old = layout(&[("__gap", "uint256[2]"), ("tail", "uint256")]);
        let new = layout(&[("a", "uint256"), ("b", "uint256"), ("c", "uint256"), ("tail", "uint256")]);
        let findings = diff_layouts(&old, &new, DiffOptions::default());
        assert_eq!(findings[0].verdict, Verdict::SafeReservedGap);
        assert_eq!(findings[1].verdict, Verdict::SafeReservedGap);
        assert!(findings.iter().any(|f| f.old_var.name == "tail" && f.verdict == Verdict::Collision));
    }

    #[test]
    fn rename_and_removal() {
        let old = layout(&[("_owner", "address"), ("rate", "uint256"), ("last", "uint256")]);
        let new = layout(&[("owner", "address"), ("treasury", "uint256")]);
        let findings = diff_layouts(&old, &new, DiffOptions::default());
        assert_eq!(
            verdicts(&findings),
            vec![(Verdict::Renamed, Some("owner")), (Verdict::Collision, Some("treasury")), (Verdict::Collision, None)]
        );
    }

    #[test]
    fn identical_layouts_have_no_findings() {
        let l = layout(&[("a", "uint8"), ("b", "mapping(address => uint256)"), ("__gap", "uint256[50]")]);
        assert!(diff_layouts(&l, &l, DiffOptions::default()).is_empty());
    }
}

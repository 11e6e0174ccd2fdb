//! Upgrade-intention labels.
//!
//! Labels are assigned by people; this module only holds the taxonomy,
//! validates goal/category/action triples against it and counts them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::Address;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Goal {
    Preventive,
    Adaptive,
    Perfective,
    Corrective,
    Others,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "Documentation Clarification")]
    DocumentationClarification,
    #[serde(rename = "Code Optimization")]
    CodeOptimization,
    #[serde(rename = "Programming Language Change")]
    ProgrammingLanguageChange,
    #[serde(rename = "SDK Update")]
    SdkUpdate,
    #[serde(rename = "Usability Improvement")]
    UsabilityImprovement,
    #[serde(rename = "Security Improvement")]
    SecurityImprovement,
    #[serde(rename = "Bug Fix")]
    BugFix,
    #[serde(rename = "Legal Aspects Change")]
    LegalAspectsChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "Comment Improvement")]
    CommentImprovement,
    #[serde(rename = "Comment Addition")]
    CommentAddition,
    #[serde(rename = "Code Refactoring")]
    CodeRefactoring,
    #[serde(rename = "Feature Removal")]
    FeatureRemoval,
    #[serde(rename = "Redundancy Removal")]
    RedundancyRemoval,
    #[serde(rename = "Solidity Version Update")]
    SolidityVersionUpdate,
    #[serde(rename = "OpenZeppelin Library Update")]
    OpenZeppelinLibraryUpdate,
    #[serde(rename = "Functionality Addition")]
    FunctionalityAddition,
    #[serde(rename = "Functionality Update")]
    FunctionalityUpdate,
    #[serde(rename = "Traceability Addition")]
    TraceabilityAddition,
    #[serde(rename = "Interoperability Addition")]
    InteroperabilityAddition,
    #[serde(rename = "Exception Handling Enhancement")]
    ExceptionHandlingEnhancement,
    #[serde(rename = "Access Control Management")]
    AccessControlManagement,
    #[serde(rename = "Governance Update")]
    GovernanceUpdate,
    #[serde(rename = "Reentrancy Prevention Addition")]
    ReentrancyPreventionAddition,
    #[serde(rename = "Safe Operations Use")]
    SafeOperationsUse,
    #[serde(rename = "Wrong Logic Correction")]
    WrongLogicCorrection,
    #[serde(rename = "Code Typo Correction")]
    CodeTypoCorrection,
    #[serde(rename = "Error Message Correction")]
    ErrorMessageCorrection,
    #[serde(rename = "License Update")]
    LicenseUpdate,
    #[serde(rename = "Copyright Update")]
    CopyrightUpdate,
}

/// One row of the taxonomy. Shares are the fraction of studied upgrades
/// carrying the label and are kept as documentation only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaxonomyRow {
    pub goal: Goal,
    pub category: Category,
    pub action: Action,
    pub category_share: Option<u8>,
    pub action_share: u8,
}

const fn row(goal: Goal, category: Category, action: Action, category_share: Option<u8>, action_share: u8) -> TaxonomyRow {
    TaxonomyRow { goal, category, action, category_share, action_share }
}

pub const TAXONOMY: [TaxonomyRow; 21] = {
    use Action::*;
    use Category::*;
    use Goal::*;
    [
        row(Preventive, DocumentationClarification, CommentImprovement, Some(64), 40),
        row(Preventive, DocumentationClarification, CommentAddition, Some(64), 48),
        row(Preventive, CodeOptimization, CodeRefactoring, Some(50), 17),
        row(Preventive, CodeOptimization, FeatureRemoval, Some(50), 41),
        row(Preventive, CodeOptimization, RedundancyRemoval, Some(50), 30),
        row(Adaptive, ProgrammingLanguageChange, SolidityVersionUpdate, None, 14),
        row(Adaptive, SdkUpdate, OpenZeppelinLibraryUpdate, None, 3),
        row(Perfective, UsabilityImprovement, FunctionalityAddition, Some(93), 69),
        row(Perfective, UsabilityImprovement, FunctionalityUpdate, Some(93), 78),
        row(Perfective, UsabilityImprovement, TraceabilityAddition, Some(93), 27),
        row(Perfective, UsabilityImprovement, InteroperabilityAddition, Some(93), 23),
        row(Perfective, UsabilityImprovement, ExceptionHandlingEnhancement, Some(93), 24),
        row(Perfective, SecurityImprovement, AccessControlManagement, Some(26), 16),
        row(Perfective, SecurityImprovement, GovernanceUpdate, Some(26), 23),
        row(Perfective, SecurityImprovement, ReentrancyPreventionAddition, Some(26), 15),
        row(Perfective, SecurityImprovement, SafeOperationsUse, Some(26), 4),
        row(Corrective, BugFix, WrongLogicCorrection, Some(25), 15),
        row(Corrective, BugFix, CodeTypoCorrection, Some(25), 11),
        row(Corrective, BugFix, ErrorMessageCorrection, Some(25), 9),
        row(Others, LegalAspectsChange, LicenseUpdate, Some(12), 4),
        row(Others, LegalAspectsChange, CopyrightUpdate, Some(12), 9),
    ]
};

/// Display name of any taxonomy enum, taken from its serde name.
fn display_name<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("taxonomy enums serialize as strings"),
    }
}

macro_rules! display_via_serde {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&display_name(self))
            }
        }
    )*};
}
display_via_serde!(Goal, Category, Action);

/// A validated taxonomy triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLabel")]
pub struct IntentLabel {
    pub goal: Goal,
    pub category: Category,
    pub action: Action,
}

impl IntentLabel {
    pub fn row(&self) -> &'static TaxonomyRow {
        TAXONOMY.iter().find(|r| r.action == self.action).expect("every action has a row")
    }
}

impl From<&TaxonomyRow> for IntentLabel {
    fn from(r: &TaxonomyRow) -> Self {
        Self { goal: r.goal, category: r.category, action: r.action }
    }
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {} / {}", self.goal, self.category, self.action)
    }
}

/// An unvalidated label as written by a person.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLabel {
    pub goal: String,
    pub category: String,
    pub action: String,
}

impl RawLabel {
    pub fn new(goal: &str, category: &str, action: &str) -> Self {
        Self { goal: goal.into(), category: category.into(), action: action.into() }
    }
}

impl TryFrom<RawLabel> for IntentLabel {
    type Error = String;

    fn try_from(raw: RawLabel) -> Result<Self, String> {
        validate_label(&raw).map_err(|issue| issue.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelIssue {
    pub index: usize,
    pub label: RawLabel,
    pub reason: String,
    pub suggestions: Vec<IntentLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelValidation {
    pub valid: Vec<IntentLabel>,
    pub invalid: Vec<LabelIssue>,
}

impl LabelValidation {
    pub fn is_ok(&self) -> bool {
        self.invalid.is_empty()
    }
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Spellings from the original table that differ from the canonical names.
const ACTION_ALIASES: [(&str, Action); 2] = [
    ("openzeppelin libary update", Action::OpenZeppelinLibraryUpdate),
    ("access control mangement", Action::AccessControlManagement),
];

fn lookup_action(name: &str) -> Option<Action> {
    let key = normalize(name);
    TAXONOMY
        .iter()
        .map(|r| r.action)
        .find(|a| normalize(&a.to_string()) == key)
        .or_else(|| ACTION_ALIASES.iter().find(|(alias, _)| *alias == key).map(|(_, a)| *a))
}

fn validate_label(raw: &RawLabel) -> Result<IntentLabel, Box<LabelIssue>> {
    let issue = |reason: String, suggestions: Vec<IntentLabel>| {
        Box::new(LabelIssue { index: 0, label: raw.clone(), reason, suggestions })
    };
    let Some(action) = lookup_action(&raw.action) else {
        return Err(issue(format!("unknown action {:?}", raw.action), nearest_actions(raw)));
    };
    let row = TAXONOMY.iter().find(|r| r.action == action).expect("action comes from the table");
    let goal_ok = normalize(&row.goal.to_string()) == normalize(&raw.goal);
    let category_ok = normalize(&row.category.to_string()) == normalize(&raw.category);
    if goal_ok && category_ok {
        return Ok(row.into());
    }
    Err(issue(
        format!("{} belongs to {} / {}, not {} / {}", row.action, row.goal, row.category, raw.goal, raw.category),
        vec![row.into()],
    ))
}

/// Ranks rows by shared words with the action, then by the stated
/// category, then by edit distance.
fn nearest_actions(raw: &RawLabel) -> Vec<IntentLabel> {
    let key = normalize(&raw.action);
    let words: BTreeSet<&str> = key.split(' ').collect();
    let category = normalize(&raw.category);
    let mut scored: Vec<(usize, bool, usize, &TaxonomyRow)> = TAXONOMY
        .iter()
        .map(|r| {
            let name = normalize(&r.action.to_string());
            let shared = name.split(' ').filter(|w| words.contains(w)).count();
            let other_category = normalize(&r.category.to_string()) != category;
            (usize::MAX - shared, other_category, strsim::levenshtein(&key, &name), r)
        })
        .collect();
    scored.sort_by_key(|&(shared, other, distance, r)| (shared, other, distance, r.action));
    scored.into_iter().take(3).map(|(.., r)| r.into()).collect()
}

/// Accepts only rows of the taxonomy; every rejection carries suggestions.
pub fn validate_labels(labels: &[RawLabel]) -> LabelValidation {
    let mut out = LabelValidation::default();
    for (index, raw) in labels.iter().enumerate() {
        match validate_label(raw) {
            Ok(label) => out.valid.push(label),
            Err(issue) => out.invalid.push(LabelIssue { index, ..*issue }),
        }
    }
    out
}

/// Labels attached to one upgrade, keyed by proxy and version pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabeledUpgrade {
    pub proxy: Address,
    pub old_version: Address,
    pub new_version: Address,
    pub labels: Vec<IntentLabel>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawLabeledUpgrade {
    proxy: Address,
    old_version: Address,
    new_version: Address,
    labels: Vec<RawLabel>,
}

#[derive(Debug, Error)]
pub enum LabelFileError {
    #[error("invalid label file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A side-file entry with invalid labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecordIssue {
    pub record: usize,
    pub issue: LabelIssue,
}

/// Reads a label side-file, keeping valid labels and reporting the rest.
pub fn load_label_file(document: &[u8]) -> Result<(Vec<LabeledUpgrade>, Vec<RecordIssue>), LabelFileError> {
    let raw: Vec<RawLabeledUpgrade> = serde_json::from_slice(document)?;
    let mut records = Vec::with_capacity(raw.len());
    let mut issues = Vec::new();
    for (record, entry) in raw.into_iter().enumerate() {
        let validation = validate_labels(&entry.labels);
        issues.extend(validation.invalid.into_iter().map(|issue| RecordIssue { record, issue }));
        records.push(LabeledUpgrade {
            proxy: entry.proxy,
            old_version: entry.old_version,
            new_version: entry.new_version,
            labels: validation.valid,
        });
    }
    Ok((records, issues))
}

pub const INTENTION_BUCKETS: [&str; 6] = ["0", "1", "2", "3", "4", ">=5"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabelSummary {
    pub records: u64,
    pub per_action: BTreeMap<Action, u64>,
    pub per_category: BTreeMap<Category, u64>,
    pub per_goal: BTreeMap<Goal, u64>,
    /// Records by number of distinct intentions.
    pub intention_counts: BTreeMap<String, u64>,
}

/// Counts labels per action, category and goal, after removing duplicate
/// labels within a record. A record counts once per category and goal.
pub fn summarize_labels(records: &[LabeledUpgrade]) -> LabelSummary {
    let mut summary = LabelSummary {
        records: records.len() as u64,
        per_action: TAXONOMY.iter().map(|r| (r.action, 0)).collect(),
        per_category: TAXONOMY.iter().map(|r| (r.category, 0)).collect(),
        per_goal: TAXONOMY.iter().map(|r| (r.goal, 0)).collect(),
        intention_counts: INTENTION_BUCKETS.iter().map(|b| (b.to_string(), 0)).collect(),
    };
    for record in records {
        let distinct: BTreeSet<&IntentLabel> = record.labels.iter().collect();
        for label in &distinct {
            *summary.per_action.entry(label.action).or_default() += 1;
        }
        for category in distinct.iter().map(|l| l.category).collect::<BTreeSet<_>>() {
            *summary.per_category.entry(category).or_default() += 1;
        }
        for goal in distinct.iter().map(|l| l.goal).collect::<BTreeSet<_>>() {
            *summary.per_goal.entry(goal).or_default() += 1;
        }
        let bucket = INTENTION_BUCKETS[distinct.len().min(5)];
        *summary.intention_counts.entry(bucket.to_string()).or_default() += 1;
    }
    summary
}

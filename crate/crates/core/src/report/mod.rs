//! End-to-end analysis of one proxy and the report it produces.

mod markdown;
mod pipeline;

use serde::{Deserialize, Serialize};
use upscan_astdiff::{ChangeSummary, EditAction, FileStatus};

use crate::compat::CompatReport;
use crate::history::{UpgradeHistory, UpgradeRecord};
use crate::init_risk::{InitProbeResult, InitStatus};
use crate::intent::{LabelSummary, LabeledUpgrade, RecordIssue};
use crate::primitives::Address;
use crate::storage::{CollisionFinding, Verdict};
use crate::usage::UsageScanReport;

pub use pipeline::{
    load_inputs, run_pipeline, run_pipeline_with_metadata, PipelineConfig, PipelineError, VersionInputs, VersionSources,
};

/// Bumped on any incompatible change to the JSON report.
pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of one report section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum Section<T> {
    Ok { result: T },
    Skipped { reason: String },
    Failed { error: String },
}

impl<T> Section<T> {
    pub fn ok(result: T) -> Self {
        Self::Ok { result }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Self::Skipped { reason: reason.into() }
    }

    pub fn failed(error: impl ToString) -> Self {
        Self::Failed { error: error.to_string() }
    }

    pub fn result(&self) -> Option<&T> {
        match self {
            Self::Ok { result } => Some(result),
            _ => None,
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self, Self::Skipped { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StorageSection {
    pub findings: Vec<CollisionFinding>,
    pub collisions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FileEntry {
    pub path: String,
    pub status: FileStatus,
    pub actions: usize,
    pub old_has_errors: bool,
    pub new_has_errors: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edit_script: Option<Vec<EditAction>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiffSection {
    pub summary: ChangeSummary,
    pub files: Vec<FileEntry>,
}

/// Analyses of one upgrade, from `old` to `new`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairReport {
    pub old: UpgradeRecord,
    pub new: UpgradeRecord,
    pub compat: Section<CompatReport>,
    pub storage: Section<StorageSection>,
    pub diff: Section<DiffSection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InitSection {
    pub results: Vec<InitProbeResult>,
    /// Targets left unprobed for lack of an ABI.
    pub missing_abi: Vec<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabelSection {
    pub records: Vec<LabeledUpgrade>,
    pub summary: LabelSummary,
    pub issues: Vec<RecordIssue>,
    /// Records for this proxy whose version pair is not an upgrade in the history.
    pub unmatched: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub provider: String,
    pub proxy: Address,
    pub history: UpgradeHistory,
    pub pairs: Vec<PairReport>,
    pub usage: Section<UsageScanReport>,
    pub init: Section<InitSection>,
    pub labels: Section<LabelSection>,
    pub diagnostics: Vec<String>,
}

impl AnalysisReport {
    /// True when any section reports something that needs attention.
    pub fn has_findings(&self) -> bool {
        self.breaking_changes() > 0
            || self.collisions() > 0
            || self.usage.result().is_some_and(|u| !u.broken.is_empty())
            || self.init.result().is_some_and(|i| i.results.iter().any(|r| r.status == InitStatus::Initializable))
    }

    pub fn breaking_changes(&self) -> usize {
        self.pairs.iter().filter_map(|p| p.compat.result()).map(|c| c.changes.len()).sum()
    }

    pub fn collisions(&self) -> usize {
        self.pairs
            .iter()
            .filter_map(|p| p.storage.result())
            .flat_map(|s| &s.findings)
            .filter(|f| f.verdict == Verdict::Collision)
            .count()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn from_json(document: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(document)
    }

    pub fn to_markdown(&self) -> String {
        markdown::render(self)
    }
}

//! Pairing of Solidity source sets by relative path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::{CategoryTable, ChangeSummary};
use crate::matcher::MatchOptions;
use crate::solidity::{empty_source_tree, parse_solidity, ParseError};
use crate::{diff_trees, TreeDiff};

#[derive(Debug, Error)]
pub enum DirError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileStatus {
    Added,
    Removed,
    Modified,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FileDiff {
    pub path: String,
    pub status: FileStatus,
    pub old_has_errors: bool,
    pub new_has_errors: bool,
    pub diff: TreeDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirDiff {
    pub files: Vec<FileDiff>,
    pub summary: ChangeSummary,
}

/// Reads every `.sol` file below `dir`, keyed by `/`-separated relative path.
fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DirError + '_ {
    move |source| DirError::Io { path: path.to_path_buf(), source }
}

pub fn collect_sources(dir: &Path) -> Result<BTreeMap<String, String>, DirError> {
    let mut out = BTreeMap::new();
    let mut pending = vec![dir.to_path_buf()];
    while let Some(d) = pending.pop() {
        for entry in std::fs::read_dir(&d).map_err(io(&d))? {
            let path = entry.map_err(io(&d))?.path();
            if path.is_dir() {
                pending.push(path);
            } else if path.extension().is_some_and(|e| e == "sol") {
                let rel = path.strip_prefix(dir).expect("below dir");
                let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                out.insert(key, std::fs::read_to_string(&path).map_err(io(&path))?);
            }
        }
    }
    Ok(out)
}

/// Diffs two source sets. A file present on one side only is compared with
/// an empty `source_file` tree.
pub fn diff_source_sets(
    old: &BTreeMap<String, String>,
    new: &BTreeMap<String, String>,
    options: MatchOptions,
    table: &CategoryTable,
) -> Result<DirDiff, DirError> {
    let parse = |path: &str, src: &str| parse_solidity(src).map_err(|source| DirError::Parse { path: path.to_string(), source });
    let mut paths: Vec<&String> = old.keys().chain(new.keys()).collect();
    paths.sort();
    paths.dedup();

    let files = paths
        .par_iter()
        .map(|&path| {
            let (a, b) = (old.get(path), new.get(path));
            let status = match (a, b) {
                (None, _) => FileStatus::Added,
                (_, None) => FileStatus::Removed,
                (Some(x), Some(y)) if x == y => FileStatus::Unchanged,
                _ => FileStatus::Modified,
            };
            let old_parsed = a.map(|s| parse(path, s)).transpose()?;
            let new_parsed = match status {
                FileStatus::Unchanged => None,
                _ => b.map(|s| parse(path, s)).transpose()?,
            };
            let empty = empty_source_tree();
            let old_tree = old_parsed.as_ref().map_or(&empty, |p| &p.tree);
            let diff = match status {
                FileStatus::Unchanged => TreeDiff {
                    old_nodes: old_tree.len(),
                    new_nodes: old_tree.len(),
                    mapped: old_tree.len(),
                    actions: Vec::new(),
                    summary: ChangeSummary::default(),
                },
                _ => diff_trees(old_tree, new_parsed.as_ref().map_or(&empty, |p| &p.tree), options, table),
            };
            let old_has_errors = old_parsed.as_ref().is_some_and(|p| p.has_errors);
            Ok(FileDiff {
                path: path.clone(),
                status,
                old_has_errors,
                new_has_errors: match status {
                    FileStatus::Unchanged => old_has_errors,
                    _ => new_parsed.as_ref().is_some_and(|p| p.has_errors),
                },
                diff,
            })
        })
        .collect::<Result<Vec<_>, DirError>>()?;
    let mut summary = ChangeSummary::default();
    for f in &files {
        summary.merge(&f.diff.summary);
    }
    Ok(DirDiff { files, summary })
}

/// Diffs two directories; a missing directory counts as an empty source set.
pub fn diff_dirs(
    old: Option<&Path>,
    new: Option<&Path>,
    options: MatchOptions,
    table: &CategoryTable,
) -> Result<DirDiff, DirError> {
    let load = |d: Option<&Path>| d.map(collect_sources).transpose().map(Option::unwrap_or_default);
    diff_source_sets(&load(old)?, &load(new)?, options, table)
}

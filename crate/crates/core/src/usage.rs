//! Historical transaction scan for calls broken by upgrades.
//!
//! Versions are keyed by implementation address. A transaction is checked
//! against the version active at the end of the block before it, so a call
//! in the activation block itself already sees the new implementation.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abi::Abi;
use crate::chain::{TransactionRecord, TxStatus};
use crate::compat::BreakingKind;
use crate::history::{UpgradeHistory, UpgradeRecord};
use crate::primitives::{decode_hex, Address, BlockNumber, Selector, TxHash};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BrokenUsage {
    pub tx_hash: TxHash,
    pub block: BlockNumber,
    pub selector: Selector,
    pub matched_old_signature: String,
    /// Implementation that last exposed `matched_old_signature`.
    pub matched_version: Address,
    pub kind: BreakingKind,
    pub active_version: Address,
    pub tx_status: TxStatus,
}

/// A call that links, but whose return type changed at some earlier upgrade.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReturnChangeCandidate {
    pub tx_hash: TxHash,
    pub block: BlockNumber,
    pub selector: Selector,
    pub signature: String,
    pub active_version: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UsageScanReport {
    pub scanned: u64,
    pub broken: Vec<BrokenUsage>,
    pub return_change_candidates: Vec<ReturnChangeCandidate>,
    /// Selectors found in no known version, with occurrence counts.
    pub unknown_selectors: BTreeMap<Selector, u64>,
    /// Calls to a selector that only a later version exposes.
    pub later_version_only: u64,
    /// Transactions whose active version has no ABI.
    pub skipped_missing_abi: u64,
    pub before_first_version: u64,
    /// Plain transfers and calldata shorter than a selector.
    pub without_selector: u64,
}

impl UsageScanReport {
    pub fn count(&self, kind: BreakingKind) -> usize {
        self.broken.iter().filter(|b| b.kind == kind).count()
    }
}

/// Record in force for a transaction mined in `block`.
pub fn active_version_at(history: &UpgradeHistory, block: BlockNumber) -> Option<&UpgradeRecord> {
    history.active_at(block)
}

enum Outcome {
    NoSelector,
    BeforeFirst,
    MissingAbi,
    Linked,
    Candidate(ReturnChangeCandidate),
    Broken(BrokenUsage),
    LaterOnly,
    Unknown(Selector),
}

struct Index<'a> {
    versions: Vec<Option<&'a Abi>>,
    /// selector -> indices of versions whose ABI exposes it, ascending.
    exposure: HashMap<Selector, Vec<usize>>,
    /// selector -> first version whose outputs differ from its predecessor.
    return_changed: HashMap<Selector, usize>,
}

impl<'a> Index<'a> {
    fn build(history: &UpgradeHistory, abis: &'a BTreeMap<Address, Abi>) -> Self {
        let versions: Vec<Option<&Abi>> = history.records.iter().map(|r| abis.get(&r.implementation)).collect();
        let mut exposure: HashMap<Selector, Vec<usize>> = HashMap::new();
        for (i, abi) in versions.iter().enumerate() {
            for f in abi.iter().flat_map(|a| &a.functions) {
                exposure.entry(f.selector()).or_default().push(i);
            }
        }
        let mut return_changed = HashMap::new();
        for i in 1..versions.len() {
            let (Some(prev), Some(cur)) = (versions[i - 1], versions[i]) else { continue };
            for f in &cur.functions {
                let changed = prev
                    .function_by_signature(&f.signature())
                    .is_some_and(|g| g.outputs.iter().map(|p| &p.ty).ne(f.outputs.iter().map(|p| &p.ty)));
                if changed {
                    return_changed.entry(f.selector()).or_insert(i);
                }
            }
        }
        Self { versions, exposure, return_changed }
    }

    fn classify(&self, history: &UpgradeHistory, tx: &TransactionRecord) -> Outcome {
        let Some(selector) = tx.selector() else { return Outcome::NoSelector };
        let active = history.records.partition_point(|r| r.activation_block <= tx.block);
        let Some(active) = active.checked_sub(1) else { return Outcome::BeforeFirst };
        let Some(abi) = self.versions[active] else { return Outcome::MissingAbi };
        let active_version = history.records[active].implementation;

        if let Some(f) = abi.function_by_selector(selector) {
            return match self.return_changed.get(&selector) {
                Some(&since) if since <= active => Outcome::Candidate(ReturnChangeCandidate {
                    tx_hash: tx.hash,
                    block: tx.block,
                    selector,
                    signature: f.signature(),
                    active_version,
                }),
                _ => Outcome::Linked,
            };
        }
        let Some(exposed) = self.exposure.get(&selector) else { return Outcome::Unknown(selector) };
        let Some(&earlier) = exposed.iter().rev().find(|&&i| i < active) else { return Outcome::LaterOnly };
        let old = self.versions[earlier]
            .and_then(|a| a.function_by_selector(selector))
            .expect("exposure index points at a version exposing the selector");
        let kind = if abi.has_function_named(&old.name) { BreakingKind::ParameterUpdate } else { BreakingKind::Removal };
        Outcome::Broken(BrokenUsage {
            tx_hash: tx.hash,
            block: tx.block,
            selector,
            matched_old_signature: old.signature(),
            matched_version: history.records[earlier].implementation,
            kind,
            active_version,
            tx_status: tx.status,
        })
    }
}

/// Flags every transaction whose selector the active version no longer
/// exposes but an earlier version did. Output order follows `txs`.
pub fn scan(history: &UpgradeHistory, abis: &BTreeMap<Address, Abi>, txs: &[TransactionRecord]) -> UsageScanReport {
    let index = Index::build(history, abis);
    let outcomes: Vec<Outcome> = txs.par_iter().map(|tx| index.classify(history, tx)).collect();
    let mut report = UsageScanReport { scanned: txs.len() as u64, ..Default::default() };
    for outcome in outcomes {
        match outcome {
            Outcome::NoSelector => report.without_selector += 1,
            Outcome::BeforeFirst => report.before_first_version += 1,
            Outcome::MissingAbi => report.skipped_missing_abi += 1,
            Outcome::Linked => {}
            Outcome::Candidate(c) => report.return_change_candidates.push(c),
            Outcome::Broken(b) => report.broken.push(b),
            Outcome::LaterOnly => report.later_version_only += 1,
            Outcome::Unknown(s) => *report.unknown_selectors.entry(s).or_default() += 1,
        }
    }
    report
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("transaction export: {0}")]
    Csv(#[from] csv::Error),
    #[error("transaction export line {line}: {reason}")]
    Record { line: u64, reason: String },
}

/// Reads a transaction export: one `hash,to,block,calldata,status` record
/// per line. Lines starting with `#` are comments; an optional header line
/// beginning with `hash` is skipped.
pub fn read_tx_export<R: Read>(reader: R) -> Result<Vec<TransactionRecord>, ExportError> {
    let mut csv =
        csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |reason: String| ExportError::Record { line, reason };
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.get(0) == Some("hash") {
            continue;
        }
        if record.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", record.len())));
        }
        let calldata = match &record[3] {
            "" | "0x" => Vec::new(),
            hex => decode_hex(hex).map_err(|e| err(e.to_string()))?,
        };
        out.push(TransactionRecord {
            hash: record[0].parse().map_err(|e: crate::primitives::HexError| err(e.to_string()))?,
            to: record[1].parse().map_err(|e: crate::primitives::HexError| err(e.to_string()))?,
            block: record[2].parse().map_err(|e: std::num::ParseIntError| err(format!("block: {e}")))?,
            calldata,
            status: match record[4].to_ascii_lowercase().as_str() {
                "succeeded" | "success" | "1" => TxStatus::Succeeded,
                "failed" | "fail" | "0" => TxStatus::Failed,
                other => return Err(err(format!("unknown status {other:?}"))),
            },
        });
    }
    Ok(out)
}

pub fn write_tx_export(txs: &[TransactionRecord]) -> String {
    let mut out = String::from("# hash,to,block,calldata,status\n");
    for tx in txs {
        let status = match tx.status {
            TxStatus::Succeeded => "succeeded",
            TxStatus::Failed => "failed",
        };
        out.push_str(&format!("{},{},{},{},{}\n", tx.hash, tx.to, tx.block, crate::primitives::encode_hex(&tx.calldata), status));
    }
    out
}

//! Reconstruction of a proxy's implementation-upgrade history.
//!
//! [`detect_history`] bisects the block range on the value returned by the
//! proxy's `implementation()` function. An interval whose endpoints report the
//! same implementation is assumed to contain no upgrade and is pruned, so the
//! number of archival queries grows with the number of upgrades times the
//! logarithm of the chain length rather than with the chain length.
//!
//! The pruning is exact only if a proxy never returns to an implementation it
//! has abandoned and upgrades at most once per block. When the provider can
//! tell that a schedule breaks either assumption, the returned history carries
//! the `assumptions_violated` flag.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{CallResult, CallStatus, ChainProvider, ProviderError, ScheduleAnomaly, IMPLEMENTATION_SELECTOR};
use crate::primitives::{Address, BlockNumber};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpgradeRecord {
    pub implementation: Address,
    pub activation_block: BlockNumber,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpgradeHistory {
    pub proxy: Address,
    pub records: Vec<UpgradeRecord>,
    pub latest_checked: BlockNumber,
    pub query_count: u64,
    #[serde(default)]
    pub assumptions_violated: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<ScheduleAnomaly>,
}

impl UpgradeHistory {
    pub fn empty(proxy: Address, latest_checked: BlockNumber) -> Self {
        Self { proxy, records: Vec::new(), latest_checked, query_count: 0, assumptions_violated: false, anomalies: Vec::new() }
    }

    /// Record in force at the end of `block`, if any.
    pub fn active_at(&self, block: BlockNumber) -> Option<&UpgradeRecord> {
        let idx = self.records.partition_point(|r| r.activation_block <= block);
        idx.checked_sub(1).map(|i| &self.records[i])
    }

    /// Consecutive `(previous, next)` version pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (&UpgradeRecord, &UpgradeRecord)> {
        self.records.windows(2).map(|w| (&w[0], &w[1]))
    }
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("provider failed at block {block} after {queries} queries ({} upgrades found so far): {source}", partial.len())]
    Provider {
        block: BlockNumber,
        queries: u64,
        partial: Vec<UpgradeRecord>,
        #[source]
        source: ProviderError,
    },
    #[error("cannot decode implementation() at block {block}: {reason}")]
    Decode { block: BlockNumber, reason: String },
}

/// Interprets an `implementation()` result. The zero address and empty
/// accounts both mean "no implementation".
pub fn decode_implementation(result: &CallResult) -> Result<Option<Address>, String> {
    match result.status {
        CallStatus::NotAContract => Ok(None),
        CallStatus::Revert => Err("call reverted".to_string()),
        CallStatus::Success => {
            let data = &result.returndata;
            if data.len() != 32 {
                return Err(format!("expected a 32-byte word, got {} bytes", data.len()));
            }
            if data[..12].iter().any(|b| *b != 0) {
                return Err("high-order bytes of address word are not zero".to_string());
            }
            let mut bytes = [0u8; 20];
            bytes.copy_from_slice(&data[12..]);
            let address = Address(bytes);
            Ok((!address.is_zero()).then_some(address))
        }
    }
}

struct Prober<'a, P: ?Sized> {
    provider: &'a P,
    proxy: Address,
    queries: u64,
}

impl<'a, P: ChainProvider + ?Sized> Prober<'a, P> {
    fn query(&mut self, block: BlockNumber, found: &[UpgradeRecord]) -> Result<Option<Address>, DetectError> {
        self.queries += 1;
        let result = self
            .provider
            .call_at_block(self.proxy, &IMPLEMENTATION_SELECTOR.0, block)
            .map_err(|source| DetectError::Provider { block, queries: self.queries, partial: found.to_vec(), source })?;
        decode_implementation(&result).map_err(|reason| DetectError::Decode { block, reason })
    }
}

#[derive(Clone, Copy)]
struct Interval {
    from: BlockNumber,
    left: Option<Address>,
    end: BlockNumber,
    right: Option<Address>,
}

/// Finds every block at which `proxy`'s implementation changes in `0..=latest`.
///
/// Block 0 is taken to have no implementation. Uses an explicit work stack,
/// so recursion depth is not a concern for long chains.
pub fn detect_history<P: ChainProvider + ?Sized>(
    proxy: Address,
    provider: &P,
    latest: BlockNumber,
) -> Result<UpgradeHistory, DetectError> {
    let mut history = UpgradeHistory::empty(proxy, latest);
    if latest == 0 {
        return Ok(history);
    }
    let mut prober = Prober { provider, proxy, queries: 0 };
    let mut records = Vec::new();
    let current = prober.query(latest, &records)?;
    let mut stack = vec![Interval { from: 0, left: None, end: latest, right: current }];

    while let Some(iv) = stack.pop() {
        if iv.from + 1 == iv.end {
            if iv.right != iv.left {
                if let Some(implementation) = iv.right {
                    records.push(UpgradeRecord { implementation, activation_block: iv.end });
                }
            }
            continue;
        }
        let mid = iv.from + (iv.end - iv.from) / 2;
        let at_mid = prober.query(mid, &records)?;
        if at_mid != iv.right {
            stack.push(Interval { from: mid, left: at_mid, end: iv.end, right: iv.right });
        }
        if at_mid != iv.left {
            stack.push(Interval { from: iv.from, left: iv.left, end: mid, right: at_mid });
        }
    }

    records.sort_by_key(|r| r.activation_block);
    history.records = records;
    history.query_count = prober.queries;
    flag_assumptions(&mut history, provider);
    Ok(history)
}

/// Ground truth by querying every block in `0..=latest`.
pub fn linear_scan_oracle<P: ChainProvider + ?Sized>(
    proxy: Address,
    provider: &P,
    latest: BlockNumber,
) -> Result<UpgradeHistory, DetectError> {
    let mut history = UpgradeHistory::empty(proxy, latest);
    let mut prober = Prober { provider, proxy, queries: 0 };
    let mut records = Vec::new();
    let mut previous = None;
    for block in 0..=latest {
        let value = prober.query(block, &records)?;
        if value != previous {
            if let Some(implementation) = value {
                records.push(UpgradeRecord { implementation, activation_block: block });
            }
        }
        previous = value;
    }
    history.records = records;
    history.query_count = prober.queries;
    flag_assumptions(&mut history, provider);
    Ok(history)
}

fn flag_assumptions<P: ChainProvider + ?Sized>(history: &mut UpgradeHistory, provider: &P) {
    let mut seen = std::collections::HashSet::new();
    let repeated = history.records.iter().any(|r| !seen.insert(r.implementation));
    history.anomalies = provider.schedule_anomalies(history.proxy).unwrap_or_default();
    history.assumptions_violated = repeated || !history.anomalies.is_empty();
}

/// `2·(k+1)·⌈log₂ latest⌉ + 2`: the query budget for `k` upgrades.
pub fn query_bound(upgrades: usize, latest: BlockNumber) -> u64 {
    let log = if latest <= 1 { 0 } else { 64 - (latest - 1).leading_zeros() as u64 };
    2 * (upgrades as u64 + 1) * log + 2
}

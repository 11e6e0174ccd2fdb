use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CallResult, ChainProvider, ProviderError, TransactionRecord, IMPLEMENTATION_SELECTOR};
use crate::primitives::{encode_hex, keccak256, Address, BlockNumber};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitGuard {
    Guarded,
    Unguarded,
}

/// A way a proxy's schedule breaks the assumptions of the history search.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleAnomaly {
    /// More than one upgrade recorded in the same block.
    MultipleUpgradesInBlock { block: BlockNumber },
    /// An implementation is reinstated after having been replaced.
    ReusedImplementation { implementation: Address },
    /// An upgrade at block 0 cannot be observed, since block 0 is assumed empty.
    GenesisActivation,
    /// An entry resets the implementation to the zero address.
    ZeroImplementation { block: BlockNumber },
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read fixture {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid fixture document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("transaction {hash} at block {block} is beyond latest block {latest}")]
    TransactionBeyondLatest { hash: String, block: BlockNumber, latest: BlockNumber },
    #[error("schedule entry for {proxy} at block {block} is beyond latest block {latest}")]
    ScheduleBeyondLatest { proxy: Address, block: BlockNumber, latest: BlockNumber },
}

/// Deterministic chain description; the on-disk JSON format of test chains.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixtureChain {
    pub latest: BlockNumber,
    #[serde(default)]
    pub schedules: BTreeMap<Address, Vec<(BlockNumber, Address)>>,
    #[serde(default)]
    pub transactions: Vec<TransactionRecord>,
    #[serde(default)]
    pub init_guards: BTreeMap<Address, InitGuard>,
}

impl FixtureChain {
    pub fn new(latest: BlockNumber) -> Self {
        Self { latest, ..Default::default() }
    }

    /// Implementation set on `proxy` at the end of `block`, zero when unset.
    pub fn implementation_at(&self, proxy: Address, block: BlockNumber) -> Address {
        self.schedules
            .get(&proxy)
            .and_then(|entries| {
                let idx = entries.partition_point(|(b, _)| *b <= block);
                idx.checked_sub(1).map(|i| entries[i].1)
            })
            .unwrap_or(Address::ZERO)
    }

    pub fn anomalies(&self, proxy: Address) -> Vec<ScheduleAnomaly> {
        let Some(entries) = self.schedules.get(&proxy) else {
            return Vec::new();
        };
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        let mut previous: Option<(BlockNumber, Address)> = None;
        for &(block, implementation) in entries {
            if block == 0 {
                out.insert(ScheduleAnomaly::GenesisActivation);
            }
            if implementation.is_zero() {
                out.insert(ScheduleAnomaly::ZeroImplementation { block });
            }
            if let Some((prev_block, prev_impl)) = previous {
                if prev_block == block {
                    out.insert(ScheduleAnomaly::MultipleUpgradesInBlock { block });
                }
                if prev_impl != implementation && !seen.insert(implementation) {
                    out.insert(ScheduleAnomaly::ReusedImplementation { implementation });
                }
            } else {
                seen.insert(implementation);
            }
            previous = Some((block, implementation));
        }
        out.into_iter().collect()
    }

    fn normalize(&mut self) -> Result<(), FixtureError> {
        for (proxy, entries) in &mut self.schedules {
            // Stable: for duplicated blocks the later entry stays last and wins.
            entries.sort_by_key(|(block, _)| *block);
            if let Some(&(block, _)) = entries.iter().find(|(b, _)| *b > self.latest) {
                return Err(FixtureError::ScheduleBeyondLatest { proxy: *proxy, block, latest: self.latest });
            }
        }
        if let Some(tx) = self.transactions.iter().find(|tx| tx.block > self.latest) {
            return Err(FixtureError::TransactionBeyondLatest {
                hash: tx.hash.to_string(),
                block: tx.block,
                latest: self.latest,
            });
        }
        Ok(())
    }
}

/// Per-method request counters kept by the fixture backend.
#[derive(Debug, Default)]
pub struct RequestLog {
    eth_call: AtomicU64,
    eth_block_number: AtomicU64,
    transactions: AtomicU64,
}

impl RequestLog {
    /// Counts keyed by the JSON-RPC method each request corresponds to.
    pub fn snapshot(&self) -> BTreeMap<&'static str, u64> {
        BTreeMap::from([
            ("eth_call", self.eth_call.load(Ordering::Relaxed)),
            ("eth_blockNumber", self.eth_block_number.load(Ordering::Relaxed)),
            ("eth_getBlockByNumber", self.transactions.load(Ordering::Relaxed)),
        ])
    }

    /// Requests whose method could modify chain state.
    pub fn state_mutating(&self) -> u64 {
        self.snapshot().iter().filter(|(method, _)| is_state_mutating(method)).map(|(_, n)| n).sum()
    }

    pub fn total(&self) -> u64 {
        self.snapshot().values().sum()
    }
}

fn is_state_mutating(method: &str) -> bool {
    matches!(method, "eth_sendTransaction" | "eth_sendRawTransaction")
}

/// In-memory provider answering from a [`FixtureChain`].
#[derive(Debug)]
pub struct FixtureProvider {
    chain: FixtureChain,
    contracts: HashSet<Address>,
    digest: [u8; 32],
    log: RequestLog,
}

impl FixtureProvider {
    pub fn new(mut chain: FixtureChain) -> Result<Self, FixtureError> {
        chain.normalize()?;
        let contracts = chain
            .schedules
            .iter()
            .flat_map(|(proxy, entries)| std::iter::once(*proxy).chain(entries.iter().map(|(_, a)| *a)))
            .chain(chain.init_guards.keys().copied())
            .filter(|a| !a.is_zero())
            .collect();
        let canonical = serde_json::to_vec(&chain)?;
        Ok(Self { digest: keccak256(&canonical), chain, contracts, log: RequestLog::default() })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, FixtureError> {
        Self::new(serde_json::from_slice(bytes)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| FixtureError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&bytes)
    }

    pub fn chain(&self) -> &FixtureChain {
        &self.chain
    }

    pub fn request_log(&self) -> &RequestLog {
        &self.log
    }

    fn check_block(&self, block: BlockNumber) -> Result<(), ProviderError> {
        if block > self.chain.latest {
            return Err(ProviderError::BlockOutOfRange { requested: block, latest: self.chain.latest });
        }
        Ok(())
    }
}

impl ChainProvider for FixtureProvider {
    fn call_at_block(&self, target: Address, calldata: &[u8], block: BlockNumber) -> Result<CallResult, ProviderError> {
        self.log.eth_call.fetch_add(1, Ordering::Relaxed);
        self.check_block(block)?;
        if calldata.starts_with(&IMPLEMENTATION_SELECTOR.0) && self.chain.schedules.contains_key(&target) {
            let implementation = self.chain.implementation_at(target, block);
            return Ok(CallResult::success(implementation.to_word().to_vec()));
        }
        if let Some(guard) = self.chain.init_guards.get(&target) {
            return Ok(match guard {
                InitGuard::Unguarded => CallResult::success(Vec::new()),
                InitGuard::Guarded => CallResult::revert(Vec::new()),
            });
        }
        if self.contracts.contains(&target) {
            return Ok(CallResult::revert(Vec::new()));
        }
        Ok(CallResult::not_a_contract())
    }

    fn latest_block(&self) -> Result<BlockNumber, ProviderError> {
        self.log.eth_block_number.fetch_add(1, Ordering::Relaxed);
        Ok(self.chain.latest)
    }

    fn transactions_to(
        &self,
        target: Address,
        from: BlockNumber,
        to: BlockNumber,
    ) -> Result<Vec<TransactionRecord>, ProviderError> {
        self.log.transactions.fetch_add(1, Ordering::Relaxed);
        if from > to {
            return Err(ProviderError::InvalidRange { from, to });
        }
        self.check_block(to)?;
        let mut txs: Vec<_> =
            self.chain.transactions.iter().filter(|tx| tx.to == target && (from..=to).contains(&tx.block)).cloned().collect();
        txs.sort_by_key(|tx| tx.block);
        Ok(txs)
    }

    fn fingerprint(&self) -> String {
        format!("fixture:keccak256:{}", &encode_hex(&self.digest)[2..])
    }

    fn schedule_anomalies(&self, proxy: Address) -> Option<Vec<ScheduleAnomaly>> {
        Some(self.chain.anomalies(proxy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{CallStatus, TxStatus};
    use crate::primitives::TxHash;

    fn addr(n: u64) -> Address {
        Address::from_low_u64(n)
    }

    fn provider(schedule: Vec<(BlockNumber, Address)>, latest: BlockNumber) -> FixtureProvider {
        let mut chain = FixtureChain::new(latest);
        chain.schedules.insert(addr(PROXY), schedule);
        FixtureProvider::new(chain).unwrap()
    }

    const PROXY: u64 = 0xb0;

    fn tx(n: u64, to: Address, block: BlockNumber) -> TransactionRecord {
        TransactionRecord { hash: TxHash::from_low_u64(n), to, block, calldata: vec![1, 2, 3, 4], status: TxStatus::Succeeded }
    }

    #[test]
    fn implementation_before_first_upgrade_is_zero() {
        let p = provider(vec![(10, addr(0xa))], 2000);
        let r = p.call_at_block(addr(PROXY), &IMPLEMENTATION_SELECTOR.0, 9).unwrap();
        assert_eq!(r.status, CallStatus::Success);
        assert_eq!(r.returndata, Address::ZERO.to_word().to_vec());
    }

    #[test]
    fn implementation_at_activation_block() {
        let p = provider(vec![(10, addr(0xa))], 2000);
        let r = p.call_at_block(addr(PROXY), &IMPLEMENTATION_SELECTOR.0, 10).unwrap();
        assert_eq!(r, CallResult::success(addr(0xa).to_word().to_vec()));
    }

    #[test]
    fn unknown_address_is_not_a_contract() {
        let p = provider(vec![(10, addr(0xa))], 2000);
        let r = p.call_at_block(addr(0x999), &IMPLEMENTATION_SELECTOR.0, 10).unwrap();
        assert_eq!(r, CallResult::not_a_contract());
        assert!(r.returndata.is_empty());
    }

    #[test]
    fn block_beyond_latest_is_rejected() {
        let p = provider(vec![], 5);
        assert_eq!(
            p.call_at_block(addr(PROXY), &IMPLEMENTATION_SELECTOR.0, 6),
            Err(ProviderError::BlockOutOfRange { requested: 6, latest: 5 })
        );
    }

    #[test]
    fn latest_echoes_fixture() {
        assert_eq!(provider(vec![], 2000).latest_block().unwrap(), 2000);
        assert_eq!(provider(vec![], 0).latest_block().unwrap(), 0);
    }

    #[test]
    fn transactions_filter_and_keep_intra_block_order() {
        let target = addr(PROXY);
        let mut chain = FixtureChain::new(100);
        chain.transactions = vec![
            tx(1, target, 50),
            tx(2, target, 10),
            tx(3, addr(0x77), 20),
            tx(4, target, 10),
            tx(5, target, 99),
            tx(6, target, 30),
        ];
        let p = FixtureProvider::new(chain).unwrap();
        let got: Vec<u64> = p.transactions_to(target, 10, 60).unwrap().iter().map(|t| t.hash.0[31] as u64).collect();
        assert_eq!(got, vec![2, 4, 6, 1]);
        assert!(p.transactions_to(target, 0, 5).unwrap().is_empty());
        assert_eq!(p.transactions_to(target, 7, 3), Err(ProviderError::InvalidRange { from: 7, to: 3 }));
    }

    #[test]
    fn empty_fixture_has_no_transactions() {
        let p = FixtureProvider::new(FixtureChain::new(10)).unwrap();
        assert!(p.transactions_to(addr(1), 0, 10).unwrap().is_empty());
    }

    #[test]
    fn init_guards_answer_calls() {
        let mut chain = FixtureChain::new(10);
        chain.init_guards.insert(addr(1), InitGuard::Guarded);
        chain.init_guards.insert(addr(2), InitGuard::Unguarded);
        let p = FixtureProvider::new(chain).unwrap();
        assert_eq!(p.call_at_block(addr(1), &[0x81, 0x29, 0xfc, 0x1c], 10).unwrap().status, CallStatus::Revert);
        assert_eq!(p.call_at_block(addr(2), &[0x81, 0x29, 0xfc, 0x1c], 10).unwrap().status, CallStatus::Success);
        assert_eq!(p.request_log().state_mutating(), 0);
        assert_eq!(p.request_log().snapshot()["eth_call"], 2);
    }

    #[test]
    fn json_schema_round_trips() {
        let doc = r#"{
            "latest": 2000,
            "schedules": {"0x00000000000000000000000000000000000000b0": [[1000, "0x000000000000000000000000000000000000000B"], [10, "0x000000000000000000000000000000000000000a"]]},
            "transactions": [{"hash": "0x0000000000000000000000000000000000000000000000000000000000000001",
                              "to": "0x00000000000000000000000000000000000000b0", "block": 1500,
                              "calldata": "0x12345678", "status": "failed"}],
            "initGuards": {"0x000000000000000000000000000000000000000a": "unguarded"}
        }"#;
        let p = FixtureProvider::from_json(doc.as_bytes()).unwrap();
        // Entries are sorted on load.
        assert_eq!(p.chain().schedules[&addr(PROXY)][0], (10, addr(0xa)));
        assert_eq!(p.chain().transactions[0].status, TxStatus::Failed);
        let again = serde_json::to_string(p.chain()).unwrap();
        let reparsed = FixtureProvider::from_json(again.as_bytes()).unwrap();
        assert_eq!(reparsed.chain(), p.chain());
        assert_eq!(reparsed.fingerprint(), p.fingerprint());
    }

    #[test]
    fn anomalies_are_reported() {
        let mut chain = FixtureChain::new(100);
        chain.schedules.insert(addr(PROXY), vec![(0, addr(1)), (5, addr(2)), (5, addr(3)), (9, addr(1))]);
        let found = chain.anomalies(addr(PROXY));
        assert!(found.contains(&ScheduleAnomaly::GenesisActivation));
        assert!(found.contains(&ScheduleAnomaly::MultipleUpgradesInBlock { block: 5 }));
        assert!(found.contains(&ScheduleAnomaly::ReusedImplementation { implementation: addr(1) }));
        assert!(chain.anomalies(addr(0x1234)).is_empty());
    }

    #[test]
    fn duplicate_block_later_entry_wins() {
        let p = provider(vec![(5, addr(2)), (5, addr(3))], 10);
        assert_eq!(p.chain().implementation_at(addr(PROXY), 5), addr(3));
    }
}

//! Uniform access to historical chain state.
//!
//! Two backends implement [`ChainProvider`]: [`FixtureProvider`], a
//! deterministic in-memory chain loaded from JSON, and [`RpcProvider`], which
//! talks to an archive node over the standard JSON-RPC wire protocol.

mod fixture;
mod metadata;
mod rpc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{hex_bytes, Address, BlockNumber, Selector, TxHash};

pub use fixture::{FixtureChain, FixtureError, FixtureProvider, InitGuard, RequestLog, ScheduleAnomaly};
pub use metadata::{ContractBundle, EtherscanClient, FixtureRegistry, MetadataError, MetadataSource};
pub use rpc::{RetryPolicy, RpcProvider};

/// `implementation()`; the query the history search is built on.
pub const IMPLEMENTATION_SELECTOR: Selector = Selector([0x5c, 0x60, 0xda, 0x1b]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallStatus {
    Success,
    Revert,
    NotAContract,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallResult {
    pub status: CallStatus,
    #[serde(with = "hex_bytes")]
    pub returndata: Vec<u8>,
}

impl CallResult {
    pub fn success(returndata: Vec<u8>) -> Self {
        Self { status: CallStatus::Success, returndata }
    }

    pub fn revert(returndata: Vec<u8>) -> Self {
        Self { status: CallStatus::Revert, returndata }
    }

    pub fn not_a_contract() -> Self {
        Self { status: CallStatus::NotAContract, returndata: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxStatus {
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub hash: TxHash,
    pub to: Address,
    pub block: BlockNumber,
    #[serde(with = "hex_bytes")]
    pub calldata: Vec<u8>,
    pub status: TxStatus,
}

impl TransactionRecord {
    pub fn selector(&self) -> Option<Selector> {
        Selector::from_calldata(&self.calldata)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    /// Network or HTTP level failure; worth retrying.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("block {requested} is beyond the latest block {latest}")]
    BlockOutOfRange { requested: BlockNumber, latest: BlockNumber },
    #[error("invalid block range {from}..={to}")]
    InvalidRange { from: BlockNumber, to: BlockNumber },
    /// The node answered with a JSON-RPC error object other than a revert.
    #[error("rpc error {code}: {message}")]
    Rpc { code: i64, message: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

/// Read-only access to chain state. Implementations must be safe to share
/// between threads; no method ever submits a state-changing transaction.
pub trait ChainProvider: Send + Sync {
    /// Simulates a call against the state at the end of `block`.
    fn call_at_block(&self, target: Address, calldata: &[u8], block: BlockNumber) -> Result<CallResult, ProviderError>;

    /// The chain tip, captured once per provider instance.
    fn latest_block(&self) -> Result<BlockNumber, ProviderError>;

    /// Top-level transactions sent to `target` in `from..=to`, in chain order.
    fn transactions_to(
        &self,
        target: Address,
        from: BlockNumber,
        to: BlockNumber,
    ) -> Result<Vec<TransactionRecord>, ProviderError>;

    /// Short stable description of the backend, embedded in reports.
    fn fingerprint(&self) -> String;

    /// Whether the backend knows that `proxy`'s upgrade schedule breaks the
    /// history search's assumptions. `None` when it cannot tell.
    fn schedule_anomalies(&self, _proxy: Address) -> Option<Vec<ScheduleAnomaly>> {
        None
    }
}

impl<P: ChainProvider + ?Sized> ChainProvider for &P {
    fn call_at_block(&self, target: Address, calldata: &[u8], block: BlockNumber) -> Result<CallResult, ProviderError> {
        (**self).call_at_block(target, calldata, block)
    }

    fn latest_block(&self) -> Result<BlockNumber, ProviderError> {
        (**self).latest_block()
    }

    fn transactions_to(
        &self,
        target: Address,
        from: BlockNumber,
        to: BlockNumber,
    ) -> Result<Vec<TransactionRecord>, ProviderError> {
        (**self).transactions_to(target, from, to)
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }

    fn schedule_anomalies(&self, proxy: Address) -> Option<Vec<ScheduleAnomaly>> {
        (**self).schedule_anomalies(proxy)
    }
}

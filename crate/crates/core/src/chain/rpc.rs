use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;
use std::time::Duration;

use serde_json::{json, Value};

use super::{CallResult, ChainProvider, ProviderError, TransactionRecord, TxStatus};
use crate::primitives::{decode_hex, encode_hex, Address, BlockNumber, TxHash};

/// Capped exponential backoff for transport failures.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, initial_backoff: Duration::from_millis(250), max_backoff: Duration::from_secs(2) }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

/// Archive-node backend speaking standard Ethereum JSON-RPC.
///
/// Transaction history is gathered by walking `eth_getBlockByNumber` over the
/// requested range and fetching a receipt per matching transaction, so the
/// cost is linear in the range length.
pub struct RpcProvider {
    url: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
    next_id: AtomicU64,
    tip: OnceLock<BlockNumber>,
    caller: Address,
}

/// Sender used for simulated calls; an address nobody controls.
const SIMULATION_CALLER: Address = Address([
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0xa1, 0x1e,
]);

impl RpcProvider {
    pub fn new(url: impl Into<String>) -> Self {
        let config =
            ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(30))).http_status_as_error(false).build();
        Self {
            url: url.into(),
            agent: config.into(),
            retry: RetryPolicy::default(),
            next_id: AtomicU64::new(1),
            tip: OnceLock::new(),
            caller: SIMULATION_CALLER,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn request(&self, method: &str, params: Value) -> Result<Value, ProviderError> {
        match self.request_raw(method, params)? {
            Reply::Result(value) => Ok(value),
            Reply::Reverted(_) => Err(ProviderError::Rpc { code: 3, message: format!("{method}: execution reverted") }),
        }
    }

    fn request_raw(&self, method: &str, params: Value) -> Result<Reply, ProviderError> {
        let mut attempt = 0;
        loop {
            match self.request_once(method, &params) {
                Err(e) if e.is_retryable() && attempt + 1 < self.retry.attempts => {
                    std::thread::sleep(self.retry.delay(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn request_once(&self, method: &str, params: &Value) -> Result<Reply, ProviderError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let body = json!({ "jsonrpc": "2.0", "id": id, "method": method, "params": params });
        let mut response = self.agent.post(&self.url).send_json(&body).map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(ProviderError::Transport(format!("http status {status}")));
        }
        let reply: Value = response.body_mut().read_json().map_err(|e| ProviderError::Malformed(format!("{method}: {e}")))?;
        if let Some(err) = reply.get("error") {
            let code = err.get("code").and_then(Value::as_i64).unwrap_or(0);
            let message = err.get("message").and_then(Value::as_str).unwrap_or_default().to_string();
            // Nodes report reverted calls either with code 3 or a textual marker.
            if code == 3 || message.contains("revert") {
                let data = err.get("data").map(parse_bytes).transpose()?.unwrap_or_default();
                return Ok(Reply::Reverted(data));
            }
            return Err(ProviderError::Rpc { code, message });
        }
        reply
            .get("result")
            .cloned()
            .map(Reply::Result)
            .ok_or_else(|| ProviderError::Malformed(format!("{method}: missing result")))
    }

    fn code_at(&self, target: Address, block: BlockNumber) -> Result<Vec<u8>, ProviderError> {
        let result = self.request("eth_getCode", json!([target, block_tag(block)]))?;
        parse_bytes(&result)
    }

    fn block_transactions(&self, block: BlockNumber) -> Result<Vec<Value>, ProviderError> {
        let result = self.request("eth_getBlockByNumber", json!([block_tag(block), true]))?;
        match result.get("transactions") {
            Some(Value::Array(txs)) => Ok(txs.clone()),
            _ if result.is_null() => Err(ProviderError::Malformed(format!("block {block} not found"))),
            _ => Err(ProviderError::Malformed(format!("block {block} has no transaction list"))),
        }
    }

    fn receipt_status(&self, hash: TxHash) -> Result<TxStatus, ProviderError> {
        let receipt = self.request("eth_getTransactionReceipt", json!([hash]))?;
        match receipt.get("status").and_then(Value::as_str) {
            Some("0x1") => Ok(TxStatus::Succeeded),
            Some(_) => Ok(TxStatus::Failed),
            None => Err(ProviderError::Malformed(format!("receipt for {hash} has no status"))),
        }
    }
}

enum Reply {
    Result(Value),
    Reverted(Vec<u8>),
}

fn block_tag(block: BlockNumber) -> String {
    format!("0x{block:x}")
}

fn parse_quantity(value: &Value) -> Result<u64, ProviderError> {
    let s = value.as_str().ok_or_else(|| ProviderError::Malformed(format!("expected quantity, got {value}")))?;
    let digits = s.strip_prefix("0x").ok_or_else(|| ProviderError::Malformed(format!("bad quantity {s}")))?;
    u64::from_str_radix(digits, 16).map_err(|_| ProviderError::Malformed(format!("bad quantity {s}")))
}

fn parse_bytes(value: &Value) -> Result<Vec<u8>, ProviderError> {
    let s = value.as_str().ok_or_else(|| ProviderError::Malformed(format!("expected hex data, got {value}")))?;
    decode_hex(s).map_err(|e| ProviderError::Malformed(e.to_string()))
}

fn parse_field<T: std::str::FromStr>(tx: &Value, key: &str) -> Result<T, ProviderError>
where
    T::Err: std::fmt::Display,
{
    let s = tx.get(key).and_then(Value::as_str).ok_or_else(|| ProviderError::Malformed(format!("transaction missing {key}")))?;
    s.parse().map_err(|e: T::Err| ProviderError::Malformed(format!("{key}: {e}")))
}

impl ChainProvider for RpcProvider {
    fn call_at_block(&self, target: Address, calldata: &[u8], block: BlockNumber) -> Result<CallResult, ProviderError> {
        let latest = self.latest_block()?;
        if block > latest {
            return Err(ProviderError::BlockOutOfRange { requested: block, latest });
        }
        let call = json!({ "from": self.caller, "to": target, "data": encode_hex(calldata) });
        let result = match self.request_raw("eth_call", json!([call, block_tag(block)]))? {
            Reply::Result(value) => value,
            Reply::Reverted(data) => return Ok(CallResult::revert(data)),
        };
        let returndata = parse_bytes(&result)?;
        if returndata.is_empty() && self.code_at(target, block)?.is_empty() {
            return Ok(CallResult::not_a_contract());
        }
        Ok(CallResult::success(returndata))
    }

    fn latest_block(&self) -> Result<BlockNumber, ProviderError> {
        if let Some(tip) = self.tip.get() {
            return Ok(*tip);
        }
        let tip = parse_quantity(&self.request("eth_blockNumber", json!([]))?)?;
        Ok(*self.tip.get_or_init(|| tip))
    }

    fn transactions_to(
        &self,
        target: Address,
        from: BlockNumber,
        to: BlockNumber,
    ) -> Result<Vec<TransactionRecord>, ProviderError> {
        if from > to {
            return Err(ProviderError::InvalidRange { from, to });
        }
        let latest = self.latest_block()?;
        if to > latest {
            return Err(ProviderError::BlockOutOfRange { requested: to, latest });
        }
        let mut out = Vec::new();
        for block in from..=to {
            for tx in self.block_transactions(block)? {
                let recipient = match tx.get("to") {
                    Some(Value::String(s)) => s.parse::<Address>().map_err(|e| ProviderError::Malformed(e.to_string()))?,
                    _ => continue, // contract creation
                };
                if recipient != target {
                    continue;
                }
                let hash: TxHash = parse_field(&tx, "hash")?;
                let calldata = parse_bytes(tx.get("input").unwrap_or(&Value::String("0x".into())))?;
                out.push(TransactionRecord { hash, to: recipient, block, calldata, status: self.receipt_status(hash)? });
            }
        }
        Ok(out)
    }

    fn fingerprint(&self) -> String {
        // Scheme and host only; hosted endpoints embed API keys in the path.
        let (scheme, rest) = self.url.split_once("://").unwrap_or(("http", self.url.as_str()));
        let host = rest.split(['/', '?']).next().unwrap_or_default();
        format!("rpc:{scheme}://{host}")
    }
}

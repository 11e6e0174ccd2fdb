//! Thin client for verified-source registries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::primitives::Address;

/// Verified source and ABI for one contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContractBundle {
    pub address: Address,
    #[serde(default)]
    pub contract_name: String,
    #[serde(default)]
    pub compiler_version: String,
    /// Raw ABI JSON document, as published by the registry.
    #[serde(default)]
    pub abi: Option<String>,
    /// Source files keyed by path.
    #[serde(default)]
    pub sources: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("registry transport error: {0}")]
    Transport(String),
    #[error("registry rejected the request: {0}")]
    Api(String),
    #[error("cannot read registry entry {path}: {reason}")]
    Registry { path: String, reason: String },
}

pub trait MetadataSource: Send + Sync {
    /// `Ok(None)` when the registry has no verified entry for `target`.
    fn fetch_contract_metadata(&self, target: Address) -> Result<Option<ContractBundle>, MetadataError>;
}

/// Etherscan-compatible `getsourcecode` endpoint.
pub struct EtherscanClient {
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl EtherscanClient {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(30))).build().into();
        Self { base_url: base_url.into(), api_key, agent }
    }
}

impl MetadataSource for EtherscanClient {
    fn fetch_contract_metadata(&self, target: Address) -> Result<Option<ContractBundle>, MetadataError> {
        let address = target.to_string();
        let mut request = self
            .agent
            .get(&self.base_url)
            .query("module", "contract")
            .query("action", "getsourcecode")
            .query("address", &address);
        if let Some(key) = &self.api_key {
            request = request.query("apikey", key);
        }
        let mut response = request.call().map_err(|e| MetadataError::Transport(e.to_string()))?;
        let body: Value =
            response.body_mut().read_json().map_err(|e| MetadataError::Transport(format!("malformed registry response: {e}")))?;
        parse_getsourcecode(target, &body)
    }
}

/// Interprets a `getsourcecode` reply.
pub(crate) fn parse_getsourcecode(target: Address, body: &Value) -> Result<Option<ContractBundle>, MetadataError> {
    let malformed = || MetadataError::Transport("malformed registry response".to_string());
    let status = body.get("status").and_then(Value::as_str).ok_or_else(malformed)?;
    let result = body.get("result").ok_or_else(malformed)?;
    if status != "1" {
        let reason = result.as_str().unwrap_or("request failed").to_string();
        return Err(MetadataError::Api(reason));
    }
    let entry = result.as_array().and_then(|a| a.first()).ok_or_else(malformed)?;
    let field = |key: &str| entry.get(key).and_then(Value::as_str).unwrap_or_default().to_string();
    let source = field("SourceCode");
    let abi = field("ABI");
    if source.is_empty() || !abi.trim_start().starts_with('[') {
        return Ok(None);
    }
    let contract_name = field("ContractName");
    Ok(Some(ContractBundle {
        address: target,
        sources: split_sources(&contract_name, &source),
        contract_name,
        compiler_version: field("CompilerVersion"),
        abi: Some(abi),
    }))
}

/// Multi-file projects arrive as a standard-JSON input wrapped in an extra
/// pair of braces; single files arrive as plain text.
fn split_sources(contract_name: &str, source: &str) -> BTreeMap<String, String> {
    let trimmed = source.trim();
    let unwrapped = trimmed.strip_prefix("{{").and_then(|s| s.strip_suffix("}}")).map(|inner| format!("{{{inner}}}"));
    let candidate = unwrapped.as_deref().unwrap_or(trimmed);
    if let Ok(Value::Object(doc)) = serde_json::from_str::<Value>(candidate) {
        let files = doc.get("sources").and_then(Value::as_object).unwrap_or(&doc);
        let collected: BTreeMap<_, _> = files
            .iter()
            .filter_map(|(path, v)| v.get("content").and_then(Value::as_str).map(|c| (path.clone(), c.to_string())))
            .collect();
        if !collected.is_empty() {
            return collected;
        }
    }
    BTreeMap::from([(format!("{contract_name}.sol"), source.to_string())])
}

/// Registry backed by a directory of `<address>.json` bundles, or by memory.
#[derive(Debug, Default)]
pub struct FixtureRegistry {
    root: Option<PathBuf>,
    entries: BTreeMap<Address, ContractBundle>,
}

impl FixtureRegistry {
    pub fn in_memory(bundles: impl IntoIterator<Item = ContractBundle>) -> Self {
        Self { root: None, entries: bundles.into_iter().map(|b| (b.address, b)).collect() }
    }

    pub fn from_dir(root: impl AsRef<Path>) -> Self {
        Self { root: Some(root.as_ref().to_path_buf()), entries: BTreeMap::new() }
    }
}

impl MetadataSource for FixtureRegistry {
    fn fetch_contract_metadata(&self, target: Address) -> Result<Option<ContractBundle>, MetadataError> {
        if let Some(bundle) = self.entries.get(&target) {
            return Ok(Some(bundle.clone()));
        }
        let Some(root) = &self.root else { return Ok(None) };
        let path = root.join(format!("{target}.json"));
        if !path.exists() {
            return Ok(None);
        }
        let registry_err = |reason: String| MetadataError::Registry { path: path.display().to_string(), reason };
        let bytes = std::fs::read(&path).map_err(|e| registry_err(e.to_string()))?;
        serde_json::from_slice(&bytes).map(Some).map_err(|e| registry_err(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    fn addr() -> Address {
        Address::from_low_u64(0x42)
    }

    #[test]
    fn unverified_contract_is_absent() {
        let body = json!({"status": "1", "message": "OK", "result": [{
            "SourceCode": "", "ABI": "Contract source code not verified", "ContractName": ""
        }]});
        assert_eq!(parse_getsourcecode(addr(), &body).unwrap(), None);
        assert_eq!(FixtureRegistry::default().fetch_contract_metadata(addr()).unwrap(), None);
    }

    #[test]
    fn verified_single_file() {
        let body = json!({"status": "1", "message": "OK", "result": [{
            "SourceCode": "contract A {}", "ABI": "[]", "ContractName": "A", "CompilerVersion": "v0.8.19"
        }]});
        let bundle = parse_getsourcecode(addr(), &body).unwrap().unwrap();
        assert_eq!(bundle.sources["A.sol"], "contract A {}");
        assert_eq!(bundle.abi.as_deref(), Some("[]"));
    }

    #[test]
    fn verified_standard_json_sources() {
        let inner = json!({"language": "Solidity", "sources": {"src/A.sol": {"content": "contract A {}"}, "src/B.sol": {"content": "contract B {}"}}});
        let body = json!({"status": "1", "result": [{
            "SourceCode": format!("{{{}}}", inner), "ABI": "[]", "ContractName": "A"
        }]});
        let bundle = parse_getsourcecode(addr(), &body).unwrap().unwrap();
        assert_eq!(bundle.sources.len(), 2);
        assert_eq!(bundle.sources["src/B.sol"], "contract B {}");
    }

    #[test]
    fn malformed_response_is_a_transport_error() {
        let err = parse_getsourcecode(addr(), &json!({"unexpected": true})).unwrap_err();
        assert!(matches!(err, MetadataError::Transport(_)));
        let err = parse_getsourcecode(addr(), &json!({"status": "0", "result": "Invalid API Key"})).unwrap_err();
        assert!(matches!(err, MetadataError::Api(ref m) if m == "Invalid API Key"));
    }

    #[test]
    fn registry_round_trip() {
        let bundle = ContractBundle {
            address: addr(),
            contract_name: "LockTOS".into(),
            compiler_version: "v0.7.6".into(),
            abi: Some("[]".into()),
            sources: BTreeMap::from([("LockTOS.sol".into(), "contract LockTOS {}".into())]),
        };
        let memory = FixtureRegistry::in_memory([bundle.clone()]);
        assert_eq!(memory.fetch_contract_metadata(addr()).unwrap(), Some(bundle.clone()));

        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(format!("{}.json", addr())), serde_json::to_vec(&bundle).unwrap()).unwrap();
        let disk = FixtureRegistry::from_dir(dir.path());
        assert_eq!(disk.fetch_contract_metadata(addr()).unwrap(), Some(bundle));
        assert_eq!(disk.fetch_contract_metadata(Address::from_low_u64(1)).unwrap(), None);

        std::fs::write(dir.path().join(format!("{}.json", Address::from_low_u64(2))), b"{not json").unwrap();
        assert!(disk.fetch_contract_metadata(Address::from_low_u64(2)).is_err());
    }
}

//! Canonical contract interface model.
//!
//! Parses standard ABI JSON into [`Abi`], keeping only callable functions
//! (plus event signatures and fallback/receive flags) and deriving each
//! function's canonical signature and 4-byte selector.

mod types;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

pub use types::AbiType;

use crate::primitives::{Address, Selector};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbiParam {
    pub name: String,
    pub ty: AbiType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateMutability {
    Pure,
    View,
    Nonpayable,
    Payable,
}

impl StateMutability {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pure" => Self::Pure,
            "view" | "constant" => Self::View,
            "nonpayable" => Self::Nonpayable,
            "payable" => Self::Payable,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pure => "pure",
            Self::View => "view",
            Self::Nonpayable => "nonpayable",
            Self::Payable => "payable",
        }
    }
}

impl fmt::Display for StateMutability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbiFunction {
    pub name: String,
    pub inputs: Vec<AbiParam>,
    pub outputs: Vec<AbiParam>,
    pub mutability: StateMutability,
}

impl AbiFunction {
    /// `name(type1,type2,...)` over the canonical input types.
    pub fn signature(&self) -> String {
        format!("{}({})", self.name, join_types(&self.inputs))
    }

    /// Canonical output list, e.g. `(uint256,bool)`.
    pub fn output_signature(&self) -> String {
        format!("({})", join_types(&self.outputs))
    }

    pub fn selector(&self) -> Selector {
        selector_of(self)
    }
}

fn join_types(params: &[AbiParam]) -> String {
    params.iter().map(|p| p.ty.to_string()).collect::<Vec<_>>().join(",")
}

/// First four bytes of the Keccak-256 digest of the canonical signature.
pub fn selector_of(f: &AbiFunction) -> Selector {
    Selector::from_signature(&f.signature())
}

/// A contract interface. Functions keep declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Abi {
    pub functions: Vec<AbiFunction>,
    /// Canonical event signatures, in declaration order.
    pub events: Vec<String>,
    pub has_fallback: bool,
    pub has_receive: bool,
    pub address: Option<Address>,
    pub version_tag: String,
}

impl Abi {
    pub fn function_by_signature(&self, signature: &str) -> Option<&AbiFunction> {
        self.functions.iter().find(|f| f.signature() == signature)
    }

    pub fn function_by_selector(&self, selector: Selector) -> Option<&AbiFunction> {
        self.functions.iter().find(|f| f.selector() == selector)
    }

    pub fn functions_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a AbiFunction> + 'a {
        self.functions.iter().filter(move |f| f.name == name)
    }

    pub fn has_function_named(&self, name: &str) -> bool {
        self.functions.iter().any(|f| f.name == name)
    }

    pub fn with_version(mut self, tag: impl Into<String>, address: Option<Address>) -> Self {
        self.version_tag = tag.into();
        self.address = address;
        self
    }

    /// Standard ABI JSON for this interface.
    pub fn to_json(&self) -> Value {
        let mut entries: Vec<Value> = self
            .functions
            .iter()
            .map(|f| {
                json!({
                    "type": "function",
                    "name": f.name,
                    "inputs": params_to_json(&f.inputs),
                    "outputs": params_to_json(&f.outputs),
                    "stateMutability": f.mutability.as_str(),
                })
            })
            .collect();
        for event in &self.events {
            let (name, rest) = event.split_once('(').unwrap_or((event, ")"));
            let inputs: Vec<Value> =
                split_top_level(rest.trim_end_matches(')')).into_iter().map(|ty| event_input_json(&ty)).collect();
            entries.push(json!({ "type": "event", "name": name, "inputs": inputs, "anonymous": false }));
        }
        if self.has_fallback {
            entries.push(json!({ "type": "fallback", "stateMutability": "nonpayable" }));
        }
        if self.has_receive {
            entries.push(json!({ "type": "receive", "stateMutability": "payable" }));
        }
        Value::Array(entries)
    }
}

fn event_input_json(ty: &str) -> Value {
    // Event tuples round-trip as anonymous component lists.
    if let Some(inner) = ty.strip_prefix('(') {
        let close = inner.rfind(')').unwrap_or(inner.len());
        let suffix = &inner[(close + 1).min(inner.len())..];
        let comps: Vec<Value> = split_top_level(&inner[..close]).into_iter().map(|t| event_input_json(&t)).collect();
        return json!({ "name": "", "type": format!("tuple{suffix}"), "components": comps, "indexed": false });
    }
    json!({ "name": "", "type": ty, "indexed": false })
}

fn split_top_level(list: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in list.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn params_to_json(params: &[AbiParam]) -> Vec<Value> {
    params
        .iter()
        .map(|p| {
            let mut entry = Map::new();
            entry.insert("name".into(), Value::String(p.name.clone()));
            entry.insert("type".into(), Value::String(p.ty.json_type()));
            if let Some(comps) = p.ty.components() {
                entry.insert("components".into(), Value::Array(params_to_json(comps)));
            }
            Value::Object(entry)
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum AbiError {
    #[error("invalid ABI JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("ABI document must be a JSON array of entries")]
    NotAnArray,
    #[error("entry {index}: {reason}")]
    Entry { index: usize, reason: String },
    #[error("entry {index}: duplicate function signature {signature}")]
    DuplicateSignature { index: usize, signature: String },
    #[error("entry {index}: selector {selector} of {signature} collides with {other}")]
    SelectorCollision { index: usize, selector: Selector, signature: String, other: String },
}

/// Parses a standard ABI JSON document. Build artifacts of the form
/// `{"abi": [...]}` are accepted as well.
pub fn parse_abi(document: &[u8]) -> Result<Abi, AbiError> {
    let value: Value = serde_json::from_slice(document)?;
    let entries = match &value {
        Value::Array(entries) => entries,
        Value::Object(obj) => match obj.get("abi") {
            Some(Value::Array(entries)) => entries,
            _ => return Err(AbiError::NotAnArray),
        },
        _ => return Err(AbiError::NotAnArray),
    };

    let mut abi = Abi::default();
    let mut signatures: HashMap<String, usize> = HashMap::new();
    let mut selectors: HashMap<Selector, String> = HashMap::new();
    for (index, entry) in entries.iter().enumerate() {
        let entry_err = |reason: String| AbiError::Entry { index, reason };
        let obj = entry.as_object().ok_or_else(|| entry_err("entry is not an object".into()))?;
        // The ABI format defaults a missing `type` to "function".
        let kind = obj.get("type").and_then(Value::as_str).unwrap_or("function");
        match kind {
            "function" => {
                let function = parse_function(obj).map_err(entry_err)?;
                let signature = function.signature();
                if signatures.insert(signature.clone(), index).is_some() {
                    return Err(AbiError::DuplicateSignature { index, signature });
                }
                let selector = function.selector();
                if let Some(other) = selectors.insert(selector, signature.clone()) {
                    return Err(AbiError::SelectorCollision { index, selector, signature, other });
                }
                abi.functions.push(function);
            }
            "event" => {
                let name = obj.get("name").and_then(Value::as_str).ok_or_else(|| entry_err("event without name".into()))?;
                let inputs = parse_params(obj.get("inputs")).map_err(entry_err)?;
                abi.events.push(format!("{name}({})", join_types(&inputs)));
            }
            "fallback" => abi.has_fallback = true,
            "receive" => abi.has_receive = true,
            "constructor" | "error" => {}
            other => return Err(entry_err(format!("unknown entry type {other:?}"))),
        }
    }
    Ok(abi)
}

fn parse_function(obj: &Map<String, Value>) -> Result<AbiFunction, String> {
    let name = obj.get("name").and_then(Value::as_str).ok_or("function without name")?;
    if name.is_empty() {
        return Err("function with empty name".into());
    }
    let mutability = match obj.get("stateMutability").and_then(Value::as_str) {
        Some(s) => StateMutability::parse(s).ok_or_else(|| format!("unknown stateMutability {s:?}"))?,
        // Pre-0.4.16 documents carry `constant` / `payable` flags instead.
        None => {
            let flag = |key| obj.get(key).and_then(Value::as_bool).unwrap_or(false);
            if flag("constant") {
                StateMutability::View
            } else if flag("payable") {
                StateMutability::Payable
            } else {
                StateMutability::Nonpayable
            }
        }
    };
    Ok(AbiFunction {
        name: name.to_string(),
        inputs: parse_params(obj.get("inputs"))?,
        outputs: parse_params(obj.get("outputs"))?,
        mutability,
    })
}

fn parse_params(value: Option<&Value>) -> Result<Vec<AbiParam>, String> {
    let Some(value) = value else { return Ok(Vec::new()) };
    let list = value.as_array().ok_or("parameter list is not an array")?;
    list.iter()
        .map(|p| {
            let ty = p.get("type").and_then(Value::as_str).ok_or("parameter without type")?;
            let components = match p.get("components") {
                Some(c) => Some(parse_params(Some(c))?),
                None => None,
            };
            Ok(AbiParam {
                name: p.get("name").and_then(Value::as_str).unwrap_or_default().to_string(),
                ty: AbiType::parse(ty, components)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn parse(doc: &str) -> Abi {
        parse_abi(doc.as_bytes()).unwrap()
    }

    #[test]
    fn empty_document() {
        let abi = parse("[]");
        assert!(abi.functions.is_empty());
    }

    #[test]
    fn mint_to_signature() {
        let abi = parse(
            r#"[{"type":"function","name":"mintTo","inputs":[{"name":"to","type":"address"},{"name":"amount","type":"uint256"}],"outputs":[],"stateMutability":"nonpayable"}]"#,
        );
        assert_eq!(abi.functions.len(), 1);
        assert_eq!(abi.functions[0].signature(), "mintTo(address,uint256)");
    }

    #[test]
    fn uint_alias_normalizes() {
        let abi =
            parse(r#"[{"name":"f","inputs":[{"name":"a","type":"uint"}],"outputs":[{"name":"","type":"int"}],"constant":true}]"#);
        assert_eq!(abi.functions[0].signature(), "f(uint256)");
        assert_eq!(abi.functions[0].output_signature(), "(int256)");
        assert_eq!(abi.functions[0].mutability, StateMutability::View);
    }

    #[test]
    fn known_selectors() {
        assert_eq!(Selector::from_signature("implementation()").to_string(), "0x5c60da1b");
        assert_eq!(Selector::from_signature("transfer(address,uint256)").to_string(), "0xa9059cbb");
    }

    #[test]
    fn tuple_signature() {
        let abi = parse(
            r#"[{"type":"function","name":"submit","stateMutability":"nonpayable","outputs":[],
                "inputs":[{"name":"o","type":"tuple[]","components":[{"name":"a","type":"address"},{"name":"b","type":"tuple","components":[{"name":"x","type":"uint"},{"name":"y","type":"bytes"}]}]}]}]"#,
        );
        assert_eq!(abi.functions[0].signature(), "submit((address,(uint256,bytes))[])");
    }

    #[test]
    fn non_functions_are_ignored_or_flagged() {
        let abi = parse(
            r#"[{"type":"constructor","inputs":[]},{"type":"event","name":"Transfer","inputs":[{"name":"a","type":"address","indexed":true}]},
                {"type":"error","name":"Bad","inputs":[]},{"type":"fallback"},{"type":"receive","stateMutability":"payable"}]"#,
        );
        assert!(abi.functions.is_empty());
        assert_eq!(abi.events, vec!["Transfer(address)".to_string()]);
        assert!(abi.has_fallback && abi.has_receive);
    }

    #[test]
    fn errors_carry_entry_index() {
        let dup = r#"[{"name":"f","inputs":[]},{"name":"g","inputs":[]},{"name":"f","inputs":[],"outputs":[{"type":"bool"}]}]"#;
        assert!(matches!(parse_abi(dup.as_bytes()), Err(AbiError::DuplicateSignature { index: 2, .. })));
        let bad_type = r#"[{"name":"f","inputs":[]},{"name":"g","inputs":[{"type":"uint7"}]}]"#;
        assert!(matches!(parse_abi(bad_type.as_bytes()), Err(AbiError::Entry { index: 1, .. })));
        assert!(matches!(parse_abi(b"{\"x\":1}"), Err(AbiError::NotAnArray)));
        assert!(matches!(parse_abi(b"[{"), Err(AbiError::Json(_))));
    }

    #[test]
    fn artifact_wrapper_is_accepted() {
        let abi = parse(
            r#"{"contractName":"X","abi":[{"type":"function","name":"f","inputs":[],"outputs":[],"stateMutability":"view"}]}"#,
        );
        assert_eq!(abi.functions.len(), 1);
    }

    fn arb_type() -> impl Strategy<Value = AbiType> {
        let leaf = prop_oneof![
            (1u16..=32).prop_map(|n| AbiType::Uint(n * 8)),
            (1u16..=32).prop_map(|n| AbiType::Int(n * 8)),
            Just(AbiType::Address),
            Just(AbiType::Bool),
            (1u8..=32).prop_map(AbiType::FixedBytes),
            Just(AbiType::Bytes),
            Just(AbiType::String),
        ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                (inner.clone(), proptest::option::of(1usize..4)).prop_map(|(t, n)| AbiType::Array(Box::new(t), n)),
                proptest::collection::vec(inner, 1..3).prop_map(|ts| AbiType::Tuple(
                    ts.into_iter().enumerate().map(|(i, ty)| AbiParam { name: format!("c{i}"), ty }).collect()
                )),
            ]
        })
    }

    fn arb_abi() -> impl Strategy<Value = Abi> {
        proptest::collection::btree_map("[a-z][a-zA-Z0-9]{0,6}", proptest::collection::vec(arb_type(), 0..4), 0..6).prop_map(
            |fns| Abi {
                functions: fns
                    .into_iter()
                    .map(|(name, tys)| AbiFunction {
                        name,
                        inputs: tys.iter().cloned().enumerate().map(|(i, ty)| AbiParam { name: format!("p{i}"), ty }).collect(),
                        outputs: tys.into_iter().take(1).map(|ty| AbiParam { name: String::new(), ty }).collect(),
                        mutability: StateMutability::Nonpayable,
                    })
                    .collect(),
                events: vec!["Changed(address,(uint256,bool)[])".to_string()],
                has_fallback: true,
                ..Default::default()
            },
        )
    }

    proptest! {
        #[test]
        fn json_round_trip(abi in arb_abi()) {
            let doc = serde_json::to_vec(&abi.to_json()).unwrap();
            prop_assert_eq!(parse_abi(&doc).unwrap(), abi);
        }

        #[test]
        fn canonical_types_are_fixed_points(ty in arb_type()) {
            if !matches!(ty, AbiType::Tuple(_)) && ty.components().is_none() {
                let canonical = ty.to_string();
                prop_assert_eq!(AbiType::parse(&canonical, None).unwrap().to_string(), canonical);
            }
        }
    }
}

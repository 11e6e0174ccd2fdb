//! Probing whether initialization functions are still callable.
//!
//! Each probe is a read-only simulated call from a fresh caller with
//! zero-valued arguments. A call that does not revert means the initializer
//! accepted an arbitrary caller; a successful no-op cannot be told apart
//! from a real initialization by simulation alone.

use serde::{Deserialize, Serialize};

use crate::abi::{Abi, AbiFunction, AbiType};
use crate::chain::{CallStatus, ChainProvider};
use crate::primitives::{Address, BlockNumber};

pub const INIT_FUNCTION_NAMES: [&str; 2] = ["initialize", "init"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Proxy,
    Implementation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InitStatus {
    Initializable,
    Protected,
    NotApplicable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InitProbeResult {
    pub target: Address,
    pub role: Role,
    /// Canonical signature; absent when the ABI has no initializer.
    pub function: Option<String>,
    pub status: InitStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Functions named exactly `initialize` or `init`, in declaration order.
pub fn find_init_functions(abi: &Abi) -> Vec<&AbiFunction> {
    abi.functions.iter().filter(|f| INIT_FUNCTION_NAMES.contains(&f.name.as_str())).collect()
}

/// Calldata for `f` with every argument set to its zero value.
pub fn encode_zero_call(f: &AbiFunction) -> Vec<u8> {
    let mut out = f.selector().0.to_vec();
    let types: Vec<&AbiType> = f.inputs.iter().map(|p| &p.ty).collect();
    out.extend(encode_zero_tuple(&types));
    out
}

fn encode_zero_tuple(types: &[&AbiType]) -> Vec<u8> {
    let head_len: usize = types.iter().map(|t| t.head_words() * 32).sum();
    let mut head = Vec::with_capacity(head_len);
    let mut tail = Vec::new();
    for ty in types {
        if ty.is_dynamic() {
            let offset = (head_len + tail.len()) as u64;
            head.extend([0u8; 24]);
            head.extend(offset.to_be_bytes());
            tail.extend(encode_zero_dynamic(ty));
        } else {
            head.extend(std::iter::repeat_n(0u8, ty.head_words() * 32));
        }
    }
    head.extend(tail);
    head
}

fn encode_zero_dynamic(ty: &AbiType) -> Vec<u8> {
    match ty {
        AbiType::Array(elem, Some(n)) => encode_zero_tuple(&vec![elem.as_ref(); *n]),
        AbiType::Tuple(params) => encode_zero_tuple(&params.iter().map(|p| &p.ty).collect::<Vec<_>>()),
        // bytes, string and T[]: a zero length word.
        _ => vec![0u8; 32],
    }
}

/// Simulates a call to `f` on `target` at `block`.
pub fn probe_initialization<P: ChainProvider + ?Sized>(
    target: Address,
    role: Role,
    f: &AbiFunction,
    provider: &P,
    block: BlockNumber,
) -> InitProbeResult {
    let calldata = encode_zero_call(f);
    let (status, detail) = match provider.call_at_block(target, &calldata, block) {
        Ok(result) => match result.status {
            CallStatus::Success => (InitStatus::Initializable, Some("call with zero arguments did not revert".to_string())),
            CallStatus::Revert => (InitStatus::Protected, None),
            CallStatus::NotAContract => (InitStatus::Inconclusive, Some("no code at target".to_string())),
        },
        Err(e) => (InitStatus::Inconclusive, Some(e.to_string())),
    };
    InitProbeResult { target, role, function: Some(f.signature()), status, detail }
}

/// Probes every initializer of `abi` on `target`; a single NotApplicable
/// result when there is none.
pub fn probe_target<P: ChainProvider + ?Sized>(
    target: Address,
    role: Role,
    abi: &Abi,
    provider: &P,
    block: BlockNumber,
) -> Vec<InitProbeResult> {
    let functions = find_init_functions(abi);
    if functions.is_empty() {
        return vec![InitProbeResult { target, role, function: None, status: InitStatus::NotApplicable, detail: None }];
    }
    functions.into_iter().map(|f| probe_initialization(target, role, f, provider, block)).collect()
}

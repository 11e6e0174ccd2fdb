//! Import of compiler-emitted `storageLayout` JSON.
//!
//! Field mapping: `label` becomes the variable name, `slot` (a decimal
//! string) the slot, `offset` the offset, and the referenced entry in
//! `types` supplies the type label and `numberOfBytes`. Values wider than a
//! word are aggregates spanning `numberOfBytes / 32` words.

use serde::Deserialize;
use std::collections::BTreeMap;

use super::{LayoutError, SlotAssignment, StorageLayout, TypeClass, WORD};

#[derive(Deserialize)]
struct SolcLayout {
    storage: Vec<SolcEntry>,
    #[serde(default)]
    types: Option<BTreeMap<String, SolcType>>,
}

#[derive(Deserialize)]
struct SolcEntry {
    label: String,
    slot: String,
    offset: u8,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SolcType {
    label: String,
    number_of_bytes: String,
    #[serde(default)]
    encoding: String,
}

/// True when a JSON document looks like compiler storage-layout output.
pub fn is_solc_layout(value: &serde_json::Value) -> bool {
    value.get("storage").is_some_and(serde_json::Value::is_array)
}

pub fn import_solc_layout(document: &[u8]) -> Result<StorageLayout, LayoutError> {
    let layout: SolcLayout = serde_json::from_slice(document)?;
    let types = layout.types.unwrap_or_default();
    let assignments = layout
        .storage
        .into_iter()
        .map(|entry| {
            let err = |reason: String| LayoutError::Solc { label: entry.label.clone(), reason };
            let ty = types.get(&entry.ty).ok_or_else(|| err(format!("type {} missing from types table", entry.ty)))?;
            let slot: u64 = entry.slot.parse().map_err(|_| err(format!("slot {:?} is not a small integer", entry.slot)))?;
            let bytes: u64 =
                ty.number_of_bytes.parse().map_err(|_| err(format!("bad numberOfBytes {:?}", ty.number_of_bytes)))?;
            if bytes == 0 || (bytes > WORD && !bytes.is_multiple_of(WORD)) || u64::from(entry.offset) + bytes.min(WORD) > WORD {
                return Err(err(format!("inconsistent size {bytes} at offset {}", entry.offset)));
            }
            let class = classify(&ty.label, &ty.encoding).ok_or_else(|| err(format!("unsupported type {:?}", ty.label)))?;
            let (size, spans) = if bytes > WORD { (WORD, bytes / WORD) } else { (bytes, 1) };
            Ok(SlotAssignment {
                name: entry.label,
                type_label: ty.label.clone(),
                class,
                slot,
                offset: entry.offset,
                size: size as u8,
                spans,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StorageLayout { version_tag: String::new(), assignments })
}

fn classify(label: &str, encoding: &str) -> Option<TypeClass> {
    match encoding {
        "mapping" => return Some(TypeClass::Mapping),
        "dynamic_array" => return Some(TypeClass::DynArray),
        "bytes" => return Some(if label == "string" { TypeClass::String } else { TypeClass::Bytes }),
        _ => {}
    }
    let bits = |digits: &str| digits.parse::<u16>().ok();
    Some(match label {
        "bool" => TypeClass::Bool,
        "address" | "address payable" => TypeClass::Address,
        "string" => TypeClass::String,
        "bytes" => TypeClass::Bytes,
        _ if label.starts_with("mapping(") => TypeClass::Mapping,
        _ if label.ends_with("[]") => TypeClass::DynArray,
        _ if label.ends_with(']') => TypeClass::StaticArray,
        _ if label.starts_with("contract ") => TypeClass::Address,
        _ if label.starts_with("enum ") => TypeClass::Enum,
        _ if label.starts_with("struct ") => TypeClass::Struct,
        _ => {
            if let Some(d) = label.strip_prefix("uint") {
                TypeClass::Uint(bits(d)?)
            } else if let Some(d) = label.strip_prefix("int") {
                TypeClass::Int(bits(d)?)
            } else {
                let d = label.strip_prefix("bytes")?;
                TypeClass::FixedBytes(d.parse().ok()?)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imports_compiler_output() {
        let doc = br#"{"storage":[
            {"astId":3,"contract":"a.sol:A","label":"x","offset":0,"slot":"0","type":"t_address"},
            {"astId":5,"contract":"a.sol:A","label":"y","offset":20,"slot":"0","type":"t_bool"},
            {"astId":9,"contract":"a.sol:A","label":"arr","offset":0,"slot":"1","type":"t_array(t_uint256)3_storage"}],
          "types":{"t_address":{"encoding":"inplace","label":"address","numberOfBytes":"20"},
                   "t_bool":{"encoding":"inplace","label":"bool","numberOfBytes":"1"},
                   "t_array(t_uint256)3_storage":{"base":"t_uint256","encoding":"inplace","label":"uint256[3]","numberOfBytes":"96"}}}"#;
        let layout = import_solc_layout(doc).unwrap();
        assert_eq!(layout.assignments.len(), 3);
        assert_eq!((layout.assignments[1].slot, layout.assignments[1].offset, layout.assignments[1].size), (0, 20, 1));
        assert_eq!((layout.assignments[2].size, layout.assignments[2].spans), (32, 3));
        assert_eq!(layout.assignments[2].class, TypeClass::StaticArray);
        assert!(is_solc_layout(&serde_json::from_slice(doc).unwrap()));
    }

    #[test]
    fn rejects_dangling_type() {
        let doc = br#"{"storage":[{"label":"x","offset":0,"slot":"0","type":"t_nope"}],"types":{}}"#;
        assert!(matches!(import_solc_layout(doc), Err(LayoutError::Solc { .. })));
    }
}

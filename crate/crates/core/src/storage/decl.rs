//! Declaration-list JSON.
//!
//! ```json
//! [
//!   {"name": "owner", "type": "address"},
//!   {"name": "mode", "type": "enum Mode{Open,Closed}"},
//!   {"name": "pos", "type": "struct Pos{uint128 x; uint128 y}"},
//!   {"name": "FEE", "type": "uint256", "constant": true},
//!   {"name": "cfg", "type": {"struct": "Cfg", "fields": [{"name": "a", "type": "bool"}]}}
//! ]
//! ```
//!
//! A wrapping object `{"variables": [...]}` is accepted too.

use serde_json::Value;

use super::{LayoutError, StorageType, VarDecl};

pub fn parse_declarations(document: &[u8]) -> Result<Vec<VarDecl>, LayoutError> {
    let value: Value = serde_json::from_slice(document)?;
    let list = match &value {
        Value::Array(list) => list,
        Value::Object(obj) => match obj.get("variables") {
            Some(Value::Array(list)) => list,
            _ => return Err(LayoutError::Malformed { index: 0, reason: "expected an array of declarations".into() }),
        },
        _ => return Err(LayoutError::Malformed { index: 0, reason: "expected an array of declarations".into() }),
    };
    list.iter().enumerate().map(|(index, entry)| decl_from_json(index, entry)).collect()
}

fn decl_from_json(index: usize, entry: &Value) -> Result<VarDecl, LayoutError> {
    let malformed = |reason: &str| LayoutError::Malformed { index, reason: reason.into() };
    let name = entry.get("name").and_then(Value::as_str).ok_or_else(|| malformed("missing name"))?;
    let spec = entry.get("type").ok_or_else(|| malformed("missing type"))?;
    let ty =
        type_from_json(spec).map_err(|reason| LayoutError::UnknownType { decl: name.into(), ty: spec.to_string(), reason })?;
    let flag = |key| entry.get(key).and_then(Value::as_bool).unwrap_or(false);
    Ok(VarDecl { name: name.into(), ty, is_constant_or_immutable: flag("constant") || flag("immutable") })
}

fn type_from_json(spec: &Value) -> Result<StorageType, String> {
    match spec {
        Value::String(s) => parse_type(s),
        Value::Object(obj) => {
            if let Some(name) = obj.get("enum") {
                let members = obj.get("members").and_then(Value::as_u64).ok_or("enum without member count")?;
                return make_enum(name.as_str().unwrap_or_default(), members);
            }
            if let Some(name) = obj.get("struct") {
                let fields = obj.get("fields").and_then(Value::as_array).ok_or("struct without fields")?;
                let fields = fields
                    .iter()
                    .enumerate()
                    .map(|(i, f)| decl_from_json(i, f).map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                return make_struct(name.as_str().unwrap_or_default(), fields);
            }
            if let Some(elem) = obj.get("array") {
                let elem = Box::new(type_from_json(elem)?);
                return Ok(match obj.get("length").and_then(Value::as_u64) {
                    Some(n) => StorageType::FixedArray(elem, n),
                    None => StorageType::DynArray(elem),
                });
            }
            if let Some(Value::Array(kv)) = obj.get("mapping") {
                if let [k, v] = kv.as_slice() {
                    return Ok(StorageType::Mapping(Box::new(type_from_json(k)?), Box::new(type_from_json(v)?)));
                }
            }
            Err("unrecognized type object".into())
        }
        _ => Err("type must be a string or an object".into()),
    }
}

fn make_enum(name: &str, members: u64) -> Result<StorageType, String> {
    match members {
        1..=65536 => Ok(StorageType::Enum { name: name.into(), members: members as u32 }),
        _ => Err(format!("enum member count {members} out of range")),
    }
}

fn make_struct(name: &str, fields: Vec<VarDecl>) -> Result<StorageType, String> {
    if fields.is_empty() {
        return Err("struct without fields".into());
    }
    Ok(StorageType::Struct { name: name.into(), fields })
}

/// Parses a Solidity-like type string.
pub fn parse_type(s: &str) -> Result<StorageType, String> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("mapping") {
        let inner = rest.trim().strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or("malformed mapping")?;
        let arrow = top_level_find(inner, "=>").ok_or("mapping without =>")?;
        return Ok(StorageType::Mapping(Box::new(parse_type(&inner[..arrow])?), Box::new(parse_type(&inner[arrow + 2..])?)));
    }
    if s.ends_with(']') {
        let open = s.rfind('[').ok_or("unbalanced brackets")?;
        let elem = Box::new(parse_type(&s[..open])?);
        let len = s[open + 1..s.len() - 1].trim();
        return Ok(if len.is_empty() {
            StorageType::DynArray(elem)
        } else {
            StorageType::FixedArray(elem, len.parse().map_err(|_| format!("bad array length {len:?}"))?)
        });
    }
    if let Some(rest) = s.strip_prefix("enum ") {
        let (name, body) = braced(rest)?;
        let members = body.split(',').filter(|m| !m.trim().is_empty()).count() as u64;
        return make_enum(name, members);
    }
    if let Some(rest) = s.strip_prefix("struct ") {
        let (name, body) = braced(rest)?;
        let fields = body
            .split(';')
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .map(|f| {
                let (ty, field) = f.rsplit_once(char::is_whitespace).ok_or_else(|| format!("bad struct field {f:?}"))?;
                Ok(VarDecl::new(field.trim(), parse_type(ty)?))
            })
            .collect::<Result<Vec<_>, String>>()?;
        return make_struct(name, fields);
    }
    if let Some(name) = s.strip_prefix("contract ") {
        return Ok(StorageType::Contract(name.trim().into()));
    }
    parse_elementary(s)
}

fn parse_elementary(s: &str) -> Result<StorageType, String> {
    let sized = |digits: &str, lo: u32, hi: u32, step: u32| -> Result<u32, String> {
        let n: u32 = digits.parse().map_err(|_| format!("unknown type {s:?}"))?;
        if n < lo || n > hi || !n.is_multiple_of(step) {
            return Err(format!("invalid size in {s:?}"));
        }
        Ok(n)
    };
    Ok(match s {
        "bool" => StorageType::Bool,
        "address" | "address payable" => StorageType::Address,
        "string" => StorageType::String,
        "bytes" => StorageType::Bytes,
        "byte" => StorageType::FixedBytes(1),
        "uint" => StorageType::Uint(256),
        "int" => StorageType::Int(256),
        _ => {
            if let Some(d) = s.strip_prefix("uint") {
                StorageType::Uint(sized(d, 8, 256, 8)? as u16)
            } else if let Some(d) = s.strip_prefix("int") {
                StorageType::Int(sized(d, 8, 256, 8)? as u16)
            } else if let Some(d) = s.strip_prefix("bytes") {
                StorageType::FixedBytes(sized(d, 1, 32, 1)? as u8)
            } else {
                return Err(format!("unknown type {s:?}"));
            }
        }
    })
}

fn braced(rest: &str) -> Result<(&str, &str), String> {
    let open = rest.find('{').ok_or("expected { ... }")?;
    let body = rest[open + 1..].trim_end().strip_suffix('}').ok_or("expected closing }")?;
    Ok((rest[..open].trim(), body))
}

fn top_level_find(s: &str, needle: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ if depth == 0 && s[i..].starts_with(needle) => return Some(i),
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_strings() {
        assert_eq!(parse_type("uint").unwrap(), StorageType::Uint(256));
        assert_eq!(
            parse_type("mapping(address => mapping(uint256 => bool))").unwrap().to_string(),
            "mapping(address => mapping(uint256 => bool))"
        );
        assert_eq!(parse_type("uint8[2][]").unwrap().to_string(), "uint8[2][]");
        assert_eq!(parse_type("enum Mode{A, B, C}").unwrap(), StorageType::Enum { name: "Mode".into(), members: 3 });
        assert!(
            matches!(parse_type("struct P{uint8 x; bool y}").unwrap(), StorageType::Struct { fields, .. } if fields.len() == 2)
        );
        assert!(parse_type("uint7").is_err());
        assert!(parse_type("bytes33").is_err());
        assert!(parse_type("float").is_err());
        assert!(parse_type("enum E{}").is_err());
    }

    #[test]
    fn declaration_documents() {
        let doc = br#"{"variables":[
            {"name":"owner","type":"address"},
            {"name":"FEE","type":"uint256","constant":true},
            {"name":"cfg","type":{"struct":"Cfg","fields":[{"name":"a","type":"bool"},{"name":"m","type":{"enum":"M","members":300}}]}},
            {"name":"xs","type":{"array":"uint16","length":5}},
            {"name":"bal","type":{"mapping":["address","uint256"]}}
        ]}"#;
        let decls = parse_declarations(doc).unwrap();
        assert_eq!(decls.len(), 5);
        assert!(decls[1].is_constant_or_immutable);
        assert_eq!(decls[3].ty, StorageType::FixedArray(Box::new(StorageType::Uint(16)), 5));
        let err = parse_declarations(br#"[{"name":"x","type":"uint9"}]"#).unwrap_err();
        assert!(err.to_string().contains("\"x\""), "{err}");
    }
}

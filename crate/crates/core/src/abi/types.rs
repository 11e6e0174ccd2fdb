use std::fmt;

use super::AbiParam;

/// A canonical ABI type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbiType {
    Uint(u16),
    Int(u16),
    Address,
    Bool,
    FixedBytes(u8),
    Bytes,
    String,
    Function,
    Fixed { signed: bool, bits: u16, decimals: u8 },
    Array(Box<AbiType>, Option<usize>),
    Tuple(Vec<AbiParam>),
}

impl AbiType {
    /// Parses a type string as written in ABI JSON. Tuple types need their
    /// `components`; every other type ignores them.
    pub fn parse(ty: &str, components: Option<Vec<AbiParam>>) -> Result<Self, String> {
        let ty = ty.trim();
        if let Some(open) = ty.rfind('[') {
            let close = ty.len() - 1;
            if !ty.ends_with(']') || open > close {
                return Err(format!("malformed array type {ty:?}"));
            }
            let inner = Self::parse(&ty[..open], components)?;
            let length = &ty[open + 1..close];
            let length = if length.is_empty() {
                None
            } else {
                Some(length.parse::<usize>().map_err(|_| format!("bad array length in {ty:?}"))?)
            };
            return Ok(AbiType::Array(Box::new(inner), length));
        }
        if ty == "tuple" {
            return components.map(AbiType::Tuple).ok_or_else(|| "tuple type without components".to_string());
        }
        parse_elementary(ty).ok_or_else(|| format!("unknown type {ty:?}"))
    }

    /// Dynamic types are encoded out-of-line behind an offset word.
    pub fn is_dynamic(&self) -> bool {
        match self {
            AbiType::Bytes | AbiType::String | AbiType::Array(_, None) => true,
            AbiType::Array(inner, Some(_)) => inner.is_dynamic(),
            AbiType::Tuple(params) => params.iter().any(|p| p.ty.is_dynamic()),
            _ => false,
        }
    }

    /// Number of 32-byte words in the head encoding.
    pub fn head_words(&self) -> usize {
        if self.is_dynamic() {
            return 1;
        }
        match self {
            AbiType::Array(inner, Some(n)) => inner.head_words() * n,
            AbiType::Tuple(params) => params.iter().map(|p| p.ty.head_words()).sum(),
            _ => 1,
        }
    }

    /// JSON `type` string: tuples render as `tuple` with array suffixes.
    pub(crate) fn json_type(&self) -> String {
        match self {
            AbiType::Tuple(_) => "tuple".to_string(),
            AbiType::Array(inner, len) => match len {
                Some(n) => format!("{}[{n}]", inner.json_type()),
                None => format!("{}[]", inner.json_type()),
            },
            other => other.to_string(),
        }
    }

    pub(crate) fn components(&self) -> Option<&[AbiParam]> {
        match self {
            AbiType::Tuple(params) => Some(params),
            AbiType::Array(inner, _) => inner.components(),
            _ => None,
        }
    }
}

fn parse_bits(digits: &str, default: u16) -> Option<u16> {
    if digits.is_empty() {
        return Some(default);
    }
    if digits.starts_with('0') {
        return None;
    }
    let bits: u16 = digits.parse().ok()?;
    (bits.is_multiple_of(8) && (8..=256).contains(&bits)).then_some(bits)
}

fn parse_elementary(ty: &str) -> Option<AbiType> {
    match ty {
        "address" | "address payable" => return Some(AbiType::Address),
        "bool" => return Some(AbiType::Bool),
        "bytes" => return Some(AbiType::Bytes),
        "string" => return Some(AbiType::String),
        "function" => return Some(AbiType::Function),
        "byte" => return Some(AbiType::FixedBytes(1)),
        _ => {}
    }
    if let Some(rest) = ty.strip_prefix("uint") {
        return parse_bits(rest, 256).map(AbiType::Uint);
    }
    if let Some(rest) = ty.strip_prefix("int") {
        return parse_bits(rest, 256).map(AbiType::Int);
    }
    if let Some(rest) = ty.strip_prefix("bytes") {
        let n: u8 = rest.parse().ok()?;
        return (1..=32).contains(&n).then_some(AbiType::FixedBytes(n));
    }
    let (signed, rest) = match ty.strip_prefix("ufixed") {
        Some(rest) => (false, rest),
        None => (true, ty.strip_prefix("fixed")?),
    };
    if rest.is_empty() {
        return Some(AbiType::Fixed { signed, bits: 128, decimals: 18 });
    }
    let (bits, decimals) = rest.split_once('x')?;
    let bits = parse_bits(bits, 0).filter(|b| *b > 0)?;
    let decimals: u8 = decimals.parse().ok()?;
    (decimals <= 80).then_some(AbiType::Fixed { signed, bits, decimals })
}

impl fmt::Display for AbiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbiType::Uint(bits) => write!(f, "uint{bits}"),
            AbiType::Int(bits) => write!(f, "int{bits}"),
            AbiType::Address => f.write_str("address"),
            AbiType::Bool => f.write_str("bool"),
            AbiType::FixedBytes(n) => write!(f, "bytes{n}"),
            AbiType::Bytes => f.write_str("bytes"),
            AbiType::String => f.write_str("string"),
            AbiType::Function => f.write_str("function"),
            AbiType::Fixed { signed, bits, decimals } => {
                write!(f, "{}fixed{bits}x{decimals}", if *signed { "" } else { "u" })
            }
            AbiType::Array(inner, Some(n)) => write!(f, "{inner}[{n}]"),
            AbiType::Array(inner, None) => write!(f, "{inner}[]"),
            AbiType::Tuple(params) => {
                f.write_str("(")?;
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}", p.ty)?;
                }
                f.write_str(")")
            }
        }
    }
}

//! Storage slot assignment and cross-version collision detection.
//!
//! [`compute_layout`] places state variables the way the compiler does:
//! value types pack into the current 32-byte word while they fit, every other
//! type starts a fresh word, and structs and static arrays occupy whole words
//! so the variable after them also starts fresh.

mod decl;
mod diff;
mod solc;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decl::parse_declarations;
pub use diff::{diff_layouts, fuzzy_name_match, CollisionFinding, DiffOptions, VarRef, Verdict};
pub use solc::{import_solc_layout, is_solc_layout};

pub const WORD: u64 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StorageType {
    Bool,
    Address,
    Contract(String),
    Uint(u16),
    Int(u16),
    FixedBytes(u8),
    Enum { name: String, members: u32 },
    String,
    Bytes,
    Mapping(Box<StorageType>, Box<StorageType>),
    DynArray(Box<StorageType>),
    FixedArray(Box<StorageType>, u64),
    Struct { name: String, fields: Vec<VarDecl> },
}

impl StorageType {
    /// Bytes a value type occupies inside a word; `None` for types that
    /// always start a fresh word.
    pub fn packed_size(&self) -> Option<u64> {
        Some(match self {
            Self::Bool => 1,
            Self::Address | Self::Contract(_) => 20,
            Self::Uint(bits) | Self::Int(bits) => u64::from(*bits) / 8,
            Self::FixedBytes(n) => u64::from(*n),
            Self::Enum { members, .. } => {
                if *members <= 256 {
                    1
                } else {
                    2
                }
            }
            _ => return None,
        })
    }

    /// Number of words the head of this type occupies.
    pub fn spans(&self) -> u64 {
        match self {
            Self::Struct { fields, .. } => {
                let mut cursor = Cursor::default();
                for field in fields {
                    cursor.place(&field.ty);
                }
                cursor.words_used().max(1)
            }
            Self::FixedArray(elem, len) => {
                let words = match elem.packed_size() {
                    Some(size) => len.div_ceil(WORD / size),
                    None => len.saturating_mul(elem.spans()),
                };
                words.max(1)
            }
            _ => 1,
        }
    }

    pub fn class(&self) -> TypeClass {
        match self {
            Self::Bool => TypeClass::Bool,
            Self::Address | Self::Contract(_) => TypeClass::Address,
            Self::Uint(bits) => TypeClass::Uint(*bits),
            Self::Int(bits) => TypeClass::Int(*bits),
            Self::FixedBytes(n) => TypeClass::FixedBytes(*n),
            Self::Enum { .. } => TypeClass::Enum,
            Self::String => TypeClass::String,
            Self::Bytes => TypeClass::Bytes,
            Self::Mapping(..) => TypeClass::Mapping,
            Self::DynArray(_) => TypeClass::DynArray,
            Self::FixedArray(..) => TypeClass::StaticArray,
            Self::Struct { .. } => TypeClass::Struct,
        }
    }
}

impl fmt::Display for StorageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bool => f.write_str("bool"),
            Self::Address => f.write_str("address"),
            Self::Contract(name) => write!(f, "contract {name}"),
            Self::Uint(bits) => write!(f, "uint{bits}"),
            Self::Int(bits) => write!(f, "int{bits}"),
            Self::FixedBytes(n) => write!(f, "bytes{n}"),
            Self::Enum { name, .. } => write!(f, "enum {name}"),
            Self::String => f.write_str("string"),
            Self::Bytes => f.write_str("bytes"),
            Self::Mapping(k, v) => write!(f, "mapping({k} => {v})"),
            Self::DynArray(elem) => write!(f, "{elem}[]"),
            Self::FixedArray(elem, len) => write!(f, "{elem}[{len}]"),
            Self::Struct { name, .. } => write!(f, "struct {name}"),
        }
    }
}

/// Coarse type identity used when comparing versions. Names of enums and
/// structs and the key/value types of mappings are not part of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TypeClass {
    Bool,
    Address,
    Uint(u16),
    Int(u16),
    FixedBytes(u8),
    Enum,
    String,
    Bytes,
    Mapping,
    DynArray,
    Struct,
    StaticArray,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub ty: StorageType,
    pub is_constant_or_immutable: bool,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, ty: StorageType) -> Self {
        Self { name: name.into(), ty, is_constant_or_immutable: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SlotAssignment {
    pub name: String,
    #[serde(rename = "type")]
    pub type_label: String,
    pub class: TypeClass,
    pub slot: u64,
    pub offset: u8,
    /// Bytes used in the head word; 32 for anything that is not packed.
    pub size: u8,
    /// Whole words covered, counting the head word.
    pub spans: u64,
}

impl SlotAssignment {
    /// Absolute byte range `[start, end)` covered in storage.
    pub fn byte_range(&self) -> (u128, u128) {
        let start = u128::from(self.slot) * u128::from(WORD) + u128::from(self.offset);
        let len = if self.spans > 1 { u128::from(self.spans) * u128::from(WORD) } else { u128::from(self.size) };
        (start, start + len)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StorageLayout {
    pub version_tag: String,
    pub assignments: Vec<SlotAssignment>,
}

impl StorageLayout {
    pub fn get(&self, name: &str) -> Option<&SlotAssignment> {
        self.assignments.iter().find(|a| a.name == name)
    }

    /// Unused bytes of `slot` not covered by any assignment.
    pub fn unused_bytes(&self, slot: u64) -> u64 {
        let word = (u128::from(slot) * u128::from(WORD), (u128::from(slot) + 1) * u128::from(WORD));
        let used: u128 = self
            .assignments
            .iter()
            .map(|a| {
                let (s, e) = a.byte_range();
                e.min(word.1).saturating_sub(s.max(word.0))
            })
            .sum();
        WORD - used as u64
    }
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("invalid layout JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("declaration {decl:?}: unknown type {ty:?}: {reason}")]
    UnknownType { decl: String, ty: String, reason: String },
    #[error("declaration {index}: {reason}")]
    Malformed { index: usize, reason: String },
    #[error("compiler layout entry {label:?}: {reason}")]
    Solc { label: String, reason: String },
}

#[derive(Debug, Default)]
struct Cursor {
    slot: u64,
    offset: u64,
}

impl Cursor {
    /// Places a type, returning `(slot, offset, size, spans)`.
    fn place(&mut self, ty: &StorageType) -> (u64, u64, u64, u64) {
        match ty.packed_size() {
            Some(size) => {
                if self.offset + size > WORD {
                    self.slot += 1;
                    self.offset = 0;
                }
                let at = (self.slot, self.offset, size, 1);
                self.offset += size;
                at
            }
            None => {
                if self.offset > 0 {
                    self.slot += 1;
                    self.offset = 0;
                }
                let spans = ty.spans();
                let at = (self.slot, 0, WORD, spans);
                self.slot += spans;
                at
            }
        }
    }

    fn words_used(&self) -> u64 {
        self.slot + u64::from(self.offset > 0)
    }
}

/// Assigns slots to flattened, inheritance-linearized declarations.
pub fn compute_layout(decls: &[VarDecl]) -> StorageLayout {
    let mut cursor = Cursor::default();
    let assignments = decls
        .iter()
        .filter(|d| !d.is_constant_or_immutable)
        .map(|d| {
            let (slot, offset, size, spans) = cursor.place(&d.ty);
            SlotAssignment {
                name: d.name.clone(),
                type_label: d.ty.to_string(),
                class: d.ty.class(),
                slot,
                offset: offset as u8,
                size: size as u8,
                spans,
            }
        })
        .collect();
    StorageLayout { version_tag: String::new(), assignments }
}

/// Reads either compiler storage-layout output or a declaration list.
pub fn load_layout_document(document: &[u8]) -> Result<StorageLayout, LayoutError> {
    let value: serde_json::Value = serde_json::from_slice(document)?;
    if is_solc_layout(&value) {
        import_solc_layout(document)
    } else {
        parse_declarations(document).map(|d| compute_layout(&d))
    }
}

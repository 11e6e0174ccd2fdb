//! Checks against frozen compiler output and an independent hash oracle.

#[path = "support/keccak_oracle.rs"]
mod keccak_oracle;

use std::collections::BTreeMap;
use std::path::PathBuf;

use upscan_core::abi::parse_abi;
use upscan_core::storage::{compute_layout, import_solc_layout, parse_declarations};
use upscan_core::Selector;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

#[test]
fn keccak_oracle_matches_reference_vectors() {
    let hex = |d: [u8; 32]| d.iter().map(|b| format!("{b:02x}")).collect::<String>();
    assert_eq!(hex(keccak_oracle::keccak256(b"")), "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470");
    let long = vec![b'a'; 300];
    assert_eq!(keccak_oracle::keccak256(&long), upscan_core::primitives::keccak256(&long));
}

#[test]
fn selectors_match_oracle() {
    for (signature, expected) in keccak_oracle::WELL_KNOWN {
        assert_eq!(keccak_oracle::selector_hex(signature), expected, "oracle disagrees on {signature}");
        assert_eq!(Selector::from_signature(signature).to_string(), format!("0x{expected}"), "{signature}");
    }
}

#[test]
fn compiled_abi_matches_method_identifiers() {
    let abi = parse_abi(&std::fs::read(data("abi/Sample.abi.json")).unwrap()).unwrap();
    let ids: BTreeMap<String, String> =
        serde_json::from_slice(&std::fs::read(data("abi/Sample.method_ids.json")).unwrap()).unwrap();
    let ours: BTreeMap<String, String> =
        abi.functions.iter().map(|f| (f.signature(), f.selector().to_string().trim_start_matches("0x").to_string())).collect();
    assert_eq!(ours, ids);
    for (signature, id) in &ids {
        assert_eq!(&keccak_oracle::selector_hex(signature), id);
    }
    assert!(abi.has_fallback && abi.has_receive);
}

#[test]
fn unsized_integer_aliases_match_compiler_signatures() {
    let compiled = std::fs::read_to_string(data("abi/Sample.abi.json")).unwrap();
    let aliased = compiled.replace("\"uint256", "\"uint").replace("\"int256", "\"int");
    assert_ne!(aliased, compiled);
    let ids: BTreeMap<String, String> =
        serde_json::from_slice(&std::fs::read(data("abi/Sample.method_ids.json")).unwrap()).unwrap();
    let abi = parse_abi(aliased.as_bytes()).unwrap();
    let signatures: Vec<String> = abi.functions.iter().map(|f| f.signature()).collect();
    assert_eq!(signatures.len(), ids.len());
    assert!(signatures.iter().all(|s| ids.contains_key(s)), "{signatures:?}");
}

/// (case name, mismatches) for every conformance case.
fn layout_conformance() -> Vec<(String, Vec<String>)> {
    let cases: BTreeMap<String, serde_json::Value> =
        serde_json::from_slice(&std::fs::read(data("layout_conformance/cases.json")).unwrap()).unwrap();
    cases
        .into_iter()
        .map(|(name, decls)| {
            let decls = parse_declarations(&serde_json::to_vec(&decls).unwrap()).unwrap();
            let ours = compute_layout(&decls);
            let expected =
                import_solc_layout(&std::fs::read(data(&format!("layout_conformance/expected/{name}.json"))).unwrap()).unwrap();
            let mut mismatches = Vec::new();
            if ours.assignments.len() != expected.assignments.len() {
                mismatches.push(format!("{} vs {} variables", ours.assignments.len(), expected.assignments.len()));
            }
            for (a, b) in ours.assignments.iter().zip(&expected.assignments) {
                let key = |x: &upscan_core::storage::SlotAssignment| (x.name.clone(), x.slot, x.offset, x.size, x.spans, x.class);
                if key(a) != key(b) {
                    mismatches.push(format!("{:?} vs compiler {:?}", key(a), key(b)));
                }
            }
            (name, mismatches)
        })
        .collect()
}

#[test]
fn layouts_match_compiler() {
    let results = layout_conformance();
    assert!(results.len() >= 20);
    let failures: Vec<_> = results.into_iter().filter(|(_, m)| !m.is_empty()).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn collision_problem_leaves_eleven_bytes() {
    let layout = import_solc_layout(&std::fs::read(data("layout_conformance/expected/collision_problem.json")).unwrap()).unwrap();
    assert_eq!(layout.unused_bytes(0), 11);
}

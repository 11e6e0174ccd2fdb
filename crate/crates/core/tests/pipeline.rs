use std::path::Path;

use upscan_core::chain::{ContractBundle, FixtureChain, FixtureProvider, FixtureRegistry, InitGuard};
use upscan_core::init_risk::InitStatus;
use upscan_core::report::{
    run_pipeline, run_pipeline_with_metadata, AnalysisReport, PipelineConfig, PipelineError, Section, VersionInputs,
};
use upscan_core::Address;

fn addr(n: u64) -> Address {
    Address::from_low_u64(n)
}

const PROXY: u64 = 0xb0;

const ABI_V1: &str = r#"[
 {"type":"function","name":"transfer","inputs":[{"type":"address"},{"type":"uint256"}],"outputs":[{"type":"bool"}],"stateMutability":"nonpayable"},
 {"type":"function","name":"totalSupplyAt","inputs":[{"type":"uint256"}],"outputs":[{"type":"uint256"}],"stateMutability":"view"},
 {"type":"function","name":"mintTo","inputs":[{"type":"address"},{"type":"uint256"}],"outputs":[],"stateMutability":"nonpayable"},
 {"type":"function","name":"burn","inputs":[{"type":"uint256"}],"outputs":[],"stateMutability":"nonpayable"},
 {"type":"function","name":"initialize","inputs":[{"type":"address"}],"outputs":[],"stateMutability":"nonpayable"}
]"#;

const ABI_V2: &str = r#"[
 {"type":"function","name":"transfer","inputs":[{"type":"address"},{"type":"uint256"}],"outputs":[{"type":"bool"}],"stateMutability":"nonpayable"},
 {"type":"function","name":"mintTo","inputs":[{"type":"address"},{"type":"uint256"},{"type":"bytes"}],"outputs":[],"stateMutability":"nonpayable"},
 {"type":"function","name":"initialize","inputs":[{"type":"address"}],"outputs":[],"stateMutability":"nonpayable"}
]"#;

const LAYOUT_V1: &str =
    r#"[{"name":"initialized","type":"bool"},{"name":"owner","type":"address"},{"name":"supply","type":"uint256"}]"#;
const LAYOUT_V2: &str = r#"[{"name":"initialized","type":"bool"},{"name":"mode","type":"enum Mode{Open,Paused}"},{"name":"owner","type":"address"},{"name":"supply","type":"uint256"}]"#;

const SRC_V1: &str = "contract T {\n    function f(uint256 a) public {\n        x == a;\n    }\n}\n";
const SRC_V2: &str = "contract T {\n    function f(uint256 a) public {\n        x = a;\n    }\n}\n";

struct Setup {
    dir: tempfile::TempDir,
}

impl Setup {
    fn new(versions: &[(u64, &str, &str, &str)]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        for sub in ["abis", "layouts", "sources"] {
            std::fs::create_dir_all(dir.path().join(sub)).unwrap();
        }
        for (a, abi, layout, src) in versions {
            let a = addr(*a);
            write(&dir.path().join(format!("abis/{a}.json")), abi);
            write(&dir.path().join(format!("layouts/{a}.json")), layout);
            write(&dir.path().join(format!("sources/{a}/T.sol")), src);
        }
        Self { dir }
    }

    fn path(&self, p: &str) -> std::path::PathBuf {
        self.dir.path().join(p)
    }

    fn config(&self) -> PipelineConfig {
        let mut c = PipelineConfig::new(addr(PROXY));
        c.inputs = VersionInputs {
            abis: Some(self.path("abis")),
            layouts: Some(self.path("layouts")),
            sources: Some(self.path("sources")),
        };
        c
    }
}

fn write(path: &Path, content: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, content).unwrap();
}

fn chain(schedule: Vec<(u64, u64)>) -> FixtureProvider {
    let mut c = FixtureChain::new(10_000);
    c.schedules.insert(addr(PROXY), schedule.into_iter().map(|(b, a)| (b, addr(a))).collect());
    c.init_guards.insert(addr(PROXY), InitGuard::Guarded);
    c.init_guards.insert(addr(0xa1), InitGuard::Guarded);
    c.init_guards.insert(addr(0xa2), InitGuard::Unguarded);
    FixtureProvider::new(c).unwrap()
}

fn two_versions() -> (Setup, FixtureProvider) {
    (Setup::new(&[(0xa1, ABI_V1, LAYOUT_V1, SRC_V1), (0xa2, ABI_V2, LAYOUT_V2, SRC_V2)]), chain(vec![(100, 0xa1), (5_000, 0xa2)]))
}

#[test]
fn two_versions_with_full_inputs() {
    let (setup, provider) = two_versions();
    let r = run_pipeline(&setup.config(), &provider).unwrap();
    assert_eq!(r.history.records.len(), 2);
    assert_eq!(r.pairs.len(), 1);
    let pair = &r.pairs[0];
    assert_eq!((pair.old.implementation, pair.new.implementation), (addr(0xa1), addr(0xa2)));
    let compat = pair.compat.result().expect("compat section");
    assert_eq!(compat.changes.len(), 3, "{:#?}", compat.changes);
    assert_eq!(pair.storage.result().expect("storage section").collisions, 1);
    let diff = pair.diff.result().expect("diff section");
    assert_eq!(diff.summary.total_actions, 1);
    assert!(r.has_findings());

    let init = r.init.result().unwrap();
    let status = |t: Address| init.results.iter().filter(|p| p.target == t).map(|p| p.status).collect::<Vec<_>>();
    assert_eq!(status(addr(PROXY)), vec![InitStatus::Protected]);
    assert_eq!(status(addr(0xa1)), vec![InitStatus::Protected]);
    assert_eq!(status(addr(0xa2)), vec![InitStatus::Initializable]);
    assert!(r.labels.is_skipped());
}

#[test]
fn single_version_has_history_only() {
    let setup = Setup::new(&[(0xa1, ABI_V1, LAYOUT_V1, SRC_V1)]);
    let r = run_pipeline(&setup.config(), &chain(vec![(100, 0xa1)])).unwrap();
    assert_eq!(r.history.records.len(), 1);
    assert!(r.pairs.is_empty());
}

#[test]
fn missing_layout_skips_only_the_storage_section() {
    let (setup, provider) = two_versions();
    let full = run_pipeline(&setup.config(), &provider).unwrap();
    std::fs::remove_file(setup.path(&format!("layouts/{}.json", addr(0xa2)))).unwrap();
    let partial = run_pipeline(&setup.config(), &provider).unwrap();

    match &partial.pairs[0].storage {
        Section::Skipped { reason } => assert!(reason.starts_with("missing input"), "{reason}"),
        other => panic!("storage section not skipped: {other:?}"),
    }
    assert_eq!(partial.pairs[0].compat, full.pairs[0].compat);
    assert_eq!(partial.pairs[0].diff, full.pairs[0].diff);
    assert_eq!(partial.usage, full.usage);
    assert_eq!(partial.init, full.init);
    assert_eq!(partial.history, full.history);
}

#[test]
fn malformed_input_fails_its_section_only() {
    let (setup, provider) = two_versions();
    write(&setup.path(&format!("abis/{}.json", addr(0xa2))), "{not json");
    let r = run_pipeline(&setup.config(), &provider).unwrap();
    assert!(matches!(r.pairs[0].compat, Section::Failed { .. }));
    assert!(r.pairs[0].storage.result().is_some());
    assert!(r.pairs[0].diff.result().is_some());
}

#[test]
fn json_is_deterministic_and_round_trips() {
    let (setup, provider) = two_versions();
    let a = run_pipeline(&setup.config(), &provider).unwrap().to_json();
    let b = run_pipeline(&setup.config(), &provider).unwrap().to_json();
    assert_eq!(a, b);
    let parsed = AnalysisReport::from_json(&a).unwrap();
    assert_eq!(parsed.to_json(), a);
    assert!(a.contains("\"schemaVersion\": 1"));
}

#[test]
fn markdown_lists_each_breaking_change() {
    let (setup, provider) = two_versions();
    let md = run_pipeline(&setup.config(), &provider).unwrap().to_markdown();
    let rows = md
        .lines()
        .filter(|l| l.starts_with("| Removal") || l.starts_with("| ParameterUpdate") || l.starts_with("| ReturnChange"))
        .count();
    assert_eq!(rows, 3, "{md}");
}

#[test]
fn empty_history_renders_empty_sections() {
    let setup = Setup::new(&[]);
    let r = run_pipeline(&setup.config(), &chain(vec![])).unwrap();
    assert!(r.history.records.is_empty() && r.pairs.is_empty());
    assert!(!r.has_findings());
    let md = r.to_markdown();
    assert!(md.contains("No implementation found."));
    assert_eq!(AnalysisReport::from_json(&r.to_json()).unwrap(), r);
}

#[test]
fn provider_failure_aborts() {
    let (setup, provider) = two_versions();
    let mut config = setup.config();
    config.latest = Some(20_000);
    assert!(matches!(run_pipeline(&config, &provider), Err(PipelineError::Detect(_))));
}

#[test]
fn no_inputs_degrade_every_section() {
    let (_, provider) = two_versions();
    let r = run_pipeline(&PipelineConfig::new(addr(PROXY)), &provider).unwrap();
    assert_eq!(r.pairs.len(), 1);
    assert!(r.pairs[0].compat.is_skipped() && r.pairs[0].storage.is_skipped() && r.pairs[0].diff.is_skipped());
    assert!(r.usage.is_skipped() && r.init.is_skipped());
}

#[test]
fn missing_abis_come_from_metadata() {
    let (_, provider) = two_versions();
    let registry =
        FixtureRegistry::in_memory([addr(0xa1), addr(0xa2)].into_iter().zip([ABI_V1, ABI_V2]).map(|(a, abi)| ContractBundle {
            address: a,
            contract_name: "T".into(),
            compiler_version: String::new(),
            abi: Some(abi.to_string()),
            sources: [("contracts/T.sol".to_string(), SRC_V1.to_string()), ("../escape.sol".to_string(), String::new())].into(),
        }));
    let cache = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(addr(PROXY));
    config.metadata_cache = Some(cache.path().to_path_buf());
    let r = run_pipeline_with_metadata(&config, &provider, Some(&registry)).unwrap();
    assert_eq!(r.pairs[0].compat.result().unwrap().changes.len(), 3);
    assert_eq!(r.pairs[0].diff.result().unwrap().summary.total_actions, 0);
    assert!(r.diagnostics.iter().any(|d| d.contains("unsafe path")));
    assert!(!cache.path().join("sources/escape.sol").exists());
}

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use upscan_astdiff::{diff_dirs, CategoryTable, MatchOptions};

use super::{
    AnalysisReport, DiffSection, FileEntry, InitSection, LabelSection, PairReport, Section, StorageSection, SCHEMA_VERSION,
};
use crate::abi::{parse_abi, Abi};
use crate::chain::{ChainProvider, MetadataSource, ProviderError};
use crate::compat::diff_abis;
use crate::history::{detect_history, DetectError, UpgradeHistory, UpgradeRecord};
use crate::init_risk::{probe_target, Role};
use crate::intent::{load_label_file, summarize_labels};
use crate::primitives::{Address, BlockNumber};
use crate::storage::{diff_layouts, load_layout_document, DiffOptions, StorageLayout, Verdict};
use crate::usage::scan;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub proxy: Address,
    /// Defaults to the provider's latest block.
    pub latest: Option<BlockNumber>,
    pub inputs: VersionInputs,
    pub labels: Option<PathBuf>,
    pub scan_usage: bool,
    /// When set, initializer probing is skipped with this reason.
    pub init_probe_disabled: Option<String>,
    pub include_edit_scripts: bool,
    /// Where ABIs and sources fetched from a metadata source are stored.
    pub metadata_cache: Option<PathBuf>,
    pub match_options: MatchOptions,
    pub layout_options: DiffOptions,
}

impl PipelineConfig {
    pub fn new(proxy: Address) -> Self {
        Self {
            proxy,
            latest: None,
            inputs: VersionInputs::default(),
            labels: None,
            scan_usage: true,
            init_probe_disabled: None,
            include_edit_scripts: false,
            metadata_cache: None,
            match_options: MatchOptions::default(),
            layout_options: DiffOptions::default(),
        }
    }
}

/// Per-implementation input directories:
/// `abis/<address>.json`, `layouts/<address>.json` and `sources/<address>/`.
#[derive(Debug, Clone, Default)]
pub struct VersionInputs {
    pub abis: Option<PathBuf>,
    pub layouts: Option<PathBuf>,
    pub sources: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read the latest block: {0}")]
    Latest(#[source] ProviderError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("cannot read input {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Input files found for each implementation address.
#[derive(Debug, Clone, Default)]
pub struct VersionSources {
    pub abis: BTreeMap<Address, PathBuf>,
    pub layouts: BTreeMap<Address, PathBuf>,
    pub sources: BTreeMap<Address, PathBuf>,
    pub diagnostics: Vec<String>,
}

/// Indexes the input directories by implementation address.
pub fn load_inputs(inputs: &VersionInputs) -> Result<VersionSources, PipelineError> {
    let mut out = VersionSources::default();
    if let Some(dir) = &inputs.abis {
        out.abis = index_dir(dir, false, &mut out.diagnostics)?;
    }
    if let Some(dir) = &inputs.layouts {
        out.layouts = index_dir(dir, false, &mut out.diagnostics)?;
    }
    if let Some(dir) = &inputs.sources {
        out.sources = index_dir(dir, true, &mut out.diagnostics)?;
    }
    Ok(out)
}

fn index_dir(dir: &Path, dirs: bool, diagnostics: &mut Vec<String>) -> Result<BTreeMap<Address, PathBuf>, PipelineError> {
    let io = |source| PipelineError::Io { path: dir.to_path_buf(), source };
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() != dirs || (!dirs && path.extension().is_none_or(|e| e != "json")) {
            continue;
        }
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match stem.parse::<Address>() {
            Ok(a) => {
                out.insert(a, path);
            }
            Err(_) => diagnostics.push(format!("ignoring {}: name is not an address", path.display())),
        }
    }
    Ok(out)
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_abi(path: &Path, implementation: Address) -> Result<Abi, String> {
    let bytes = read(path)?;
    parse_abi(&bytes)
        .map(|a| a.with_version(implementation.to_string(), Some(implementation)))
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn load_layout(path: &Path, implementation: Address) -> Result<StorageLayout, String> {
    let bytes = read(path)?;
    let mut layout = load_layout_document(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    layout.version_tag = implementation.to_string();
    Ok(layout)
}

fn missing(what: &str, implementation: Address) -> String {
    format!("missing input: {what} for {implementation}")
}

/// Loads an input for both sides of a pair, skipping when either is absent.
fn both<T>(
    map: &BTreeMap<Address, PathBuf>,
    what: &str,
    old: Address,
    new: Address,
    load: impl Fn(&Path, Address) -> Result<T, String>,
) -> Result<(T, T), Section<()>> {
    let get = |a: Address| map.get(&a).ok_or_else(|| Section::skipped(missing(what, a)));
    let (po, pn) = (get(old)?, get(new)?);
    let a = load(po, old).map_err(Section::failed)?;
    let b = load(pn, new).map_err(Section::failed)?;
    Ok((a, b))
}

fn recast<T>(s: Section<()>) -> Section<T> {
    match s {
        Section::Skipped { reason } => Section::Skipped { reason },
        Section::Failed { error } => Section::Failed { error },
        Section::Ok { .. } => unreachable!("only skip and failure markers are recast"),
    }
}

fn analyze_pair(config: &PipelineConfig, inputs: &VersionSources, old: UpgradeRecord, new: UpgradeRecord) -> PairReport {
    let (o, n) = (old.implementation, new.implementation);
    let compat = match both(&inputs.abis, "ABI", o, n, load_abi) {
        Ok((a, b)) => Section::ok(diff_abis(&a, &b).with_proxy(config.proxy)),
        Err(s) => recast(s),
    };
    let storage = match both(&inputs.layouts, "storage layout", o, n, load_layout) {
        Ok((a, b)) => {
            let findings = diff_layouts(&a, &b, config.layout_options);
            let collisions = findings.iter().filter(|f| f.verdict == Verdict::Collision).count();
            Section::ok(StorageSection { findings, collisions })
        }
        Err(s) => recast(s),
    };
    let diff = match both(&inputs.sources, "sources", o, n, |p, _| Ok(p.to_path_buf())) {
        Ok((a, b)) => match diff_dirs(Some(&a), Some(&b), config.match_options, &CategoryTable::default()) {
            Ok(d) => Section::ok(DiffSection {
                summary: d.summary,
                files: d
                    .files
                    .into_iter()
                    .map(|f| FileEntry {
                        path: f.path,
                        status: f.status,
                        actions: f.diff.actions.len(),
                        old_has_errors: f.old_has_errors,
                        new_has_errors: f.new_has_errors,
                        edit_script: config.include_edit_scripts.then_some(f.diff.actions),
                    })
                    .collect(),
            }),
            Err(e) => Section::failed(e),
        },
        Err(s) => recast(s),
    };
    PairReport { old, new, compat, storage, diff }
}

fn usage_section<P: ChainProvider + ?Sized>(
    config: &PipelineConfig,
    inputs: &VersionSources,
    history: &UpgradeHistory,
    provider: &P,
) -> Section<crate::usage::UsageScanReport> {
    if !config.scan_usage {
        return Section::skipped("disabled");
    }
    if inputs.abis.is_empty() {
        return Section::skipped("missing input: ABIs");
    }
    let mut abis = BTreeMap::new();
    for r in &history.records {
        if let Some(path) = inputs.abis.get(&r.implementation) {
            match load_abi(path, r.implementation) {
                Ok(abi) => {
                    abis.insert(r.implementation, abi);
                }
                Err(e) => return Section::failed(e),
            }
        }
    }
    match provider.transactions_to(config.proxy, 0, history.latest_checked) {
        Ok(txs) => Section::ok(scan(history, &abis, &txs)),
        Err(e) => Section::failed(e),
    }
}

fn init_section<P: ChainProvider + ?Sized>(
    config: &PipelineConfig,
    inputs: &VersionSources,
    history: &UpgradeHistory,
    provider: &P,
) -> Section<InitSection> {
    if let Some(reason) = &config.init_probe_disabled {
        return Section::skipped(reason.clone());
    }
    if inputs.abis.is_empty() {
        return Section::skipped("missing input: ABIs");
    }
    let mut targets: Vec<(Address, Role, Address)> =
        history.records.iter().map(|r| (r.implementation, Role::Implementation, r.implementation)).collect();
    targets.sort();
    targets.dedup();
    if let Some(current) = history.records.last() {
        targets.insert(0, (config.proxy, Role::Proxy, current.implementation));
    }
    let mut missing_abi = BTreeSet::new();
    let mut work = Vec::new();
    for (target, role, abi_of) in targets {
        match inputs.abis.get(&abi_of) {
            Some(path) => match load_abi(path, abi_of) {
                Ok(abi) => work.push((target, role, abi)),
                Err(e) => return Section::failed(e),
            },
            None => {
                missing_abi.insert(target);
            }
        }
    }
    let block = history.latest_checked;
    let results =
        work.par_iter().flat_map_iter(|(target, role, abi)| probe_target(*target, *role, abi, provider, block)).collect();
    Section::ok(InitSection { results, missing_abi: missing_abi.into_iter().collect() })
}

fn label_section(config: &PipelineConfig, history: &UpgradeHistory) -> Section<LabelSection> {
    let Some(path) = &config.labels else {
        return Section::skipped("missing input: label file");
    };
    let bytes = match read(path) {
        Ok(b) => b,
        Err(e) => return Section::failed(e),
    };
    let (all, issues) = match load_label_file(&bytes) {
        Ok(x) => x,
        Err(e) => return Section::failed(format!("{}: {e}", path.display())),
    };
    let pairs: BTreeSet<(Address, Address)> = history.pairs().map(|(a, b)| (a.implementation, b.implementation)).collect();
    let mut records = Vec::new();
    let mut unmatched = Vec::new();
    let mut kept = BTreeSet::new();
    for (i, r) in all.into_iter().enumerate() {
        if r.proxy != config.proxy {
            continue;
        }
        kept.insert(i);
        if !pairs.contains(&(r.old_version, r.new_version)) {
            unmatched.push(i);
        }
        records.push(r);
    }
    let issues = issues.into_iter().filter(|i| kept.contains(&i.record)).collect();
    Section::ok(LabelSection { summary: summarize_labels(&records), records, issues, unmatched })
}

/// Keeps a relative path inside the directory it is joined to.
fn safe_relative(path: &str) -> Option<PathBuf> {
    let p = Path::new(path);
    let ok = p.components().all(|c| matches!(c, std::path::Component::Normal(_)));
    (ok && p.components().next().is_some()).then(|| p.to_path_buf())
}

/// Fetches ABIs and sources missing for any implementation in `history`.
fn fetch_missing(
    history: &UpgradeHistory,
    metadata: &dyn MetadataSource,
    cache: &Path,
    inputs: &mut VersionSources,
    diagnostics: &mut Vec<String>,
) -> Result<(), PipelineError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PipelineError::Io { path, source }
    };
    let mut seen = BTreeSet::new();
    for r in &history.records {
        let a = r.implementation;
        if !seen.insert(a) || (inputs.abis.contains_key(&a) && inputs.sources.contains_key(&a)) {
            continue;
        }
        let bundle = match metadata.fetch_contract_metadata(a) {
            Ok(Some(b)) => b,
            Ok(None) => {
                diagnostics.push(format!("{a}: no verified metadata"));
                continue;
            }
            Err(e) => {
                diagnostics.push(format!("{a}: metadata fetch failed: {e}"));
                continue;
            }
        };
        if let (false, Some(abi)) = (inputs.abis.contains_key(&a), &bundle.abi) {
            let path = cache.join("abis").join(format!("{a}.json"));
            std::fs::create_dir_all(cache.join("abis")).map_err(io(&path))?;
            std::fs::write(&path, abi).map_err(io(&path))?;
            inputs.abis.insert(a, path);
        }
        if !inputs.sources.contains_key(&a) && !bundle.sources.is_empty() {
            let dir = cache.join("sources").join(a.to_string());
            for (name, content) in &bundle.sources {
                let Some(rel) = safe_relative(name) else {
                    diagnostics.push(format!("{a}: skipping source with unsafe path {name:?}"));
                    continue;
                };
                let path = dir.join(rel);
                std::fs::create_dir_all(path.parent().expect("joined path has a parent")).map_err(io(&path))?;
                std::fs::write(&path, content).map_err(io(&path))?;
            }
            inputs.sources.insert(a, dir);
        }
    }
    Ok(())
}

/// Runs history detection, then every analysis the inputs allow.
///
/// Only provider failures during history detection abort the run; problems
/// with optional inputs are reported in the affected section.
pub fn run_pipeline<P: ChainProvider + ?Sized>(config: &PipelineConfig, provider: &P) -> Result<AnalysisReport, PipelineError> {
    run_pipeline_with_metadata(config, provider, None)
}

/// [`run_pipeline`], filling in missing ABIs and sources from `metadata`
/// when a cache directory is configured.
pub fn run_pipeline_with_metadata<P: ChainProvider + ?Sized>(
    config: &PipelineConfig,
    provider: &P,
    metadata: Option<&dyn MetadataSource>,
) -> Result<AnalysisReport, PipelineError> {
    let latest = match config.latest {
        Some(b) => b,
        None => provider.latest_block().map_err(PipelineError::Latest)?,
    };
    let history = detect_history(config.proxy, provider, latest)?;
    let mut inputs = load_inputs(&config.inputs)?;

    let mut diagnostics = inputs.diagnostics.clone();
    if let (Some(metadata), Some(cache)) = (metadata, &config.metadata_cache) {
        fetch_missing(&history, metadata, cache, &mut inputs, &mut diagnostics)?;
    }
    if history.assumptions_violated {
        diagnostics.push("the upgrade schedule breaks the history search assumptions; upgrades may be missing".to_string());
    }

    let pairs: Vec<(UpgradeRecord, UpgradeRecord)> = history.pairs().map(|(a, b)| (*a, *b)).collect();
    let (pairs, (usage, init)) = rayon::join(
        || pairs.into_par_iter().map(|(a, b)| analyze_pair(config, &inputs, a, b)).collect::<Vec<_>>(),
        || {
            rayon::join(
                || usage_section(config, &inputs, &history, provider),
                || init_section(config, &inputs, &history, provider),
            )
        },
    );
    let labels = label_section(config, &history);
    diagnostics.sort();

    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        provider: provider.fingerprint(),
        proxy: config.proxy,
        history,
        pairs,
        usage,
        init,
        labels,
        diagnostics,
    })
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use upscan_astdiff::{diff_dirs, diff_sources, CategoryTable, MatchOptions};
use upscan_core::abi::{parse_abi, Abi};
use upscan_core::chain::{EtherscanClient, MetadataSource};
use upscan_core::compat::diff_history;
use upscan_core::history::{detect_history, linear_scan_oracle, query_bound};
use upscan_core::init_risk::{probe_target, InitStatus, Role};
use upscan_core::report::{load_inputs, run_pipeline_with_metadata, PipelineConfig, VersionInputs};
use upscan_core::storage::{diff_layouts, load_layout_document, DiffOptions, Verdict};
use upscan_core::usage::{read_tx_export, scan};

use crate::provider::Backend;
use crate::{
    AnalyzeArgs, AstdiffArgs, CompatArgs, Format, HistoryArgs, InitRiskArgs, Outcome, ReportFormat, RoleArg, ScanUsageArgs,
    StorageArgs,
};

const LIVE_PROBE_REFUSED: &str = "initializer probes against a live endpoint need --i-understand-live-probe";

fn outcome(findings: bool) -> Outcome {
    if findings {
        Outcome::Findings
    } else {
        Outcome::Clean
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_abi(path: &Path) -> Result<Abi> {
    let tag = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let abi = parse_abi(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(abi.with_version(tag.clone(), tag.parse().ok()))
}

pub fn analyze(a: AnalyzeArgs) -> Result<Outcome> {
    let backend = Backend::open(&a.provider)?;
    let mut config = PipelineConfig::new(a.proxy);
    config.latest = a.latest;
    config.inputs = VersionInputs { abis: a.abis, layouts: a.layouts, sources: a.sources };
    config.labels = a.labels;
    config.scan_usage = !a.no_usage;
    config.include_edit_scripts = a.edit_scripts;
    if backend.is_live() && !a.i_understand_live_probe {
        config.init_probe_disabled = Some(LIVE_PROBE_REFUSED.to_string());
    }
    let explorer = a.explorer.map(|url| EtherscanClient::new(url, a.api_key));
    if explorer.is_some() {
        config.metadata_cache = Some(a.cache.context("--explorer needs --cache <dir> for fetched metadata")?);
    }
    let metadata = explorer.as_ref().map(|e| e as &dyn MetadataSource);
    let report = run_pipeline_with_metadata(&config, backend.get(), metadata)?;
    let text = match a.format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Markdown => report.to_markdown(),
    };
    emit(&text, a.out.as_deref())?;
    Ok(outcome(report.has_findings()))
}

pub fn history(a: HistoryArgs) -> Result<Outcome> {
    let backend = Backend::open(&a.provider)?;
    let provider = backend.get();
    let latest = match a.latest {
        Some(b) => b,
        None => provider.latest_block()?,
    };
    let history = detect_history(a.proxy, provider, latest)?;
    if a.verify_linear {
        let oracle = linear_scan_oracle(a.proxy, provider, latest)?;
        if oracle.records != history.records {
            bail!("history search disagrees with the linear scan");
        }
    }
    let text = match a.format {
        Format::Json => json(&history),
        Format::Text => {
            let mut s = format!("proxy {} up to block {}\n", history.proxy, history.latest_checked);
            for (i, r) in history.records.iter().enumerate() {
                let _ = writeln!(s, "{:>3}  {}  from block {}", i + 1, r.implementation, r.activation_block);
            }
            let bound = query_bound(history.records.len(), latest);
            let _ = writeln!(s, "{} queries (bound {bound})", history.query_count);
            if history.assumptions_violated {
                let _ = writeln!(s, "warning: schedule breaks the search assumptions: {:?}", history.anomalies);
            }
            s
        }
    };
    emit(&text, None)?;
    Ok(Outcome::Clean)
}

pub fn compat(a: CompatArgs) -> Result<Outcome> {
    let abis = a.abis.iter().map(|p| load_abi(p)).collect::<Result<Vec<_>>>()?;
    let reports = diff_history(&abis);
    let text = match a.format {
        Format::Json => json(&reports),
        Format::Text => reports.iter().map(|r| r.render_table()).collect::<Vec<_>>().join("\n"),
    };
    emit(&text, None)?;
    Ok(outcome(reports.iter().any(|r| !r.changes.is_empty())))
}

pub fn storage(a: StorageArgs) -> Result<Outcome> {
    let load = |p: &Path| -> Result<_> { load_layout_document(&read(p)?).with_context(|| format!("parsing {}", p.display())) };
    let (old, new) = (load(&a.old)?, load(&a.new)?);
    let findings = diff_layouts(&old, &new, DiffOptions { fuzzy_threshold: a.fuzzy });
    let collisions = findings.iter().filter(|f| f.verdict == Verdict::Collision).count();
    let text = match a.format {
        Format::Json => json(&findings),
        Format::Text => {
            let mut s = String::new();
            for f in &findings {
                let new_var = f.new_var.as_ref().map_or("-".to_string(), |v| format!("{} {}", v.type_label, v.name));
                let _ = writeln!(
                    s,
                    "{:<16} slot {:<4} offset {:<3} {} {} -> {}: {}",
                    format!("{:?}", f.verdict),
                    f.slot,
                    f.offset,
                    f.old_var.type_label,
                    f.old_var.name,
                    new_var,
                    f.reason
                );
            }
            let _ = writeln!(s, "{} findings, {collisions} collisions", findings.len());
            s
        }
    };
    emit(&text, None)?;
    Ok(outcome(collisions > 0))
}

pub fn astdiff(a: AstdiffArgs) -> Result<Outcome> {
    let table = CategoryTable::default();
    let options = MatchOptions::default();
    let text = if a.old.is_dir() || a.new.is_dir() {
        let d = diff_dirs(Some(&a.old), Some(&a.new), options, &table)?;
        match a.format {
            Format::Json if a.actions => json(&d),
            Format::Json => json(&d.summary),
            Format::Text => {
                let mut s = String::new();
                for f in &d.files {
                    let _ = writeln!(
                        s,
                        "{:<10} {} ({} actions)",
                        format!("{:?}", f.status).to_lowercase(),
                        f.path,
                        f.diff.actions.len()
                    );
                    if a.actions {
                        for act in &f.diff.actions {
                            let _ = writeln!(s, "    {}", describe(act));
                        }
                    }
                }
                s.push_str(&d.summary.render_table());
                s
            }
        }
    } else {
        let text = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
        let d = diff_sources(&text(&a.old)?, &text(&a.new)?, options, &table)?;
        match a.format {
            Format::Json if a.actions => json(&d),
            Format::Json => json(&d.diff.summary),
            Format::Text => {
                let mut s = String::new();
                if a.actions {
                    for act in &d.diff.actions {
                        let _ = writeln!(s, "{}", describe(act));
                    }
                }
                s.push_str(&d.diff.summary.render_table());
                s
            }
        }
    };
    emit(&text, None)?;
    Ok(Outcome::Clean)
}

fn describe(a: &upscan_astdiff::EditAction) -> String {
    use upscan_astdiff::{Attribution, EditOp};
    let what = match &a.op {
        EditOp::Insert { value, .. } => format!("insert {} {value:?}", a.node_kind),
        EditOp::Delete { .. } => format!("delete {}", a.node_kind),
        EditOp::Update { old_value, new_value, .. } => format!("update {} {old_value:?} -> {new_value:?}", a.node_kind),
        EditOp::Move { .. } => format!("move {}", a.node_kind),
    };
    let cell = match a.attribution {
        Attribution::Cell { category, action } => format!("{category} {action:?}"),
        Attribution::Excluded => "excluded".to_string(),
    };
    format!("line {:<5} {what} [{cell}]", a.line)
}

pub fn init_risk(a: InitRiskArgs) -> Result<Outcome> {
    let backend = Backend::open(&a.provider)?;
    if backend.is_live() && !a.i_understand_live_probe {
        bail!(LIVE_PROBE_REFUSED);
    }
    let provider = backend.get();
    let abi = load_abi(&a.abi)?;
    let block = match a.block {
        Some(b) => b,
        None => provider.latest_block()?,
    };
    let role = match a.role {
        RoleArg::Proxy => Role::Proxy,
        RoleArg::Implementation => Role::Implementation,
    };
    let results = probe_target(a.target, role, &abi, provider, block);
    let text = match a.format {
        Format::Json => json(&results),
        Format::Text => {
            let mut s = String::new();
            for r in &results {
                let _ = writeln!(
                    s,
                    "{} {:?} {} {:?}{}",
                    r.target,
                    r.role,
                    r.function.as_deref().unwrap_or("-"),
                    r.status,
                    r.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default()
                );
            }
            s
        }
    };
    emit(&text, None)?;
    Ok(outcome(results.iter().any(|r| r.status == InitStatus::Initializable)))
}

pub fn scan_usage(a: ScanUsageArgs) -> Result<Outcome> {
    let backend = Backend::open(&a.provider)?;
    let provider = backend.get();
    let latest = match a.latest {
        Some(b) => b,
        None => provider.latest_block()?,
    };
    let history = detect_history(a.proxy, provider, latest)?;
    let inputs = load_inputs(&VersionInputs { abis: Some(a.abis.clone()), ..Default::default() })?;
    let mut abis = BTreeMap::new();
    for r in &history.records {
        if let Some(path) = inputs.abis.get(&r.implementation) {
            abis.insert(r.implementation, load_abi(path)?);
        }
    }
    let txs = match &a.txs {
        Some(path) => read_tx_export(std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => provider.transactions_to(a.proxy, 0, latest)?,
    };
    let report = scan(&history, &abis, &txs);
    let text = match a.format {
        Format::Json => json(&report),
        Format::Text => {
            let mut s = format!("{} transactions scanned, {} broken\n", report.scanned, report.broken.len());
            for b in &report.broken {
                let _ = writeln!(s, "{} block {} {} {}", b.tx_hash, b.block, b.kind.as_str(), b.matched_old_signature);
            }
            let _ = writeln!(
                s,
                "{} return-change candidates, {} unknown selectors, {} before first version, {} without ABI",
                report.return_change_candidates.len(),
                report.unknown_selectors.values().sum::<u64>(),
                report.before_first_version,
                report.skipped_missing_abi
            );
            s
        }
    };
    emit(&text, None)?;
    Ok(outcome(!report.broken.is_empty()))
}

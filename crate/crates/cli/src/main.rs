//! `upscan`: analyze the upgrade history of a proxy contract.
//!
//! Exit status: 0 when the run found nothing, 2 when it reported findings,
//! 1 on operational errors.

mod commands;
mod provider;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use upscan_core::Address;

#[derive(Debug, Parser)]
#[command(name = "upscan", version, about = "Upgrade analysis for proxy contracts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline on one proxy.
    Analyze(AnalyzeArgs),
    /// Reconstruct the implementation history of a proxy.
    History(HistoryArgs),
    /// Classify breaking ABI changes between consecutive versions.
    Compat(CompatArgs),
    /// Compare two storage layouts for collisions.
    Storage(StorageArgs),
    /// Diff two Solidity files or directories.
    Astdiff(AstdiffArgs),
    /// Probe whether initializers can still be called.
    InitRisk(InitRiskArgs),
    /// Find historical calls broken by upgrades.
    ScanUsage(ScanUsageArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ProviderArgs {
    /// Archive node JSON-RPC endpoint.
    #[arg(long, env = "UPSCAN_RPC_URL")]
    rpc: Option<String>,
    /// Fixture chain description (JSON).
    #[arg(long)]
    fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Proxy contract address.
    #[arg(long)]
    proxy: Address,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Last block to analyze; defaults to the chain tip.
    #[arg(long)]
    latest: Option<u64>,
    /// Directory of `<implementation>.json` ABI files.
    #[arg(long)]
    abis: Option<PathBuf>,
    /// Directory of `<implementation>.json` storage layouts.
    #[arg(long)]
    layouts: Option<PathBuf>,
    /// Directory of `<implementation>/` source trees.
    #[arg(long)]
    sources: Option<PathBuf>,
    /// Intention label side-file.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Verified-source registry used to fetch missing ABIs and sources.
    #[arg(long, env = "UPSCAN_EXPLORER_URL")]
    explorer: Option<String>,
    /// Registry API key.
    #[arg(long, env = "UPSCAN_API_KEY", hide_env_values = true)]
    api_key: Option<String>,
    /// Where fetched metadata is stored; required with --explorer.
    #[arg(long, requires = "explorer")]
    cache: Option<PathBuf>,
    /// Skip the transaction scan.
    #[arg(long)]
    no_usage: bool,
    /// Include full edit scripts in the report.
    #[arg(long)]
    edit_scripts: bool,
    /// Allow initializer probes against a live endpoint.
    #[arg(long)]
    i_understand_live_probe: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HistoryArgs {
    #[arg(long)]
    proxy: Address,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long)]
    latest: Option<u64>,
    /// Also query every block and compare.
    #[arg(long)]
    verify_linear: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct CompatArgs {
    /// ABI files in version order.
    #[arg(required = true, num_args = 2..)]
    abis: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct StorageArgs {
    /// Old layout: compiler output or a declaration list.
    old: PathBuf,
    new: PathBuf,
    /// Maximum edit distance for rename detection.
    #[arg(long, default_value_t = 2)]
    fuzzy: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct AstdiffArgs {
    /// Old file or directory.
    old: PathBuf,
    new: PathBuf,
    /// List every edit action.
    #[arg(long)]
    actions: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RoleArg {
    Proxy,
    Implementation,
}

#[derive(Debug, Args)]
struct InitRiskArgs {
    #[arg(long)]
    target: Address,
    /// ABI of the implementation behind the target.
    #[arg(long)]
    abi: PathBuf,
    #[arg(long, value_enum, default_value = "implementation")]
    role: RoleArg,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Block to simulate against; defaults to the chain tip.
    #[arg(long)]
    block: Option<u64>,
    #[arg(long)]
    i_understand_live_probe: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct ScanUsageArgs {
    #[arg(long)]
    proxy: Address,
    /// Directory of `<implementation>.json` ABI files.
    #[arg(long)]
    abis: PathBuf,
    #[command(flatten)]
    provider: ProviderArgs,
    /// Transaction export (CSV) to scan instead of querying the provider.
    #[arg(long)]
    txs: Option<PathBuf>,
    #[arg(long)]
    latest: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Whether a command completed with findings to report.
pub enum Outcome {
    Clean,
    Findings,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::History(a) => commands::history(a),
        Command::Compat(a) => commands::compat(a),
        Command::Storage(a) => commands::storage(a),
        Command::Astdiff(a) => commands::astdiff(a),
        Command::InitRisk(a) => commands::init_risk(a),
        Command::ScanUsage(a) => commands::scan_usage(a),
    };
    match result {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Findings) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

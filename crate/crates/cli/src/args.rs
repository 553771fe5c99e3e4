use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridheal_core::cbr::{Attribute, SimilarityMode};
use gridheal_core::hatsga::Fault;
use gridheal_core::ingest::NetworkFormat;
use gridheal_core::orchestrator::Mode;

#[derive(Debug, Parser)]
#[command(name = "gridheal", version, about = "Reconfiguration and case-based recovery for distribution grids")]
pub struct Cli {
    /// Output style; structured is JSON.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a network file and report its size; optionally convert it to the native format.
    Ingest(IngestArgs),
    /// Search for the lowest-loss radial topology, optionally after a fault.
    Reconfigure(ReconfigureArgs),
    /// Time the search over one or more systems.
    Benchmark(BenchmarkArgs),
    /// Inspect and maintain a case base.
    #[command(subcommand)]
    Case(CaseCommand),
    /// Run one alert through retrieval, reuse and search against a case base.
    Simulate(SimulateArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

/// A network file, or `builtin:<name>` for a bundled IEEE system.
#[derive(Debug, Clone, Args)]
pub struct NetworkArg {
    pub network: String,
    /// cdf or native; guessed from the content when omitted.
    #[arg(long = "network-format")]
    pub network_format: Option<NetworkFormat>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FaultArgs {
    /// Failed bus id (repeatable).
    #[arg(long = "fail-bus")]
    pub fail_bus: Vec<u32>,
    /// Failed branch id (repeatable).
    #[arg(long = "fail-branch")]
    pub fail_branch: Vec<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Fraction of open switches tried per pass, in (0, 1]; default 1.
    #[arg(long)]
    pub elite: Option<f64>,
    #[arg(long)]
    pub max_passes: Option<u32>,
    /// Allowed voltage deviation as a fraction of nominal.
    #[arg(long)]
    pub quality_limit: Option<f64>,
    /// Power-flow mismatch tolerance (pu).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Evaluate candidates on all cores.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub network: NetworkArg,
    /// Write the network in the native format.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconfigureArgs {
    #[command(flatten)]
    pub network: NetworkArg,
    #[command(flatten)]
    pub fault: FaultArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Write the post-fault network with the best topology applied as a native file.
    #[arg(long)]
    pub write_topology: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Network files or builtin:<name>.
    #[arg(required = true)]
    pub networks: Vec<String>,
    #[arg(long, short, default_value_t = gridheal_core::bench::DEFAULT_REPETITIONS)]
    pub repetitions: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Also write the structured report here.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CaseBaseArg {
    /// Case base file.
    #[arg(long = "case-base", env = "GRIDHEAL_CASE_BASE")]
    pub case_base: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CaseCommand {
    /// List stored cases.
    List {
        #[command(flatten)]
        base: CaseBaseArg,
    },
    /// Search each scenario and retain the solutions.
    Seed(SeedArgs),
    /// Rank stored cases against a fault or an explicit attribute vector.
    Retrieve(RetrieveArgs),
    /// Shrink the base to a capacity by the maintenance rule.
    Evict {
        #[command(flatten)]
        base: CaseBaseArg,
        #[arg(long)]
        capacity: usize,
    },
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[command(flatten)]
    pub base: CaseBaseArg,
    #[command(flatten)]
    pub network: NetworkArg,
    /// Scenario such as `bus:9,11`, `branch:3` or `bus:4;branch:7` (repeatable).
    #[arg(long)]
    pub scenario: Vec<Fault>,
    /// Add every single-bus fault except the slack.
    #[arg(long)]
    pub all_single_bus: bool,
    /// Add every single-branch fault.
    #[arg(long)]
    pub all_single_branch: bool,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[command(flatten)]
    pub base: CaseBaseArg,
    /// Network to derive the query from; requires a fault.
    #[arg(long)]
    pub network: Option<String>,
    #[command(flatten)]
    pub fault: FaultArgs,
    /// Explicit query attribute, `name=value` (all three needed without --network).
    #[arg(long = "attr", value_parser = parse_attribute)]
    pub attr: Vec<(Attribute, f64)>,
    #[arg(long, default_value_t = gridheal_core::cbr::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Attribute weight, `name=value` (repeatable; unspecified weights keep 1).
    #[arg(long = "weight", value_parser = parse_attribute)]
    pub weight: Vec<(Attribute, f64)>,
    #[arg(long, default_value_t = 10)]
    pub limit: usize,
    /// weighted-mean or euclidean.
    #[arg(long, default_value = "weighted-mean")]
    pub mode: SimilarityMode,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub base: CaseBaseArg,
    #[command(flatten)]
    pub network: NetworkArg,
    #[command(flatten)]
    pub fault: FaultArgs,
    /// autonomous applies and retains; manual only proposes.
    #[arg(long, default_value = "autonomous")]
    pub mode: Mode,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: String,
    /// Case base file, loaded at start and saved on changes and shutdown.
    #[arg(long = "case-base", env = "GRIDHEAL_CASE_BASE")]
    pub case_base: Option<PathBuf>,
    /// Orchestrator settings (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Networks to load at start (repeatable).
    #[arg(long = "network")]
    pub networks: Vec<String>,
    /// Require `Authorization: Bearer <token>`.
    #[arg(long, env = "GRIDHEAL_TOKEN")]
    pub token: Option<String>,
    /// Default alert mode: autonomous or manual.
    #[arg(long)]
    pub mode: Option<Mode>,
}

/// `name=value` for one of the three matching attributes.
fn parse_attribute(s: &str) -> Result<(Attribute, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let attr = Attribute::parse(name.trim()).ok_or_else(|| {
        format!("unknown attribute {name:?}; expected loss_ratio, profile_sum or violation_count")
    })?;
    let value: f64 = value.trim().parse().map_err(|e| format!("bad value {value:?}: {e}"))?;
    if !value.is_finite() {
        return Err(format!("value must be finite, got {value}"));
    }
    Ok((attr, value))
}

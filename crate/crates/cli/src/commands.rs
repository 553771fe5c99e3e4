use std::fs;
use std::path::Path;

use gridheal_core::bench::benchmark;
use gridheal_core::builtin;
use gridheal_core::cbr::{AttributeVector, NetworkState, Problem, Query, RetrieveOptions, SimilarityWeights};
use gridheal_core::grid::{Network, Topology};
use gridheal_core::hatsga::{apply_fault, search, Fault, HatsgaParams};
use gridheal_core::ingest::{parse_network, NetworkFormat};
use gridheal_core::native::emit_native;
use gridheal_core::orchestrator::{degraded_attributes, Alert, Orchestrator, OrchestratorConfig};
use gridheal_core::store::CaseBase;
use gridheal_service::{bind, serve, AppState, ServiceOptions};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::render;

/// A domain error: its code name and a readable message.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl Failure {
    fn new(code: &str, message: impl Into<String>) -> Self {
        Failure {
            code: code.into(),
            message: message.into(),
        }
    }
}

macro_rules! failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new(e.code(), e.to_string())
            }
        }
    )*};
}

failure_from!(
    gridheal_core::ingest::IngestError,
    gridheal_core::hatsga::HatsgaError,
    gridheal_core::store::StoreError,
    gridheal_core::cbr::CbrError,
    gridheal_core::orchestrator::OrchestratorError,
    gridheal_core::bench::BenchError,
    gridheal_service::ServiceError
);

fn storage(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new("StorageError", format!("{}: {e}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct SystemSummary {
    pub buses: usize,
    pub branches: usize,
    pub switches: usize,
    pub slack: u32,
    pub spanning_trees: String,
}

impl SystemSummary {
    fn of(net: &Network) -> Self {
        SystemSummary {
            buses: net.bus_count(),
            branches: net.branch_count(),
            switches: net.branches().iter().filter(|b| b.switchable).count(),
            slack: net.slack().id,
            spanning_trees: net.count_spanning_trees().to_string(),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let out = Output(cli.format);
    match &cli.command {
        Command::Ingest(a) => ingest(out, a),
        Command::Reconfigure(a) => reconfigure(out, a),
        Command::Benchmark(a) => bench(out, a),
        Command::Case(c) => case(out, c),
        Command::Simulate(a) => simulate(out, a),
        Command::Serve(a) => serve_cmd(out, a),
    }
}

#[derive(Clone, Copy)]
struct Output(Format);

impl Output {
    fn emit<T: Serialize>(self, schema: &str, body: &T, text: impl FnOnce() -> String) {
        match self.0 {
            Format::Text => print!("{}", text()),
            Format::Structured => println!("{}", render::envelope(schema, body)),
        }
    }
}

/// A file path, or `builtin:<name>` for one of the bundled IEEE systems.
pub fn load_network(spec: &str, format: Option<NetworkFormat>) -> Result<Network, Failure> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let text = builtin::cdf_text(name).ok_or_else(|| {
            Failure::new(
                "StorageError",
                format!("no builtin network {name:?}; available: {}", builtin::NAMES.join(", ")),
            )
        })?;
        return Ok(parse_network(text, Some(NetworkFormat::Cdf))?);
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).map_err(|e| storage(path, e))?;
    Ok(parse_network(&text, format)?)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| storage(path, e))
}

fn params(base: HatsgaParams, a: &SearchArgs) -> HatsgaParams {
    HatsgaParams {
        elite_fraction: a.elite.unwrap_or(base.elite_fraction),
        max_passes: a.max_passes.map_or(base.max_passes, |p| p as usize),
        quality_limit: a.quality_limit.unwrap_or(base.quality_limit),
        tol: a.tol.unwrap_or(base.tol),
        max_iter: a.max_iter.unwrap_or(base.max_iter),
        parallel: a.parallel || base.parallel,
        seed: base.seed,
    }
}

fn fault_of(a: &FaultArgs) -> Fault {
    Fault {
        buses: a.fail_bus.iter().copied().collect(),
        branches: a.fail_branch.iter().copied().collect(),
    }
}

fn ingest(out: Output, a: &IngestArgs) -> Result<(), Failure> {
    let net = load_network(&a.network.network, a.network.network_format)?;
    if let Some(path) = &a.output {
        write_file(path, &emit_native(&net))?;
    }
    let summary = SystemSummary::of(&net);
    out.emit("ingest", &summary, || {
        let mut s = format!(
            "{} buses, {} branches, {} switches, slack bus {}\nspanning trees {}\n",
            summary.buses, summary.branches, summary.switches, summary.slack, summary.spanning_trees
        );
        if let Some(path) = &a.output {
            s.push_str(&format!("written to {}\n", path.display()));
        }
        s
    });
    Ok(())
}

/// Search defaults for the command line: every ranked switch is tried, as in the orchestrator.
fn cli_params() -> HatsgaParams {
    OrchestratorConfig::default().hatsga
}

fn reconfigure(out: Output, a: &ReconfigureArgs) -> Result<(), Failure> {
    let net = load_network(&a.network.network, a.network.network_format)?;
    let fault = fault_of(&a.fault);
    let params = params(cli_params(), &a.search);
    params.validate()?;
    let outcome = apply_fault(&net, &fault)?;
    let result = search(&outcome.network, &params, None)?;
    if let Some(path) = &a.write_topology {
        write_file(path, &emit_native(&closed_part(&outcome.network, &result.best_topology)?))?;
    }
    let system = SystemSummary::of(&outcome.network);
    let body = json!({
        "system": system,
        "fault": fault,
        "shed_buses": outcome.shed_buses,
        "removed_branches": outcome.removed_branches,
        "params": params,
        "result": result,
    });
    out.emit("reconfigure", &body, || {
        render::reconfigure(&system, &fault.to_string(), &outcome.shed_buses, &result)
    });
    Ok(())
}

/// The network with its open switches removed.
fn closed_part(net: &Network, topo: &Topology) -> Result<Network, Failure> {
    let branches = net.branches().iter().filter(|b| !topo.is_open(b.id)).cloned().collect();
    Network::new(net.buses().to_vec(), branches, net.base_mva()).map_err(|e| Failure::new(e.code(), e.to_string()))
}

fn bench(out: Output, a: &BenchmarkArgs) -> Result<(), Failure> {
    let systems = a
        .networks
        .iter()
        .map(|spec| {
            let name = spec.strip_prefix("builtin:").map(str::to_string).unwrap_or_else(|| {
                Path::new(spec)
                    .file_stem()
                    .map_or_else(|| spec.clone(), |s| s.to_string_lossy().into_owned())
            });
            load_network(spec, None).map(|n| (name, n))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let params = params(cli_params(), &a.search);
    let report = benchmark(&systems, a.repetitions, &params)?;
    if let Some(path) = &a.output {
        write_file(path, &format!("{}\n", render::envelope("benchmark", &report)))?;
    }
    out.emit("benchmark", &report, || render::benchmark(&report));
    Ok(())
}

fn open_base(path: &Path) -> Result<CaseBase, Failure> {
    Ok(CaseBase::open(path)?)
}

fn case(out: Output, c: &CaseCommand) -> Result<(), Failure> {
    match c {
        CaseCommand::List { base } => {
            let cases = open_base(&base.case_base)?;
            let body = json!({ "capacity": cases.capacity(), "cases": cases.cases() });
            out.emit("case-list", &body, || render::cases(cases.cases(), cases.capacity()));
        }
        CaseCommand::Seed(a) => {
            let net = load_network(&a.network.network, a.network.network_format)?;
            let mut scenarios: Vec<Fault> = a.scenario.clone();
            if a.all_single_bus {
                let slack = net.slack().id;
                scenarios.extend(net.buses().iter().filter(|b| b.id != slack).map(|b| Fault::buses([b.id])));
            }
            if a.all_single_branch {
                scenarios.extend(net.branches().iter().map(|b| Fault::branches([b.id])));
            }
            if scenarios.is_empty() {
                return Err(Failure::new(
                    "InvalidParams",
                    "no scenarios; pass --scenario, --all-single-bus or --all-single-branch",
                ));
            }
            let alerts: Vec<Alert> = scenarios.iter().map(Alert::fault).collect();
            let config = OrchestratorConfig::default();
            let config = OrchestratorConfig {
                hatsga: params(config.hatsga, &a.search),
                ..config
            };
            config.hatsga.validate()?;
            let mut orch = Orchestrator::new(open_base(&a.base.case_base)?, config);
            let id = orch.add_network(net);
            let report = orch.seed(id, &alerts)?;
            orch.cases().save(&a.base.case_base)?;
            let total = orch.cases().len();
            out.emit("case-seed", &json!({ "report": report, "cases": total }), || {
                let mut s = format!(
                    "{} scenarios retained, {} skipped, {total} cases stored\n",
                    report.retained.len(),
                    report.skipped.len()
                );
                for skip in &report.skipped {
                    s.push_str(&format!("  skipped {}: {} ({})\n", skip.alert.elements(), skip.code, skip.message));
                }
                s
            });
        }
        CaseCommand::Retrieve(a) => retrieve(out, a)?,
        CaseCommand::Evict { base, capacity } => {
            let mut cases = open_base(&base.case_base)?;
            let evicted = cases.set_capacity(Some(*capacity))?;
            cases.save(&base.case_base)?;
            let remaining = cases.len();
            out.emit(
                "case-evict",
                &json!({ "evicted": evicted, "remaining": remaining, "capacity": capacity }),
                || format!("evicted {} ({}), {remaining} remain\n", evicted.len(), join(&evicted)),
            );
        }
    }
    Ok(())
}

fn join(ids: &[u64]) -> String {
    if ids.is_empty() {
        return "none".into();
    }
    ids.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")
}

fn retrieve(out: Output, a: &RetrieveArgs) -> Result<(), Failure> {
    let cases = open_base(&a.base.case_base)?;
    let query = match &a.network {
        Some(spec) => {
            let net = load_network(spec, None)?;
            let fault = fault_of(&a.fault);
            if fault.is_empty() {
                return Err(Failure::new("InvalidParams", "--network needs --fail-bus or --fail-branch"));
            }
            let outcome = apply_fault(&net, &fault)?;
            let mut attributes = degraded_attributes(&net, &Topology::default(), &fault, HatsgaParams::default().quality_limit)?;
            let mut values = attributes.values();
            for (attr, v) in &a.attr {
                values[*attr as usize] = *v;
            }
            attributes = AttributeVector::from_values(values);
            Query {
                state: Some(NetworkState::of(&outcome.network)),
                problem: Some(Problem::from_fault(&fault)),
                attributes,
            }
        }
        None => {
            let mut values = [None; 3];
            for (attr, v) in &a.attr {
                values[*attr as usize] = Some(*v);
            }
            let [Some(l), Some(p), Some(v)] = values else {
                return Err(Failure::new(
                    "InvalidParams",
                    "a query needs --network with a fault, or all three --attr values",
                ));
            };
            Query {
                state: None,
                problem: None,
                attributes: AttributeVector::new(l, p, v),
            }
        }
    };
    let mut weights = SimilarityWeights::default();
    for (attr, w) in &a.weight {
        weights.set(*attr, *w);
    }
    let opts = RetrieveOptions {
        threshold: a.threshold,
        weights,
        limit: a.limit,
        mode: a.mode,
    };
    let hits = cases.retrieve(&query, &opts)?;
    let listed: Vec<_> = hits
        .iter()
        .map(|h| (h.similarity, cases.get(h.case_id).expect("retrieved from this base")))
        .collect();
    let body = json!({
        "query": query.attributes,
        "options": opts,
        "results": listed.iter().map(|(s, c)| json!({ "similarity": s, "case": c })).collect::<Vec<_>>(),
    });
    out.emit("case-retrieve", &body, || render::retrieved(&listed));
    Ok(())
}

fn simulate(out: Output, a: &SimulateArgs) -> Result<(), Failure> {
    let net = load_network(&a.network.network, a.network.network_format)?;
    let defaults = OrchestratorConfig::default();
    let config = OrchestratorConfig {
        threshold: a.threshold.unwrap_or(defaults.threshold),
        hatsga: params(defaults.hatsga, &a.search),
        ..defaults
    };
    let mut orch = Orchestrator::new(open_base(&a.base.case_base)?, config);
    orch.add_network(net);
    let plan = orch.handle_alert(&Alert::fault(&fault_of(&a.fault)), Some(a.mode))?;
    orch.cases().save(&a.base.case_base)?;
    out.emit("simulate", &plan, || render::plan(&plan));
    Ok(())
}

fn serve_cmd(out: Output, a: &ServeArgs) -> Result<(), Failure> {
    let mut config: OrchestratorConfig = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| storage(path, e))?;
            toml::from_str(&text).map_err(|e| Failure::new("InvalidParams", format!("{}: {e}", path.display())))?
        }
        None => OrchestratorConfig::default(),
    };
    if let Some(mode) = a.mode {
        config.mode = mode;
    }
    config.hatsga.validate()?;
    let options = ServiceOptions {
        case_path: a.case_base.clone(),
        token: a.token.clone(),
    };
    let mut orch = Orchestrator::new(gridheal_service::load_cases(&options)?, config);
    for spec in &a.networks {
        orch.add_network(load_network(spec, None)?);
    }
    let state = AppState::new(orch, options);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new("StorageError", e.to_string()))?;
    rt.block_on(async {
        let listener = bind(&a.listen).await?;
        let addr = listener
            .local_addr()
            .map_or_else(|_| a.listen.clone(), |addr| addr.to_string());
        out.emit("serve", &json!({ "listening": addr }), || format!("listening on {addr}\n"));
        use std::io::Write;
        let _ = std::io::stdout().flush();
        serve(listener, state, shutdown_signal()).await?;
        Ok(())
    })
}

async fn shutdown_signal() {
    let interrupt = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    {
        let mut term = match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(s) => s,
            Err(_) => return interrupt.await,
        };
        tokio::select! {
            _ = interrupt => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    interrupt.await;
    log::info!("shutting down");
}

//! Text tables and the versioned JSON envelope for structured output.

use std::fmt::Write;

use gridheal_core::bench::BenchmarkReport;
use gridheal_core::cbr::Case;
use gridheal_core::hatsga::HatsgaResult;
use gridheal_core::orchestrator::{PlanSource, RecoveryPlan};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// `{"schema": "gridheal.<name>", "version": 1, "result": ...}`
pub fn envelope<T: Serialize>(name: &str, body: &T) -> String {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        schema: String,
        version: u32,
        result: &'a T,
    }
    let doc = Envelope {
        schema: format!("gridheal.{name}"),
        version: SCHEMA_VERSION,
        result: body,
    };
    serde_json::to_string_pretty(&doc).expect("reports always serialize")
}

fn ids<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let v: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(", ")
    }
}

pub fn reconfigure(system: &crate::commands::SystemSummary, fault: &str, shed: &[u32], r: &HatsgaResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "system        {} buses, {} branches, {} switches",
        system.buses, system.branches, system.switches
    );
    let _ = writeln!(out, "fault         {fault}");
    let _ = writeln!(out, "shed buses    {}", ids(shed));
    if r.initial_loss.is_finite() {
        let _ = writeln!(out, "initial loss  {:.6} MW", r.initial_loss);
    } else {
        let _ = writeln!(out, "initial loss  did not converge");
    }
    let _ = writeln!(out, "best loss     {:.6} MW", r.best_loss);
    let _ = writeln!(
        out,
        "open switches {} ({})",
        r.best_topology.len(),
        ids(r.best_topology.open_switches())
    );
    let _ = writeln!(
        out,
        "quality       loss ratio {:.6}, profile sum {:.6}, violations {}",
        r.quality.loss_ratio, r.quality.profile_sum, r.quality.violation_count
    );
    let _ = writeln!(out, "search        {} power flows in {} passes", r.evaluations, r.passes);
    out
}

pub fn benchmark(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "repetitions: {}", report.repetitions);
    let _ = writeln!(
        out,
        "{:<12} {:>5} {:>8} {:>12} {:>11} {:>11} {:>25} {:>6} {:>12}",
        "system", "buses", "switches", "trees", "mean (s)", "sd (s)", "ci95 (s)", "evals", "loss (MW)"
    );
    for row in &report.rows {
        let loss = row.best_loss.map_or_else(|| "-".to_string(), |l| format!("{l:.4}"));
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:>8} {:>12.4e} {:>11.6} {:>11.6} {:>25} {:>6} {:>12}",
            row.system,
            row.buses,
            row.switches,
            row.spanning_trees_approx,
            row.mean_seconds,
            row.sd_seconds,
            format!("[{:.6}, {:.6}]", row.ci95_seconds[0], row.ci95_seconds[1]),
            row.evaluations,
            loss
        );
    }
    for row in report.rows.iter().filter(|r| r.failure.is_some()) {
        let _ = writeln!(out, "{}: {}", row.system, row.failure.as_deref().unwrap_or_default());
    }
    out
}

pub fn cases(cases: &[Case], capacity: Option<usize>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:<18} {:<20} {:>5} {:>12} {:>5} {:>9}",
        "id", "kind", "affected", "buses", "loss (MW)", "uses", "last used"
    );
    for c in cases {
        let _ = writeln!(
            out,
            "{:>4} {:<18} {:<20} {:>5} {:>12.6} {:>5} {:>9}",
            c.id,
            c.problem.kind.to_string(),
            c.problem.affected.to_string(),
            c.state.active_buses.len(),
            c.loss,
            c.occurrences,
            c.last_used
        );
    }
    let cap = capacity.map_or_else(|| "unbounded".to_string(), |c| c.to_string());
    let _ = writeln!(out, "{} cases, capacity {cap}", cases.len());
    out
}

pub fn retrieved(hits: &[(f64, &Case)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:>4} {:>10} {:<18} {:<20} {:>12}",
        "rank", "id", "similarity", "kind", "affected", "loss (MW)"
    );
    for (rank, (sim, c)) in hits.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4} {:>4} {:>10.6} {:<18} {:<20} {:>12.6}",
            rank + 1,
            c.id,
            sim,
            c.problem.kind.to_string(),
            c.problem.affected.to_string(),
            c.loss
        );
    }
    if hits.is_empty() {
        let _ = writeln!(out, "no case above the threshold");
    }
    out
}

pub fn plan(p: &RecoveryPlan) -> String {
    let mut out = String::new();
    let source = match p.source {
        PlanSource::CbrReuse => "reused case",
        PlanSource::Hatsga => "search",
    };
    let _ = writeln!(out, "plan          {} ({})", p.id, p.status);
    let _ = writeln!(out, "source        {source}");
    if let Some(m) = &p.matched_case {
        let _ = writeln!(out, "matched case  {} at similarity {:.6}", m.case_id, m.similarity);
    }
    let _ = writeln!(out, "shed buses    {}", ids(&p.shed_buses));
    let _ = writeln!(
        out,
        "open switches {} ({})",
        p.proposal.len(),
        ids(p.proposal.open_switches())
    );
    let _ = writeln!(out, "loss          {:.6} MW", p.predicted_loss);
    let _ = writeln!(
        out,
        "quality       loss ratio {:.6}, profile sum {:.6}, violations {}",
        p.predicted_quality.loss_ratio, p.predicted_quality.profile_sum, p.predicted_quality.violation_count
    );
    if let Some(n) = p.evaluations {
        let _ = writeln!(out, "search        {n} power flows");
    }
    if let Some(id) = p.retained_case {
        let _ = writeln!(out, "retained as   case {id}");
    }
    out
}

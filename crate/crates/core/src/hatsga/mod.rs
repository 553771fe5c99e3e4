//! Loss-minimizing reconfiguration by branch exchange over radial topologies.
//!
//! The search starts from a minimum spanning tree. Each pass ranks the open switches
//! of the current topology by the voltage gap across them, keeps an elite share, and
//! for every elite switch tries each exchange along its fundamental loop. Every
//! topology ever evaluated is memoized in a [`TabuLedger`] and never solved again.
//! The current topology moves to the best candidate of the pass (fewest voltage
//! violations, then lowest loss) and the search stops after a pass without progress.

mod fault;
mod ledger;

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fault::{apply_fault, Fault, FaultOutcome};
pub use ledger::{LedgerConflict, LedgerEntry, TabuLedger};

use crate::grid::{Branch, BranchId, BusId, GridError, Network, Topology};
use crate::powerflow::{quality, solve, PowerFlowError, PowerFlowOptions, PowerFlowSolution, QualityMetrics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HatsgaError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("the slack bus cannot fail")]
    SlackFailed,
    #[error("unknown {element} {id}")]
    UnknownElement { element: &'static str, id: u32 },
    #[error("bus {bus} loses every path to the slack")]
    Disconnected { bus: BusId },
    #[error("non-switchable branches form a loop through branch {0}")]
    FixedLoop(BranchId),
    #[error("no evaluated topology satisfies the voltage limits ({evaluations} evaluated)")]
    NoFeasibleTopology { evaluations: usize },
    #[error("search cancelled")]
    Cancelled,
    #[error("ledger disagreement for {}: {recorded} vs {offered}", .open)]
    LedgerInconsistent { open: Topology, recorded: f64, offered: f64 },
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl HatsgaError {
    pub fn code(&self) -> &'static str {
        match self {
            HatsgaError::InvalidParams(_) => "InvalidParams",
            HatsgaError::SlackFailed => "SlackFailed",
            HatsgaError::UnknownElement { .. } => "UnknownElement",
            HatsgaError::Disconnected { .. } => "Disconnected",
            HatsgaError::FixedLoop(_) => "FixedLoop",
            HatsgaError::NoFeasibleTopology { .. } => "NoFeasibleTopology",
            HatsgaError::Cancelled => "Cancelled",
            HatsgaError::LedgerInconsistent { .. } => "LedgerInconsistent",
            HatsgaError::PowerFlow(e) => e.code(),
            HatsgaError::Grid(e) => e.code(),
        }
    }
}

impl From<LedgerConflict> for HatsgaError {
    fn from(c: LedgerConflict) -> Self {
        HatsgaError::LedgerInconsistent {
            open: c.open,
            recorded: c.recorded,
            offered: c.offered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HatsgaParams {
    /// Share of ranked open switches explored per pass, in (0, 1].
    pub elite_fraction: f64,
    pub max_passes: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Allowed voltage deviation as a fraction of nominal.
    pub quality_limit: f64,
    /// Reserved; the search is deterministic.
    pub seed: u64,
    /// Evaluate the candidates of a pass on the rayon pool. Results are identical.
    pub parallel: bool,
}

impl Default for HatsgaParams {
    fn default() -> Self {
        HatsgaParams {
            elite_fraction: 0.5,
            max_passes: 20,
            tol: crate::powerflow::DEFAULT_TOL,
            max_iter: crate::powerflow::DEFAULT_MAX_ITER,
            quality_limit: 0.05,
            seed: 0,
            parallel: false,
        }
    }
}

impl HatsgaParams {
    pub fn validate(&self) -> Result<(), HatsgaError> {
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(HatsgaError::InvalidParams(format!(
                "elite_fraction must be in (0, 1], got {}",
                self.elite_fraction
            )));
        }
        if self.max_passes == 0 {
            return Err(HatsgaError::InvalidParams("max_passes must be at least 1".into()));
        }
        if !(self.quality_limit.is_finite() && self.quality_limit > 0.0) {
            return Err(HatsgaError::InvalidParams(format!(
                "quality_limit must be positive, got {}",
                self.quality_limit
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(HatsgaError::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn power_flow(&self) -> PowerFlowOptions {
        PowerFlowOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    /// Ledger agreement tolerance in MW.
    fn loss_tolerance(&self, net: &Network) -> f64 {
        10.0 * self.tol * net.base_mva()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HatsgaResult {
    pub initial_topology: Topology,
    /// Infinite when the initial tree does not converge.
    #[serde(with = "finite_or_null")]
    pub initial_loss: f64,
    pub best_topology: Topology,
    pub best_loss: f64,
    pub quality: QualityMetrics,
    /// Full power flows executed; equals the ledger size.
    pub evaluations: usize,
    pub passes: usize,
    /// Best feasible loss after each pass (infinite until one is found).
    #[serde(with = "finite_or_null_vec")]
    pub history: Vec<f64>,
    pub ledger: TabuLedger,
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

mod finite_or_null_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.is_finite().then_some(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Option<f64>>::deserialize(d)?
            .into_iter()
            .map(|x| x.unwrap_or(f64::INFINITY))
            .collect())
    }
}

struct Evaluation {
    entry: LedgerEntry,
    solution: Option<PowerFlowSolution>,
    quality: Option<QualityMetrics>,
}

fn evaluate(net: &Network, topo: &Topology, params: &HatsgaParams) -> Result<Evaluation, HatsgaError> {
    match solve(net, topo, &params.power_flow()) {
        Ok(sol) => {
            let q = quality(net, &sol, params.quality_limit)?;
            Ok(Evaluation {
                entry: LedgerEntry {
                    open: topo.clone(),
                    loss: sol.loss_total,
                    converged: true,
                    violation_count: q.violation_count,
                },
                solution: Some(sol),
                quality: Some(q),
            })
        }
        Err(PowerFlowError::NotConverged(_)) | Err(PowerFlowError::SingularJacobian { .. }) => Ok(Evaluation {
            entry: LedgerEntry {
                open: topo.clone(),
                loss: f64::INFINITY,
                converged: false,
                violation_count: net.bus_count() as u32,
            },
            solution: None,
            quality: None,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Minimum spanning tree by impedance magnitude, with non-switchable branches kept closed.
pub fn initial_tree(net: &Network) -> Result<Topology, HatsgaError> {
    let topo = net.minimum_spanning_tree(|b: &Branch| if b.switchable { b.impedance() } else { -1.0 })?;
    if let Some(&id) = topo.open_switches().iter().find(|&&id| !net.branch(id).is_some_and(|b| b.switchable)) {
        return Err(HatsgaError::FixedLoop(id));
    }
    Ok(topo)
}

/// Initial tree and its loss (infinite if the flow does not converge).
pub fn initial_topology(net: &Network, params: &HatsgaParams) -> Result<(Topology, f64), HatsgaError> {
    let topo = initial_tree(net)?;
    let eval = evaluate(net, &topo, params)?;
    Ok((topo, eval.entry.loss))
}

/// Open switches ordered by descending voltage-magnitude gap between their ends, then id.
pub fn rank_candidates(net: &Network, topo: &Topology, sol: &PowerFlowSolution) -> Vec<BranchId> {
    let mut scored: Vec<(f64, BranchId)> = topo
        .open_switches()
        .iter()
        .filter_map(|&id| {
            let k = net.branch_index(id)?;
            let (f, t) = net.endpoints(k);
            Some(((sol.v_mag[f] - sol.v_mag[t]).abs(), id))
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, id)| id).collect()
}

/// The first `ceil(fraction · len)` entries.
pub fn elite_subset(ranked: &[BranchId], elite_fraction: f64) -> Vec<BranchId> {
    let n = (elite_fraction * ranked.len() as f64).ceil() as usize;
    ranked[..n.clamp(usize::from(!ranked.is_empty()), ranked.len())].to_vec()
}

fn better(a: (u32, f64), b: (u32, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Run the search on `net`, optionally after removing the elements of `fault`.
/// Topology ids in the result refer to the post-fault network.
pub fn reconfigure(net: &Network, params: &HatsgaParams, fault: Option<&Fault>) -> Result<HatsgaResult, HatsgaError> {
    match fault {
        Some(f) if !f.is_empty() => {
            let outcome = apply_fault(net, f)?;
            search(&outcome.network, params, None)
        }
        _ => search(net, params, None),
    }
}

/// Search on an already-derived network. Setting `cancel` aborts with [`HatsgaError::Cancelled`].
pub fn search(net: &Network, params: &HatsgaParams, cancel: Option<&AtomicBool>) -> Result<HatsgaResult, HatsgaError> {
    params.validate()?;
    let cancelled = || cancel.is_some_and(|c| c.load(Ordering::Relaxed));
    let tolerance = params.loss_tolerance(net);

    let initial = initial_tree(net)?;
    let first = evaluate(net, &initial, params)?;
    let initial_loss = first.entry.loss;
    let mut ledger = TabuLedger::new();
    ledger.record(first.entry.clone(), tolerance)?;

    let mut best: Option<(LedgerEntry, QualityMetrics)> = None;
    let offer_best = |eval: &Evaluation, best: &mut Option<(LedgerEntry, QualityMetrics)>| {
        if eval.entry.feasible() && best.as_ref().is_none_or(|(b, _)| eval.entry.loss < b.loss) {
            *best = Some((eval.entry.clone(), eval.quality.expect("feasible entries have quality")));
        }
    };
    offer_best(&first, &mut best);

    let mut current = first;
    let mut passes = 0;
    let mut history = Vec::new();
    while passes < params.max_passes {
        if cancelled() {
            return Err(HatsgaError::Cancelled);
        }
        passes += 1;
        let ranked = match &current.solution {
            Some(sol) => rank_candidates(net, &current.entry.open, sol),
            None => current.entry.open.open_switches().to_vec(),
        };

        let mut candidates = Vec::new();
        let mut queued = HashSet::new();
        for s in elite_subset(&ranked, params.elite_fraction) {
            let cycle = net.fundamental_loop(&current.entry.open, s)?;
            for &b in &cycle[1..] {
                if !net.branch(b).is_some_and(|br| br.switchable) {
                    continue;
                }
                let cand = current.entry.open.exchange(s, b);
                if !ledger.contains(&cand) && queued.insert(cand.clone()) {
                    candidates.push(cand);
                }
            }
        }

        let evaluations: Vec<Evaluation> = if params.parallel {
            let out = candidates
                .par_iter()
                .map(|c| evaluate(net, c, params))
                .collect::<Result<Vec<_>, _>>()?;
            if cancelled() {
                return Err(HatsgaError::Cancelled);
            }
            out
        } else {
            let mut out = Vec::with_capacity(candidates.len());
            for c in &candidates {
                if cancelled() {
                    return Err(HatsgaError::Cancelled);
                }
                out.push(evaluate(net, c, params)?);
            }
            out
        };

        let mut next: Option<Evaluation> = None;
        let mut next_key = current.entry.rank_key();
        for eval in evaluations {
            ledger.record(eval.entry.clone(), tolerance)?;
            offer_best(&eval, &mut best);
            let key = eval.entry.rank_key();
            if better(key, next_key) {
                next_key = key;
                next = Some(eval);
            }
        }
        history.push(best.as_ref().map_or(f64::INFINITY, |(b, _)| b.loss));
        match next {
            Some(eval) => current = eval,
            None => break,
        }
    }

    let (best_entry, best_quality) = best.ok_or(HatsgaError::NoFeasibleTopology {
        evaluations: ledger.len(),
    })?;
    log::debug!(
        "search finished: {} passes, {} evaluations, best {:.6} MW at {}",
        passes,
        ledger.len(),
        best_entry.loss,
        best_entry.open
    );
    Ok(HatsgaResult {
        initial_topology: initial,
        initial_loss,
        best_topology: best_entry.open,
        best_loss: best_entry.loss,
        quality: best_quality,
        evaluations: ledger.len(),
        passes,
        history,
        ledger,
    })
}

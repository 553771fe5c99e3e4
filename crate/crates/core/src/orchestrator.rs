//! Alert handling: retrieve a similar case and reuse it, or fall back to a full
//! reconfiguration search; apply and retain in autonomous mode, or queue the plan for
//! approval.
//!
//! Planning is split from committing. [`Planner::prepare`] only reads (network, case
//! base, configuration), so a service can run it on a snapshot while readers keep
//! access to the live state, then [`Orchestrator::commit`] applies the outcome.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::AtomicBool;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cbr::{
    adapt, revise, AttributeVector, CaseDraft, CaseId, CbrError, NetworkState, Problem, ProblemKind, Query,
    RetrieveOptions, SimilarityMode, SimilarityWeights, DEFAULT_THRESHOLD,
};
use crate::grid::{BranchId, BusId, Network, Topology};
use crate::hatsga::{apply_fault, search, Fault, HatsgaError, HatsgaParams};
use crate::powerflow::{quality, solve, QualityMetrics};
use crate::store::{CaseBase, RetainOutcome, StoreError};

pub type PlanId = u64;
pub type NetworkId = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrchestratorError {
    #[error("invalid alert: {0}")]
    InvalidAlert(String),
    #[error("unrecoverable: {0}")]
    Unrecoverable(String),
    #[error("processing cancelled")]
    Cancelled,
    #[error("unknown plan {0}")]
    UnknownPlan(PlanId),
    #[error("unknown network {0}")]
    UnknownNetwork(NetworkId),
    #[error("plan {id} is {status}, not pending approval")]
    NotPending { id: PlanId, status: PlanStatus },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Cbr(#[from] CbrError),
    #[error(transparent)]
    Hatsga(HatsgaError),
}

impl OrchestratorError {
    pub fn code(&self) -> &'static str {
        match self {
            OrchestratorError::InvalidAlert(_) => "InvalidAlert",
            OrchestratorError::Unrecoverable(_) => "Unrecoverable",
            OrchestratorError::Cancelled => "Cancelled",
            OrchestratorError::UnknownPlan(_) => "UnknownPlan",
            OrchestratorError::UnknownNetwork(_) => "UnknownNetwork",
            OrchestratorError::NotPending { .. } => "NotPending",
            OrchestratorError::Store(e) => e.code(),
            OrchestratorError::Cbr(e) => e.code(),
            OrchestratorError::Hatsga(e) => e.code(),
        }
    }
}

impl From<HatsgaError> for OrchestratorError {
    fn from(e: HatsgaError) -> Self {
        match e {
            HatsgaError::Cancelled => OrchestratorError::Cancelled,
            HatsgaError::UnknownElement { .. } => OrchestratorError::InvalidAlert(e.to_string()),
            HatsgaError::SlackFailed | HatsgaError::Disconnected { .. } | HatsgaError::NoFeasibleTopology { .. } => {
                OrchestratorError::Unrecoverable(e.to_string())
            }
            other => OrchestratorError::Hatsga(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Autonomous,
    #[default]
    Manual,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "autonomous" => Ok(Mode::Autonomous),
            "manual" => Ok(Mode::Manual),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    #[default]
    Fault,
    QualityViolation,
    Maintenance,
    Rebalance,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Alert {
    #[serde(default)]
    pub kind: AlertKind,
    #[serde(default)]
    pub failed_buses: BTreeSet<BusId>,
    #[serde(default)]
    pub failed_branches: BTreeSet<BranchId>,
    /// Milliseconds since the Unix epoch; informational.
    #[serde(default)]
    pub timestamp: u64,
    /// Target network; the most recently added one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkId>,
}

impl Alert {
    pub fn fault(fault: &Fault) -> Self {
        Alert {
            kind: AlertKind::Fault,
            failed_buses: fault.buses.clone(),
            failed_branches: fault.branches.clone(),
            ..Default::default()
        }
    }

    pub fn elements(&self) -> Fault {
        Fault {
            buses: self.failed_buses.clone(),
            branches: self.failed_branches.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.kind == AlertKind::Fault && self.failed_buses.is_empty() && self.failed_branches.is_empty() {
            return Err(OrchestratorError::InvalidAlert("a fault alert needs at least one failed element".into()));
        }
        Ok(())
    }

    pub fn problem(&self) -> Problem {
        let affected = self.elements();
        match self.kind {
            AlertKind::Fault => Problem::from_fault(&affected),
            AlertKind::QualityViolation => Problem {
                kind: ProblemKind::QualityViolation,
                affected,
            },
            AlertKind::Maintenance => Problem {
                kind: ProblemKind::Maintenance,
                affected,
            },
            AlertKind::Rebalance => Problem {
                kind: ProblemKind::Imbalance,
                affected,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    CbrReuse,
    Hatsga,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    PendingApproval,
    Approved,
    Applied,
    Rejected,
}

impl std::fmt::Display for PlanStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlanStatus::PendingApproval => "pending_approval",
            PlanStatus::Approved => "approved",
            PlanStatus::Applied => "applied",
            PlanStatus::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseMatch {
    pub case_id: CaseId,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPlan {
    pub id: PlanId,
    pub network: NetworkId,
    pub alert: Alert,
    pub source: PlanSource,
    /// Open switches on the post-fault network.
    pub proposal: Topology,
    pub predicted_loss: f64,
    pub predicted_quality: QualityMetrics,
    pub matched_case: Option<CaseMatch>,
    pub status: PlanStatus,
    /// Healthy buses de-energized along with the failed ones.
    pub shed_buses: Vec<BusId>,
    /// Degraded-state attributes used as the retrieval query.
    pub query: AttributeVector,
    /// Power flows run by the search; absent for reused cases.
    pub evaluations: Option<usize>,
    pub retrieval_seconds: f64,
    pub search_seconds: Option<f64>,
    /// Case created or reinforced when the plan was applied.
    pub retained_case: Option<CaseId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestratorConfig {
    pub threshold: f64,
    pub weights: SimilarityWeights,
    pub similarity_mode: SimilarityMode,
    /// Retrieved cases tried in rank order before falling back to the search.
    pub candidate_limit: usize,
    pub quality_limit: f64,
    pub hatsga: HatsgaParams,
    pub mode: Mode,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig {
            threshold: DEFAULT_THRESHOLD,
            weights: SimilarityWeights::default(),
            similarity_mode: SimilarityMode::WeightedMean,
            candidate_limit: 5,
            quality_limit: 0.05,
            // voltage-feasible trees are rare after a fault; half the switches is not enough
            hatsga: HatsgaParams {
                elite_fraction: 1.0,
                ..Default::default()
            },
            mode: Mode::Manual,
        }
    }
}

impl OrchestratorConfig {
    fn retrieve_options(&self) -> RetrieveOptions {
        RetrieveOptions {
            threshold: self.threshold,
            weights: self.weights,
            limit: self.candidate_limit,
            mode: self.similarity_mode,
        }
    }
}

/// Quality of the network right after a fault, before any switching: the normal
/// topology restricted to surviving elements, solved on its energized part. Buses
/// without supply count as violations with a deviation equal to their nominal voltage.
pub fn degraded_attributes(net: &Network, normal: &Topology, fault: &Fault, quality_limit: f64) -> Result<AttributeVector, HatsgaError> {
    let outcome = apply_fault(net, fault)?;
    let pnet = &outcome.network;
    let topo = normal.retain(|id| pnet.branch(id).is_some());
    let energized = pnet.reachable_from_slack(&topo);
    let closed = pnet.closed_mask(&topo);
    let all_nominal: f64 = pnet.buses().iter().map(|b| b.v_nominal).sum();
    let load = pnet.total_load();
    let dark = |mask: &[bool]| -> (f64, u32) {
        pnet.buses()
            .iter()
            .zip(mask)
            .filter(|(_, &on)| !on)
            .fold((0.0, 0), |(s, n), (b, _)| (s + b.v_nominal, n + 1))
    };
    let (dark_profile, dark_count) = dark(&energized);
    let live = pnet
        .restrict(&energized, &closed)
        .ok()
        .and_then(|sub| solve(&sub, &Topology::default(), &Default::default()).ok().map(|sol| (sub, sol)));
    let attrs = match live {
        Some((sub, sol)) => {
            let q = quality(&sub, &sol, quality_limit).expect("converged");
            AttributeVector::new(
                if load > 0.0 { sol.loss_total / load } else { 0.0 },
                q.profile_sum + dark_profile,
                (q.violation_count + dark_count) as f64,
            )
        }
        // only the slack is energized
        None if dark_count as usize + 1 == pnet.bus_count() => AttributeVector::new(0.0, dark_profile, dark_count as f64),
        None => AttributeVector::new(0.0, all_nominal, pnet.bus_count() as f64),
    };
    Ok(attrs)
}

/// Outcome of planning, ready to be committed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub network_id: NetworkId,
    pub alert: Alert,
    pub source: PlanSource,
    pub network: Network,
    pub proposal: Topology,
    pub loss: f64,
    pub quality: QualityMetrics,
    pub matched_case: Option<CaseMatch>,
    pub shed_buses: Vec<BusId>,
    pub draft: CaseDraft,
    pub evaluations: Option<usize>,
    pub retrieval_seconds: f64,
    pub search_seconds: Option<f64>,
}

/// Read-only view used to plan one alert.
pub struct Planner<'a> {
    pub network_id: NetworkId,
    pub network: &'a Network,
    pub normal: &'a Topology,
    pub cases: &'a CaseBase,
    pub config: &'a OrchestratorConfig,
}

impl Planner<'_> {
    pub fn prepare(&self, alert: &Alert, cancel: Option<&AtomicBool>) -> Result<Prepared, OrchestratorError> {
        self.plan(alert, cancel, true)
    }

    /// Skip retrieval and always search; used to seed a case base.
    pub fn prepare_search(&self, alert: &Alert, cancel: Option<&AtomicBool>) -> Result<Prepared, OrchestratorError> {
        self.plan(alert, cancel, false)
    }

    fn plan(&self, alert: &Alert, cancel: Option<&AtomicBool>, reuse: bool) -> Result<Prepared, OrchestratorError> {
        alert.validate()?;
        let fault = alert.elements();
        let outcome = apply_fault(self.network, &fault)?;
        let attributes = degraded_attributes(self.network, self.normal, &fault, self.config.quality_limit)?;
        let problem = alert.problem();
        let query = Query {
            state: Some(NetworkState::of(&outcome.network)),
            problem: Some(problem.clone()),
            attributes,
        };
        let draft = |solution: Topology, loss: f64, quality: QualityMetrics| CaseDraft {
            state: query.state.clone().expect("set above"),
            problem: problem.clone(),
            attributes,
            solution,
            loss,
            quality,
        };

        let started = Instant::now();
        let hits = if reuse {
            self.cases.retrieve(&query, &self.config.retrieve_options())?
        } else {
            Vec::new()
        };
        let retrieval_seconds = started.elapsed().as_secs_f64();

        for hit in &hits {
            let case = self.cases.get(hit.case_id).expect("retrieved from this base");
            let adapted = match adapt(case, self.network, &fault) {
                Ok(a) => a,
                Err(CbrError::Unrepairable { bus }) => {
                    log::debug!("case {} cannot reconnect bus {bus}", case.id);
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let revision = revise(
                &adapted.network,
                &adapted.topology,
                self.config.quality_limit,
                &self.config.hatsga.power_flow(),
            );
            if !revision.accepted {
                log::debug!("case {} rejected on revision", case.id);
                continue;
            }
            let sol = revision.solution.expect("accepted revisions carry a solution");
            let q = revision.quality.expect("accepted revisions carry quality");
            return Ok(Prepared {
                network_id: self.network_id,
                alert: alert.clone(),
                source: PlanSource::CbrReuse,
                proposal: adapted.topology.clone(),
                loss: sol.loss_total,
                quality: q,
                matched_case: Some(CaseMatch {
                    case_id: hit.case_id,
                    similarity: hit.similarity,
                }),
                shed_buses: outcome.shed_buses.clone(),
                draft: draft(adapted.topology, sol.loss_total, q),
                network: adapted.network,
                evaluations: None,
                retrieval_seconds: started.elapsed().as_secs_f64(),
                search_seconds: None,
            });
        }

        let search_started = Instant::now();
        let result = search(&outcome.network, &self.config.hatsga, cancel)?;
        let search_seconds = search_started.elapsed().as_secs_f64();
        Ok(Prepared {
            network_id: self.network_id,
            alert: alert.clone(),
            source: PlanSource::Hatsga,
            proposal: result.best_topology.clone(),
            loss: result.best_loss,
            quality: result.quality,
            matched_case: None,
            shed_buses: outcome.shed_buses,
            draft: draft(result.best_topology, result.best_loss, result.quality),
            network: outcome.network,
            evaluations: Some(result.evaluations),
            retrieval_seconds,
            search_seconds: Some(search_seconds),
        })
    }
}

/// The operating point the orchestrator believes the grid is in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub fault: Fault,
    pub topology: Topology,
    pub bus_count: usize,
    pub branch_count: usize,
    pub shed_buses: Vec<BusId>,
    pub loss: Option<f64>,
    pub quality: Option<QualityMetrics>,
    /// Plan that produced this state, if any.
    pub plan: Option<PlanId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub retained: Vec<RetainOutcome>,
    pub skipped: Vec<SkippedScenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedScenario {
    pub alert: Alert,
    pub code: String,
    pub message: String,
}

/// Owned copy of everything planning reads, so planning can run without holding a lock.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub network_id: NetworkId,
    pub network: Network,
    pub normal: Topology,
    pub cases: CaseBase,
    pub config: OrchestratorConfig,
}

impl Snapshot {
    pub fn planner(&self) -> Planner<'_> {
        Planner {
            network_id: self.network_id,
            network: &self.network,
            normal: &self.normal,
            cases: &self.cases,
            config: &self.config,
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    network: Network,
    normal: Topology,
    state: GridState,
}

/// Networks under supervision sharing one case base and one plan register.
#[derive(Debug)]
pub struct Orchestrator {
    networks: BTreeMap<NetworkId, Slot>,
    next_network: NetworkId,
    cases: CaseBase,
    config: OrchestratorConfig,
    plans: BTreeMap<PlanId, RecoveryPlan>,
    pending: BTreeMap<PlanId, Prepared>,
    next_plan: PlanId,
    search_runs: u64,
}

impl Orchestrator {
    pub fn new(cases: CaseBase, config: OrchestratorConfig) -> Self {
        Orchestrator {
            networks: BTreeMap::new(),
            next_network: 1,
            cases,
            config,
            plans: BTreeMap::new(),
            pending: BTreeMap::new(),
            next_plan: 1,
            search_runs: 0,
        }
    }

    /// Supervise `network` with every branch closed as its normal topology.
    pub fn add_network(&mut self, network: Network) -> NetworkId {
        self.add_network_with_normal(network, Topology::default())
            .expect("the all-closed topology is always valid")
    }

    pub fn add_network_with_normal(&mut self, network: Network, normal: Topology) -> Result<NetworkId, OrchestratorError> {
        network
            .check_topology(&normal)
            .map_err(|e| OrchestratorError::InvalidAlert(e.to_string()))?;
        let solved = solve(&network, &normal, &self.config.hatsga.power_flow()).ok();
        let q = solved.as_ref().and_then(|s| quality(&network, s, self.config.quality_limit).ok());
        let state = GridState {
            fault: Fault::default(),
            topology: normal.clone(),
            bus_count: network.bus_count(),
            branch_count: network.branch_count(),
            shed_buses: Vec::new(),
            loss: solved.map(|s| s.loss_total),
            quality: q,
            plan: None,
        };
        let id = self.next_network;
        self.next_network += 1;
        self.networks.insert(id, Slot { network, normal, state });
        Ok(id)
    }

    pub fn network(&self, id: NetworkId) -> Option<&Network> {
        self.networks.get(&id).map(|s| &s.network)
    }

    pub fn network_ids(&self) -> impl Iterator<Item = NetworkId> + '_ {
        self.networks.keys().copied()
    }

    pub fn state(&self, id: NetworkId) -> Option<&GridState> {
        self.networks.get(&id).map(|s| &s.state)
    }

    pub fn cases(&self) -> &CaseBase {
        &self.cases
    }

    pub fn cases_mut(&mut self) -> &mut CaseBase {
        &mut self.cases
    }

    pub fn config(&self) -> &OrchestratorConfig {
        &self.config
    }

    pub fn plan(&self, id: PlanId) -> Option<&RecoveryPlan> {
        self.plans.get(&id)
    }

    pub fn plans(&self) -> impl Iterator<Item = &RecoveryPlan> {
        self.plans.values()
    }

    /// Full reconfiguration searches run so far.
    pub fn search_runs(&self) -> u64 {
        self.search_runs
    }

    /// The network an alert addresses.
    pub fn resolve(&self, alert: &Alert) -> Result<NetworkId, OrchestratorError> {
        match alert.network {
            Some(id) if self.networks.contains_key(&id) => Ok(id),
            Some(id) => Err(OrchestratorError::UnknownNetwork(id)),
            None => self
                .networks
                .keys()
                .next_back()
                .copied()
                .ok_or_else(|| OrchestratorError::InvalidAlert("no network loaded".into())),
        }
    }

    pub fn planner(&self, id: NetworkId) -> Result<Planner<'_>, OrchestratorError> {
        let slot = self.networks.get(&id).ok_or(OrchestratorError::UnknownNetwork(id))?;
        Ok(Planner {
            network_id: id,
            network: &slot.network,
            normal: &slot.normal,
            cases: &self.cases,
            config: &self.config,
        })
    }

    pub fn snapshot(&self, id: NetworkId) -> Result<Snapshot, OrchestratorError> {
        let slot = self.networks.get(&id).ok_or(OrchestratorError::UnknownNetwork(id))?;
        Ok(Snapshot {
            network_id: id,
            network: slot.network.clone(),
            normal: slot.normal.clone(),
            cases: self.cases.clone(),
            config: self.config.clone(),
        })
    }

    /// Plan and commit in one step.
    pub fn handle_alert(&mut self, alert: &Alert, mode: Option<Mode>) -> Result<RecoveryPlan, OrchestratorError> {
        let id = self.resolve(alert)?;
        let prepared = self.planner(id)?.prepare(alert, None)?;
        self.commit(prepared, mode.unwrap_or(self.config.mode))
    }

    pub fn commit(&mut self, prepared: Prepared, mode: Mode) -> Result<RecoveryPlan, OrchestratorError> {
        if !self.networks.contains_key(&prepared.network_id) {
            return Err(OrchestratorError::UnknownNetwork(prepared.network_id));
        }
        if prepared.source == PlanSource::Hatsga {
            self.search_runs += 1;
        }
        if let Some(m) = prepared.matched_case {
            // the case may have been evicted while planning ran
            let _ = self.cases.touch(m.case_id);
        }
        let id = self.next_plan;
        self.next_plan += 1;
        let mut plan = RecoveryPlan {
            id,
            network: prepared.network_id,
            alert: prepared.alert.clone(),
            source: prepared.source,
            proposal: prepared.proposal.clone(),
            predicted_loss: prepared.loss,
            predicted_quality: prepared.quality,
            matched_case: prepared.matched_case,
            status: PlanStatus::PendingApproval,
            shed_buses: prepared.shed_buses.clone(),
            query: prepared.draft.attributes,
            evaluations: prepared.evaluations,
            retrieval_seconds: prepared.retrieval_seconds,
            search_seconds: prepared.search_seconds,
            retained_case: None,
        };
        match mode {
            Mode::Autonomous => {
                plan.retained_case = Some(self.apply(id, prepared)?);
                plan.status = PlanStatus::Applied;
            }
            Mode::Manual => {
                self.pending.insert(id, prepared);
            }
        }
        self.plans.insert(id, plan.clone());
        Ok(plan)
    }

    fn apply(&mut self, id: PlanId, prepared: Prepared) -> Result<CaseId, OrchestratorError> {
        let retained = self.cases.retain(prepared.draft)?;
        let slot = self
            .networks
            .get_mut(&prepared.network_id)
            .ok_or(OrchestratorError::UnknownNetwork(prepared.network_id))?;
        slot.state = GridState {
            fault: prepared.alert.elements(),
            topology: prepared.proposal,
            bus_count: prepared.network.bus_count(),
            branch_count: prepared.network.branch_count(),
            shed_buses: prepared.shed_buses,
            loss: Some(prepared.loss),
            quality: Some(prepared.quality),
            plan: Some(id),
        };
        Ok(retained.case_id)
    }

    pub fn approve(&mut self, id: PlanId, approve: bool) -> Result<RecoveryPlan, OrchestratorError> {
        let status = self.plans.get(&id).ok_or(OrchestratorError::UnknownPlan(id))?.status;
        if status != PlanStatus::PendingApproval {
            return Err(OrchestratorError::NotPending { id, status });
        }
        let prepared = self.pending.remove(&id).expect("pending plans keep their preparation");
        let (status, retained) = if approve {
            (PlanStatus::Applied, Some(self.apply(id, prepared)?))
        } else {
            (PlanStatus::Rejected, None)
        };
        let plan = self.plans.get_mut(&id).expect("checked above");
        plan.status = status;
        plan.retained_case = retained;
        Ok(plan.clone())
    }

    /// Search every scenario on network `id` and retain each solution; failures are
    /// reported, not fatal.
    pub fn seed(&mut self, id: NetworkId, scenarios: &[Alert]) -> Result<SeedReport, OrchestratorError> {
        let mut report = SeedReport {
            retained: Vec::new(),
            skipped: Vec::new(),
        };
        for alert in scenarios {
            let outcome = self.planner(id)?.prepare_search(alert, None).and_then(|p| {
                self.search_runs += 1;
                Ok(self.cases.retain(p.draft)?)
            });
            match outcome {
                Ok(r) => report.retained.push(r),
                Err(e) => report.skipped.push(SkippedScenario {
                    alert: alert.clone(),
                    code: e.code().to_string(),
                    message: e.to_string(),
                }),
            }
        }
        Ok(report)
    }
}

/// Populate a fresh case base from `scenarios` on `net`.
pub fn seed_base(net: &Network, scenarios: &[Alert], config: &OrchestratorConfig) -> (CaseBase, SeedReport) {
    let mut orch = Orchestrator::new(CaseBase::default(), config.clone());
    let id = orch.add_network(net.clone());
    let report = orch.seed(id, scenarios).expect("network just added");
    (orch.cases, report)
}

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use super::{Case, CbrError};
use crate::grid::{BranchId, Network, Topology, UnionFind};
use crate::hatsga::{apply_fault, Fault, HatsgaError};
use crate::powerflow::{quality, solve, PowerFlowError, PowerFlowOptions, PowerFlowSolution, QualityMetrics};

/// A case topology carried over to the post-fault network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adaptation {
    pub network: Network,
    pub topology: Topology,
    /// Branches closed in the case that no longer exist after the fault.
    pub forced_open: Vec<BranchId>,
    /// Branches opened to break loops the case did not have.
    pub opened: Vec<BranchId>,
    /// Open switches closed to reconnect islands.
    pub repairs: Vec<BranchId>,
}

/// Project the case's switch states onto `net` with `fault` applied, then restore
/// radiality: closed branches that would form a loop are opened (ascending id) and
/// islands are reconnected by closing the lowest-impedance open switches first.
pub fn adapt(case: &Case, net: &Network, fault: &Fault) -> Result<Adaptation, CbrError> {
    let outcome = apply_fault(net, fault).map_err(|e| match e {
        HatsgaError::Disconnected { bus } => CbrError::Unrepairable { bus },
        HatsgaError::SlackFailed => CbrError::Unrepairable { bus: net.slack().id },
        other => CbrError::InvalidFault(other.to_string()),
    })?;
    let pnet = outcome.network;
    let case_closed = |id: BranchId| case.state.has_branch(id) && !case.solution.is_open(id);

    let forced_open = outcome.removed_branches.iter().copied().filter(|&id| case_closed(id)).collect();

    let mut uf = UnionFind::new(pnet.bus_count());
    let mut closed = vec![false; pnet.branch_count()];
    let mut opened = Vec::new();
    for (k, b) in pnet.branches().iter().enumerate() {
        if case_closed(b.id) || !b.switchable {
            let (f, t) = pnet.endpoints(k);
            if uf.union(f, t) {
                closed[k] = true;
            } else if b.switchable {
                opened.push(b.id);
            } else {
                return Err(CbrError::Unrepairable { bus: b.to_bus });
            }
        }
    }

    let mut spare: Vec<usize> = (0..pnet.branch_count()).filter(|&k| !closed[k] && pnet.branches()[k].switchable).collect();
    spare.sort_by(|&a, &b| {
        let (ba, bb) = (&pnet.branches()[a], &pnet.branches()[b]);
        ba.impedance().total_cmp(&bb.impedance()).then(ba.id.cmp(&bb.id))
    });
    let mut repairs = Vec::new();
    for k in spare {
        let (f, t) = pnet.endpoints(k);
        if uf.union(f, t) {
            closed[k] = true;
            repairs.push(pnet.branches()[k].id);
        }
    }
    let root = uf.find(pnet.slack_index());
    if let Some(i) = (0..pnet.bus_count()).find(|&i| uf.find(i) != root) {
        return Err(CbrError::Unrepairable { bus: pnet.buses()[i].id });
    }
    repairs.sort_unstable();

    let topology = Topology::new(pnet.branches().iter().zip(&closed).filter(|(_, &c)| !c).map(|(b, _)| b.id));
    Ok(Adaptation {
        network: pnet,
        topology,
        forced_open,
        opened,
        repairs,
    })
}

/// Outcome of validating a proposal by power flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revision {
    pub accepted: bool,
    pub solution: Option<PowerFlowSolution>,
    pub quality: Option<QualityMetrics>,
}

/// Accept iff the proposal is radial, converges and violates no voltage limit.
pub fn revise(net: &Network, proposal: &Topology, quality_limit: f64, opts: &PowerFlowOptions) -> Revision {
    let rejected = |solution| Revision {
        accepted: false,
        solution,
        quality: None,
    };
    if !net.is_radial(proposal).unwrap_or(false) {
        return rejected(None);
    }
    match solve(net, proposal, opts) {
        Ok(sol) => match quality(net, &sol, quality_limit) {
            Ok(q) => Revision {
                accepted: q.violation_count == 0,
                solution: Some(sol),
                quality: Some(q),
            },
            Err(_) => rejected(Some(sol)),
        },
        Err(PowerFlowError::NotConverged(partial)) => rejected(Some(*partial)),
        Err(_) => rejected(None),
    }
}

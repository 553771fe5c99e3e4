use serde::{Deserialize, Serialize};

use super::AttributeVector;
use crate::grid::{BranchId, BusId, Network, Topology, UnionFind};
use crate::hatsga::Fault;
use crate::powerflow::QualityMetrics;

pub type CaseId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchEnds {
    pub id: BranchId,
    pub from: BusId,
    pub to: BusId,
}

/// Summary of the grid a case was solved on: which elements were in service and the
/// loads they carried. Buses and branches are sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub active_buses: Vec<BusId>,
    pub active_branches: Vec<BranchEnds>,
    /// MW, Σ of `bus_loads`.
    pub total_load: f64,
    /// Real load per active bus, aligned with `active_buses`.
    pub bus_loads: Vec<f64>,
}

impl NetworkState {
    pub fn of(net: &Network) -> Self {
        let active_branches = net
            .branches()
            .iter()
            .map(|b| BranchEnds {
                id: b.id,
                from: b.from_bus,
                to: b.to_bus,
            })
            .collect();
        NetworkState {
            active_buses: net.buses().iter().map(|b| b.id).collect(),
            active_branches,
            total_load: net.total_load(),
            bus_loads: net.buses().iter().map(|b| b.load_p).collect(),
        }
    }

    /// Sorted, duplicate-free ids and one load per bus.
    pub fn validate(&self) -> Result<(), String> {
        if !self.active_buses.windows(2).all(|w| w[0] < w[1]) {
            return Err("active_buses must be strictly increasing".into());
        }
        if !self.active_branches.windows(2).all(|w| w[0].id < w[1].id) {
            return Err("active_branches must have strictly increasing ids".into());
        }
        if self.bus_loads.len() != self.active_buses.len() {
            return Err(format!(
                "{} bus loads for {} buses",
                self.bus_loads.len(),
                self.active_buses.len()
            ));
        }
        Ok(())
    }

    pub fn has_branch(&self, id: BranchId) -> bool {
        self.active_branches.binary_search_by_key(&id, |b| b.id).is_ok()
    }

    /// Every bus and branch of `other` is also active here, branches with the same ends.
    pub fn covers(&self, other: &NetworkState) -> bool {
        sorted_superset(self.active_buses.iter().copied(), other.active_buses.iter().copied())
            && sorted_superset(
                self.active_branches.iter().map(|b| (b.id, b.from, b.to)),
                other.active_branches.iter().map(|b| (b.id, b.from, b.to)),
            )
    }

    pub fn same_elements(&self, other: &NetworkState) -> bool {
        self.active_buses == other.active_buses
            && self.active_branches.len() == other.active_branches.len()
            && self.active_branches.iter().zip(&other.active_branches).all(|(a, b)| a.id == b.id)
    }

    /// Whether `topo` leaves a spanning tree of the active elements.
    pub fn is_radial(&self, topo: &Topology) -> bool {
        if topo.open_switches().iter().any(|&id| !self.has_branch(id)) {
            return false;
        }
        let closed = self.active_branches.len() - topo.len();
        if closed + 1 != self.active_buses.len() {
            return false;
        }
        let pos = |id: BusId| self.active_buses.binary_search(&id).ok();
        let mut uf = UnionFind::new(self.active_buses.len());
        for b in self.active_branches.iter().filter(|b| !topo.is_open(b.id)) {
            match (pos(b.from), pos(b.to)) {
                (Some(f), Some(t)) if uf.union(f, t) => {}
                _ => return false,
            }
        }
        true
    }
}

fn sorted_superset<T: Ord + Copy>(big: impl Iterator<Item = T>, small: impl Iterator<Item = T>) -> bool {
    let mut big = big.peekable();
    for x in small {
        loop {
            match big.peek() {
                Some(&y) if y < x => {
                    big.next();
                }
                Some(&y) if y == x => {
                    big.next();
                    break;
                }
                _ => return false,
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    BusFault,
    BranchFault,
    Imbalance,
    Maintenance,
    QualityViolation,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemKind::BusFault => "bus_fault",
            ProblemKind::BranchFault => "branch_fault",
            ProblemKind::Imbalance => "imbalance",
            ProblemKind::Maintenance => "maintenance",
            ProblemKind::QualityViolation => "quality_violation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Problem {
    pub kind: ProblemKind,
    #[serde(flatten)]
    pub affected: Fault,
}

impl Problem {
    /// Fault problems are classed by their failed elements: any failed bus makes it a bus fault.
    pub fn from_fault(fault: &Fault) -> Self {
        let kind = if fault.buses.is_empty() {
            ProblemKind::BranchFault
        } else {
            ProblemKind::BusFault
        };
        Problem {
            kind,
            affected: fault.clone(),
        }
    }
}

/// A solved situation: where, what went wrong, what fixed it and how well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: CaseId,
    pub state: NetworkState,
    pub problem: Problem,
    /// Degraded-state attributes the case is matched on.
    pub attributes: AttributeVector,
    pub solution: Topology,
    /// MW under `solution`.
    pub loss: f64,
    pub quality: QualityMetrics,
    pub occurrences: u32,
    /// Logical time of the last retention or retrieval hit.
    pub last_used: u64,
}

/// Everything a case needs except the bookkeeping assigned by the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDraft {
    pub state: NetworkState,
    pub problem: Problem,
    pub attributes: AttributeVector,
    pub solution: Topology,
    pub loss: f64,
    pub quality: QualityMetrics,
}

impl Case {
    /// Same problem, same elements in service, same open switches.
    pub fn matches(&self, draft: &CaseDraft) -> bool {
        self.problem == draft.problem && self.solution == draft.solution && self.state.same_elements(&draft.state)
    }
}

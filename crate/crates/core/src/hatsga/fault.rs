use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::HatsgaError;
use crate::grid::{BranchId, BusId, Network};

/// Failed elements of a contingency.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fault {
    #[serde(default)]
    pub buses: BTreeSet<BusId>,
    #[serde(default)]
    pub branches: BTreeSet<BranchId>,
}

impl Fault {
    pub fn buses(ids: impl IntoIterator<Item = BusId>) -> Self {
        Fault {
            buses: ids.into_iter().collect(),
            branches: BTreeSet::new(),
        }
    }

    pub fn branches(ids: impl IntoIterator<Item = BranchId>) -> Self {
        Fault {
            buses: BTreeSet::new(),
            branches: ids.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty() && self.branches.is_empty()
    }
}

impl std::fmt::Display for Fault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |ids: &BTreeSet<u32>| ids.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        match (self.buses.is_empty(), self.branches.is_empty()) {
            (true, true) => write!(f, "none"),
            (false, true) => write!(f, "bus:{}", join(&self.buses)),
            (true, false) => write!(f, "branch:{}", join(&self.branches)),
            (false, false) => write!(f, "bus:{};branch:{}", join(&self.buses), join(&self.branches)),
        }
    }
}

impl std::str::FromStr for Fault {
    type Err = String;

    /// `bus:9,11`, `branch:3`, or both joined by `;`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut fault = Fault::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (kind, ids) = part.split_once(':').ok_or_else(|| format!("expected kind:ids, got {part:?}"))?;
            let ids = ids
                .split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|e| format!("bad id {x:?}: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            match kind.trim() {
                "bus" => fault.buses.extend(ids),
                "branch" => fault.branches.extend(ids),
                other => return Err(format!("unknown element kind {other:?}")),
            }
        }
        Ok(fault)
    }
}

/// The post-fault network plus what was removed to get there.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultOutcome {
    pub network: Network,
    /// Healthy buses left without any path to the slack once the failed buses are gone.
    pub shed_buses: Vec<BusId>,
    pub removed_branches: Vec<BranchId>,
}

/// Remove failed buses (with their incident branches) and failed branches.
///
/// Buses cut off from the slack by the failed buses form the outage zone and are shed
/// with them. A failed branch, on the other hand, must leave every surviving bus
/// connected; otherwise the fault is not recoverable by switching.
pub fn apply_fault(net: &Network, fault: &Fault) -> Result<FaultOutcome, HatsgaError> {
    for &id in &fault.buses {
        if net.bus(id).is_none() {
            return Err(HatsgaError::UnknownElement { element: "bus", id });
        }
    }
    for &id in &fault.branches {
        if net.branch(id).is_none() {
            return Err(HatsgaError::UnknownElement { element: "branch", id });
        }
    }
    if fault.buses.contains(&net.slack().id) {
        return Err(HatsgaError::SlackFailed);
    }
    if fault.is_empty() {
        return Ok(FaultOutcome {
            network: net.clone(),
            shed_buses: Vec::new(),
            removed_branches: Vec::new(),
        });
    }

    let alive: Vec<bool> = net.buses().iter().map(|b| !fault.buses.contains(&b.id)).collect();
    let bus_cut = reach(net, &alive, |_| true);
    let shed_buses: Vec<BusId> = net
        .buses()
        .iter()
        .enumerate()
        .filter(|(i, _)| alive[*i] && !bus_cut[*i])
        .map(|(_, b)| b.id)
        .collect();

    let branch_ok = |k: usize| !fault.branches.contains(&net.branches()[k].id);
    let full_cut = reach(net, &bus_cut, branch_ok);
    if let Some(i) = (0..net.bus_count()).find(|&i| bus_cut[i] && !full_cut[i]) {
        return Err(HatsgaError::Disconnected { bus: net.buses()[i].id });
    }

    let keep_branches: Vec<bool> = (0..net.branch_count()).map(branch_ok).collect();
    let removed_branches = net
        .branches()
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let (f, t) = net.endpoints(*k);
            !(keep_branches[*k] && full_cut[f] && full_cut[t])
        })
        .map(|(_, b)| b.id)
        .collect();
    let network = net.restrict(&full_cut, &keep_branches)?;
    Ok(FaultOutcome {
        network,
        shed_buses,
        removed_branches,
    })
}

/// Buses reachable from the slack through live buses and accepted branches.
fn reach(net: &Network, alive: &[bool], branch_ok: impl Fn(usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; net.bus_count()];
    let s = net.slack_index();
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &(v, k) in net.adjacent(u) {
            if alive[v] && !seen[v] && branch_ok(k) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

//! Bus/branch network model and the graph machinery used by the reconfiguration search.
//!
//! A [`Network`] is immutable once built: buses and branches are kept sorted by id and
//! the adjacency lists are computed at construction. Switch states live outside the
//! network, in [`Topology`] values.

mod spanning;
mod topology;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use spanning::{spanning_tree_count, UnionFind};
pub use topology::Topology;

pub type BusId = u32;
pub type BranchId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("network has no buses")]
    EmptyNetwork,
    #[error("network has no branches")]
    NoBranches,
    #[error("duplicate {element} id {id}")]
    DuplicateId { element: &'static str, id: u32 },
    #[error("branch {branch} references missing bus {bus}")]
    DanglingEndpoint { branch: BranchId, bus: BusId },
    #[error("network has no slack bus")]
    NoSlack,
    #[error("network has more than one slack bus: {0:?}")]
    MultipleSlack(Vec<BusId>),
    #[error("network is not connected with all branches closed")]
    DisconnectedGraph,
    #[error("invalid bus {id}: {reason}")]
    InvalidBus { id: BusId, reason: String },
    #[error("invalid branch {id}: {reason}")]
    InvalidBranch { id: BranchId, reason: String },
    #[error("unknown switch id {0}")]
    UnknownSwitchId(BranchId),
    #[error("topology is not radial")]
    NotRadial,
    #[error("switch {0} is not open in the topology")]
    SwitchNotOpen(BranchId),
    #[error("graph is disconnected")]
    Disconnected,
}

impl GridError {
    pub fn code(&self) -> &'static str {
        match self {
            GridError::EmptyNetwork => "EmptyNetwork",
            GridError::NoBranches => "NoBranches",
            GridError::DuplicateId { .. } => "DuplicateId",
            GridError::DanglingEndpoint { .. } => "DanglingEndpoint",
            GridError::NoSlack => "NoSlack",
            GridError::MultipleSlack(_) => "MultipleSlack",
            GridError::DisconnectedGraph => "DisconnectedGraph",
            GridError::InvalidBus { .. } => "InvalidBus",
            GridError::InvalidBranch { .. } => "InvalidBranch",
            GridError::UnknownSwitchId(_) => "UnknownSwitchId",
            GridError::NotRadial => "NotRadial",
            GridError::SwitchNotOpen(_) => "SwitchNotOpen",
            GridError::Disconnected => "Disconnected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    #[serde(rename = "pv")]
    Pv,
    #[serde(rename = "pq")]
    Pq,
}

impl fmt::Display for BusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BusKind::Slack => "slack",
            BusKind::Pv => "pv",
            BusKind::Pq => "pq",
        })
    }
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

fn yes() -> bool {
    true
}

/// A network node. Powers are in MW/MVAr, voltages and shunts in per-unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    #[serde(default)]
    pub load_p: f64,
    #[serde(default)]
    pub load_q: f64,
    #[serde(default)]
    pub gen_p: f64,
    #[serde(default)]
    pub gen_q: f64,
    #[serde(default = "one")]
    pub v_nominal: f64,
    #[serde(default = "one")]
    pub v_setpoint: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shunt_g: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shunt_b: f64,
}

impl Bus {
    pub fn new(id: BusId, kind: BusKind) -> Self {
        Bus {
            id,
            kind,
            load_p: 0.0,
            load_q: 0.0,
            gen_p: 0.0,
            gen_q: 0.0,
            v_nominal: 1.0,
            v_setpoint: 1.0,
            shunt_g: 0.0,
            shunt_b: 0.0,
        }
    }

    pub fn with_load(mut self, p: f64, q: f64) -> Self {
        self.load_p = p;
        self.load_q = q;
        self
    }

    pub fn with_gen(mut self, p: f64, q: f64) -> Self {
        self.gen_p = p;
        self.gen_q = q;
        self
    }

    pub fn with_setpoint(mut self, v: f64) -> Self {
        self.v_setpoint = v;
        self
    }
}

/// A line or transformer. Every branch is a potential switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: BranchId,
    #[serde(rename = "from")]
    pub from_bus: BusId,
    #[serde(rename = "to")]
    pub to_bus: BusId,
    pub resistance: f64,
    pub reactance: f64,
    /// Total line charging susceptance (pu).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub charging: f64,
    /// Off-nominal turns ratio on the `from` side; 1.0 for lines.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub tap: f64,
    #[serde(default = "yes")]
    pub switchable: bool,
}

impl Branch {
    pub fn new(id: BranchId, from_bus: BusId, to_bus: BusId, resistance: f64, reactance: f64) -> Self {
        Branch {
            id,
            from_bus,
            to_bus,
            resistance,
            reactance,
            charging: 0.0,
            tap: 1.0,
            switchable: true,
        }
    }

    pub fn impedance(&self) -> f64 {
        self.resistance.hypot(self.reactance)
    }

    pub fn other_end(&self, bus: BusId) -> BusId {
        if bus == self.from_bus {
            self.to_bus
        } else {
            self.from_bus
        }
    }

    fn validate(&self) -> Result<(), GridError> {
        let bad = |reason: &str| {
            Err(GridError::InvalidBranch {
                id: self.id,
                reason: reason.to_string(),
            })
        };
        if self.from_bus == self.to_bus {
            return bad("from_bus equals to_bus");
        }
        if ![self.resistance, self.reactance, self.charging, self.tap]
            .iter()
            .all(|v| v.is_finite())
        {
            return bad("non-finite parameter");
        }
        if self.resistance < 0.0 {
            return bad("negative resistance");
        }
        if self.impedance() <= 0.0 {
            return bad("zero impedance");
        }
        if self.tap <= 0.0 {
            return bad("non-positive tap ratio");
        }
        Ok(())
    }
}

/// Validated, immutable network. Buses and branches are sorted by id.
#[derive(Debug, Clone)]
pub struct Network {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    base_mva: f64,
    bus_index: HashMap<BusId, usize>,
    branch_index: HashMap<BranchId, usize>,
    /// Per bus index: (neighbour bus index, branch index).
    adjacency: Vec<Vec<(usize, usize)>>,
    slack: usize,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.base_mva == other.base_mva && self.buses == other.buses && self.branches == other.branches
    }
}

impl Network {
    pub fn new(mut buses: Vec<Bus>, mut branches: Vec<Branch>, base_mva: f64) -> Result<Self, GridError> {
        if buses.is_empty() {
            return Err(GridError::EmptyNetwork);
        }
        if branches.is_empty() {
            return Err(GridError::NoBranches);
        }
        if !(base_mva.is_finite() && base_mva > 0.0) {
            return Err(GridError::InvalidBus {
                id: 0,
                reason: format!("base_mva must be positive, got {base_mva}"),
            });
        }
        buses.sort_by_key(|b| b.id);
        branches.sort_by_key(|b| b.id);

        let mut bus_index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if bus_index.insert(bus.id, i).is_some() {
                return Err(GridError::DuplicateId {
                    element: "bus",
                    id: bus.id,
                });
            }
            let fields = [
                bus.load_p,
                bus.load_q,
                bus.gen_p,
                bus.gen_q,
                bus.v_nominal,
                bus.v_setpoint,
                bus.shunt_g,
                bus.shunt_b,
            ];
            if !fields.iter().all(|v| v.is_finite()) {
                return Err(GridError::InvalidBus {
                    id: bus.id,
                    reason: "non-finite parameter".into(),
                });
            }
            if bus.v_nominal <= 0.0 {
                return Err(GridError::InvalidBus {
                    id: bus.id,
                    reason: "v_nominal must be positive".into(),
                });
            }
            if bus.kind != BusKind::Pq && bus.v_setpoint <= 0.0 {
                return Err(GridError::InvalidBus {
                    id: bus.id,
                    reason: "v_setpoint must be positive".into(),
                });
            }
        }

        let slacks: Vec<BusId> = buses.iter().filter(|b| b.kind == BusKind::Slack).map(|b| b.id).collect();
        let slack = match slacks.as_slice() {
            [] => return Err(GridError::NoSlack),
            [id] => bus_index[id],
            _ => return Err(GridError::MultipleSlack(slacks)),
        };

        let mut branch_index = HashMap::with_capacity(branches.len());
        let mut adjacency = vec![Vec::new(); buses.len()];
        for (k, br) in branches.iter().enumerate() {
            if branch_index.insert(br.id, k).is_some() {
                return Err(GridError::DuplicateId {
                    element: "branch",
                    id: br.id,
                });
            }
            let f = *bus_index.get(&br.from_bus).ok_or(GridError::DanglingEndpoint {
                branch: br.id,
                bus: br.from_bus,
            })?;
            let t = *bus_index.get(&br.to_bus).ok_or(GridError::DanglingEndpoint {
                branch: br.id,
                bus: br.to_bus,
            })?;
            br.validate()?;
            adjacency[f].push((t, k));
            adjacency[t].push((f, k));
        }

        let net = Network {
            buses,
            branches,
            base_mva,
            bus_index,
            branch_index,
            adjacency,
            slack,
        };
        let all_closed = Topology::default();
        if net.reachable_from_slack(&all_closed).iter().any(|r| !r) {
            return Err(GridError::DisconnectedGraph);
        }
        Ok(net)
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    pub fn slack(&self) -> &Bus {
        &self.buses[self.slack]
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    pub fn branch_index(&self, id: BranchId) -> Option<usize> {
        self.branch_index.get(&id).copied()
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.bus_index(id).map(|i| &self.buses[i])
    }

    pub fn branch(&self, id: BranchId) -> Option<&Branch> {
        self.branch_index(id).map(|k| &self.branches[k])
    }

    /// Neighbours of the bus at `index` as (bus index, branch index) pairs.
    pub fn adjacent(&self, index: usize) -> &[(usize, usize)] {
        &self.adjacency[index]
    }

    /// Index pair (from, to) of a branch given its position.
    pub fn endpoints(&self, branch_index: usize) -> (usize, usize) {
        let br = &self.branches[branch_index];
        (self.bus_index[&br.from_bus], self.bus_index[&br.to_bus])
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.load_p).sum()
    }

    pub fn check_topology(&self, topo: &Topology) -> Result<(), GridError> {
        match topo.open_switches().iter().find(|id| !self.branch_index.contains_key(id)) {
            Some(&id) => Err(GridError::UnknownSwitchId(id)),
            None => Ok(()),
        }
    }

    /// Closed-branch mask (by branch index) for a topology.
    pub fn closed_mask(&self, topo: &Topology) -> Vec<bool> {
        self.branches.iter().map(|b| !topo.is_open(b.id)).collect()
    }

    /// Which buses can reach the slack through closed branches.
    pub fn reachable_from_slack(&self, topo: &Topology) -> Vec<bool> {
        let closed = self.closed_mask(topo);
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([self.slack]);
        seen[self.slack] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, k) in &self.adjacency[u] {
                if closed[k] && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// True iff the closed branches form a spanning tree of all buses.
    pub fn is_radial(&self, topo: &Topology) -> Result<bool, GridError> {
        self.check_topology(topo)?;
        let closed = self.branch_count() - topo.len();
        if closed + 1 != self.bus_count() {
            return Ok(false);
        }
        Ok(self.reachable_from_slack(topo).iter().all(|&r| r))
    }

    /// Exact number of spanning trees (parallel branches counted separately).
    pub fn count_spanning_trees(&self) -> num_bigint::BigUint {
        let edges: Vec<(usize, usize)> = (0..self.branches.len()).map(|k| self.endpoints(k)).collect();
        spanning_tree_count(self.bus_count(), &edges)
    }

    /// Kruskal spanning tree; ties on weight resolve by ascending branch id.
    pub fn minimum_spanning_tree<F>(&self, weight: F) -> Result<Topology, GridError>
    where
        F: Fn(&Branch) -> f64,
    {
        let mut order: Vec<(f64, usize)> = self.branches.iter().enumerate().map(|(k, b)| (weight(b), k)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(self.branches[a.1].id.cmp(&self.branches[b.1].id)));
        let mut uf = UnionFind::new(self.bus_count());
        let mut open = Vec::new();
        let mut joined = 0;
        for (_, k) in order {
            let (f, t) = self.endpoints(k);
            if uf.union(f, t) {
                joined += 1;
            } else {
                open.push(self.branches[k].id);
            }
        }
        if joined + 1 != self.bus_count() {
            return Err(GridError::Disconnected);
        }
        Ok(Topology::new(open))
    }

    /// Default initial-topology weights: branch impedance magnitude.
    pub fn impedance_mst(&self) -> Result<Topology, GridError> {
        self.minimum_spanning_tree(Branch::impedance)
    }

    /// The cycle created by closing `close_id` in a radial topology: the closed switch
    /// followed by the tree path from its `from` end to its `to` end.
    pub fn fundamental_loop(&self, topo: &Topology, close_id: BranchId) -> Result<Vec<BranchId>, GridError> {
        let k = self.branch_index(close_id).ok_or(GridError::UnknownSwitchId(close_id))?;
        if !self.is_radial(topo)? {
            return Err(GridError::NotRadial);
        }
        if !topo.is_open(close_id) {
            return Err(GridError::SwitchNotOpen(close_id));
        }
        let closed = self.closed_mask(topo);
        let (start, goal) = self.endpoints(k);
        // BFS over the tree from `goal` recording the arriving branch.
        let mut via: Vec<Option<(usize, usize)>> = vec![None; self.bus_count()];
        let mut seen = vec![false; self.bus_count()];
        seen[goal] = true;
        let mut queue = VecDeque::from([goal]);
        while let Some(u) = queue.pop_front() {
            if u == start {
                break;
            }
            for &(v, e) in &self.adjacency[u] {
                if closed[e] && !seen[v] {
                    seen[v] = true;
                    via[v] = Some((u, e));
                    queue.push_back(v);
                }
            }
        }
        let mut cycle = vec![close_id];
        let mut cur = start;
        while cur != goal {
            let (prev, e) = via[cur].ok_or(GridError::NotRadial)?;
            cycle.push(self.branches[e].id);
            cur = prev;
        }
        Ok(cycle)
    }

    /// Sub-network keeping the masked buses and the masked branches between them.
    pub fn restrict(&self, keep_buses: &[bool], keep_branches: &[bool]) -> Result<Network, GridError> {
        let buses: Vec<Bus> = self
            .buses
            .iter()
            .zip(keep_buses)
            .filter(|(_, &k)| k)
            .map(|(b, _)| b.clone())
            .collect();
        let branches: Vec<Branch> = self
            .branches
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let (f, t) = self.endpoints(*k);
                keep_branches[*k] && keep_buses[f] && keep_buses[t]
            })
            .map(|(_, b)| b.clone())
            .collect();
        Network::new(buses, branches, self.base_mva)
    }
}

#[cfg(test)]
mod tests;

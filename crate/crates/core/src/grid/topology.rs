use serde::{Deserialize, Serialize};

use super::BranchId;

/// Switch-status assignment: the listed branches are open, every other branch is closed.
///
/// The open set is always kept sorted and deduplicated, so two topologies with the
/// same open switches compare (and hash) equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<BranchId>", into = "Vec<BranchId>")]
pub struct Topology {
    open: Vec<BranchId>,
}

impl Topology {
    pub fn new(open: impl IntoIterator<Item = BranchId>) -> Self {
        let mut open: Vec<BranchId> = open.into_iter().collect();
        open.sort_unstable();
        open.dedup();
        Topology { open }
    }

    pub fn open_switches(&self) -> &[BranchId] {
        &self.open
    }

    pub fn is_open(&self, id: BranchId) -> bool {
        self.open.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    /// Branch-exchange move: close `close` and open `open`.
    pub fn exchange(&self, close: BranchId, open: BranchId) -> Topology {
        Topology::new(self.open.iter().copied().filter(|&id| id != close).chain(std::iter::once(open)))
    }

    /// Keep only the open switches accepted by `keep`.
    pub fn retain(&self, keep: impl Fn(BranchId) -> bool) -> Topology {
        Topology {
            open: self.open.iter().copied().filter(|&id| keep(id)).collect(),
        }
    }
}

impl From<Vec<BranchId>> for Topology {
    fn from(open: Vec<BranchId>) -> Self {
        Topology::new(open)
    }
}

impl From<Topology> for Vec<BranchId> {
    fn from(t: Topology) -> Self {
        t.open
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "open[")?;
        for (i, id) in self.open.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "]")
    }
}

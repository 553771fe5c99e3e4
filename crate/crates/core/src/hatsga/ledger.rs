use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::grid::Topology;

/// One evaluated radial topology. Non-converged flows carry an infinite loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub open: Topology,
    #[serde(with = "loss_repr")]
    pub loss: f64,
    pub converged: bool,
    pub violation_count: u32,
}

impl LedgerEntry {
    pub fn feasible(&self) -> bool {
        self.converged && self.violation_count == 0
    }

    /// Search order: fewer violations first, then lower loss. Non-converged sorts last.
    pub fn rank_key(&self) -> (u32, f64) {
        if self.converged {
            (self.violation_count, self.loss)
        } else {
            (u32::MAX, f64::INFINITY)
        }
    }
}

/// Infinite losses are written as `null` so ledgers stay valid JSON.
mod loss_repr {
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

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerConflict {
    pub open: Topology,
    pub recorded: f64,
    pub offered: f64,
}

/// Memo of every topology evaluated during one search, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<LedgerEntry>", into = "Vec<LedgerEntry>")]
pub struct TabuLedger {
    entries: Vec<LedgerEntry>,
    index: HashMap<Topology, usize>,
}

impl TabuLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, open: &Topology) -> bool {
        self.index.contains_key(open)
    }

    pub fn get(&self, open: &Topology) -> Option<&LedgerEntry> {
        self.index.get(open).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Insert a new evaluation. Re-inserting a key is accepted only when the loss agrees
    /// within `tolerance`; returns whether the entry was new.
    pub fn record(&mut self, entry: LedgerEntry, tolerance: f64) -> Result<bool, LedgerConflict> {
        if let Some(&i) = self.index.get(&entry.open) {
            let old = &self.entries[i];
            let agree = (old.converged == entry.converged)
                && (!old.converged || (old.loss - entry.loss).abs() <= tolerance);
            return if agree {
                Ok(false)
            } else {
                Err(LedgerConflict {
                    open: entry.open,
                    recorded: old.loss,
                    offered: entry.loss,
                })
            };
        }
        self.index.insert(entry.open.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(true)
    }

    /// Lowest-loss feasible entry; ties go to the earlier insertion.
    pub fn best_feasible(&self) -> Option<&LedgerEntry> {
        self.entries
            .iter()
            .filter(|e| e.feasible())
            .fold(None, |best: Option<&LedgerEntry>, e| match best {
                Some(b) if b.loss <= e.loss => Some(b),
                _ => Some(e),
            })
    }
}

impl From<Vec<LedgerEntry>> for TabuLedger {
    fn from(entries: Vec<LedgerEntry>) -> Self {
        let mut ledger = TabuLedger::new();
        for e in entries {
            if !ledger.contains(&e.open) {
                ledger.index.insert(e.open.clone(), ledger.entries.len());
                ledger.entries.push(e);
            }
        }
        ledger
    }
}

impl From<TabuLedger> for Vec<LedgerEntry> {
    fn from(l: TabuLedger) -> Self {
        l.entries
    }
}

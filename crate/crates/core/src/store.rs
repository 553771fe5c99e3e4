//! Durable case base: retention with occurrence counting, capacity-bounded
//! maintenance and atomic JSON persistence.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cbr::{self, Case, CaseDraft, CaseId, CbrError, Query, Ranges, RetrieveOptions, Scored};

pub const FORMAT_TAG: &str = "gridheal-cases";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("invalid capacity: {0}")]
    InvalidCapacity(String),
    #[error("unknown case {0}")]
    UnknownCase(CaseId),
    #[error("storage error at {}: {message}", .path.display())]
    StorageError { path: PathBuf, message: String },
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::InvalidCase(_) => "InvalidCase",
            StoreError::InvalidCapacity(_) => "InvalidCapacity",
            StoreError::UnknownCase(_) => "UnknownCase",
            StoreError::StorageError { .. } => "StorageError",
            StoreError::SchemaViolation { .. } => "SchemaViolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainOutcome {
    pub case_id: CaseId,
    /// False when an identical case absorbed the candidate.
    pub inserted: bool,
    pub occurrences: u32,
    pub evicted: Vec<CaseId>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    capacity: Option<usize>,
    revision: u64,
    next_id: CaseId,
    clock: u64,
    cases: Vec<Case>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseBase {
    cases: Vec<Case>,
    capacity: Option<usize>,
    revision: u64,
    next_id: CaseId,
    clock: u64,
    ranges: Ranges,
}

impl Default for CaseBase {
    fn default() -> Self {
        CaseBase {
            cases: Vec::new(),
            capacity: None,
            revision: 0,
            next_id: 1,
            clock: 0,
            ranges: Ranges::default(),
        }
    }
}

fn check_capacity(capacity: Option<usize>) -> Result<(), StoreError> {
    match capacity {
        Some(0) => Err(StoreError::InvalidCapacity("capacity must be at least 1".into())),
        _ => Ok(()),
    }
}

impl CaseBase {
    pub fn new(capacity: Option<usize>) -> Result<Self, StoreError> {
        check_capacity(capacity)?;
        Ok(CaseBase {
            capacity,
            ..Default::default()
        })
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Attribute normalization ranges, `[0, max]` over the stored cases.
    pub fn ranges(&self) -> &Ranges {
        &self.ranges
    }

    pub fn get(&self, id: CaseId) -> Option<&Case> {
        self.cases.iter().find(|c| c.id == id)
    }

    fn mutated(&mut self) {
        self.revision += 1;
        self.ranges = Ranges::spanning(self.cases.iter().map(|c| &c.attributes));
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Add a validated solution, or count another occurrence of an identical case.
    pub fn retain(&mut self, draft: CaseDraft) -> Result<RetainOutcome, StoreError> {
        draft.state.validate().map_err(StoreError::InvalidCase)?;
        if !draft.state.is_radial(&draft.solution) {
            return Err(StoreError::InvalidCase(format!(
                "solution {} is not radial on the recorded network state",
                draft.solution
            )));
        }
        if !draft.loss.is_finite() || draft.loss < 0.0 {
            return Err(StoreError::InvalidCase(format!("loss must be finite and nonnegative, got {}", draft.loss)));
        }
        let now = self.tick();
        if let Some(existing) = self.cases.iter_mut().find(|c| c.matches(&draft)) {
            existing.occurrences += 1;
            existing.last_used = now;
            let outcome = RetainOutcome {
                case_id: existing.id,
                inserted: false,
                occurrences: existing.occurrences,
                evicted: Vec::new(),
            };
            self.mutated();
            return Ok(outcome);
        }
        let id = self.next_id;
        self.next_id += 1;
        self.cases.push(Case {
            id,
            state: draft.state,
            problem: draft.problem,
            attributes: draft.attributes,
            solution: draft.solution,
            loss: draft.loss,
            quality: draft.quality,
            occurrences: 1,
            last_used: now,
        });
        let evicted = self.evict_over_capacity();
        self.mutated();
        Ok(RetainOutcome {
            case_id: id,
            inserted: true,
            occurrences: 1,
            evicted,
        })
    }

    fn evict_over_capacity(&mut self) -> Vec<CaseId> {
        let mut evicted = Vec::new();
        let Some(cap) = self.capacity else {
            return evicted;
        };
        while self.cases.len() > cap {
            let victim = self
                .cases
                .iter()
                .enumerate()
                .min_by_key(|(_, c)| (c.occurrences, c.last_used, c.id))
                .map(|(i, _)| i)
                .expect("over capacity implies non-empty");
            evicted.push(self.cases.remove(victim).id);
        }
        evicted
    }

    /// Evict least-used cases (fewest occurrences, then oldest use, then lowest id)
    /// until the base fits its capacity.
    pub fn maintain(&mut self) -> Vec<CaseId> {
        let evicted = self.evict_over_capacity();
        if !evicted.is_empty() {
            self.mutated();
        }
        evicted
    }

    pub fn set_capacity(&mut self, capacity: Option<usize>) -> Result<Vec<CaseId>, StoreError> {
        check_capacity(capacity)?;
        self.capacity = capacity;
        let evicted = self.evict_over_capacity();
        self.mutated();
        Ok(evicted)
    }

    /// Record a retrieval hit.
    pub fn touch(&mut self, id: CaseId) -> Result<(), StoreError> {
        let now = self.tick();
        let case = self.cases.iter_mut().find(|c| c.id == id).ok_or(StoreError::UnknownCase(id))?;
        case.last_used = now;
        self.revision += 1;
        Ok(())
    }

    pub fn remove(&mut self, id: CaseId) -> Result<Case, StoreError> {
        let i = self.cases.iter().position(|c| c.id == id).ok_or(StoreError::UnknownCase(id))?;
        let case = self.cases.remove(i);
        self.mutated();
        Ok(case)
    }

    pub fn retrieve(&self, query: &Query, opts: &RetrieveOptions) -> Result<Vec<Scored>, CbrError> {
        cbr::retrieve(&self.cases, &self.ranges, query, opts)
    }

    pub fn to_json(&self) -> String {
        let doc = Document {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            capacity: self.capacity,
            revision: self.revision,
            next_id: self.next_id,
            clock: self.clock,
            cases: self.cases.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("case documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let violation = |path: &str, message: String| StoreError::SchemaViolation {
            path: path.into(),
            message,
        };
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| violation(&e.path().to_string(), e.inner().to_string()))?;
        if doc.format != FORMAT_TAG {
            return Err(violation("format", format!("expected {FORMAT_TAG:?}, found {:?}", doc.format)));
        }
        if doc.version != FORMAT_VERSION {
            return Err(violation("version", format!("unsupported version {}", doc.version)));
        }
        check_capacity(doc.capacity).map_err(|e| violation("capacity", e.to_string()))?;
        if let Some(cap) = doc.capacity {
            if doc.cases.len() > cap {
                return Err(violation("cases", format!("{} cases exceed capacity {cap}", doc.cases.len())));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (i, c) in doc.cases.iter().enumerate() {
            if !seen.insert(c.id) {
                return Err(violation(&format!("cases[{i}].id"), format!("duplicate case id {}", c.id)));
            }
            if c.id >= doc.next_id {
                return Err(violation(&format!("cases[{i}].id"), format!("id {} not below next_id {}", c.id, doc.next_id)));
            }
            c.state.validate().map_err(|m| violation(&format!("cases[{i}].state"), m))?;
            if c.occurrences == 0 {
                return Err(violation(&format!("cases[{i}].occurrences"), "must be at least 1".into()));
            }
            if !c.state.is_radial(&c.solution) {
                return Err(violation(&format!("cases[{i}].solution"), "not radial on the recorded state".into()));
            }
        }
        let mut base = CaseBase {
            cases: doc.cases,
            capacity: doc.capacity,
            revision: doc.revision,
            next_id: doc.next_id,
            clock: doc.clock,
            ranges: Ranges::default(),
        };
        base.ranges = Ranges::spanning(base.cases.iter().map(|c| &c.attributes));
        Ok(base)
    }

    /// Write through a temporary file in the same directory and rename over `path`.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let storage = |message: String| StoreError::StorageError {
            path: path.to_path_buf(),
            message,
        };
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| storage(e.to_string()))?;
        tmp.write_all(self.to_json().as_bytes()).map_err(|e| storage(e.to_string()))?;
        tmp.as_file().sync_all().map_err(|e| storage(e.to_string()))?;
        tmp.persist(path).map_err(|e| storage(e.error.to_string()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| StoreError::StorageError {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Load `path`, or start an empty base when it does not exist yet.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }
}

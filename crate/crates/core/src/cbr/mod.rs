//! Case-based reasoning: attribute similarity, retrieval, adaptation and revision.

mod adapt;
mod case;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapt::{adapt, revise, Adaptation, Revision};
pub use case::{BranchEnds, Case, CaseDraft, CaseId, NetworkState, Problem, ProblemKind};

use crate::grid::BusId;
use crate::powerflow::QualityMetrics;

pub const DEFAULT_THRESHOLD: f64 = 0.92;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CbrError {
    #[error("degenerate range [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },
    #[error("attribute mismatch: {0}")]
    AttributeMismatch(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("cannot reconnect bus {bus} from the case topology")]
    Unrepairable { bus: BusId },
    #[error("invalid fault: {0}")]
    InvalidFault(String),
}

impl CbrError {
    pub fn code(&self) -> &'static str {
        match self {
            CbrError::DegenerateRange { .. } => "DegenerateRange",
            CbrError::AttributeMismatch(_) => "AttributeMismatch",
            CbrError::InvalidWeights(_) => "InvalidWeights",
            CbrError::Unrepairable { .. } => "Unrepairable",
            CbrError::InvalidFault(_) => "InvalidFault",
        }
    }
}

/// The three matching attributes, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    #[serde(alias = "pesoploss")]
    LossRatio,
    #[serde(alias = "pesoprofileV")]
    ProfileSum,
    #[serde(alias = "pesoprofileVQtd")]
    ViolationCount,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::LossRatio, Attribute::ProfileSum, Attribute::ViolationCount];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::LossRatio => "loss_ratio",
            Attribute::ProfileSum => "profile_sum",
            Attribute::ViolationCount => "violation_count",
        }
    }

    pub fn parse(name: &str) -> Option<Attribute> {
        match name {
            "loss_ratio" | "pesoploss" => Some(Attribute::LossRatio),
            "profile_sum" | "pesoprofileV" => Some(Attribute::ProfileSum),
            "violation_count" | "pesoprofileVQtd" => Some(Attribute::ViolationCount),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeVector {
    #[serde(alias = "pesoploss")]
    pub loss_ratio: f64,
    #[serde(alias = "pesoprofileV")]
    pub profile_sum: f64,
    #[serde(alias = "pesoprofileVQtd")]
    pub violation_count: f64,
}

impl AttributeVector {
    pub fn new(loss_ratio: f64, profile_sum: f64, violation_count: f64) -> Self {
        AttributeVector {
            loss_ratio,
            profile_sum,
            violation_count,
        }
    }

    pub fn values(&self) -> [f64; 3] {
        [self.loss_ratio, self.profile_sum, self.violation_count]
    }

    pub fn from_values(v: [f64; 3]) -> Self {
        AttributeVector::new(v[0], v[1], v[2])
    }

    /// Build from named values; every attribute must be present exactly once.
    pub fn from_named(values: &BTreeMap<String, f64>) -> Result<Self, CbrError> {
        let mut out: [Option<f64>; 3] = [None; 3];
        for (name, &v) in values {
            let a = Attribute::parse(name).ok_or_else(|| CbrError::AttributeMismatch(format!("unknown attribute {name:?}")))?;
            if out[a as usize].replace(v).is_some() {
                return Err(CbrError::AttributeMismatch(format!("attribute {} given twice", a.name())));
            }
        }
        let mut v = [0.0; 3];
        for a in Attribute::ALL {
            v[a as usize] = out[a as usize].ok_or_else(|| CbrError::AttributeMismatch(format!("missing {}", a.name())))?;
        }
        Ok(AttributeVector::from_values(v))
    }
}

impl From<QualityMetrics> for AttributeVector {
    fn from(q: QualityMetrics) -> Self {
        AttributeVector::new(q.loss_ratio, q.profile_sum, q.violation_count as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn new(min: f64, max: f64) -> Result<Self, CbrError> {
        if min < max && min.is_finite() && max.is_finite() {
            Ok(Range { min, max })
        } else {
            Err(CbrError::DegenerateRange { min, max })
        }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.min, self.max)
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (self.clamp(x) - self.min) / (self.max - self.min)
    }
}

/// Normalization range per attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranges(pub [Range; 3]);

impl Default for Ranges {
    fn default() -> Self {
        Ranges([Range { min: 0.0, max: 1.0 }; 3])
    }
}

impl Ranges {
    /// `[0, max]` over the given vectors, falling back to `[0, 1]` where every value is ≤ 0.
    pub fn spanning<'a>(vectors: impl IntoIterator<Item = &'a AttributeVector>) -> Self {
        let mut hi = [0.0f64; 3];
        for v in vectors {
            for (h, x) in hi.iter_mut().zip(v.values()) {
                if x.is_finite() {
                    *h = h.max(x);
                }
            }
        }
        Ranges(hi.map(|h| if h > 0.0 { Range { min: 0.0, max: h } } else { Range { min: 0.0, max: 1.0 } }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityWeights {
    #[serde(alias = "pesoploss")]
    pub loss_ratio: f64,
    #[serde(alias = "pesoprofileV")]
    pub profile_sum: f64,
    #[serde(alias = "pesoprofileVQtd")]
    pub violation_count: f64,
}

impl Default for SimilarityWeights {
    fn default() -> Self {
        SimilarityWeights::new(1.0, 1.0, 1.0)
    }
}

impl SimilarityWeights {
    pub fn new(loss_ratio: f64, profile_sum: f64, violation_count: f64) -> Self {
        SimilarityWeights {
            loss_ratio,
            profile_sum,
            violation_count,
        }
    }

    /// Weights scaled to sum to one.
    pub fn normalized(&self) -> Result<[f64; 3], CbrError> {
        let w = [self.loss_ratio, self.profile_sum, self.violation_count];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(CbrError::InvalidWeights(format!("weights must be finite and nonnegative, got {w:?}")));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(CbrError::InvalidWeights("weights sum to zero".into()));
        }
        Ok(w.map(|x| x / total))
    }

    pub fn set(&mut self, attribute: Attribute, value: f64) {
        match attribute {
            Attribute::LossRatio => self.loss_ratio = value,
            Attribute::ProfileSum => self.profile_sum = value,
            Attribute::ViolationCount => self.violation_count = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityMode {
    #[default]
    WeightedMean,
    Euclidean,
}

impl std::str::FromStr for SimilarityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighted-mean" => Ok(SimilarityMode::WeightedMean),
            "euclidean" => Ok(SimilarityMode::Euclidean),
            other => Err(format!("unknown similarity mode {other:?}")),
        }
    }
}

/// `1 − |c − t| / (max − min)` with both values clamped into the range.
pub fn local_similarity(t: f64, c: f64, min: f64, max: f64) -> Result<f64, CbrError> {
    let r = Range::new(min, max)?;
    Ok(local(t, c, &r))
}

fn local(t: f64, c: f64, r: &Range) -> f64 {
    1.0 - (r.clamp(c) - r.clamp(t)).abs() / (r.max - r.min)
}

fn global_normalized(query: &AttributeVector, stored: &AttributeVector, ranges: &Ranges, w: &[f64; 3], mode: SimilarityMode) -> f64 {
    let (t, c) = (query.values(), stored.values());
    match mode {
        SimilarityMode::WeightedMean => (0..3).map(|i| w[i] * local(t[i], c[i], &ranges.0[i])).sum::<f64>().clamp(0.0, 1.0),
        SimilarityMode::Euclidean => {
            let d2: f64 = (0..3)
                .map(|i| {
                    let d = ranges.0[i].normalize(t[i]) - ranges.0[i].normalize(c[i]);
                    w[i] * d * d
                })
                .sum();
            (1.0 - d2.sqrt()).clamp(0.0, 1.0)
        }
    }
}

pub fn global_similarity(
    query: &AttributeVector,
    stored: &AttributeVector,
    ranges: &Ranges,
    weights: &SimilarityWeights,
    mode: SimilarityMode,
) -> Result<f64, CbrError> {
    for r in &ranges.0 {
        Range::new(r.min, r.max)?;
    }
    let w = weights.normalized()?;
    Ok(global_normalized(query, stored, ranges, &w, mode))
}

/// What to look for. Without `state` and `problem` the structural filter is skipped
/// and every case is scored on attributes alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    #[serde(default)]
    pub state: Option<NetworkState>,
    #[serde(default)]
    pub problem: Option<Problem>,
    pub attributes: AttributeVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieveOptions {
    pub threshold: f64,
    pub weights: SimilarityWeights,
    pub limit: usize,
    pub mode: SimilarityMode,
}

impl Default for RetrieveOptions {
    fn default() -> Self {
        RetrieveOptions {
            threshold: DEFAULT_THRESHOLD,
            weights: SimilarityWeights::default(),
            limit: 10,
            mode: SimilarityMode::WeightedMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub case_id: CaseId,
    pub similarity: f64,
}

/// Whether a case is eligible for a query before any scoring.
pub fn compatible(case: &Case, query: &Query) -> bool {
    if let Some(p) = &query.problem {
        if p.kind != case.problem.kind {
            return false;
        }
    }
    match &query.state {
        Some(s) => case.state.covers(s),
        None => true,
    }
}

/// Linear scan: score, threshold, structural filter, sort (similarity desc, occurrences desc, id asc), truncate.
pub fn retrieve(cases: &[Case], ranges: &Ranges, query: &Query, opts: &RetrieveOptions) -> Result<Vec<Scored>, CbrError> {
    for r in &ranges.0 {
        Range::new(r.min, r.max)?;
    }
    let w = opts.weights.normalized()?;
    let mut hits: Vec<(Scored, u32)> = cases
        .iter()
        .filter_map(|c| {
            let s = global_normalized(&query.attributes, &c.attributes, ranges, &w, opts.mode);
            (s >= opts.threshold && compatible(c, query)).then_some((
                Scored {
                    case_id: c.id,
                    similarity: s,
                },
                c.occurrences,
            ))
        })
        .collect();
    hits.sort_by(|(a, na), (b, nb)| {
        b.similarity
            .partial_cmp(&a.similarity)
            .unwrap_or(Ordering::Equal)
            .then(nb.cmp(na))
            .then(a.case_id.cmp(&b.case_id))
    });
    hits.truncate(opts.limit);
    Ok(hits.into_iter().map(|(s, _)| s).collect())
}

#[cfg(test)]
mod tests;

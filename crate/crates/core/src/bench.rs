//! Timing harness for the reconfiguration search across test systems.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::grid::Network;
use crate::hatsga::{search, HatsgaError, HatsgaParams};

pub const DEFAULT_REPETITIONS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("at least 2 repetitions are needed for a deviation, got {0}")]
    TooFewRepetitions(usize),
    #[error(transparent)]
    Params(HatsgaError),
}

impl BenchError {
    pub fn code(&self) -> &'static str {
        match self {
            BenchError::TooFewRepetitions(_) => "InvalidParams",
            BenchError::Params(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub ci95: [f64; 2],
}

/// Sample mean, standard deviation and the two-sided 95% Student-t interval.
pub fn summarize(samples: &[f64]) -> Option<Summary> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).ok()?.inverse_cdf(0.975);
    let half = t * sd / (n as f64).sqrt();
    Some(Summary {
        mean,
        sd,
        ci95: [mean - half, mean + half],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub system: String,
    pub buses: usize,
    pub switches: usize,
    /// Exact decimal.
    pub spanning_trees: String,
    pub spanning_trees_approx: f64,
    pub mean_seconds: f64,
    pub sd_seconds: f64,
    pub ci95_seconds: [f64; 2],
    pub evaluations: usize,
    /// Absent when no voltage-feasible topology was found.
    pub best_loss: Option<f64>,
    /// Why the search ended without a feasible topology, if it did.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub repetitions: usize,
    pub params: HatsgaParams,
    pub rows: Vec<BenchmarkRow>,
}

/// Run the search `repetitions` times per system. A search that ends without a
/// feasible topology still counts as a timed run; the row is flagged.
pub fn benchmark(systems: &[(String, Network)], repetitions: usize, params: &HatsgaParams) -> Result<BenchmarkReport, BenchError> {
    if repetitions < 2 {
        return Err(BenchError::TooFewRepetitions(repetitions));
    }
    params.validate().map_err(BenchError::Params)?;
    let rows = systems
        .iter()
        .map(|(name, net)| {
            let mut times = Vec::with_capacity(repetitions);
            let mut last = None;
            for _ in 0..repetitions {
                let started = Instant::now();
                let outcome = search(net, params, None);
                times.push(started.elapsed().as_secs_f64());
                last = Some(outcome);
            }
            let (evaluations, best_loss, failure) = match last.expect("at least two runs") {
                Ok(r) => (r.evaluations, Some(r.best_loss), None),
                Err(HatsgaError::NoFeasibleTopology { evaluations }) => {
                    (evaluations, None, Some(HatsgaError::NoFeasibleTopology { evaluations }.to_string()))
                }
                Err(e) => (0, None, Some(e.to_string())),
            };
            let s = summarize(&times).expect("at least two samples");
            let trees = net.count_spanning_trees();
            BenchmarkRow {
                system: name.clone(),
                buses: net.bus_count(),
                switches: net.branches().iter().filter(|b| b.switchable).count(),
                spanning_trees: trees.to_string(),
                spanning_trees_approx: num_traits::ToPrimitive::to_f64(&trees).unwrap_or(f64::INFINITY),
                mean_seconds: s.mean,
                sd_seconds: s.sd,
                ci95_seconds: s.ci95,
                evaluations,
                best_loss,
                failure,
            }
        })
        .collect();
    Ok(BenchmarkReport {
        repetitions,
        params: *params,
        rows,
    })
}

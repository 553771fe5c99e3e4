//! Newton-Raphson AC power flow in polar coordinates.
//!
//! The admittance model is the usual single-phase positive-sequence pi equivalent:
//! series impedance, total line charging split between both ends, an off-nominal tap on
//! the `from` side and constant-admittance bus shunts. Reactive limits of PV buses are
//! not enforced.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BusId, BusKind, GridError, Network, Topology};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowOptions {
    /// Largest acceptable P/Q mismatch, per-unit on the network base.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerFlowError {
    #[error("bus {bus} is not connected to the slack bus")]
    IslandedLoad { bus: BusId },
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("no convergence after {} iterations (mismatch {:.3e})", .0.iterations, .0.max_mismatch)]
    NotConverged(Box<PowerFlowSolution>),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl PowerFlowError {
    pub fn code(&self) -> &'static str {
        match self {
            PowerFlowError::IslandedLoad { .. } => "IslandedLoad",
            PowerFlowError::SingularJacobian { .. } => "SingularJacobian",
            PowerFlowError::NotConverged(_) => "NotConverged",
            PowerFlowError::InvalidOptions(_) => "InvalidOptions",
            PowerFlowError::Grid(e) => e.code(),
        }
    }
}

/// Bus voltages (in network bus order) and derived totals. Powers in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub v_mag: Vec<f64>,
    pub v_ang: Vec<f64>,
    pub loss_total: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// Total real generation including the slack's computed output.
    pub gen_total: f64,
    /// Real power consumed by shunt conductances.
    pub shunt_total: f64,
    /// Sum of real bus injections (generation − load), net of nothing.
    pub injection_total: f64,
}

impl PowerFlowSolution {
    /// Σgen − Σload − Σshunt − loss; zero up to the mismatch tolerance.
    pub fn balance_residual(&self, net: &Network) -> f64 {
        self.gen_total - net.total_load() - self.shunt_total - self.loss_total
    }

    /// Loss computed from bus injections rather than branch flows.
    pub fn injection_loss(&self) -> f64 {
        self.injection_total - self.shunt_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QualityMetrics {
    /// Σ |v − v_nominal| over all buses (pu).
    pub profile_sum: f64,
    /// Buses whose deviation exceeds the limit fraction of nominal.
    pub violation_count: u32,
    /// Loss over total real load.
    pub loss_ratio: f64,
}

/// Admittance matrix in adjacency form; parallel branches are merged.
struct Admittance {
    diag: Vec<Complex64>,
    off: Vec<Vec<(usize, Complex64)>>,
}

struct BranchModel {
    from: usize,
    to: usize,
    yff: Complex64,
    yft: Complex64,
    ytf: Complex64,
    ytt: Complex64,
}

fn branch_models(net: &Network, closed: &[bool]) -> Vec<BranchModel> {
    net.branches()
        .iter()
        .enumerate()
        .filter(|(k, _)| closed[*k])
        .map(|(k, br)| {
            let (from, to) = net.endpoints(k);
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.resistance, br.reactance);
            let half_b = Complex64::new(0.0, br.charging / 2.0);
            let ytt = ys + half_b;
            BranchModel {
                from,
                to,
                yff: ytt / (br.tap * br.tap),
                yft: -ys / br.tap,
                ytf: -ys / br.tap,
                ytt,
            }
        })
        .collect()
}

fn admittance(net: &Network, models: &[BranchModel]) -> Admittance {
    let mut diag: Vec<Complex64> = net.buses().iter().map(|b| Complex64::new(b.shunt_g, b.shunt_b)).collect();
    let mut off: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); net.bus_count()];
    let mut add = |i: usize, j: usize, y: Complex64| match off[i].iter_mut().find(|(n, _)| *n == j) {
        Some(entry) => entry.1 += y,
        None => off[i].push((j, y)),
    };
    for m in models {
        add(m.from, m.to, m.yft);
        add(m.to, m.from, m.ytf);
        diag[m.from] += m.yff;
        diag[m.to] += m.ytt;
    }
    Admittance { diag, off }
}

fn injections(y: &Admittance, v: &[Complex64]) -> Vec<Complex64> {
    (0..v.len())
        .map(|i| {
            let mut current = y.diag[i] * v[i];
            for &(j, yij) in &y.off[i] {
                current += yij * v[j];
            }
            v[i] * current.conj()
        })
        .collect()
}

/// Solve the power flow of `net` with the switches of `topo` open, from a flat start.
pub fn solve(net: &Network, topo: &Topology, opts: &PowerFlowOptions) -> Result<PowerFlowSolution, PowerFlowError> {
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(PowerFlowError::InvalidOptions(format!("tol must be positive, got {}", opts.tol)));
    }
    net.check_topology(topo)?;
    let reach = net.reachable_from_slack(topo);
    if let Some(i) = reach.iter().position(|r| !r) {
        return Err(PowerFlowError::IslandedLoad { bus: net.buses()[i].id });
    }

    let n = net.bus_count();
    let base = net.base_mva();
    let closed = net.closed_mask(topo);
    let models = branch_models(net, &closed);
    let y = admittance(net, &models);

    let buses = net.buses();
    let slack = net.slack_index();
    let mut vm: Vec<f64> = buses
        .iter()
        .map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v_setpoint })
        .collect();
    let mut va = vec![0.0; n];

    // unknown layout: angles of all non-slack buses, then magnitudes of PQ buses
    let angle_buses: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let mag_buses: Vec<usize> = (0..n).filter(|&i| buses[i].kind == BusKind::Pq).collect();
    let mut angle_pos = vec![usize::MAX; n];
    for (k, &i) in angle_buses.iter().enumerate() {
        angle_pos[i] = k;
    }
    let mut mag_pos = vec![usize::MAX; n];
    for (k, &i) in mag_buses.iter().enumerate() {
        mag_pos[i] = angle_buses.len() + k;
    }
    let dim = angle_buses.len() + mag_buses.len();
    let p_spec: Vec<f64> = buses.iter().map(|b| (b.gen_p - b.load_p) / base).collect();
    let q_spec: Vec<f64> = buses.iter().map(|b| (b.gen_q - b.load_q) / base).collect();

    let phasors = |vm: &[f64], va: &[f64]| -> Vec<Complex64> {
        vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    let mut max_mismatch;
    loop {
        let v = phasors(&vm, &va);
        let s = injections(&y, &v);
        let mut mismatch = DVector::<f64>::zeros(dim);
        for &i in &angle_buses {
            mismatch[angle_pos[i]] = p_spec[i] - s[i].re;
        }
        for &i in &mag_buses {
            mismatch[mag_pos[i]] = q_spec[i] - s[i].im;
        }
        max_mismatch = mismatch.amax();
        if !max_mismatch.is_finite() {
            break;
        }
        if max_mismatch <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }

        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            if i == slack {
                continue;
            }
            let (pi, qi) = (s[i].re, s[i].im);
            let (gii, bii) = (y.diag[i].re, y.diag[i].im);
            let vi = vm[i];
            let ri = angle_pos[i];
            let qrow = mag_pos[i];
            jac[(ri, ri)] += -qi - bii * vi * vi;
            if qrow != usize::MAX {
                jac[(ri, qrow)] += pi / vi + gii * vi;
                jac[(qrow, ri)] += pi - gii * vi * vi;
                jac[(qrow, qrow)] += qi / vi - bii * vi;
            }
            for &(j, yij) in &y.off[i] {
                let (g, b) = (yij.re, yij.im);
                let (sin, cos) = (va[i] - va[j]).sin_cos();
                let vj = vm[j];
                let t1 = g * sin - b * cos;
                let t2 = g * cos + b * sin;
                if j != slack {
                    let cj = angle_pos[j];
                    jac[(ri, cj)] += vi * vj * t1;
                    if qrow != usize::MAX {
                        jac[(qrow, cj)] += -vi * vj * t2;
                    }
                }
                let mj = mag_pos[j];
                if mj != usize::MAX {
                    jac[(ri, mj)] += vi * t2;
                    if qrow != usize::MAX {
                        jac[(qrow, mj)] += vi * t1;
                    }
                }
            }
        }
        let step = jac
            .lu()
            .solve(&mismatch)
            .filter(|dx| dx.iter().all(|d| d.is_finite()))
            .ok_or(PowerFlowError::SingularJacobian { iteration: iterations })?;
        for &i in &angle_buses {
            va[i] += step[angle_pos[i]];
        }
        for &i in &mag_buses {
            vm[i] += step[mag_pos[i]];
        }
        iterations += 1;
        if vm.iter().any(|m| !m.is_finite() || *m <= 0.0) {
            max_mismatch = f64::INFINITY;
            break;
        }
    }

    let v = phasors(&vm, &va);
    let s = injections(&y, &v);
    let loss_total = models
        .iter()
        .map(|m| {
            let (vf, vt) = (v[m.from], v[m.to]);
            let sf = vf * (m.yff * vf + m.yft * vt).conj();
            let st = vt * (m.ytf * vf + m.ytt * vt).conj();
            (sf + st).re
        })
        .sum::<f64>()
        * base;
    let gen_total = buses
        .iter()
        .enumerate()
        .map(|(i, b)| if i == slack { s[i].re * base + b.load_p } else { b.gen_p })
        .sum();
    let shunt_total = buses.iter().zip(&vm).map(|(b, m)| b.shunt_g * m * m).sum::<f64>() * base;
    let injection_total = s.iter().map(|x| x.re).sum::<f64>() * base;

    let solution = PowerFlowSolution {
        v_mag: vm,
        v_ang: va,
        loss_total,
        converged,
        iterations,
        max_mismatch,
        gen_total,
        shunt_total,
        injection_total,
    };
    if converged {
        Ok(solution)
    } else {
        Err(PowerFlowError::NotConverged(Box::new(solution)))
    }
}

/// Voltage-profile and loss metrics of a converged solution.
pub fn quality(net: &Network, sol: &PowerFlowSolution, limit_fraction: f64) -> Result<QualityMetrics, PowerFlowError> {
    if !sol.converged {
        return Err(PowerFlowError::NotConverged(Box::new(sol.clone())));
    }
    let mut profile_sum = 0.0;
    let mut violation_count = 0;
    for (bus, &v) in net.buses().iter().zip(&sol.v_mag) {
        let dev = (v - bus.v_nominal).abs();
        profile_sum += dev;
        if dev > limit_fraction * bus.v_nominal {
            violation_count += 1;
        }
    }
    let load = net.total_load();
    let loss_ratio = if load > 0.0 { sol.loss_total / load } else { 0.0 };
    Ok(QualityMetrics {
        profile_sum,
        violation_count,
        loss_ratio,
    })
}

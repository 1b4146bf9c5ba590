//! Robust pulse construction: minimize `C = w_F (1 − F) + w_R Σ_j R^j` over
//! the Fourier parameters `{a_n, φ_n}` of one or two drive quadratures.
//!
//! Each restart starts from a seed-derived, area-matched guess and runs a
//! damped Gauss–Newton descent on the residual vector whose squared norm is
//! `(1 − F) + Σ_j ‖r^j(T)‖²`; the Jacobian comes from central finite
//! differences. A step is accepted only if it lowers `C`, so the recorded
//! cost never increases. Restarts run in parallel and the lowest final cost
//! wins, ties going to the earlier restart.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fidelity::{avg_fidelity_from_distance, unitary_gate_fidelity};
use crate::geometry::{error_curve_segment, total_error_distance, ErrorCurve};
use crate::noise::{Coupling, NoiseFamily};
use crate::pulse::{Envelope, FourierPulse, XYPulse};
use crate::quantum::{
    pauli_vector, project_su2, propagate_qubit_final, su2_log, to_dynamic, to_qubit, ComplexMatrix, Qubit,
    TimeGrid, I,
};
use crate::seeding::{stream_rng, StreamKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveMode {
    XOnly,
    XAndY,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub infidelity: f64,
    pub distance: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            infidelity: 1.0,
            distance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem {
    pub target: ComplexMatrix,
    pub noise: Vec<NoiseFamily>,
    pub duration: f64,
    pub order: usize,
    pub mode: DriveMode,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub steps: usize,
    pub verify_steps: usize,
    pub weights: CostWeights,
}

impl OptimizationProblem {
    /// Defaults: tolerance 1e−4, 8 restarts, 300 iterations, 1000 optimizer
    /// steps, 4000 verification steps.
    pub fn new(target: ComplexMatrix, noise: Vec<NoiseFamily>, duration: f64, order: usize) -> Self {
        Self {
            target,
            noise,
            duration,
            order,
            mode: DriveMode::XOnly,
            seed: 0,
            tolerance: 1e-4,
            max_iterations: 300,
            restarts: 8,
            steps: 1000,
            verify_steps: 4000,
            weights: CostWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(invalid("N", "at least one Fourier component"));
        }
        if !(self.duration > 0.0) {
            return Err(invalid("T", format!("{} ns must be positive", self.duration)));
        }
        if self.target.nrows() != 2 || crate::quantum::unitarity_error(&self.target) > 1e-9 {
            return Err(invalid("target", "must be a 2x2 unitary"));
        }
        if self.restarts == 0 || self.steps == 0 || self.verify_steps == 0 {
            return Err(invalid("restarts/steps", "must be positive"));
        }
        Ok(())
    }

    fn quadratures(&self) -> usize {
        match self.mode {
            DriveMode::XOnly => 1,
            DriveMode::XAndY => 2,
        }
    }

    /// Number of real parameters.
    pub fn dimension(&self) -> usize {
        self.quadratures() * (2 * self.order + 1)
    }

    /// Pulse described by a parameter vector `[a_0..a_N, φ_1..φ_N]` per
    /// quadrature.
    pub fn pulse(&self, params: &[f64]) -> XYPulse {
        let n = 2 * self.order + 1;
        let quad = |q: usize| {
            let p = &params[q * n..(q + 1) * n];
            FourierPulse {
                duration: self.duration,
                amplitudes: p[..=self.order].to_vec(),
                phases: p[self.order + 1..].to_vec(),
            }
        };
        match self.mode {
            DriveMode::XOnly => XYPulse::x_only(quad(0)),
            DriveMode::XAndY => XYPulse::xy(quad(0), quad(1)),
        }
    }

    fn couplings(&self) -> Vec<(String, Coupling)> {
        self.noise
            .iter()
            .flat_map(|f| f.source(1.0).directions)
            .map(|d| (d.label, d.coupling))
            .collect()
    }

    fn target_angle(&self) -> f64 {
        su2_log(&self.target).map(|l| l.generator.angle()).unwrap_or(PI)
    }
}

/// Noise-free propagator, fidelity and per-direction curve endpoints.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub fidelity: f64,
    pub distances: Vec<f64>,
    pub cost: f64,
    residual: Vec<f64>,
}

fn evaluate(problem: &OptimizationProblem, params: &[f64], steps: usize) -> Evaluation {
    let pulse = problem.pulse(params);
    let couplings = problem.couplings();
    let target = to_qubit(&problem.target).expect("validated 2x2 target");
    let (u, endpoints): (Qubit, Vec<Vector3<f64>>) = if couplings.is_empty() {
        let grid = TimeGrid::new(problem.duration, steps).expect("positive steps");
        (propagate_qubit_final(&pulse.qubit_hamiltonian(), &grid), Vec::new())
    } else {
        let mut u = Qubit::identity();
        let mut ends = Vec::with_capacity(couplings.len());
        for (label, c) in &couplings {
            let (curve, uf) = error_curve_segment(&pulse, *c, label, 0.0, problem.duration, steps, Qubit::identity())
                .expect("positive steps");
            ends.push(curve.endpoint());
            u = uf;
        }
        (u, ends)
    };
    let fidelity = unitary_gate_fidelity(&to_dynamic(&u), &problem.target);
    // 1 − F = (2/3) |q|² with q the vector part of the SU(2)-projected V†U
    let mut w = project_su2(&(target.adjoint() * u));
    if (w[(0, 0)] + w[(1, 1)]).re < 0.0 {
        w = -w;
    }
    let q = pauli_vector(&(w * I)) * (2.0f64 / 3.0).sqrt();
    let wf = problem.weights.infidelity.sqrt();
    let wr = problem.weights.distance.sqrt();
    let mut residual = vec![wf * q.x, wf * q.y, wf * q.z];
    for e in &endpoints {
        residual.extend([wr * e.x, wr * e.y, wr * e.z]);
    }
    let distances: Vec<f64> = endpoints.iter().map(|e| e.norm()).collect();
    let cost = problem.weights.infidelity * (1.0 - fidelity).max(0.0)
        + problem.weights.distance * distances.iter().sum::<f64>();
    Evaluation {
        fidelity,
        distances,
        cost,
        residual,
    }
}

/// `C = w_F (1 − F) + w_R Σ_j R^j` on the optimizer grid.
pub fn cost(params: &[f64], problem: &OptimizationProblem) -> f64 {
    evaluate(problem, params, problem.steps).cost
}

/// Finite-difference step for amplitudes (rad/ns) and phases (rad).
pub const FD_STEP: f64 = 1e-6;

fn jacobian(problem: &OptimizationProblem, params: &[f64], steps: usize, h: f64) -> DMatrix<f64> {
    let m = evaluate(problem, params, steps).residual.len();
    let mut jac = DMatrix::zeros(m, params.len());
    let mut p = params.to_vec();
    for j in 0..params.len() {
        p[j] = params[j] + h;
        let plus = evaluate(problem, &p, steps).residual;
        p[j] = params[j] - h;
        let minus = evaluate(problem, &p, steps).residual;
        p[j] = params[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

/// Central-difference gradient of the cost.
pub fn cost_gradient(problem: &OptimizationProblem, params: &[f64], h: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..params.len())
        .map(|j| {
            p[j] = params[j] + h;
            let plus = cost(&p, problem);
            p[j] = params[j] - h;
            let minus = cost(&p, problem);
            p[j] = params[j];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub restart: usize,
    pub iteration: usize,
    pub cost: f64,
    pub fidelity: f64,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationTrace {
    pub rows: Vec<TraceRow>,
    pub parameters: Vec<f64>,
    pub restart: usize,
    /// Cost on the optimizer grid.
    pub cost: f64,
    /// Cost on the verification grid.
    pub verified_cost: f64,
    pub converged: bool,
}

/// Initial guess: `a_0` matched to the target area, the rest drawn
/// uniformly from `[−0.3, 0.3]·a_0` and `[−π, π]`.
pub fn initial_guess(problem: &OptimizationProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a0 = PI * problem.target_angle().max(0.1) / (2.0 * problem.duration);
    let mut p = Vec::with_capacity(problem.dimension());
    for q in 0..problem.quadratures() {
        let base = if q == 0 { a0 } else { rng.random_range(-0.3..0.3) * a0 };
        p.push(base);
        for _ in 0..problem.order {
            p.push(rng.random_range(-0.3..0.3) * a0);
        }
        for _ in 0..problem.order {
            p.push(rng.random_range(-PI..PI));
        }
    }
    p
}

/// Damped Gauss–Newton descent from `start` on a grid of `steps`.
fn descend(
    problem: &OptimizationProblem,
    start: Vec<f64>,
    steps: usize,
    restart: usize,
    iterations: usize,
    stop_below: f64,
) -> (Vec<f64>, Evaluation, Vec<TraceRow>) {
    let mut params = start;
    let mut current = evaluate(problem, &params, steps);
    let mut rows = vec![TraceRow {
        restart,
        iteration: 0,
        cost: current.cost,
        fidelity: current.fidelity,
        distances: current.distances.clone(),
    }];
    let mut mu = 1e-3;
    for it in 1..=iterations {
        if current.cost < stop_below || mu > 1e12 {
            break;
        }
        let jac = jacobian(problem, &params, steps, FD_STEP);
        let res = DVector::from_vec(current.residual.clone());
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * res;
        let mut accepted = false;
        for _ in 0..30 {
            let mut lhs = jtj.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += mu * (jtj[(i, i)] + 1e-9);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-&grad))) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let eval = evaluate(problem, &trial, steps);
            if eval.cost.is_finite() && eval.cost < current.cost {
                params = trial;
                current = eval;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
        rows.push(TraceRow {
            restart,
            iteration: it,
            cost: current.cost,
            fidelity: current.fidelity,
            distances: current.distances.clone(),
        });
    }
    (params, current, rows)
}

/// Phases reduced to `[−π, π)`; the pulse is unchanged.
fn wrap_phases(problem: &OptimizationProblem, mut params: Vec<f64>) -> Vec<f64> {
    let n = 2 * problem.order + 1;
    for q in 0..problem.quadratures() {
        for p in &mut params[q * n + problem.order + 1..(q + 1) * n] {
            *p = (*p + PI).rem_euclid(2.0 * PI) - PI;
        }
    }
    params
}

/// Result of one restart before merging.
#[derive(Debug, Clone)]
pub struct RestartResult {
    pub restart: usize,
    pub parameters: Vec<f64>,
    pub cost: f64,
    pub verified_cost: f64,
    pub rows: Vec<TraceRow>,
}

fn run_restart(problem: &OptimizationProblem, restart: usize) -> RestartResult {
    let mut rng = stream_rng(problem.seed, StreamKind::Design, restart as u64);
    let start = initial_guess(problem, &mut rng);
    let stop = problem.tolerance * 0.01;
    let (params, _, mut rows) = descend(problem, start, problem.steps, restart, problem.max_iterations, stop);
    // refine on the verification grid so the result is not tuned to the
    // coarse discretization
    let (params, verified, polish) = descend(problem, params, problem.verify_steps, restart, 20, stop);
    let params = wrap_phases(problem, params);
    let offset = rows.last().map_or(0, |r| r.iteration);
    rows.extend(polish.into_iter().skip(1).map(|mut r| {
        r.iteration += offset;
        r
    }));
    RestartResult {
        restart,
        cost: evaluate(problem, &params, problem.steps).cost,
        verified_cost: verified.cost,
        parameters: params,
        rows,
    }
}

/// All restarts, in restart order.
pub fn optimize_all(problem: &OptimizationProblem) -> Result<Vec<RestartResult>> {
    problem.validate()?;
    Ok((0..problem.restarts)
        .into_par_iter()
        .map(|r| run_restart(problem, r))
        .collect())
}

/// Best restart (lowest verified cost; earlier restart on ties).
pub fn optimize(problem: &OptimizationProblem) -> Result<(XYPulse, OptimizationTrace)> {
    let all = optimize_all(problem)?;
    let best = select_best(problem, all, |r| r.verified_cost);
    Ok(best)
}

/// Merge restarts by a caller-chosen score (lower is better).
pub fn select_best(
    problem: &OptimizationProblem,
    all: Vec<RestartResult>,
    score: impl Fn(&RestartResult) -> f64,
) -> (XYPulse, OptimizationTrace) {
    let mut rows = Vec::new();
    let mut best: Option<(f64, RestartResult)> = None;
    for r in all {
        rows.extend(r.rows.iter().cloned());
        let s = score(&r);
        if best.as_ref().is_none_or(|(b, _)| s < *b) {
            best = Some((s, r));
        }
    }
    let (_, b) = best.expect("at least one restart");
    let trace = OptimizationTrace {
        rows,
        parameters: b.parameters.clone(),
        restart: b.restart,
        cost: b.cost,
        verified_cost: b.verified_cost,
        converged: b.verified_cost < problem.tolerance,
    };
    (problem.pulse(&b.parameters), trace)
}

/// Robustness summary for one noise family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessEntry {
    pub label: String,
    pub distance: f64,
    pub arc_length: f64,
    pub closure_ratio: f64,
    pub slope: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-spaced points on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n.max(2) - 1) as f64))
        .collect()
}

/// Average-infidelity log-log slope of `pulse` under `family` values in
/// `[lo, hi]`.
pub fn infidelity_slope(pulse: &XYPulse, family: NoiseFamily, lo: f64, hi: f64, grid: &TimeGrid) -> f64 {
    let xs = log_space(lo, hi, 9);
    let ys: Vec<f64> = xs
        .iter()
        .map(|&e| 1.0 - avg_fidelity_from_distance(total_error_distance(pulse, &family.source(e), grid)))
        .collect();
    loglog_slope(&xs, &ys)
}

/// Noise family with the small-noise decade used for its slope fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessProbe {
    pub family: NoiseFamily,
    pub lo: f64,
    pub hi: f64,
}

impl RobustnessProbe {
    /// Frequency families over 2π·[0.1, 1] MHz, amplitude over [1e−3, 1e−2].
    pub fn standard(family: NoiseFamily) -> Self {
        if family.is_frequency() {
            Self {
                family,
                lo: std::f64::consts::TAU * 1e-4,
                hi: std::f64::consts::TAU * 1e-3,
            }
        } else {
            Self { family, lo: 1e-3, hi: 1e-2 }
        }
    }
}

pub fn verify_robustness(pulse: &XYPulse, probes: &[RobustnessProbe], grid: &TimeGrid) -> Result<Vec<RobustnessEntry>> {
    probes
        .iter()
        .map(|p| {
            let source = p.family.source(1.0);
            let curve: ErrorCurve = crate::geometry::error_curve(pulse, &source, grid)?;
            Ok(RobustnessEntry {
                label: curve.label.clone(),
                distance: curve.endpoint().norm(),
                arc_length: curve.arc_length(),
                closure_ratio: curve.closure_ratio(),
                slope: infidelity_slope(pulse, p.family, p.lo, p.hi, grid),
            })
        })
        .collect()
}

/// Parameters of a pulse in the optimizer layout, if it is of Fourier form.
pub fn parameters_of(pulse: &XYPulse) -> Option<Vec<f64>> {
    let flat = |e: &Envelope| match e {
        Envelope::Fourier(f) => Some(f.amplitudes.iter().chain(&f.phases).copied().collect::<Vec<_>>()),
        _ => None,
    };
    let mut p = flat(&pulse.x)?;
    if let Some(y) = &pulse.y {
        p.extend(flat(y)?);
    }
    Some(p)
}

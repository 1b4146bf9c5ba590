//! iSWAP robustness: the exchange-coupled qubit pair, the three-level
//! transmon pair, the second-order ZZ coefficient, and reduction of the
//! one-excitation block to an effective driven qubit.
//!
//! Basis order is `|q1 q2⟩` with qubit 1 as the most significant digit.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fidelity::subspace_gate_fidelity;
use crate::noise::{static_detuning, NoiseSource};
use crate::optimizer::{optimize_all, select_best, OptimizationProblem, OptimizationTrace};
use crate::pulse::{ReferencePulse, ReferenceShape, XYPulse};
use crate::quantum::{
    propagate_final, sigma_x, sigma_y, sigma_z, tensor, ComplexMatrix, FnHamiltonian, Hamiltonian, TimeGrid, C64,
};

/// Detunings of the two qubits (rad/ns) and the coupling waveform `g(t)`
/// (the x envelope of `coupling`, rad/ns).
#[derive(Debug, Clone, PartialEq)]
pub struct ISwapProblem {
    pub delta1: f64,
    pub delta2: f64,
    pub coupling: XYPulse,
}

impl ISwapProblem {
    pub fn new(delta1: f64, delta2: f64, coupling: XYPulse) -> Self {
        Self {
            delta1,
            delta2,
            coupling,
        }
    }

    /// Problem with only the antisymmetric detuning `Δ₋`.
    pub fn with_delta_minus(delta_minus: f64, coupling: XYPulse) -> Self {
        Self::new(delta_minus, -delta_minus, coupling)
    }

    /// `Δ₊ = (δ₁ + δ₂)/2`
    pub fn delta_plus(&self) -> f64 {
        0.5 * (self.delta1 + self.delta2)
    }

    /// `Δ₋ = (δ₁ − δ₂)/2`
    pub fn delta_minus(&self) -> f64 {
        0.5 * (self.delta1 - self.delta2)
    }

    pub fn g(&self, t: f64) -> f64 {
        self.coupling.x.value(t)
    }

    pub fn duration(&self) -> f64 {
        self.coupling.duration()
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `−½δ₁σz₁ − ½δ₂σz₂ + ½g(t)(σx₁σx₂ + σy₁σy₂)`
pub fn iswap_qubit_hamiltonian(p: &ISwapProblem, t: f64) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2, 2);
    let z1 = tensor(&sigma_z(), &id);
    let z2 = tensor(&id, &sigma_z());
    let exchange = tensor(&sigma_x(), &sigma_x()) + tensor(&sigma_y(), &sigma_y());
    z1 * real(-0.5 * p.delta1) + z2 * real(-0.5 * p.delta2) + exchange * real(0.5 * p.g(t))
}

/// Effective single-qubit problem on `{|01⟩, |10⟩}`.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// Drive `Ω(t) = 2 g(t)` on σx.
    pub drive: XYPulse,
    /// `(Δ/2)σz` with `Δ = −2Δ₋`.
    pub noise: NoiseSource,
    /// `Δ₊`, a single-qubit phase error outside the block.
    pub phase_error: f64,
}

/// The block is `g σx − Δ₋ σz`, i.e. a qubit driven with `Ω = 2g` under
/// detuning `−2Δ₋`.
pub fn subspace_reduction(p: &ISwapProblem) -> Result<ReducedProblem> {
    Ok(ReducedProblem {
        drive: scale_drive(&p.coupling, 2.0),
        noise: static_detuning(-2.0 * p.delta_minus()),
        phase_error: p.delta_plus(),
    })
}

fn scale_drive(p: &XYPulse, factor: f64) -> XYPulse {
    let mut q = p.clone();
    q.x = scale_envelope(&p.x, factor);
    q.y = p.y.as_ref().map(|y| scale_envelope(y, factor));
    q
}

fn scale_envelope(e: &crate::pulse::Envelope, factor: f64) -> crate::pulse::Envelope {
    use crate::pulse::{Envelope, FourierPulse, ReferencePulse, SampledEnvelope};
    match e {
        Envelope::Fourier(f) => Envelope::Fourier(FourierPulse {
            amplitudes: f.amplitudes.iter().map(|a| a * factor).collect(),
            ..f.clone()
        }),
        Envelope::Reference(r) => Envelope::Reference(ReferencePulse {
            peak: r.peak * factor,
            ..*r
        }),
        Envelope::Sampled(s) => Envelope::Sampled(SampledEnvelope {
            duration: s.duration,
            samples: s.samples.iter().map(|v| v * factor).collect(),
        }),
        Envelope::Constant { duration, value } => Envelope::Constant {
            duration: *duration,
            value: value * factor,
        },
        Envelope::Zero { duration } => Envelope::Zero { duration: *duration },
    }
}

/// Multiply the drive amplitude by `factor` without changing the duration.
pub fn scale_amplitude(p: &XYPulse, factor: f64) -> XYPulse {
    scale_drive(p, factor)
}

/// Coupling waveform `g = Ω/2` realizing a qubit drive `Ω` on the block.
pub fn coupling_from_drive(drive: &XYPulse) -> XYPulse {
    scale_drive(drive, 0.5)
}

/// Three-level transmon pair in the frame rotating at the common drive
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonPair {
    /// Qubit frequencies relative to the frame, rad/ns.
    pub omega1: f64,
    pub omega2: f64,
    /// Anharmonicities, rad/ns (negative).
    pub u1: f64,
    pub u2: f64,
}

impl TransmonPair {
    /// Resonant pair with anharmonicities `−2π·0.236` and `−2π·0.270` rad/ns.
    pub fn default_pair() -> Self {
        Self {
            omega1: 0.0,
            omega2: 0.0,
            u1: -std::f64::consts::TAU * 0.236,
            u2: -std::f64::consts::TAU * 0.270,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u1 < 0.0 && self.u2 < 0.0) {
            return Err(invalid("u", "transmon anharmonicities must be negative"));
        }
        Ok(())
    }

    /// `Δ = ω̃₁ − ω̃₂`
    pub fn detuning(&self) -> f64 {
        self.omega1 - self.omega2
    }
}

const LEVELS: usize = 3;

fn ladder() -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(LEVELS, LEVELS);
    for n in 1..LEVELS {
        a[(n - 1, n)] = real((n as f64).sqrt());
    }
    a
}

/// `Σ_j [ω̃_j n_j + (u_j/2) n_j(n_j − 1)] + g (a₁†a₂ + a₁a₂†)` on 3 ⊗ 3 levels.
pub fn transmon_pair_hamiltonian(pair: &TransmonPair, g: f64) -> ComplexMatrix {
    let id = ComplexMatrix::identity(LEVELS, LEVELS);
    let a = ladder();
    let ad = a.adjoint();
    let n = &ad * &a;
    let local = |w: f64, u: f64| {
        let nn = &n * (&n - &id);
        &n * real(w) + nn * real(u / 2.0)
    };
    let a1 = tensor(&a, &id);
    let a2 = tensor(&id, &a);
    let hop = a1.adjoint() * &a2 + &a1 * a2.adjoint();
    tensor(&local(pair.omega1, pair.u1), &id) + tensor(&id, &local(pair.omega2, pair.u2)) + hop * real(g)
}

/// Indices of `|00⟩, |01⟩, |10⟩, |11⟩` in the 9-level basis.
pub const COMPUTATIONAL: [usize; 4] = [0, 1, LEVELS, LEVELS + 1];

/// Second-order ZZ coefficient `ξ = −g²(u₁+u₂)/((Δ+u₁)(u₂−Δ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveZz {
    pub xi: f64,
    /// Set when `g` is not small against `|Δ+u₁|` or `|u₂−Δ|`.
    pub near_pole: bool,
}

pub fn effective_zz(g: f64, delta: f64, u1: f64, u2: f64) -> EffectiveZz {
    let d1 = delta + u1;
    let d2 = u2 - delta;
    let xi = -g * g * (u1 + u2) / (d1 * d2);
    let near_pole = d1.abs() < 5.0 * g.abs() || d2.abs() < 5.0 * g.abs();
    EffectiveZz { xi, near_pole }
}

/// `E₁₁ − E₀₁ − E₁₀ + E₀₀` of the static pair, by exact diagonalization of
/// each excitation-number sector. Equals `2ξ` to leading order.
pub fn exact_zz_combination(pair: &TransmonPair, g: f64) -> f64 {
    let h = transmon_pair_hamiltonian(pair, g);
    let sector = |states: &[usize]| {
        let m = states.len();
        let block = ComplexMatrix::from_fn(m, m, |i, j| h[(states[i], states[j])]);
        nalgebra::SymmetricEigen::new(block)
    };
    let e00 = h[(0, 0)].re;
    let one = sector(&[1, LEVELS]);
    let e_one: f64 = one.eigenvalues.iter().sum();
    // two-excitation sector: |02⟩, |11⟩, |20⟩; pick the level most like |11⟩
    let two_states = [2, LEVELS + 1, 2 * LEVELS];
    let two = sector(&two_states);
    let k = (0..3)
        .max_by(|&a, &b| {
            two.eigenvectors[(1, a)]
                .norm_sqr()
                .total_cmp(&two.eigenvectors[(1, b)].norm_sqr())
        })
        .expect("three eigenvalues");
    two.eigenvalues[k] - e_one + e00
}

/// Ideal iSWAP: `|01⟩ → i|10⟩`, `|10⟩ → i|01⟩`.
pub fn iswap_target() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = real(1.0);
    m[(3, 3)] = real(1.0);
    m[(1, 2)] = C64::new(0.0, 1.0);
    m[(2, 1)] = C64::new(0.0, 1.0);
    m
}

/// Overlap `|tr(V† D M)|` maximized over local z rotations
/// `D = Rz(α) ⊗ Rz(β)` applied after the gate, together with the optimal
/// diagonal `D`.
pub fn virtual_z_overlap(m: &ComplexMatrix, target: &ComplexMatrix) -> (f64, [C64; 4]) {
    let prod = target.adjoint();
    // w_i = Σ_j conj(V_ij) M_ij so that tr(V† D M) = Σ_i D_i w_i
    let w: Vec<C64> = (0..4)
        .map(|i| (0..4).map(|j| prod[(j, i)] * m[(i, j)]).sum())
        .collect();
    // D = diag(e^{−is}, e^{−id}, e^{id}, e^{is})
    let value = |s: f64, d: f64| {
        (C64::from_polar(1.0, -s) * w[0]
            + C64::from_polar(1.0, s) * w[3]
            + C64::from_polar(1.0, -d) * w[1]
            + C64::from_polar(1.0, d) * w[2])
            .norm()
    };
    // align each sector, then choose the relative sign
    let s0 = 0.5 * (w[0].arg() - w[3].arg());
    let d0 = 0.5 * (w[1].arg() - w[2].arg());
    let mut best = (value(s0, d0), s0, d0);
    for (s, d) in [(s0 + std::f64::consts::PI, d0), (s0, d0 + std::f64::consts::PI)] {
        let v = value(s, d);
        if v > best.0 {
            best = (v, s, d);
        }
    }
    // polish with alternating golden-section searches
    let (_, mut s, mut d) = best;
    for _ in 0..4 {
        s = golden_max(|x| value(x, d), s - 0.3, s + 0.3);
        d = golden_max(|x| value(s, x), d - 0.3, d + 0.3);
    }
    let v = value(s, d).max(best.0);
    let (s, d) = if v > best.0 { (s, d) } else { (best.1, best.2) };
    (
        v,
        [
            C64::from_polar(1.0, -s),
            C64::from_polar(1.0, -d),
            C64::from_polar(1.0, d),
            C64::from_polar(1.0, s),
        ],
    )
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Average fidelity of a (sub)block to the iSWAP after virtual-z correction.
pub fn compensated_fidelity(m: &ComplexMatrix) -> f64 {
    let target = iswap_target();
    let (_, d) = virtual_z_overlap(m, &target);
    let dm = ComplexMatrix::from_fn(4, 4, |i, j| d[i] * m[(i, j)]);
    subspace_gate_fidelity(&dm, &target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairModel {
    Qubit4,
    Transmon9,
}

impl std::str::FromStr for PairModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubit4" => Ok(Self::Qubit4),
            "transmon9" => Ok(Self::Transmon9),
            other => Err(Error::Unknown {
                what: "two-qubit model",
                value: other.to_string(),
            }),
        }
    }
}

impl PairModel {
    pub fn label(self) -> &'static str {
        match self {
            Self::Qubit4 => "qubit4",
            Self::Transmon9 => "transmon9",
        }
    }
}

/// Steps per ns for two-qubit propagation.
pub const STEPS_PER_NS: f64 = 40.0;

fn grid_for(duration: f64) -> Result<TimeGrid> {
    TimeGrid::new(duration, ((duration * STEPS_PER_NS).ceil() as usize).max(200))
}

/// Final 4×4 propagator of the qubit model.
pub fn qubit_model_unitary(p: &ISwapProblem) -> Result<ComplexMatrix> {
    let h = FnHamiltonian::new(4, |t| iswap_qubit_hamiltonian(p, t));
    propagate_final(&h, &grid_for(p.duration())?)
}

/// Computational block of the transmon-pair propagator with the ZZ phase
/// `exp(−i Φ/2 σz⊗σz)`, `Φ = ∫ξ dt`, undone.
pub fn transmon_model_block(p: &ISwapProblem, pair: &TransmonPair) -> Result<ComplexMatrix> {
    pair.validate()?;
    let shifted = TransmonPair {
        omega1: pair.omega1 + p.delta1,
        omega2: pair.omega2 + p.delta2,
        ..*pair
    };
    let h = FnHamiltonian::new(9, |t| transmon_pair_hamiltonian(&shifted, p.g(t)));
    let grid = grid_for(p.duration())?;
    let u = propagate_final(&h, &grid)?;
    let block = ComplexMatrix::from_fn(4, 4, |i, j| u[(COMPUTATIONAL[i], COMPUTATIONAL[j])]);
    let delta = shifted.detuning();
    let phi: f64 = (0..grid.steps)
        .map(|k| effective_zz(p.g(grid.midpoint(k)), delta, pair.u1, pair.u2).xi * grid.dt())
        .sum();
    // undo exp(−i (Φ/2) σz⊗σz)
    let zz = [1.0, -1.0, -1.0, 1.0];
    Ok(ComplexMatrix::from_fn(4, 4, |i, j| C64::from_polar(1.0, 0.5 * phi * zz[i]) * block[(i, j)]))
}

/// Virtual-z compensated iSWAP fidelity of `p` under `model`.
pub fn iswap_fidelity(model: PairModel, p: &ISwapProblem, pair: &TransmonPair) -> Result<f64> {
    let m = match model {
        PairModel::Qubit4 => qubit_model_unitary(p)?,
        PairModel::Transmon9 => transmon_model_block(p, pair)?,
    };
    Ok(compensated_fidelity(&m))
}

/// One row of an iSWAP sweep, `Δ₋` in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ISwapRow {
    pub delta_minus: f64,
    pub fidelity_rcp: f64,
    pub fidelity_cosine: f64,
}

/// Fidelity of two coupling waveforms over a grid of `Δ₋` values.
pub fn iswap_fidelity_sweep(
    model: PairModel,
    rcp: &XYPulse,
    cosine: &XYPulse,
    delta_minus: &[f64],
    pair: &TransmonPair,
) -> Result<Vec<ISwapRow>> {
    use rayon::prelude::*;
    delta_minus
        .par_iter()
        .map(|&d| {
            Ok(ISwapRow {
                delta_minus: d,
                fidelity_rcp: iswap_fidelity(model, &ISwapProblem::with_delta_minus(d, rcp.clone()), pair)?,
                fidelity_cosine: iswap_fidelity(model, &ISwapProblem::with_delta_minus(d, cosine.clone()), pair)?,
            })
        })
        .collect()
}

/// Width of the contiguous `Δ₋` interval around 0 on which `f(Δ₋) ≥ threshold`,
/// found by stepping outwards in `step` and bisecting each edge.
pub fn plateau_width(f: impl Fn(f64) -> f64, threshold: f64, step: f64, limit: f64) -> f64 {
    let mut width = 0.0;
    for sign in [1.0, -1.0] {
        let mut lo = 0.0;
        let mut hi = None;
        let mut x = step;
        while x <= limit {
            if f(sign * x) >= threshold {
                lo = x;
                x += step;
            } else {
                hi = Some(x);
                break;
            }
        }
        if let Some(mut hi) = hi {
            for _ in 0..20 {
                let mid = 0.5 * (lo + hi);
                if f(sign * mid) >= threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        width += lo;
    }
    width
}

/// Plateau search step and range for `Δ₋` (rad/ns).
pub const PLATEAU_STEP: f64 = std::f64::consts::TAU * 0.05e-3;
pub const PLATEAU_LIMIT: f64 = std::f64::consts::TAU * 20e-3;

/// `Δ₋` plateau width of a coupling waveform under `model`. For the qubit
/// model the threshold is absolute; for the transmon model it is taken
/// relative to the zero-detuning fidelity, since the residual leakage
/// offsets the whole curve.
pub fn iswap_plateau(model: PairModel, coupling: &XYPulse, pair: &TransmonPair, threshold: f64) -> Result<f64> {
    let f = |d: f64| iswap_fidelity(model, &ISwapProblem::with_delta_minus(d, coupling.clone()), pair);
    let f0 = f(0.0)?;
    let level = match model {
        PairModel::Qubit4 => threshold,
        PairModel::Transmon9 => f0 - (1.0 - threshold),
    };
    Ok(plateau_width(|d| f(d).unwrap_or(0.0), level, PLATEAU_STEP, PLATEAU_LIMIT))
}

/// Drive pulse rescaled to peak `omega_max` and halved into a coupling,
/// so that `g` peaks at `omega_max / 2`.
pub fn amplitude_matched_coupling(drive: &XYPulse, omega_max: f64) -> Result<XYPulse> {
    let peak = drive.peak_amplitude();
    if !(peak > 0.0) {
        return Err(invalid("drive", "zero pulse cannot be amplitude matched"));
    }
    Ok(coupling_from_drive(&drive.rescale(peak / omega_max)?))
}

/// Cosine iSWAP coupling with the same peak as the matched robust coupling.
pub fn cosine_coupling(omega_max: f64) -> Result<XYPulse> {
    let drive = ReferencePulse::amplitude_matched(ReferenceShape::Cosine, std::f64::consts::PI, omega_max)?;
    Ok(coupling_from_drive(&XYPulse::x_only(drive)))
}

/// Robust iSWAP coupling: the reduced problem is an X^π drive that must
/// cancel static detuning, so `problem` should target that. Among the
/// converged restarts the one with the widest qubit-model plateau at
/// `threshold` is kept; if none converged the lowest verified cost wins.
pub fn design_iswap_coupling(
    problem: &OptimizationProblem,
    omega_max: f64,
    threshold: f64,
) -> Result<(XYPulse, OptimizationTrace, f64)> {
    use rayon::prelude::*;
    let all = optimize_all(problem)?;
    let pair = TransmonPair::default_pair();
    let widths: Vec<f64> = all
        .par_iter()
        .map(|r| {
            if r.verified_cost >= problem.tolerance {
                return Ok(f64::NAN);
            }
            let g = amplitude_matched_coupling(&problem.pulse(&r.parameters), omega_max)?;
            iswap_plateau(PairModel::Qubit4, &g, &pair, threshold)
        })
        .collect::<Result<_>>()?;
    let any_converged = widths.iter().any(|w| !w.is_nan());
    let (drive, trace) = select_best(problem, all, |r| {
        if any_converged {
            let w = widths[r.restart];
            if w.is_nan() { f64::INFINITY } else { -w }
        } else {
            r.verified_cost
        }
    });
    let coupling = amplitude_matched_coupling(&drive, omega_max)?;
    let width = iswap_plateau(PairModel::Qubit4, &coupling, &pair, threshold)?;
    Ok((coupling, trace, width))
}

/// Generic 4-level Hamiltonian wrapper used by tests and sweeps.
pub fn qubit_model(p: &ISwapProblem) -> impl Hamiltonian + '_ {
    FnHamiltonian::new(4, move |t| iswap_qubit_hamiltonian(p, t))
}

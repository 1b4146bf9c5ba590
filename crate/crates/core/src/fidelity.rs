//! Gate-quality measures: unitary and channel average fidelity, the
//! error-distance closed forms, diamond-distance bounds, worst-case
//! estimates and noise margins.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channel::Superop;
use crate::error::{invalid, Result};
use crate::geometry::total_error_distance;
use crate::noise::NoiseFamily;
use crate::pulse::XYPulse;
use crate::quantum::{sigma_x, sigma_y, sigma_z, tensor, ComplexMatrix, TimeGrid, C64};

/// `(|tr(V†U)|² + d) / (d(d+1))`
pub fn unitary_gate_fidelity(u: &ComplexMatrix, target: &ComplexMatrix) -> f64 {
    let d = u.nrows() as f64;
    let ov = (target.adjoint() * u).trace().norm_sqr();
    (ov + d) / (d * (d + 1.0))
}

/// Average fidelity of a possibly non-unitary block `M` (e.g. a
/// computational subspace of a larger propagator) against `V`:
/// `(tr(MM†) + |tr(V†M)|²) / (d(d+1))`.
pub fn subspace_gate_fidelity(m: &ComplexMatrix, target: &ComplexMatrix) -> f64 {
    let d = m.nrows() as f64;
    let w = target.adjoint() * m;
    let tr_mm = (&w * w.adjoint()).trace().re;
    (tr_mm + w.trace().norm_sqr()) / (d * (d + 1.0))
}

/// Average fidelity of a channel to a unitary target:
/// `(tr S + tr E(I)) / (d(d+1))` with `S` the superoperator of `V†∘E`.
pub fn channel_gate_fidelity(channel: &Superop, target: &ComplexMatrix) -> f64 {
    let s = channel.then(&Superop::unitary(&target.adjoint()));
    let d = channel.dim as f64;
    (s.matrix.trace().re + channel.trace_of_identity_image()) / (d * (d + 1.0))
}

/// Normalized Pauli basis `{I, σx, σy, σz}/√2` on each of `n` qubits,
/// I-first lexicographic order.
pub fn pauli_basis(qubits: usize) -> Vec<ComplexMatrix> {
    let single = [ComplexMatrix::identity(2, 2), sigma_x(), sigma_y(), sigma_z()];
    let mut basis = vec![ComplexMatrix::identity(1, 1)];
    for _ in 0..qubits {
        basis = basis
            .iter()
            .flat_map(|b| single.iter().map(move |p| tensor(b, p)))
            .collect();
    }
    let norm = C64::new((2f64.powi(qubits as i32)).sqrt().recip(), 0.0);
    basis.into_iter().map(|b| b * norm).collect()
}

/// Real Liouville (Pauli transfer) matrix `L_ij = tr(P_i E(P_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelLiouville {
    pub dim: usize,
    pub matrix: DMatrix<f64>,
    /// `tr E(I)`
    pub identity_trace: f64,
}

impl ChannelLiouville {
    pub fn from_superop(s: &Superop) -> Result<Self> {
        let qubits = s.dim.trailing_zeros() as usize;
        if 1usize << qubits != s.dim {
            return Err(invalid("dim", format!("{} is not a power of two", s.dim)));
        }
        let basis = pauli_basis(qubits);
        let n = basis.len();
        let images: Vec<_> = basis.iter().map(|p| s.apply(p)).collect();
        let matrix = DMatrix::from_fn(n, n, |i, j| (basis[i].adjoint() * &images[j]).trace().re);
        Ok(Self {
            dim: s.dim,
            matrix,
            identity_trace: s.trace_of_identity_image(),
        })
    }

    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::from_superop(&Superop::unitary(u))
    }
}

/// `(tr L + tr E(I)) / (d(d+1))`
pub fn avg_fidelity_liouville(c: &ChannelLiouville) -> f64 {
    let d = c.dim as f64;
    (c.matrix.trace() + c.identity_trace) / (d * (d + 1.0))
}

/// `1 − (2/3) sin² R`
pub fn avg_fidelity_from_distance(r: f64) -> f64 {
    1.0 - (2.0 / 3.0) * r.sin().powi(2)
}

/// Diamond-distance bounds `(√((d+1)/d)·√r, √((d+1)d)·√r)` from the
/// average error rate `r`.
pub fn worst_case_bounds(r: f64, d: usize) -> (f64, f64) {
    let d = d as f64;
    let s = r.max(0.0).sqrt();
    (((d + 1.0) / d).sqrt() * s, ((d + 1.0) * d).sqrt() * s)
}

/// `1 − |sin R|`
pub fn worst_case_estimate(r: f64) -> f64 {
    1.0 - r.sin().abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityReport {
    pub f_avg: f64,
    pub f_worst: f64,
    pub d_lower: f64,
    pub d_upper: f64,
    pub r: f64,
}

impl FidelityReport {
    /// Report for a qubit unitary error with total error distance `r`.
    pub fn from_distance(r: f64) -> Self {
        let f_avg = avg_fidelity_from_distance(r);
        let (d_lower, d_upper) = worst_case_bounds(1.0 - f_avg, 2);
        Self {
            f_avg,
            f_worst: worst_case_estimate(r),
            d_lower,
            d_upper,
            r,
        }
    }

    pub fn of_pulse(pulse: &XYPulse, family: NoiseFamily, value: f64, grid: &TimeGrid) -> Self {
        Self::from_distance(total_error_distance(pulse, &family.source(value), grid))
    }
}

/// Search resolution of [`noise_margin`]: 2π · 0.01 MHz in rad/ns.
pub const MARGIN_RESOLUTION: f64 = std::f64::consts::TAU * 1e-5;

/// Largest `ε_m` such that the worst-case estimate stays at or above `f`
/// on `[0, ε_m]`. The search walks upward in coarse steps to the first
/// failure, then bisects down to `resolution`. `upper` caps the search.
pub fn noise_margin(
    pulse: &XYPulse,
    family: NoiseFamily,
    f: f64,
    grid: &TimeGrid,
    resolution: f64,
    upper: f64,
) -> Result<f64> {
    if !(resolution > 0.0 && upper > 0.0) {
        return Err(invalid("resolution", "resolution and upper bound must be positive"));
    }
    let ok = |e: f64| worst_case_estimate(total_error_distance(pulse, &family.source(e), grid)) >= f;
    let coarse = 5.0 * resolution;
    let mut lo = 0.0;
    let mut hi = None;
    let mut e = coarse;
    while e <= upper {
        if ok(e) {
            lo = e;
            e += coarse;
        } else {
            hi = Some(e);
            break;
        }
    }
    let Some(mut hi) = hi else { return Ok(lo) };
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

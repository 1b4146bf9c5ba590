//! Simulated single-qubit process tomography by linear inversion.
//!
//! The channel is probed with four fixed input states. Each output is
//! reconstructed from ideal z expectation values taken after the rotations
//! `I`, `X^{π/2}` and `Y^{π/2}`, and the χ matrix in the basis
//! `{I, X, Y, Z}` is solved from `ρ_out = Σ χ_mn E_m ρ_in E_n†`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::channel::Superop;
use crate::error::{Error, Result};
use crate::library::{x_gate, y_gate};
use crate::quantum::{sigma_x, sigma_y, sigma_z, ComplexMatrix, C64};

/// χ matrix of a single-qubit process in the Pauli basis, together with
/// the condition number of the inversion that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    pub dim: usize,
    pub chi: ComplexMatrix,
    pub condition: f64,
}

impl ProcessMatrix {
    /// `χ_mn = c_m c_n*` with `U = Σ c_m E_m`.
    pub fn from_unitary(u: &ComplexMatrix) -> Self {
        let basis = operator_basis();
        let c: Vec<C64> = basis.iter().map(|e| (e * u).trace() / 2.0).collect();
        let chi = ComplexMatrix::from_fn(4, 4, |m, n| c[m] * c[n].conj());
        Self {
            dim: 2,
            chi,
            condition: 1.0,
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let basis = operator_basis();
        let mut out = ComplexMatrix::zeros(2, 2);
        for (m, em) in basis.iter().enumerate() {
            for (n, en) in basis.iter().enumerate() {
                out += (em * rho * en.adjoint()) * self.chi[(m, n)];
            }
        }
        out
    }

    /// Largest entry of `χ − χ†`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.chi - self.chi.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `Σ χ_mn E_n†E_m − I`.
    pub fn trace_preservation_error(&self) -> f64 {
        let basis = operator_basis();
        let mut s = -ComplexMatrix::identity(2, 2);
        for (m, em) in basis.iter().enumerate() {
            for (n, en) in basis.iter().enumerate() {
                s += (en.adjoint() * em) * self.chi[(m, n)];
            }
        }
        s.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Unnormalized `{I, X, Y, Z}`.
pub fn operator_basis() -> [ComplexMatrix; 4] {
    [ComplexMatrix::identity(2, 2), sigma_x(), sigma_y(), sigma_z()]
}

/// `|0⟩, (|0⟩ − i|1⟩)/√2, (|0⟩ + |1⟩)/√2, |1⟩` as density matrices.
pub fn input_states() -> [ComplexMatrix; 4] {
    let pure = |a: C64, b: C64| {
        let v = ComplexMatrix::from_column_slice(2, 1, &[a, b]);
        &v * v.adjoint()
    };
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    [
        pure(C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        pure(s, C64::new(0.0, -FRAC_1_SQRT_2)),
        pure(s, s),
        pure(C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
    ]
}

/// Pre-measurement rotations `I`, `X^{π/2}`, `Y^{π/2}`.
pub fn measurement_rotations() -> [ComplexMatrix; 3] {
    [ComplexMatrix::identity(2, 2), x_gate(PI / 2.0), y_gate(PI / 2.0)]
}

/// Bloch-vector reconstruction from `⟨σz⟩` after each measurement rotation.
fn reconstruct_state(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let paulis = [sigma_x(), sigma_y(), sigma_z()];
    let z = sigma_z();
    let rots = measurement_rotations();
    let mut m = Matrix3::zeros();
    let mut e = Vector3::zeros();
    for (k, r) in rots.iter().enumerate() {
        let observable = r.adjoint() * &z * r;
        e[k] = (&observable * rho).trace().re;
        for (j, p) in paulis.iter().enumerate() {
            m[(k, j)] = (&observable * p).trace().re / 2.0;
        }
    }
    let b = m.lu().solve(&e).ok_or(Error::Singular("measurement settings"))?;
    let mut out = ComplexMatrix::identity(2, 2);
    for (j, p) in paulis.iter().enumerate() {
        out += p * C64::new(b[j], 0.0);
    }
    Ok(out / C64::new(2.0, 0.0))
}

fn inversion_matrix() -> DMatrix<C64> {
    let basis = operator_basis();
    let inputs = input_states();
    let mut a = DMatrix::zeros(16, 16);
    for (i, rho) in inputs.iter().enumerate() {
        for m in 0..4 {
            for n in 0..4 {
                let term = &basis[m] * rho * basis[n].adjoint();
                for r in 0..2 {
                    for c in 0..2 {
                        a[(4 * i + 2 * r + c, 4 * m + n)] = term[(r, c)];
                    }
                }
            }
        }
    }
    a
}

/// Tomography of an arbitrary linear map on 2×2 density matrices.
pub fn qpt(channel: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<ProcessMatrix> {
    let a = inversion_matrix();
    let sv = a.clone().singular_values();
    let condition = sv.max() / sv.min();
    let mut rhs = DVector::zeros(16);
    for (i, rho) in input_states().iter().enumerate() {
        let out = reconstruct_state(&channel(rho))?;
        for r in 0..2 {
            for c in 0..2 {
                rhs[4 * i + 2 * r + c] = out[(r, c)];
            }
        }
    }
    let x = a.lu().solve(&rhs).ok_or(Error::Singular("tomography inversion"))?;
    Ok(ProcessMatrix {
        dim: 2,
        chi: ComplexMatrix::from_fn(4, 4, |m, n| x[4 * m + n]),
        condition,
    })
}

pub fn qpt_superop(s: &Superop) -> Result<ProcessMatrix> {
    qpt(|rho| s.apply(rho))
}

/// `|Tr(χ_e χ_t†)| / √(Tr(χ_e χ_e†) Tr(χ_t χ_t†))`.
pub fn qpt_fidelity(exp: &ProcessMatrix, th: &ProcessMatrix) -> f64 {
    let ip = |a: &ComplexMatrix, b: &ComplexMatrix| (a * b.adjoint()).trace();
    ip(&exp.chi, &th.chi).norm() / (ip(&exp.chi, &exp.chi).re * ip(&th.chi, &th.chi).re).sqrt()
}

//! Linear maps on density matrices in the column-stacked superoperator
//! form `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`, plus the per-gate T1/T2 decoherence
//! model.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::{tensor, ComplexMatrix, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Superop {
    pub dim: usize,
    pub matrix: ComplexMatrix,
}

impl Superop {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::identity(dim * dim, dim * dim),
        }
    }

    pub fn unitary(u: &ComplexMatrix) -> Self {
        Self {
            dim: u.nrows(),
            matrix: tensor(&u.map(|z| z.conj()), u),
        }
    }

    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let dim = kraus.first().ok_or_else(|| invalid("kraus", "empty operator list"))?.nrows();
        let mut m = ComplexMatrix::zeros(dim * dim, dim * dim);
        for k in kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.nrows(),
                });
            }
            m += tensor(&k.map(|z| z.conj()), k);
        }
        Ok(Self { dim, matrix: m })
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Superop) -> Superop {
        Superop {
            dim: self.dim,
            matrix: &next.matrix * &self.matrix,
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim;
        let v = ComplexMatrix::from_column_slice(d * d, 1, rho.as_slice());
        let out = &self.matrix * v;
        ComplexMatrix::from_column_slice(d, d, out.as_slice())
    }

    /// `tr E(I)`; equals `d` for trace-preserving maps.
    pub fn trace_of_identity_image(&self) -> f64 {
        self.apply(&ComplexMatrix::identity(self.dim, self.dim)).trace().re
    }
}

/// Which dephasing rate accompanies amplitude damping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingModel {
    /// Coherences decay with the pure-dephasing rate `1/T2 − 1/(2 T1)`, so
    /// the combined channel has coherence time exactly T2.
    PureDephasing,
    /// An amplitude-damping matrix for T1 followed by a phase-damping matrix
    /// with coherence factor `exp(−τ/T2)`.
    #[default]
    T2Process,
}

impl FromStr for DephasingModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure_dephasing" => Ok(Self::PureDephasing),
            "t2_process" => Ok(Self::T2Process),
            other => Err(Error::Unknown {
                what: "dephasing model",
                value: other.into(),
            }),
        }
    }
}

/// Relaxation and coherence times in µs. Infinite values switch the
/// corresponding process off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceSetting {
    pub t1_us: f64,
    pub t2_us: f64,
    #[serde(default)]
    pub model: DephasingModel,
}

impl DecoherenceSetting {
    pub fn new(t1_us: f64, t2_us: f64, model: DephasingModel) -> Result<Self> {
        let s = Self { t1_us, t2_us, model };
        s.validate()?;
        Ok(s)
    }

    pub fn none() -> Self {
        Self {
            t1_us: f64::INFINITY,
            t2_us: f64::INFINITY,
            model: DephasingModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_us > 0.0 && self.t2_us > 0.0) {
            return Err(invalid("T1/T2", "coherence times must be positive"));
        }
        if self.t2_us > 2.0 * self.t1_us {
            return Err(Error::NonPhysicalDecoherence {
                t1_us: self.t1_us,
                t2_us: self.t2_us,
            });
        }
        Ok(())
    }

    pub fn is_none(&self) -> bool {
        self.t1_us.is_infinite() && self.t2_us.is_infinite()
    }

    /// `(γ, λ)`: excited-state decay probability and the extra coherence
    /// factor of the dephasing step for a gate of `tau_ns`.
    pub fn factors(&self, tau_ns: f64) -> (f64, f64) {
        let tau_us = tau_ns * 1e-3;
        let gamma = 1.0 - (-tau_us / self.t1_us).exp();
        let rate = match self.model {
            DephasingModel::PureDephasing => (1.0 / self.t2_us - 0.5 / self.t1_us).max(0.0),
            DephasingModel::T2Process => 1.0 / self.t2_us,
        };
        (gamma, (-tau_us * rate).exp())
    }
}

fn m2(a: [f64; 4]) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &a.map(|x| C64::new(x, 0.0)))
}

/// Amplitude damping followed by phase damping for a gate of `tau_ns`.
pub fn decoherence_channel(s: &DecoherenceSetting, tau_ns: f64) -> Result<Superop> {
    s.validate()?;
    if tau_ns < 0.0 {
        return Err(invalid("tau", format!("{tau_ns} ns must be non-negative")));
    }
    let (gamma, lambda) = s.factors(tau_ns);
    let damping = Superop::from_kraus(&[
        m2([1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]),
        m2([0.0, gamma.sqrt(), 0.0, 0.0]),
    ])?;
    let dephasing = Superop::from_kraus(&[
        m2([1.0, 0.0, 0.0, 1.0]) * C64::new(((1.0 + lambda) / 2.0).sqrt(), 0.0),
        m2([1.0, 0.0, 0.0, -1.0]) * C64::new(((1.0 - lambda) / 2.0).sqrt(), 0.0),
    ])?;
    Ok(damping.then(&dephasing))
}

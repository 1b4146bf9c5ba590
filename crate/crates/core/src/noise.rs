//! Quasi-static noise sources `V(t) = Σ_j ε_j v_j(t) σ_j`.
//!
//! A [`NoiseSource`] is a list of independent [`NoiseDirection`]s, each with
//! its own amplitude. Error curves are computed per direction, per unit
//! amplitude.

use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::XYPulse;
use crate::quantum::{Axis, QubitHamiltonian};

/// How one noise direction couples to the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coupling", rename_all = "lowercase")]
pub enum Coupling {
    /// `weight · σ_axis`, constant profile.
    Pauli { axis: Axis, weight: f64 },
    /// `weight · (Ω_x(t) σx + Ω_y(t) σy)`, proportional to the drive.
    Drive { weight: f64 },
}

impl Coupling {
    /// Pauli coefficients of the coupling operator at time `t` for unit amplitude.
    pub fn coefficients(&self, pulse: &XYPulse, t: f64) -> Vector3<f64> {
        match *self {
            Coupling::Pauli { axis, weight } => axis.unit() * weight,
            Coupling::Drive { weight } => {
                let (x, y) = pulse.quadratures(t);
                Vector3::new(weight * x, weight * y, 0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDirection {
    pub label: String,
    pub epsilon: f64,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSource {
    pub label: String,
    pub directions: Vec<NoiseDirection>,
}

impl NoiseSource {
    pub fn none() -> Self {
        Self {
            label: "none".into(),
            directions: Vec::new(),
        }
    }

    fn single(label: &str, epsilon: f64, coupling: Coupling) -> Self {
        Self {
            label: label.into(),
            directions: vec![NoiseDirection {
                label: label.into(),
                epsilon,
                coupling,
            }],
        }
    }

    /// Split into one single-direction source per independent amplitude.
    pub fn decompose(&self) -> Vec<NoiseSource> {
        self.directions
            .iter()
            .map(|d| NoiseSource {
                label: d.label.clone(),
                directions: vec![d.clone()],
            })
            .collect()
    }

    /// The only direction, or an error if there are several.
    pub fn sole_direction(&self) -> Result<&NoiseDirection> {
        match self.directions.as_slice() {
            [d] => Ok(d),
            _ => Err(Error::MultiDirectionNoise(self.label.clone())),
        }
    }

    /// Same couplings with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        for d in &mut s.directions {
            d.epsilon *= factor;
        }
        s
    }

    /// Pauli coefficients of `V(t)` for the given drive.
    pub fn coefficients(&self, pulse: &XYPulse, t: f64) -> Vector3<f64> {
        self.directions
            .iter()
            .filter(|d| d.epsilon != 0.0)
            .map(|d| d.coupling.coefficients(pulse, t) * d.epsilon)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.directions.iter().all(|d| d.epsilon == 0.0)
    }
}

/// `(Δ/2) σz`
pub fn static_detuning(delta: f64) -> NoiseSource {
    NoiseSource::single(
        "detuning",
        delta / 2.0,
        Coupling::Pauli {
            axis: Axis::Z,
            weight: 1.0,
        },
    )
}

/// `(ε/2)(Ω_x σx + Ω_y σy)`: the same relative error on both quadratures.
pub fn amplitude_noise(epsilon: f64) -> NoiseSource {
    NoiseSource::single("amplitude", epsilon, Coupling::Drive { weight: 0.5 })
}

/// `Σ_k (δ_k/2) σ_k` with three independent amplitudes.
pub fn three_axis_static(delta: Vector3<f64>) -> NoiseSource {
    NoiseSource {
        label: "three_axis".into(),
        directions: Axis::ALL
            .iter()
            .map(|&axis| NoiseDirection {
                label: format!("delta_{}", axis.label()),
                epsilon: delta[axis.index()] / 2.0,
                coupling: Coupling::Pauli { axis, weight: 1.0 },
            })
            .collect(),
    }
}

/// `(δ/2) σ_axis` on a single axis.
pub fn axis_static(axis: Axis, delta: f64) -> NoiseSource {
    NoiseSource::single(
        &format!("delta_{}", axis.label()),
        delta / 2.0,
        Coupling::Pauli { axis, weight: 1.0 },
    )
}

/// State of the neighbouring qubit in the ZZ model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spectator {
    #[serde(rename = "0")]
    Ground,
    #[serde(rename = "1")]
    Excited,
}

impl Spectator {
    /// Eigenvalue of the spectator's σz.
    pub fn sign(self) -> f64 {
        match self {
            Spectator::Ground => 1.0,
            Spectator::Excited => -1.0,
        }
    }
}

impl FromStr for Spectator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim_matches(|c| c == '|' || c == '>' || c == '⟩') {
            "0" | "ground" => Ok(Spectator::Ground),
            "1" | "excited" => Ok(Spectator::Excited),
            _ => Err(Error::Unknown {
                what: "spectator state",
                value: s.to_string(),
            }),
        }
    }
}

/// Reduced single-qubit form of `(ξ/2) σz ⊗ σz`: the spectator's σz
/// eigenvalue turns it into `±(ξ/2) σz` on the target.
pub fn zz_noise(xi: f64, spectator: Spectator) -> NoiseSource {
    NoiseSource::single(
        "zz",
        spectator.sign() * xi / 2.0,
        Coupling::Pauli {
            axis: Axis::Z,
            weight: 1.0,
        },
    )
}

/// One-parameter noise family, used by sweeps and margin searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// Value is Δ in rad/ns.
    Detuning,
    /// Value is the dimensionless relative amplitude error.
    Amplitude,
    /// Value is δ in rad/ns on one axis.
    Axis(Axis),
    /// Value is ξ in rad/ns.
    Zz(Spectator),
}

impl NoiseFamily {
    pub fn source(self, value: f64) -> NoiseSource {
        match self {
            NoiseFamily::Detuning => static_detuning(value),
            NoiseFamily::Amplitude => amplitude_noise(value),
            NoiseFamily::Axis(axis) => axis_static(axis, value),
            NoiseFamily::Zz(s) => zz_noise(value, s),
        }
    }

    /// Whether the family value is a frequency (rad/ns) rather than a ratio.
    pub fn is_frequency(self) -> bool {
        !matches!(self, NoiseFamily::Amplitude)
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "detuning" | "z" => NoiseFamily::Detuning,
            "amplitude" => NoiseFamily::Amplitude,
            "x" | "axis_x" => NoiseFamily::Axis(Axis::X),
            "y" | "axis_y" => NoiseFamily::Axis(Axis::Y),
            "axis_z" => NoiseFamily::Axis(Axis::Z),
            "zz" | "zz0" => NoiseFamily::Zz(Spectator::Ground),
            "zz1" => NoiseFamily::Zz(Spectator::Excited),
            other => {
                return Err(Error::Unknown {
                    what: "noise family",
                    value: other.to_string(),
                })
            }
        })
    }
}

/// Drive plus noise as a two-level Hamiltonian.
pub struct NoisyQubit<'a> {
    pub pulse: &'a XYPulse,
    pub noise: &'a NoiseSource,
}

impl<'a> NoisyQubit<'a> {
    pub fn new(pulse: &'a XYPulse, noise: &'a NoiseSource) -> Self {
        Self { pulse, noise }
    }
}

impl QubitHamiltonian for NoisyQubit<'_> {
    fn coefficients(&self, t: f64) -> Vector3<f64> {
        let (x, y) = self.pulse.quadratures(t);
        Vector3::new(x / 2.0, y / 2.0, 0.0) + self.noise.coefficients(self.pulse, t)
    }
}

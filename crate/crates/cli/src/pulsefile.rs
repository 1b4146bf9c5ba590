//! Pulse files: one pulse per TOML document.
//!
//! ```toml
//! name = "x_r_pi"
//! kind = "fourier"                    # fourier | gaussian | cosine
//! T_ns = 50.0
//! a = [0.01034, -0.25855, -0.03278]   # rad/ns
//! phi = [-0.01523, -0.03790]          # rad
//! axis = "x"                          # target rotation axis
//! angle = 3.141592653589793           # target rotation angle (rad)
//! carrier_phase = 0.0
//! anharmonicity_MHz = -236.0          # enables DRAG
//! drag_coeff = 1.0                    # default when an anharmonicity is set
//! ```
//!
//! `a_y`/`phi_y` add a y quadrature to a Fourier pulse. Reference shapes are
//! calibrated to `angle` over `T_ns`.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rcp_core::library;
use rcp_core::pulse::{Envelope, FourierPulse, ReferencePulse, ReferenceShape, XYPulse};
use rcp_core::quantum::{Axis, ComplexMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Fourier,
    Gaussian,
    Cosine,
}

fn default_angle() -> f64 {
    PI
}

fn default_axis() -> Axis {
    Axis::X
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    pub name: String,
    pub kind: PulseKind,
    #[serde(rename = "T_ns")]
    pub t_ns: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_y: Option<Vec<f64>>,
    #[serde(default = "default_axis")]
    pub axis: Axis,
    #[serde(default = "default_angle")]
    pub angle: f64,
    #[serde(default)]
    pub carrier_phase: f64,
    /// Defaults to 1 when an anharmonicity is given, otherwise 0 (off).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drag_coeff: Option<f64>,
    #[serde(default, rename = "anharmonicity_MHz", skip_serializing_if = "is_zero")]
    pub anharmonicity_mhz: f64,
}

impl PulseFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading pulse file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in pulse file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)?;
        serde_path_to_error::deserialize(de).map_err(|e| anyhow::anyhow!("field `{}`: {}", e.path(), e.inner()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(format!(
            "# amplitudes in rad/ns, phases and angles in rad, anharmonicity as f = ω/2π in MHz\n{}",
            toml::to_string(self)?
        ))
    }

    /// Fourier pulse file of an x-only or x–y Fourier pulse.
    pub fn from_fourier(name: &str, pulse: &XYPulse, axis: Axis, angle: f64) -> Result<Self> {
        let Envelope::Fourier(x) = &pulse.x else {
            bail!("pulse `{name}` is not of Fourier form");
        };
        let (a_y, phi_y) = match &pulse.y {
            None => (None, None),
            Some(Envelope::Fourier(y)) => (Some(y.amplitudes.clone()), Some(y.phases.clone())),
            Some(_) => bail!("pulse `{name}` has a non-Fourier y quadrature"),
        };
        Ok(Self {
            name: name.to_string(),
            kind: PulseKind::Fourier,
            t_ns: x.duration,
            a: x.amplitudes.clone(),
            phi: x.phases.clone(),
            a_y,
            phi_y,
            axis,
            angle,
            carrier_phase: pulse.carrier_phase,
            drag_coeff: (pulse.drag != 0.0 || pulse.anharmonicity != 0.0).then_some(pulse.drag),
            anharmonicity_mhz: pulse.anharmonicity / TAU * 1e3,
        })
    }

    pub fn target(&self) -> ComplexMatrix {
        library::rotation(self.axis, self.angle)
    }

    pub fn to_pulse(&self) -> Result<XYPulse> {
        let fourier = |a: &[f64], phi: &[f64]| {
            FourierPulse::new(self.t_ns, a.to_vec(), phi.to_vec())
                .with_context(|| format!("pulse `{}`", self.name))
        };
        let mut pulse = match self.kind {
            PulseKind::Fourier => {
                let x = fourier(&self.a, &self.phi)?;
                match (&self.a_y, &self.phi_y) {
                    (None, None) => XYPulse::x_only(x),
                    (Some(a), Some(phi)) => XYPulse::xy(x, fourier(a, phi)?),
                    _ => bail!("pulse `{}`: a_y and phi_y must be given together", self.name),
                }
            }
            PulseKind::Gaussian | PulseKind::Cosine => {
                let shape = if self.kind == PulseKind::Gaussian {
                    ReferenceShape::Gaussian
                } else {
                    ReferenceShape::Cosine
                };
                XYPulse::x_only(ReferencePulse::calibrated(shape, self.t_ns, self.angle)?)
            }
        };
        pulse = pulse.with_carrier_phase(self.carrier_phase);
        let drag = self.drag_coeff.unwrap_or(if self.anharmonicity_mhz != 0.0 { 1.0 } else { 0.0 });
        if drag != 0.0 {
            pulse = pulse.with_drag(drag, TAU * self.anharmonicity_mhz * 1e-3)?;
        }
        Ok(pulse)
    }
}

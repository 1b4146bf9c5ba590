//! Tabulated robust pulses (T = 50 ns, amplitudes in rad/ns), target gates
//! and the amplitude-matched reference pulses they are compared against.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::pulse::{FourierPulse, ReferencePulse, ReferenceShape, XYPulse};
use crate::quantum::{self, Axis, AxisAngle, ComplexMatrix};

/// Gate duration of the tabulated pulses, ns.
pub const TABLE_DURATION: f64 = 50.0;

/// Peak drive `Ω_max = 2π · 37.5 MHz` in rad/ns.
pub const OMEGA_MAX: f64 = TAU * 0.0375;

fn fourier(a: &[f64], phi: &[f64]) -> FourierPulse {
    FourierPulse::new(TABLE_DURATION, a.to_vec(), phi.to_vec()).expect("tabulated pulse is well formed")
}

/// Robust X^π against static detuning.
pub fn x_r_pi() -> FourierPulse {
    fourier(&[0.01034, -0.25855, -0.03278], &[-0.01523, -0.03790])
}

/// Robust X^{π/2} against static detuning.
pub fn x_r_pi_half() -> FourierPulse {
    fourier(&[0.34930, 0.30764, 0.00026], &[-0.00305, -0.00609])
}

/// Robust X^π against detuning and amplitude noise (two quadratures).
pub fn x_all_pi() -> XYPulse {
    XYPulse::xy(
        fourier(&[-0.13158, -0.65450, -0.42338], &[0.00214, 0.00734]),
        fourier(&[-0.41686, -0.65453, -0.56110], &[-0.00144, -0.00528]),
    )
}

/// Robust X^π against quasi-static noise on all three axes (N = 3).
pub fn x_all2_pi() -> XYPulse {
    XYPulse::xy(
        fourier(&[0.00701, -0.23557, 0.03234, -0.24956], &[0.00800, -0.60128, -0.02887]),
        fourier(&[-0.32726, -0.12747, 0.16732, 0.06606], &[0.03469, -0.07938, -0.09605]),
    )
}

/// `exp(−i θ σ_axis / 2)`
pub fn rotation(axis: Axis, angle: f64) -> ComplexMatrix {
    quantum::su2_exp(&AxisAngle(axis.unit() * angle))
}

pub fn x_gate(angle: f64) -> ComplexMatrix {
    rotation(Axis::X, angle)
}

pub fn y_gate(angle: f64) -> ComplexMatrix {
    rotation(Axis::Y, angle)
}

/// Amplitude-matched Gaussian x rotation (peak `Ω_max`).
pub fn gaussian_x(angle: f64) -> ReferencePulse {
    ReferencePulse::amplitude_matched(ReferenceShape::Gaussian, angle, OMEGA_MAX)
        .expect("positive peak")
}

/// Amplitude-matched raised-cosine x rotation (peak `Ω_max`).
pub fn cosine_x(angle: f64) -> ReferencePulse {
    ReferencePulse::amplitude_matched(ReferenceShape::Cosine, angle, OMEGA_MAX).expect("positive peak")
}

/// A named pulse together with the gate it implements.
#[derive(Debug, Clone)]
pub struct NamedPulse {
    pub name: &'static str,
    pub pulse: XYPulse,
    pub target: ComplexMatrix,
}

pub const PULSE_NAMES: [&str; 8] = [
    "x_r_pi",
    "x_r_pi_half",
    "x_all_pi",
    "x_all2_pi",
    "gaussian_pi",
    "gaussian_pi_half",
    "cosine_pi",
    "cosine_pi_half",
];

/// Look up a built-in pulse by name.
pub fn named(name: &str) -> Result<NamedPulse> {
    let (name, pulse, angle) = match name {
        "x_r_pi" => ("x_r_pi", XYPulse::x_only(x_r_pi()), PI),
        "x_r_pi_half" => ("x_r_pi_half", XYPulse::x_only(x_r_pi_half()), PI / 2.0),
        "x_all_pi" => ("x_all_pi", x_all_pi(), PI),
        "x_all2_pi" => ("x_all2_pi", x_all2_pi(), PI),
        "gaussian_pi" => ("gaussian_pi", XYPulse::x_only(gaussian_x(PI)), PI),
        "gaussian_pi_half" => ("gaussian_pi_half", XYPulse::x_only(gaussian_x(PI / 2.0)), PI / 2.0),
        "cosine_pi" => ("cosine_pi", XYPulse::x_only(cosine_x(PI)), PI),
        "cosine_pi_half" => ("cosine_pi_half", XYPulse::x_only(cosine_x(PI / 2.0)), PI / 2.0),
        other => {
            return Err(Error::Unknown {
                what: "pulse",
                value: other.to_string(),
            })
        }
    };
    Ok(NamedPulse {
        name,
        pulse,
        target: x_gate(angle),
    })
}

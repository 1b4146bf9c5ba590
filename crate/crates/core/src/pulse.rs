//! Drive waveforms: the sine-modulated Fourier ansatz, Gaussian and cosine
//! reference envelopes, DRAG quadrature correction and time/amplitude
//! rescaling.
//!
//! Envelopes are angular frequencies in rad/ns over `[0, T]` with `T` in ns.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{invalid, Error, Result};
use crate::quantum::{ComplexMatrix, Hamiltonian, QubitHamiltonian, C64};

/// `Ω(t) = sin(πt/T) (a_0 + Σ_n a_n cos(2πnt/T + φ_n))`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierPulse {
    pub duration: f64,
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl FourierPulse {
    pub fn new(duration: f64, amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid("T", format!("{duration} ns must be positive")));
        }
        if amplitudes.is_empty() {
            return Err(invalid("a", "at least a_0 is required"));
        }
        if phases.len() + 1 != amplitudes.len() {
            return Err(invalid(
                "phi",
                format!(
                    "{} amplitudes need {} phases, got {}",
                    amplitudes.len(),
                    amplitudes.len() - 1,
                    phases.len()
                ),
            ));
        }
        Ok(Self {
            duration,
            amplitudes,
            phases,
        })
    }

    /// Number of Fourier components `N`.
    pub fn order(&self) -> usize {
        self.phases.len()
    }

    fn series(&self, t: f64) -> (f64, f64) {
        let w = TAU / self.duration;
        let mut s = self.amplitudes[0];
        let mut ds = 0.0;
        for (n, (a, phi)) in self.amplitudes[1..].iter().zip(&self.phases).enumerate() {
            let k = (n + 1) as f64 * w;
            let arg = k * t + phi;
            s += a * arg.cos();
            ds -= a * k * arg.sin();
        }
        (s, ds)
    }

    /// Envelope without range checking.
    pub fn value(&self, t: f64) -> f64 {
        (PI * t / self.duration).sin() * self.series(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let u = PI / self.duration;
        let (s, ds) = self.series(t);
        u * (u * t).cos() * s + (u * t).sin() * ds
    }

    /// Checked evaluation on `[0, T]`.
    pub fn envelope(&self, t: f64) -> Result<f64> {
        check_window(t, self.duration)?;
        Ok(self.value(t))
    }

    /// Closed-form `∫₀ᵀ Ω dt`, using `∫₀^π sin u cos(2nu + φ) du = 2cos φ / (1 − 4n²)`.
    pub fn area(&self) -> f64 {
        let mut s = 2.0 * self.amplitudes[0];
        for (n, (a, phi)) in self.amplitudes[1..].iter().zip(&self.phases).enumerate() {
            let n = (n + 1) as f64;
            s += a * phi.cos() * 2.0 / (1.0 - 4.0 * n * n);
        }
        s * self.duration / PI
    }

    /// `t → αt`, `Ω → Ω/α`.
    pub fn rescale(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("{alpha} must be positive")));
        }
        Ok(Self {
            duration: self.duration * alpha,
            amplitudes: self.amplitudes.iter().map(|a| a / alpha).collect(),
            phases: self.phases.clone(),
        })
    }
}

fn check_window(t: f64, duration: f64) -> Result<()> {
    if !(0.0..=duration).contains(&t) {
        return Err(Error::TimeOutOfRange { t, duration });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceShape {
    Gaussian,
    Cosine,
}

impl FromStr for ReferenceShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "cosine" => Ok(Self::Cosine),
            other => Err(Error::Unknown {
                what: "reference shape",
                value: other.to_string(),
            }),
        }
    }
}

/// Offset-subtracted Gaussian (σ = T/6) or raised-cosine envelope, peak at
/// `T/2` and zero at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePulse {
    pub shape: ReferenceShape,
    pub duration: f64,
    pub peak: f64,
}

const GAUSSIAN_SIGMAS: f64 = 6.0;

impl ReferencePulse {
    /// Unit-peak envelope area divided by `T`.
    fn unit_area_fraction(shape: ReferenceShape) -> f64 {
        match shape {
            ReferenceShape::Cosine => 0.5,
            ReferenceShape::Gaussian => {
                // σ = T/6, offset c = exp(−(T/2)²/2σ²)
                let half_span = GAUSSIAN_SIGMAS / 2.0;
                let c = (-half_span * half_span / 2.0).exp();
                let gauss = (TAU).sqrt() / GAUSSIAN_SIGMAS * erf(half_span / 2f64.sqrt());
                (gauss - c) / (1.0 - c)
            }
        }
    }

    /// Envelope of duration `T` whose area equals `angle`.
    pub fn calibrated(shape: ReferenceShape, duration: f64, angle: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid("T", format!("{duration} ns must be positive")));
        }
        let peak = angle / (duration * Self::unit_area_fraction(shape));
        Ok(Self {
            shape,
            duration,
            peak,
        })
    }

    /// Envelope with the given peak whose area equals `angle`; the duration
    /// follows.
    pub fn amplitude_matched(shape: ReferenceShape, angle: f64, peak: f64) -> Result<Self> {
        if !(peak > 0.0 && peak.is_finite()) {
            return Err(invalid("peak", format!("{peak} rad/ns must be positive")));
        }
        let duration = angle.abs() / (peak * Self::unit_area_fraction(shape));
        Ok(Self {
            shape,
            duration,
            peak: peak * angle.signum(),
        })
    }

    pub fn sigma(&self) -> Option<f64> {
        matches!(self.shape, ReferenceShape::Gaussian).then(|| self.duration / GAUSSIAN_SIGMAS)
    }

    pub fn value(&self, t: f64) -> f64 {
        let tt = self.duration;
        match self.shape {
            ReferenceShape::Cosine => self.peak * 0.5 * (1.0 - (TAU * t / tt).cos()),
            ReferenceShape::Gaussian => {
                let s = tt / GAUSSIAN_SIGMAS;
                let c = (-(tt / 2.0).powi(2) / (2.0 * s * s)).exp();
                let g = (-(t - tt / 2.0).powi(2) / (2.0 * s * s)).exp();
                self.peak * (g - c) / (1.0 - c)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let tt = self.duration;
        match self.shape {
            ReferenceShape::Cosine => self.peak * 0.5 * (TAU / tt) * (TAU * t / tt).sin(),
            ReferenceShape::Gaussian => {
                let s = tt / GAUSSIAN_SIGMAS;
                let c = (-(tt / 2.0).powi(2) / (2.0 * s * s)).exp();
                let x = t - tt / 2.0;
                let g = (-x * x / (2.0 * s * s)).exp();
                self.peak * (-x / (s * s)) * g / (1.0 - c)
            }
        }
    }

    pub fn area(&self) -> f64 {
        self.peak * self.duration * Self::unit_area_fraction(self.shape)
    }

    pub fn rescale(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("{alpha} must be positive")));
        }
        Ok(Self {
            shape: self.shape,
            duration: self.duration * alpha,
            peak: self.peak / alpha,
        })
    }
}

/// Uniformly sampled envelope on `[0, T]`, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledEnvelope {
    pub duration: f64,
    pub samples: Vec<f64>,
}

impl SampledEnvelope {
    pub fn new(duration: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("samples", "need at least two samples"));
        }
        if !(duration > 0.0) {
            return Err(invalid("T", format!("{duration} ns must be positive")));
        }
        Ok(Self { duration, samples })
    }

    fn spacing(&self) -> f64 {
        self.duration / (self.samples.len() - 1) as f64
    }

    pub fn value(&self, t: f64) -> f64 {
        let h = self.spacing();
        let x = (t / h).clamp(0.0, (self.samples.len() - 1) as f64);
        let k = (x.floor() as usize).min(self.samples.len() - 2);
        let f = x - k as f64;
        self.samples[k] * (1.0 - f) + self.samples[k + 1] * f
    }

    /// Central differences at the samples, linearly interpolated.
    pub fn derivative(&self, t: f64) -> f64 {
        let h = self.spacing();
        let n = self.samples.len();
        let s = &self.samples;
        let node = |k: usize| match k {
            0 => (s[1] - s[0]) / h,
            k if k == n - 1 => (s[n - 1] - s[n - 2]) / h,
            k => (s[k + 1] - s[k - 1]) / (2.0 * h),
        };
        let x = (t / h).clamp(0.0, (n - 1) as f64);
        let k = (x.floor() as usize).min(n - 2);
        let f = x - k as f64;
        node(k) * (1.0 - f) + node(k + 1) * f
    }
}

/// Any scalar drive envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Envelope {
    Fourier(FourierPulse),
    Reference(ReferencePulse),
    Sampled(SampledEnvelope),
    Constant { duration: f64, value: f64 },
    Zero { duration: f64 },
}

impl Envelope {
    pub fn duration(&self) -> f64 {
        match self {
            Envelope::Fourier(p) => p.duration,
            Envelope::Reference(p) => p.duration,
            Envelope::Sampled(p) => p.duration,
            Envelope::Constant { duration, .. } | Envelope::Zero { duration } => *duration,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Fourier(p) => p.value(t),
            Envelope::Reference(p) => p.value(t),
            Envelope::Sampled(p) => p.value(t),
            Envelope::Constant { value, .. } => *value,
            Envelope::Zero { .. } => 0.0,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Envelope::Fourier(p) => p.derivative(t),
            Envelope::Reference(p) => p.derivative(t),
            Envelope::Sampled(p) => p.derivative(t),
            Envelope::Constant { .. } | Envelope::Zero { .. } => 0.0,
        }
    }

    /// `∫₀ᵀ Ω dt`; closed form where available, Simpson's rule otherwise.
    pub fn area(&self) -> f64 {
        match self {
            Envelope::Fourier(p) => p.area(),
            Envelope::Reference(p) => p.area(),
            Envelope::Constant { duration, value } => duration * value,
            Envelope::Zero { .. } => 0.0,
            Envelope::Sampled(_) => simpson(|t| self.value(t), self.duration(), 4000),
        }
    }

    /// Largest `|Ω(t)|`: dense scan followed by golden-section refinement.
    pub fn peak_abs(&self) -> f64 {
        let tt = self.duration();
        if tt <= 0.0 {
            return 0.0;
        }
        let n = 2000;
        let h = tt / n as f64;
        let (k_best, _) = (0..=n)
            .map(|k| (k, self.value(k as f64 * h).abs()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let lo = ((k_best as f64 - 1.0) * h).max(0.0);
        let hi = ((k_best as f64 + 1.0) * h).min(tt);
        let t = golden_max(|t| self.value(t).abs(), lo, hi, 1e-12);
        self.value(t).abs().max(self.value(k_best as f64 * h).abs())
    }

    pub fn rescale(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("{alpha} must be positive")));
        }
        Ok(match self {
            Envelope::Fourier(p) => Envelope::Fourier(p.rescale(alpha)?),
            Envelope::Reference(p) => Envelope::Reference(p.rescale(alpha)?),
            Envelope::Sampled(p) => Envelope::Sampled(SampledEnvelope {
                duration: p.duration * alpha,
                samples: p.samples.iter().map(|s| s / alpha).collect(),
            }),
            Envelope::Constant { duration, value } => Envelope::Constant {
                duration: duration * alpha,
                value: value / alpha,
            },
            Envelope::Zero { duration } => Envelope::Zero {
                duration: duration * alpha,
            },
        })
    }
}

impl From<FourierPulse> for Envelope {
    fn from(p: FourierPulse) -> Self {
        Envelope::Fourier(p)
    }
}

impl From<ReferencePulse> for Envelope {
    fn from(p: ReferencePulse) -> Self {
        Envelope::Reference(p)
    }
}

pub(crate) fn simpson(f: impl Fn(f64) -> f64, duration: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = duration / n as f64;
    let mut s = f(0.0) + f(duration);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    s * h / 3.0
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > tol {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    (a + b) / 2.0
}

/// Two-quadrature drive. The in-phase envelope `x` receives the first-order
/// DRAG correction `−λ ẋ / α` on its quadrature; the resulting pair is then
/// rotated by the carrier phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XYPulse {
    pub x: Envelope,
    pub y: Option<Envelope>,
    #[serde(default)]
    pub carrier_phase: f64,
    #[serde(default)]
    pub drag: f64,
    /// rad/ns
    #[serde(default)]
    pub anharmonicity: f64,
}

impl XYPulse {
    pub fn x_only(x: impl Into<Envelope>) -> Self {
        Self {
            x: x.into(),
            y: None,
            carrier_phase: 0.0,
            drag: 0.0,
            anharmonicity: 0.0,
        }
    }

    pub fn xy(x: impl Into<Envelope>, y: impl Into<Envelope>) -> Self {
        Self {
            y: Some(y.into()),
            ..Self::x_only(x)
        }
    }

    pub fn with_carrier_phase(mut self, phase: f64) -> Self {
        self.carrier_phase = phase;
        self
    }

    pub fn with_drag(mut self, coefficient: f64, anharmonicity: f64) -> Result<Self> {
        if coefficient != 0.0 && anharmonicity == 0.0 {
            return Err(invalid(
                "anharmonicity",
                "must be nonzero when a DRAG coefficient is set",
            ));
        }
        self.drag = coefficient;
        self.anharmonicity = anharmonicity;
        Ok(self)
    }

    pub fn duration(&self) -> f64 {
        let tx = self.x.duration();
        self.y.as_ref().map_or(tx, |y| tx.max(y.duration()))
    }

    /// First-order DRAG term `−λ Ω̇_x(t)/α` added to the quadrature.
    pub fn drag_quadrature(&self, t: f64) -> Result<f64> {
        if self.drag == 0.0 {
            return Ok(0.0);
        }
        if self.anharmonicity == 0.0 {
            return Err(invalid(
                "anharmonicity",
                "must be nonzero when a DRAG coefficient is set",
            ));
        }
        Ok(-self.drag * self.x.derivative(t) / self.anharmonicity)
    }

    /// `(Ω_x(t), Ω_y(t))` in the lab-fixed rotating frame.
    pub fn quadratures(&self, t: f64) -> (f64, f64) {
        let x = self.x.value(t);
        let mut y = self.y.as_ref().map_or(0.0, |e| e.value(t));
        if self.drag != 0.0 && self.anharmonicity != 0.0 {
            y -= self.drag * self.x.derivative(t) / self.anharmonicity;
        }
        if self.carrier_phase == 0.0 {
            return (x, y);
        }
        let (s, c) = self.carrier_phase.sin_cos();
        (c * x - s * y, s * x + c * y)
    }

    /// `|Ω(t)|`
    pub fn amplitude(&self, t: f64) -> f64 {
        let (x, y) = self.quadratures(t);
        x.hypot(y)
    }

    /// Peak of `|Ω(t)|`, sampled.
    pub fn peak_amplitude(&self) -> f64 {
        let tt = self.duration();
        let n = 4000;
        (0..=n)
            .map(|k| self.amplitude(tt * k as f64 / n as f64))
            .fold(0.0, f64::max)
    }

    pub fn rescale(&self, alpha: f64) -> Result<Self> {
        Ok(Self {
            x: self.x.rescale(alpha)?,
            y: self.y.as_ref().map(|y| y.rescale(alpha)).transpose()?,
            ..self.clone()
        })
    }

    /// The two-level Hamiltonian `(Ω_x/2)σx + (Ω_y/2)σy`.
    pub fn qubit_hamiltonian(&self) -> QubitDrive<'_> {
        QubitDrive(self)
    }
}

impl From<Envelope> for XYPulse {
    fn from(e: Envelope) -> Self {
        XYPulse::x_only(e)
    }
}

/// Two-level drive Hamiltonian of an [`XYPulse`].
pub struct QubitDrive<'a>(pub &'a XYPulse);

impl QubitHamiltonian for QubitDrive<'_> {
    fn coefficients(&self, t: f64) -> Vector3<f64> {
        let (x, y) = self.0.quadratures(t);
        Vector3::new(x / 2.0, y / 2.0, 0.0)
    }
}

/// Model frame for [`hamiltonian_of`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Qubit2Level,
    Transmon3Level,
}

impl FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubit-2level" | "qubit" => Ok(Frame::Qubit2Level),
            "transmon-3level" | "transmon" => Ok(Frame::Transmon3Level),
            other => Err(Error::Unknown {
                what: "frame",
                value: other.to_string(),
            }),
        }
    }
}

/// Dense drive Hamiltonian in the requested frame. The three-level frame is
/// the rotating-frame driven transmon ladder with the anharmonicity on `|2⟩`
/// and the 1–2 matrix elements scaled by √2.
pub struct DriveHamiltonian<'a> {
    pulse: &'a XYPulse,
    frame: Frame,
}

impl Hamiltonian for DriveHamiltonian<'_> {
    fn dim(&self) -> usize {
        match self.frame {
            Frame::Qubit2Level => 2,
            Frame::Transmon3Level => 3,
        }
    }

    fn at(&self, t: f64) -> ComplexMatrix {
        let (x, y) = self.pulse.quadratures(t);
        match self.frame {
            Frame::Qubit2Level => {
                let c = C64::new(x / 2.0, -y / 2.0);
                ComplexMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), c, c.conj(), C64::new(0.0, 0.0)])
            }
            Frame::Transmon3Level => transmon_drive(x, y, self.pulse.anharmonicity),
        }
    }
}

/// `diag(0, 0, α) + (Ω_x/2)(a + a†) + (Ω_y/2)(i a† − i a)` on three levels.
pub fn transmon_drive(x: f64, y: f64, anharmonicity: f64) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(3, 3);
    let c = C64::new(x / 2.0, -y / 2.0);
    let s2 = 2f64.sqrt();
    h[(0, 1)] = c;
    h[(1, 0)] = c.conj();
    h[(1, 2)] = c * s2;
    h[(2, 1)] = c.conj() * s2;
    h[(2, 2)] = C64::new(anharmonicity, 0.0);
    h
}

pub fn hamiltonian_of(pulse: &XYPulse, frame: Frame) -> DriveHamiltonian<'_> {
    DriveHamiltonian { pulse, frame }
}

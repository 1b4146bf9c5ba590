//! Error curves `r(t) = ∫ pauli_vector(U0†(τ) O(τ) U0(τ)) dτ` of a noise
//! coupling `O` in the toggling frame of the noise-free drive, their closure,
//! the exact error-unitary distance, and Frenet–Serret diagnostics.

use nalgebra::Vector3;

use crate::error::{invalid, Result};
use crate::noise::{Coupling, NoiseSource, NoisyQubit};
use crate::pulse::XYPulse;
use crate::quantum::{
    pauli_combination, pauli_vector, propagate_qubit_final, qubit_step, Qubit, TimeGrid,
};

/// Sampled error curve, per unit noise amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub label: String,
    pub times: Vec<f64>,
    pub points: Vec<Vector3<f64>>,
    /// `dr/dt` at each sample.
    pub velocity: Vec<Vector3<f64>>,
}

impl ErrorCurve {
    /// Curve from explicit samples; `velocity` must have the same length.
    pub fn from_samples(
        label: impl Into<String>,
        times: Vec<f64>,
        points: Vec<Vector3<f64>>,
        velocity: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        if times.len() != points.len() || times.len() != velocity.len() {
            return Err(invalid("curve", "times, points and velocities differ in length"));
        }
        if times.len() < 2 {
            return Err(invalid("curve", "need at least two samples"));
        }
        Ok(Self {
            label: label.into(),
            times,
            points,
            velocity,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn speed(&self) -> Vec<f64> {
        self.velocity.iter().map(|v| v.norm()).collect()
    }

    pub fn endpoint(&self) -> Vector3<f64> {
        *self.points.last().expect("non-empty curve")
    }

    /// Polygonal arc length.
    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// `‖r(T)‖ / arc length`; 0 for a curve of zero length.
    pub fn closure_ratio(&self) -> f64 {
        let l = self.arc_length();
        if l == 0.0 {
            0.0
        } else {
            self.endpoint().norm() / l
        }
    }

    fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

fn toggling(u: &Qubit, c: &Vector3<f64>) -> Vector3<f64> {
    pauli_vector(&(u.adjoint() * pauli_combination(c) * u))
}

/// Error curve of a single-direction noise source over `[t_start, t_end]`,
/// starting from the drive propagator `u_start = U0(t_start)` and `r = 0`.
pub fn error_curve_segment(
    pulse: &XYPulse,
    coupling: Coupling,
    label: &str,
    t_start: f64,
    t_end: f64,
    steps: usize,
    u_start: Qubit,
) -> Result<(ErrorCurve, Qubit)> {
    let grid = TimeGrid::new(t_end - t_start, steps)?;
    let dt = grid.dt();
    let drive = pulse.qubit_hamiltonian();
    let drive = &drive as &dyn crate::quantum::QubitHamiltonian;
    let mut u = u_start;
    let mut r = Vector3::zeros();
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut velocity = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = t_start + grid.time(k);
        times.push(t);
        points.push(r);
        velocity.push(toggling(&u, &coupling.coefficients(pulse, t)));
        if k == steps {
            break;
        }
        let tm = t_start + grid.midpoint(k);
        let h = drive.coefficients(tm);
        let um = qubit_step(&h, dt / 2.0) * u;
        r += toggling(&um, &coupling.coefficients(pulse, tm)) * dt;
        u = qubit_step(&h, dt) * u;
    }
    Ok((
        ErrorCurve {
            label: label.to_string(),
            times,
            points,
            velocity,
        },
        u,
    ))
}

/// Error curve of `noise` for `pulse` on `grid`. Multi-direction sources
/// must be split with [`NoiseSource::decompose`] first.
pub fn error_curve(pulse: &XYPulse, noise: &NoiseSource, grid: &TimeGrid) -> Result<ErrorCurve> {
    let d = noise.sole_direction()?;
    let (curve, _) = error_curve_segment(
        pulse,
        d.coupling,
        &d.label,
        0.0,
        grid.duration,
        grid.steps,
        Qubit::identity(),
    )?;
    Ok(curve)
}

/// One curve per direction of `noise`.
pub fn error_curves(pulse: &XYPulse, noise: &NoiseSource, grid: &TimeGrid) -> Result<Vec<ErrorCurve>> {
    noise.decompose().iter().map(|n| error_curve(pulse, n, grid)).collect()
}

/// `R = ‖r(T)‖`
pub fn error_distance(curve: &ErrorCurve) -> f64 {
    curve.endpoint().norm()
}

/// Rotation half-angle of `U0† U`, minimized over the global phase, in
/// `[0, π/2]`.
pub fn unitary_error_distance(u0: &Qubit, u: &Qubit) -> f64 {
    let ue = u0.adjoint() * u;
    let det = ue.determinant();
    let tr = (ue[(0, 0)] + ue[(1, 1)]) / det.sqrt();
    (tr.norm() / 2.0).min(1.0).acos()
}

/// Exact total error distance of `noise` (at its concrete amplitudes).
pub fn total_error_distance(pulse: &XYPulse, noise: &NoiseSource, grid: &TimeGrid) -> f64 {
    let u0 = propagate_qubit_final(&pulse.qubit_hamiltonian(), grid);
    let u = propagate_qubit_final(&NoisyQubit::new(pulse, noise), grid);
    unitary_error_distance(&u0, &u)
}

/// Per-sample Frenet data; entries are NaN where undefined.
#[derive(Debug, Clone)]
pub struct FrenetFrame {
    pub times: Vec<f64>,
    pub speed: Vec<f64>,
    pub tangent: Vec<Vector3<f64>>,
    pub normal: Vec<Vector3<f64>>,
    pub binormal: Vec<Vector3<f64>>,
    pub curvature: Vec<f64>,
    pub torsion: Vec<f64>,
    /// Sample indices dropped for near-zero speed.
    pub masked: Vec<usize>,
}

fn nan3() -> Vector3<f64> {
    Vector3::repeat(f64::NAN)
}

/// Fourth-order central difference; `None` within two samples of an end
/// or next to an undefined value.
fn central_diff(f: &[Vector3<f64>], k: usize, h: f64) -> Option<Vector3<f64>> {
    if k < 2 || k + 2 >= f.len() {
        return None;
    }
    let s = [f[k - 2], f[k - 1], f[k + 1], f[k + 2]];
    if s.iter().any(|v| v.x.is_nan()) {
        return None;
    }
    Some((s[0] - s[3] + (s[2] - s[1]) * 8.0) / (12.0 * h))
}

/// Frenet frame, curvature `κ = |Ṫ|/v` and torsion `τ = −(Ḃ·N)/v`.
/// Samples with speed below `1e−8 · max speed` are masked.
pub fn frenet_frame(curve: &ErrorCurve) -> FrenetFrame {
    let n = curve.len();
    let h = curve.step();
    let speed = curve.speed();
    let vmax = speed.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-8 * vmax.max(f64::MIN_POSITIVE);
    let masked: Vec<usize> = (0..n).filter(|&k| speed[k] <= floor).collect();

    let tangent: Vec<_> = (0..n)
        .map(|k| if speed[k] > floor { curve.velocity[k] / speed[k] } else { nan3() })
        .collect();
    let mut normal = vec![nan3(); n];
    let mut binormal = vec![nan3(); n];
    let mut curvature = vec![f64::NAN; n];
    for k in 0..n {
        if let Some(dt) = central_diff(&tangent, k, h) {
            // the exact derivative is orthogonal to T; drop the stencil's residue
            let dt = dt - tangent[k] * tangent[k].dot(&dt);
            let m = dt.norm();
            curvature[k] = m / speed[k];
            if m * h > 1e-10 {
                normal[k] = dt / m;
                binormal[k] = tangent[k].cross(&normal[k]);
            }
        }
    }
    let mut torsion = vec![f64::NAN; n];
    for k in 0..n {
        if let Some(db) = central_diff(&binormal, k, h) {
            torsion[k] = -db.dot(&normal[k]) / speed[k];
        }
    }
    FrenetFrame {
        times: curve.times.clone(),
        speed,
        tangent,
        normal,
        binormal,
        curvature,
        torsion,
        masked,
    }
}

/// One row of the curve CSV: `t_ns, rx, ry, rz, v, kappa, tau`.
pub fn curve_rows(curve: &ErrorCurve, frame: &FrenetFrame) -> Vec<[f64; 7]> {
    (0..curve.len())
        .map(|k| {
            let r = curve.points[k];
            [
                curve.times[k],
                r.x,
                r.y,
                r.z,
                frame.speed[k],
                frame.curvature[k],
                frame.torsion[k],
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use crate::noise::{amplitude_noise, static_detuning};
    use crate::pulse::{Envelope, FourierPulse};
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn grid(t: f64) -> TimeGrid {
        TimeGrid::with_default_density(t).unwrap()
    }

    #[test]
    fn zero_pulse_gives_straight_z_line() {
        let p = XYPulse::x_only(Envelope::Zero { duration: 20.0 });
        let c = error_curve(&p, &static_detuning(1.0), &grid(20.0)).unwrap();
        assert_eq!(c.points[0], Vector3::zeros());
        for v in &c.velocity {
            assert!((v - Vector3::z()).norm() < 1e-15);
        }
        assert!((error_distance(&c) - 20.0).abs() < 1e-12);
        assert!((c.arc_length() - 20.0).abs() < 1e-12);
        let f = frenet_frame(&c);
        assert!(f.curvature.iter().filter(|k| !k.is_nan()).all(|k| k.abs() < 1e-12));
    }

    #[test]
    fn table_pulse_curve_nearly_closes() {
        let p = XYPulse::x_only(library::x_r_pi());
        let c = error_curve(&p, &static_detuning(1.0), &grid(50.0)).unwrap();
        assert!((c.arc_length() - 50.0).abs() < 1e-6);
        assert!(c.closure_ratio() < 1e-2, "{}", c.closure_ratio());
    }

    #[test]
    fn gaussian_curve_is_open() {
        let p = XYPulse::x_only(library::gaussian_x(PI));
        let c = error_curve(&p, &static_detuning(1.0), &grid(p.duration())).unwrap();
        assert!(c.closure_ratio() > 0.3, "{}", c.closure_ratio());
        // grid refinement oracle
        let fine = error_curve(&p, &static_detuning(1.0), &TimeGrid::new(p.duration(), 20000).unwrap()).unwrap();
        let (a, b) = (error_distance(&c), error_distance(&fine));
        assert!((a - b).abs() < 1e-5 * b, "{a} {b}");
    }

    #[test]
    fn first_order_limit_of_total_distance() {
        let p = XYPulse::x_only(library::cosine_x(PI));
        let g = grid(p.duration());
        let curve = error_curve(&p, &static_detuning(1.0), &g).unwrap();
        // epsilon = Δ/2 per unit curve amplitude; Richardson on R(Δ)/Δ
        let ratio = |d: f64| total_error_distance(&p, &static_detuning(d), &g) / (d / 2.0);
        let d = TAU * 1e-4;
        let extrapolated = 2.0 * ratio(d / 2.0) - ratio(d);
        assert!((extrapolated - error_distance(&curve)).abs() < 1e-6 * error_distance(&curve));
        assert_eq!(total_error_distance(&p, &static_detuning(0.0), &g), 0.0);
    }

    #[test]
    fn curve_invariants() {
        let p = library::x_all_pi();
        let g = grid(50.0);
        for noise in [static_detuning(1.0), amplitude_noise(1.0)] {
            let c = error_curve(&p, &noise, &g).unwrap();
            let speed = c.speed();
            let h = g.dt();
            for k in 1..c.len() - 1 {
                // trapezoid arc length against chord length
                let seg = (c.points[k + 1] - c.points[k]).norm();
                let integral = 0.5 * h * (speed[k] + speed[k + 1]);
                assert!((seg - integral).abs() < 1e-5 * h.max(integral));
                let fd = (c.points[k + 1] - c.points[k - 1]) / (2.0 * h);
                if speed[k] > 1e-2 {
                    assert!((fd.norm() - speed[k]).abs() < 1e-3 * speed[k]);
                }
            }
        }
        let z = error_curve(&p, &static_detuning(1.0), &g).unwrap();
        assert!((z.velocity[0] - Vector3::z()).norm() < 1e-15);
        assert!(z.speed().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn curve_is_additive_across_checkpoint() {
        let p = library::x_all_pi();
        let coupling = static_detuning(1.0).directions[0].coupling;
        let (full, _) = error_curve_segment(&p, coupling, "z", 0.0, 50.0, 2000, Qubit::identity()).unwrap();
        let (a, u1) = error_curve_segment(&p, coupling, "z", 0.0, 20.0, 800, Qubit::identity()).unwrap();
        let (b, _) = error_curve_segment(&p, coupling, "z", 20.0, 50.0, 1200, u1).unwrap();
        assert!((a.endpoint() + b.endpoint() - full.endpoint()).norm() < 1e-8);
    }

    #[test]
    fn multi_direction_rejected() {
        let p = library::x_all_pi();
        let noise = crate::noise::three_axis_static(Vector3::new(1.0, 1.0, 1.0));
        assert!(error_curve(&p, &noise, &grid(50.0)).is_err());
        assert_eq!(error_curves(&p, &noise, &grid(50.0)).unwrap().len(), 3);
    }

    #[test]
    fn circle_curvature_and_torsion() {
        let rho = 2.5;
        let n = 4001;
        let h = 1e-3;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        let points = times.iter().map(|t| Vector3::new(rho * (t / rho).cos(), rho * (t / rho).sin(), 0.0)).collect();
        let vel = times.iter().map(|t| Vector3::new(-(t / rho).sin(), (t / rho).cos(), 0.0)).collect();
        let c = ErrorCurve::from_samples("circle", times, points, vel).unwrap();
        let f = frenet_frame(&c);
        for k in 10..n - 10 {
            assert!((f.curvature[k] - 1.0 / rho).abs() < 1e-3);
            assert!(f.torsion[k].abs() < 1e-3);
        }
    }

    #[test]
    fn helix_torsion_sign() {
        // r = (a cos s, a sin s, b s): κ = a/(a²+b²), τ = b/(a²+b²)
        let (a, b) = (1.5, 0.7);
        let w = a * a + b * b;
        let n = 3001;
        let h = 1e-3;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        let points = times.iter().map(|s| Vector3::new(a * s.cos(), a * s.sin(), b * s)).collect();
        let vel = times.iter().map(|s| Vector3::new(-a * s.sin(), a * s.cos(), b)).collect();
        let c = ErrorCurve::from_samples("helix", times, points, vel).unwrap();
        let f = frenet_frame(&c);
        for k in 10..n - 10 {
            assert!((f.curvature[k] - a / w).abs() < 1e-6);
            assert!((f.torsion[k] - b / w).abs() < 1e-6);
        }
    }

    #[test]
    fn z_noise_curvature_matches_drive() {
        let fp = library::x_r_pi();
        let p = XYPulse::x_only(fp.clone());
        let c = error_curve(&p, &static_detuning(1.0), &grid(50.0)).unwrap();
        let f = frenet_frame(&c);
        let omax = (0..=1000).map(|k| fp.value(k as f64 * 0.05).abs()).fold(0.0, f64::max);
        for k in 100..c.len() - 100 {
            let dev = (f.curvature[k] * f.speed[k] - fp.value(c.times[k]).abs()).abs() / omax;
            assert!(dev < 1e-2, "t={} dev={dev}", c.times[k]);
        }
    }

    #[test]
    fn amplitude_noise_torsion_matches_drive() {
        // chirped two-quadrature pulse Ω(t) = A sin(πt/T), φ(t) = βt
        let tt = 50.0;
        let a = FourierPulse::new(tt, vec![0.2], vec![]).unwrap();
        let beta = 0.05;
        let n = 4000;
        let omega: Vec<f64> = (0..=n).map(|k| a.value(tt * k as f64 / n as f64)).collect();
        let xs: Vec<f64> = (0..=n).map(|k| omega[k] * (beta * tt * k as f64 / n as f64).cos()).collect();
        let ys: Vec<f64> = (0..=n).map(|k| omega[k] * (beta * tt * k as f64 / n as f64).sin()).collect();
        let p = XYPulse::xy(
            Envelope::Sampled(crate::pulse::SampledEnvelope::new(tt, xs).unwrap()),
            Envelope::Sampled(crate::pulse::SampledEnvelope::new(tt, ys).unwrap()),
        );
        let c = error_curve(&p, &amplitude_noise(1.0), &TimeGrid::new(tt, n).unwrap()).unwrap();
        let f = frenet_frame(&c);
        let omax = omega.iter().cloned().fold(0.0, f64::max);
        for k in n / 20..n - n / 20 {
            let dev = (f.torsion[k] * f.speed[k] + omega[k]).abs() / omax;
            assert!(dev < 1e-2, "t={} dev={dev}", c.times[k]);
            assert!((f.curvature[k] * f.speed[k] - beta).abs() < 1e-3);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn frenet_frame_orthonormal(
            a in prop::collection::vec(-0.3f64..0.3, 3),
            phi in prop::collection::vec(-3.0f64..3.0, 2),
        ) {
            let x = FourierPulse::new(50.0, a.clone(), phi.clone()).unwrap();
            let y = FourierPulse::new(50.0, vec![a[1], a[0], a[2]], phi).unwrap();
            let p = XYPulse::xy(x, y);
            let c = error_curve(&p, &static_detuning(1.0), &TimeGrid::new(50.0, 1000).unwrap()).unwrap();
            let f = frenet_frame(&c);
            for k in 0..c.len() {
                if f.normal[k].x.is_nan() || f.binormal[k].x.is_nan() { continue; }
                let (t, n, b) = (f.tangent[k], f.normal[k], f.binormal[k]);
                prop_assert!((t.norm() - 1.0).abs() < 1e-6);
                prop_assert!((n.norm() - 1.0).abs() < 1e-6);
                prop_assert!(t.dot(&n).abs() < 1e-6);
                prop_assert!((t.cross(&n) - b).norm() < 1e-6);
            }
        }
    }
}

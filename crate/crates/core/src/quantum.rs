//! Dense complex-matrix kernel: Pauli algebra, SU(2) exponential and
//! logarithm, Kronecker products and time-ordered propagation.
//!
//! Units throughout the crate: time in ns, angular frequency in rad/ns.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type Qubit = Matrix2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Unitarity tolerance for matrices handed around as gates.
pub const UNITARY_TOL: f64 = 1e-10;
/// Hermiticity tolerance for Hamiltonian samples.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn pauli(axis: Axis) -> ComplexMatrix {
    match axis {
        Axis::X => sigma_x(),
        Axis::Y => sigma_y(),
        Axis::Z => sigma_z(),
    }
}

/// Fixed-size Pauli matrices for the qubit fast path.
pub fn pauli2(axis: Axis) -> Qubit {
    match axis {
        Axis::X => Qubit::new(ZERO, ONE, ONE, ZERO),
        Axis::Y => Qubit::new(ZERO, -I, I, ZERO),
        Axis::Z => Qubit::new(ONE, ZERO, ZERO, -ONE),
    }
}

/// `h · σ` for a real 3-vector.
pub fn pauli_combination(h: &Vector3<f64>) -> Qubit {
    Qubit::new(
        C64::new(h.z, 0.0),
        C64::new(h.x, -h.y),
        C64::new(h.x, h.y),
        C64::new(-h.z, 0.0),
    )
}

/// Components `Re tr(σ_k M) / 2`; exact inverse of [`pauli_combination`]
/// on traceless Hermitian matrices.
pub fn pauli_vector(m: &Qubit) -> Vector3<f64> {
    // tr(σx M) = M10 + M01, tr(σy M) = i(M01 - M10), tr(σz M) = M00 - M11
    let x = (m[(1, 0)] + m[(0, 1)]).re / 2.0;
    let y = (I * (m[(0, 1)] - m[(1, 0)])).re / 2.0;
    let z = (m[(0, 0)] - m[(1, 1)]).re / 2.0;
    Vector3::new(x, y, z)
}

pub fn to_dynamic(q: &Qubit) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]])
}

pub fn to_qubit(m: &ComplexMatrix) -> Result<Qubit> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: m.nrows(),
        });
    }
    Ok(Qubit::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
}

fn max_abs_entry<'a>(it: impl Iterator<Item = &'a C64>) -> f64 {
    it.fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `‖U†U − I‖_max`
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let d = u.nrows();
    let p = u.adjoint() * u - identity(d);
    max_abs_entry(p.iter())
}

/// `‖H − H†‖_max`
pub fn hermiticity_error(h: &ComplexMatrix) -> f64 {
    let p = h - h.adjoint();
    max_abs_entry(p.iter())
}

pub fn qubit_unitarity_error(u: &Qubit) -> f64 {
    let p = u.adjoint() * u - Qubit::identity();
    max_abs_entry(p.iter())
}

/// Rotation generator `vector = θ·n` of `U = exp(−i (θ/2) n·σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle(pub Vector3<f64>);

impl AxisAngle {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Unit axis, or `None` for the zero rotation.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        let th = self.angle();
        (th > 0.0).then(|| self.0 / th)
    }
}

/// `cos(θ/2)·I − i sin(θ/2)·(n·σ)`
pub fn su2_exp_fixed(g: &AxisAngle) -> Qubit {
    let th = g.angle();
    let half = th / 2.0;
    // sin(θ/2)/θ stays finite as θ → 0
    let sinc = if th < 1e-8 {
        0.5 - th * th / 48.0
    } else {
        half.sin() / th
    };
    let n = g.0 * sinc;
    Qubit::identity() * C64::new(half.cos(), 0.0) - pauli_combination(&n) * I
}

pub fn su2_exp(g: &AxisAngle) -> ComplexMatrix {
    to_dynamic(&su2_exp_fixed(g))
}

/// Result of [`su2_log`]. `branch_edge` is set when the rotation angle lies
/// within 1e−9 of π, where the axis sign is not determined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Log {
    pub generator: AxisAngle,
    pub branch_edge: bool,
}

/// Project a U(2) matrix onto SU(2) by dividing out the principal square
/// root of its determinant.
pub fn project_su2(u: &Qubit) -> Qubit {
    let det = u.determinant();
    u / det.sqrt()
}

pub fn su2_log_fixed(u: &Qubit) -> Result<Su2Log> {
    let dev = qubit_unitarity_error(u);
    if dev > 1e-8 {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let mut s = project_su2(u);
    // s = cos(θ/2) I − i sin(θ/2) n·σ ; keep θ ∈ [0, π] by flipping the sign
    let mut c = (s[(0, 0)] + s[(1, 1)]).re / 2.0;
    if c < 0.0 {
        s = -s;
        c = -c;
    }
    // i·s = i cos(θ/2) I + sin(θ/2) n·σ
    let w = pauli_vector(&(s * I));
    let sn = w.norm();
    let half = sn.atan2(c.min(1.0));
    let th = 2.0 * half;
    let generator = if sn < 1e-300 {
        AxisAngle(Vector3::zeros())
    } else {
        AxisAngle(w * (th / sn))
    };
    Ok(Su2Log {
        generator,
        branch_edge: (std::f64::consts::PI - th).abs() < 1e-9,
    })
}

pub fn su2_log(u: &ComplexMatrix) -> Result<Su2Log> {
    su2_log_fixed(&to_qubit(u)?)
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `exp(−i h·σ dt)` for a qubit Hamiltonian `h·σ`.
pub fn qubit_step(h: &Vector3<f64>, dt: f64) -> Qubit {
    su2_exp_fixed(&AxisAngle(h * (2.0 * dt)))
}

/// `exp(−i H dt)` for Hermitian `H` by spectral decomposition.
pub fn expm_hermitian(h: &ComplexMatrix, dt: f64) -> ComplexMatrix {
    if h.nrows() == 2 {
        let q = Qubit::new(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
        let tr = (q[(0, 0)] + q[(1, 1)]).re / 2.0;
        let v = pauli_vector(&q);
        let phase = C64::from_polar(1.0, -tr * dt);
        return to_dynamic(&(qubit_step(&v, dt) * phase));
    }
    let eig = SymmetricEigen::new(h.clone());
    let q = &eig.eigenvectors;
    let phases = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        h.nrows(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * dt)),
    ));
    q * phases * q.adjoint()
}

/// Uniform discretization of `[0, T]`; Hamiltonians are sampled at the
/// midpoints of the subintervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub duration: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub const DEFAULT_STEPS_PER_50NS: usize = 2000;

    pub fn new(duration: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(crate::error::invalid("duration", format!("{duration} ns")));
        }
        Ok(Self { duration, steps })
    }

    /// Default density: 2000 steps per 50 ns, at least 200 steps.
    pub fn with_default_density(duration: f64) -> Result<Self> {
        let steps = ((duration / 50.0) * Self::DEFAULT_STEPS_PER_50NS as f64).ceil() as usize;
        Self::new(duration, steps.max(200))
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.duration * k as f64 / self.steps as f64
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }

    /// Sample times `t_0 = 0, …, t_steps = T`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Reject grids with fewer than `min_per_period` steps per Rabi period
    /// of a drive with peak angular frequency `peak_omega`.
    pub fn validate_resolution(&self, peak_omega: f64, min_per_period: usize) -> Result<()> {
        if peak_omega <= 0.0 {
            return Ok(());
        }
        let periods = self.duration * peak_omega / std::f64::consts::TAU;
        let required = (periods * min_per_period as f64).ceil() as usize;
        if self.steps < required {
            return Err(Error::GridTooCoarse {
                steps: self.steps,
                required,
            });
        }
        Ok(())
    }
}

/// Time-dependent Hamiltonian of fixed dimension.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;
    fn at(&self, t: f64) -> ComplexMatrix;
}

/// Qubit Hamiltonian written as `h(t)·σ` (traceless).
pub trait QubitHamiltonian: Sync {
    fn coefficients(&self, t: f64) -> Vector3<f64>;
}

/// Closure-backed Hamiltonian.
pub struct FnHamiltonian<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> ComplexMatrix + Sync> FnHamiltonian<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> ComplexMatrix + Sync> Hamiltonian for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn at(&self, t: f64) -> ComplexMatrix {
        (self.f)(t)
    }
}

/// Closure-backed qubit Hamiltonian.
pub struct FnQubitHamiltonian<F>(pub F);

impl<F: Fn(f64) -> Vector3<f64> + Sync> QubitHamiltonian for FnQubitHamiltonian<F> {
    fn coefficients(&self, t: f64) -> Vector3<f64> {
        (self.0)(t)
    }
}

/// Lifts a qubit Hamiltonian into the dense interface.
pub struct DenseQubit<'a, H: ?Sized>(pub &'a H);

impl<H: QubitHamiltonian + ?Sized> Hamiltonian for DenseQubit<'_, H> {
    fn dim(&self) -> usize {
        2
    }
    fn at(&self, t: f64) -> ComplexMatrix {
        to_dynamic(&pauli_combination(&self.0.coefficients(t)))
    }
}

fn checked_sample(h: &dyn Hamiltonian, t: f64) -> Result<ComplexMatrix> {
    let m = h.at(t);
    if m.nrows() != h.dim() || m.ncols() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: m.nrows(),
        });
    }
    let scale = max_abs_entry(m.iter()).max(1.0);
    let dev = hermiticity_error(&m);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(m)
}

/// `U(t_k)` at every grid point, `U(0) = I`, each step the exact exponential
/// of the midpoint Hamiltonian.
pub fn propagate(h: &dyn Hamiltonian, grid: &TimeGrid) -> Result<Vec<ComplexMatrix>> {
    if grid.steps == 0 {
        return Err(Error::EmptyGrid);
    }
    let dt = grid.dt();
    let mut out = Vec::with_capacity(grid.steps + 1);
    let mut u = identity(h.dim());
    out.push(u.clone());
    for k in 0..grid.steps {
        let hk = checked_sample(h, grid.midpoint(k))?;
        u = expm_hermitian(&hk, dt) * u;
        out.push(u.clone());
    }
    Ok(out)
}

/// Final propagator only.
pub fn propagate_final(h: &dyn Hamiltonian, grid: &TimeGrid) -> Result<ComplexMatrix> {
    if grid.steps == 0 {
        return Err(Error::EmptyGrid);
    }
    let dt = grid.dt();
    let mut u = identity(h.dim());
    for k in 0..grid.steps {
        let hk = checked_sample(h, grid.midpoint(k))?;
        u = expm_hermitian(&hk, dt) * u;
    }
    Ok(u)
}

/// Qubit fast path of [`propagate`]. Traceless by construction, so no
/// Hermiticity check is needed.
pub fn propagate_qubit(h: &dyn QubitHamiltonian, grid: &TimeGrid) -> Vec<Qubit> {
    let dt = grid.dt();
    let mut out = Vec::with_capacity(grid.steps + 1);
    let mut u = Qubit::identity();
    out.push(u);
    for k in 0..grid.steps {
        u = qubit_step(&h.coefficients(grid.midpoint(k)), dt) * u;
        out.push(u);
    }
    out
}

pub fn propagate_qubit_final(h: &dyn QubitHamiltonian, grid: &TimeGrid) -> Qubit {
    let dt = grid.dt();
    let mut u = Qubit::identity();
    for k in 0..grid.steps {
        u = qubit_step(&h.coefficients(grid.midpoint(k)), dt) * u;
    }
    u
}

/// Max entrywise distance between two matrices after removing the relative
/// global phase.
pub fn phase_insensitive_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let ov = (b.adjoint() * a).trace();
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
    let diff = a - b * phase;
    max_abs_entry(diff.iter())
}

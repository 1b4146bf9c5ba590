//! Clifford randomized benchmarking with coherent pulse errors and per-gate
//! decoherence, plus the interleaved variant and decay fitting.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{decoherence_channel, DecoherenceSetting, Superop};
use crate::clifford::{CliffordGroup, Generator};
use crate::error::{invalid, Error, Result};
use crate::library;
use crate::noise::{NoiseSource, NoisyQubit};
use crate::pulse::XYPulse;
use crate::quantum::{propagate_qubit_final, to_dynamic, ComplexMatrix, TimeGrid, C64};
use crate::seeding::{rb_index, stream_rng, StreamKind};

/// Default divisor converting the per-Clifford decay into an error per
/// physical gate.
pub const DEFAULT_DIVISOR: f64 = 3.75;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalGate {
    pub unitary: ComplexMatrix,
    pub duration: f64,
}

/// Simulated unitaries of the six generators, with their durations.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSet {
    pub name: String,
    pub gates: BTreeMap<Generator, PhysicalGate>,
}

/// Built-in pulse families for the generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateSetKind {
    Gaussian,
    Rcp,
}

impl GateSetKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Rcp => "rcp",
        }
    }

    /// x pulses for the π and π/2 rotations.
    fn base_pulses(self) -> (XYPulse, XYPulse) {
        match self {
            Self::Gaussian => (
                XYPulse::x_only(library::gaussian_x(PI)),
                XYPulse::x_only(library::gaussian_x(PI / 2.0)),
            ),
            Self::Rcp => (
                XYPulse::x_only(library::x_r_pi()),
                XYPulse::x_only(library::x_r_pi_half()),
            ),
        }
    }

    /// Generator pulses: y and negative rotations come from carrier phases
    /// of the two x pulses.
    pub fn pulses(self) -> BTreeMap<Generator, XYPulse> {
        let (full, half) = self.base_pulses();
        Generator::ALL
            .into_iter()
            .map(|g| {
                let (base, phase) = match g {
                    Generator::X => (&full, 0.0),
                    Generator::Y => (&full, PI / 2.0),
                    Generator::X2 => (&half, 0.0),
                    Generator::Y2 => (&half, PI / 2.0),
                    Generator::MX2 => (&half, PI),
                    Generator::MY2 => (&half, -PI / 2.0),
                };
                (g, base.clone().with_carrier_phase(phase))
            })
            .collect()
    }
}

impl FromStr for GateSetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "rcp" => Ok(Self::Rcp),
            other => Err(Error::Unknown {
                what: "gate set",
                value: other.into(),
            }),
        }
    }
}

impl GateSet {
    /// Simulate every pulse under `noise`.
    pub fn simulate(name: &str, pulses: &BTreeMap<Generator, XYPulse>, noise: &NoiseSource) -> Result<Self> {
        let gates = pulses
            .iter()
            .map(|(g, p)| {
                let grid = TimeGrid::with_default_density(p.duration())?;
                let u = propagate_qubit_final(&NoisyQubit::new(p, noise), &grid);
                Ok((
                    *g,
                    PhysicalGate {
                        unitary: to_dynamic(&u),
                        duration: p.duration(),
                    },
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            name: name.to_string(),
            gates,
        })
    }

    pub fn standard(kind: GateSetKind, noise: &NoiseSource) -> Result<Self> {
        Self::simulate(kind.label(), &kind.pulses(), noise)
    }

    /// Exact generators, all of length `duration`.
    pub fn ideal(duration: f64) -> Self {
        Self {
            name: "ideal".into(),
            gates: Generator::ALL
                .into_iter()
                .map(|g| {
                    (
                        g,
                        PhysicalGate {
                            unitary: g.unitary(),
                            duration,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn gate(&self, g: Generator) -> Result<&PhysicalGate> {
        self.gates.get(&g).ok_or_else(|| Error::MissingGenerator(g.label().into()))
    }

    /// Pulse unitary followed by decoherence over its duration.
    pub fn gate_channel(&self, g: Generator, decoherence: &DecoherenceSetting) -> Result<Superop> {
        let gate = self.gate(g)?;
        Ok(Superop::unitary(&gate.unitary).then(&decoherence_channel(decoherence, gate.duration)?))
    }

    /// Compiled channel of every group element, in group order.
    pub fn clifford_channels(&self, group: &CliffordGroup, decoherence: &DecoherenceSetting) -> Result<Vec<Superop>> {
        for g in Generator::ALL {
            self.gate(g)?;
        }
        let per_gate: BTreeMap<Generator, Superop> = Generator::ALL
            .into_iter()
            .map(|g| Ok((g, self.gate_channel(g, decoherence)?)))
            .collect::<Result<_>>()?;
        Ok(group
            .elements
            .iter()
            .map(|c| {
                c.decomposition
                    .iter()
                    .fold(Superop::identity(2), |s, g| s.then(&per_gate[g]))
            })
            .collect())
    }
}

/// A fixed gate interleaved after every random Clifford.
#[derive(Debug, Clone)]
pub struct Interleaved {
    /// Group index of the ideal gate.
    pub clifford: usize,
    pub channel: Superop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub sequences: usize,
    pub seed: u64,
    /// Binomial sampling of each sequence fidelity; `None` is infinite-shot.
    #[serde(default)]
    pub shots: Option<u64>,
}

impl RbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(invalid("m", "at least one Clifford length"));
        }
        if self.sequences == 0 {
            return Err(invalid("sequences", "at least one sequence per length"));
        }
        if self.shots == Some(0) {
            return Err(invalid("shots", "must be positive"));
        }
        Ok(())
    }
}

/// Standard lengths up to 1000 Cliffords.
pub const STANDARD_LENGTHS: [usize; 14] = [1, 10, 25, 50, 75, 100, 150, 200, 300, 400, 500, 600, 800, 1000];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RBDataset {
    pub lengths: Vec<usize>,
    /// `fidelities[i][s]`: sequence `s` at length `lengths[i]`.
    pub fidelities: Vec<Vec<f64>>,
    pub noise: String,
    pub seed: u64,
}

impl RBDataset {
    pub fn means(&self) -> Vec<f64> {
        self.fidelities
            .iter()
            .map(|f| f.iter().sum::<f64>() / f.len() as f64)
            .collect()
    }

    /// `(m, sequence index, fidelity)` rows in length-major order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.lengths
            .iter()
            .zip(&self.fidelities)
            .flat_map(|(&m, f)| f.iter().enumerate().map(move |(s, &v)| (m, s, v)))
    }
}

fn fixed(s: &Superop) -> Matrix4<C64> {
    Matrix4::from_iterator(s.matrix.iter().copied())
}

/// Ground-state return probability of each random sequence. Without an
/// interleaved gate the streams are the reference ones, otherwise the
/// interleaved ones, so both experiments draw independent sequences.
pub fn rb_run(
    group: &CliffordGroup,
    channels: &[Superop],
    interleaved: Option<&Interleaved>,
    config: &RbConfig,
    noise: &str,
) -> Result<RBDataset> {
    config.validate()?;
    if channels.len() != group.len() {
        return Err(Error::DimensionMismatch {
            expected: group.len(),
            got: channels.len(),
        });
    }
    let mats: Vec<Matrix4<C64>> = channels.iter().map(fixed).collect();
    let inter = interleaved.map(|i| (i.clifford, fixed(&i.channel)));
    let kind = if interleaved.is_some() { StreamKind::Irb } else { StreamKind::Rb };
    let jobs: Vec<(usize, usize)> = config
        .lengths
        .iter()
        .flat_map(|&m| (0..config.sequences).map(move |s| (m, s)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(m, s)| {
            let mut rng = stream_rng(config.seed, kind, rb_index(m, s));
            // vec(|0⟩⟨0|) in column-stacked order
            let mut v = Vector4::new(C64::new(1.0, 0.0), C64::default(), C64::default(), C64::default());
            let mut total = 0;
            for _ in 0..m {
                let c = rng.random_range(0..group.len());
                v = mats[c] * v;
                total = group.compose(total, c);
                if let Some((ic, im)) = &inter {
                    v = im * v;
                    total = group.compose(total, *ic);
                }
            }
            v = mats[group.inverse(total)] * v;
            let f = v[0].re.clamp(0.0, 1.0);
            match config.shots {
                None => f,
                Some(n) => {
                    let mut shots = stream_rng(config.seed, StreamKind::Shots, rb_index(m, s));
                    let k = Binomial::new(n, f).expect("probability in [0, 1]").sample(&mut shots);
                    k as f64 / n as f64
                }
            }
        })
        .collect();
    Ok(RBDataset {
        lengths: config.lengths.clone(),
        fidelities: values.chunks(config.sequences).map(<[f64]>::to_vec).collect(),
        noise: noise.to_string(),
        seed: config.seed,
    })
}

/// Fitted `F = A p^m + B` with `F_avg = 1 − (1 − p)/divisor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RbFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub f_avg: f64,
    pub divisor: f64,
}

impl RbFit {
    pub fn error_per_gate(&self) -> f64 {
        1.0 - self.f_avg
    }
}

/// Least squares for `y ≈ A x + B` with `A, B ∈ [0, 1]`.
fn box_linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let sse = |a: f64, b: f64| x.iter().zip(y).map(|(xi, yi)| (a * xi + b - yi).powi(2)).sum::<f64>();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let mut candidates = Vec::with_capacity(5);
    if sxx > 1e-300 {
        let a = sxy / sxx;
        let b = my - a * mx;
        if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
            candidates.push((a, b));
        }
    }
    // edges of the box: one coefficient pinned, the other solved and clamped
    let sx2: f64 = x.iter().map(|v| v * v).sum();
    for edge in [0.0, 1.0] {
        candidates.push((edge, (my - edge * mx).clamp(0.0, 1.0)));
        let a = if sx2 > 0.0 {
            (x.iter().zip(y).map(|(xi, yi)| xi * (yi - edge)).sum::<f64>() / sx2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        candidates.push((a, edge));
    }
    candidates
        .into_iter()
        .map(|(a, b)| (a, b, sse(a, b)))
        .min_by(|l, r| l.2.total_cmp(&r.2))
        .expect("non-empty candidate list")
}

/// Bounded fit of `y = A p^m + B`: the linear coefficients are eliminated
/// for each `p`, which is located by a log-spaced scan in `1 − p` refined by
/// golden-section search.
pub fn fit_decay(m: &[f64], y: &[f64], divisor: f64) -> Result<RbFit> {
    if m.len() != y.len() || m.len() < 3 {
        return Err(invalid("rb data", "need at least three (m, F) points"));
    }
    if !(divisor > 0.0) {
        return Err(invalid("divisor", "must be positive"));
    }
    let profile = |s: f64| {
        let p = 1.0 - 10f64.powf(s);
        let x: Vec<f64> = m.iter().map(|&mi| p.powf(mi)).collect();
        box_linear_fit(&x, y).2
    };
    let (lo, hi, n) = (-9.0, 0.0, 400);
    let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| profile(s)).collect();
    let k = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("grid");
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(n)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (profile(c), profile(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = profile(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = profile(d);
        }
    }
    let s = 0.5 * (a + b);
    // no decay at all: p = 1 wins ties
    let flat = box_linear_fit(&vec![1.0; m.len()], y).2;
    let p = if flat <= profile(s) { 1.0 } else { 1.0 - 10f64.powf(s) };
    let x: Vec<f64> = m.iter().map(|&mi| p.powf(mi)).collect();
    let (amp, off, _) = box_linear_fit(&x, y);
    Ok(RbFit {
        a: amp,
        p,
        b: off,
        f_avg: 1.0 - (1.0 - p) / divisor,
        divisor,
    })
}

/// Fit of the sequence-averaged fidelities.
pub fn rb_fit(data: &RBDataset, divisor: f64) -> Result<RbFit> {
    let m: Vec<f64> = data.lengths.iter().map(|&v| v as f64).collect();
    fit_decay(&m, &data.means(), divisor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrbResult {
    pub fidelity: f64,
    /// `p_gate > p_ref`, possible only through statistical fluctuation.
    pub unphysical: bool,
}

/// `F_gate = 1 − (1 − p_gate/p_ref)/2`.
pub fn irb_fidelity(p_gate: f64, p_ref: f64) -> IrbResult {
    IrbResult {
        fidelity: 1.0 - (1.0 - p_gate / p_ref) / 2.0,
        unphysical: p_gate > p_ref,
    }
}

/// Unbiased variance across sequences at each length; NaN with fewer than
/// two sequences.
pub fn sequence_variance(data: &RBDataset) -> Vec<(usize, f64)> {
    data.lengths
        .iter()
        .zip(&data.fidelities)
        .map(|(&m, f)| {
            let n = f.len() as f64;
            if f.len() < 2 {
                return (m, f64::NAN);
            }
            let mean = f.iter().sum::<f64>() / n;
            (m, f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0))
        })
        .collect()
}

/// Depolarizing-approximation decay of an ideal gate set under decoherence
/// alone: each pulse contributes `p_g = 2F_g − 1` and a Clifford of `n`
/// pulses contributes `p_g^n`, averaged over the group.
pub fn decoherence_decay_estimate(group: &CliffordGroup, durations: &BTreeMap<Generator, f64>, s: &DecoherenceSetting) -> Result<f64> {
    let mut total = 0.0;
    for c in &group.elements {
        let mut p = 1.0;
        for g in &c.decomposition {
            let tau = *durations.get(g).ok_or_else(|| Error::MissingGenerator(g.label().into()))?;
            let f = crate::fidelity::channel_gate_fidelity(&decoherence_channel(s, tau)?, &ComplexMatrix::identity(2, 2));
            p *= 2.0 * f - 1.0;
        }
        total += p;
    }
    Ok(total / group.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::DephasingModel;
    use crate::noise::static_detuning;
    use crate::quantum::phase_insensitive_distance;

    fn config(lengths: Vec<usize>, sequences: usize) -> RbConfig {
        RbConfig {
            lengths,
            sequences,
            seed: 1,
            shots: None,
        }
    }

    #[test]
    fn noiseless_sequences_return_to_ground() {
        let group = CliffordGroup::new();
        let ch = GateSet::ideal(20.0).clifford_channels(&group, &DecoherenceSetting::none()).unwrap();
        let data = rb_run(&group, &ch, None, &config(vec![1, 7, 50], 5), "none").unwrap();
        assert!(data.rows().all(|(_, _, f)| (f - 1.0).abs() < 1e-9));
    }

    #[test]
    fn standard_sets_implement_their_generators() {
        for kind in [GateSetKind::Gaussian, GateSetKind::Rcp] {
            let set = GateSet::standard(kind, &NoiseSource::none()).unwrap();
            for g in Generator::ALL {
                let d = phase_insensitive_distance(&set.gate(g).unwrap().unitary, &g.unitary());
                assert!(d < 2e-2, "{kind:?} {g} {d}");
            }
        }
    }

    #[test]
    fn missing_generator_rejected() {
        let mut set = GateSet::ideal(20.0);
        set.gates.remove(&Generator::MY2);
        let r = set.clifford_channels(&CliffordGroup::new(), &DecoherenceSetting::none());
        assert!(matches!(r, Err(Error::MissingGenerator(_))));
    }

    #[test]
    fn depolarizing_cliffords_give_their_parameter() {
        let group = CliffordGroup::new();
        let q = 0.99;
        let depol = {
            let mut m = Superop::identity(2).matrix * C64::new(q, 0.0);
            // (1 − q) tr(ρ) I/2 in column-stacked form
            for r in [0, 3] {
                for c in [0, 3] {
                    m[(r, c)] += C64::new((1.0 - q) / 2.0, 0.0);
                }
            }
            Superop { dim: 2, matrix: m }
        };
        let ch: Vec<Superop> = group.elements.iter().map(|c| Superop::unitary(&c.unitary).then(&depol)).collect();
        let data = rb_run(&group, &ch, None, &config(vec![1, 5, 10, 20, 50, 100, 200, 400], 3), "depol").unwrap();
        let fit = rb_fit(&data, DEFAULT_DIVISOR).unwrap();
        assert!((fit.p - q).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn decoherence_decay_matches_estimate() {
        let group = CliffordGroup::new();
        let s = DecoherenceSetting::new(20.0, 25.0, DephasingModel::PureDephasing).unwrap();
        let set = GateSet::ideal(50.0);
        let ch = set.clifford_channels(&group, &s).unwrap();
        let data = rb_run(&group, &ch, None, &config(STANDARD_LENGTHS.to_vec(), 20), "T1/T2").unwrap();
        let fit = rb_fit(&data, DEFAULT_DIVISOR).unwrap();
        let durations = set.gates.iter().map(|(g, p)| (*g, p.duration)).collect();
        let predicted = decoherence_decay_estimate(&group, &durations, &s).unwrap();
        let rel = ((1.0 - fit.p) - (1.0 - predicted)).abs() / (1.0 - predicted);
        assert!(rel < 0.1, "{} {predicted}", fit.p);
    }

    #[test]
    fn synthetic_fit_recovers_parameters() {
        let m: Vec<f64> = STANDARD_LENGTHS.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = m.iter().map(|v| 0.5 * 0.996f64.powf(*v) + 0.5).collect();
        let fit = fit_decay(&m, &y, DEFAULT_DIVISOR).unwrap();
        assert!((fit.p - 0.996).abs() < 1e-4, "{fit:?}");
        assert!((fit.a - 0.5).abs() < 1e-3 && (fit.b - 0.5).abs() < 1e-3);
    }

    #[test]
    fn flat_data_fit_is_perfect() {
        let m: Vec<f64> = STANDARD_LENGTHS.iter().map(|&v| v as f64).collect();
        let fit = fit_decay(&m, &vec![1.0; m.len()], DEFAULT_DIVISOR).unwrap();
        assert_eq!(fit.p, 1.0);
        assert_eq!(fit.f_avg, 1.0);
    }

    #[test]
    fn divisor_arithmetic() {
        let f = 1.0 - (1.0 - 0.99625) / DEFAULT_DIVISOR;
        assert!((f - 0.999).abs() < 1e-12);
    }

    #[test]
    fn irb_formula() {
        assert_eq!(irb_fidelity(0.999, 0.999).fidelity, 1.0);
        let r = irb_fidelity(0.998, 0.999);
        assert!((r.fidelity - (1.0 - (1.0 - 0.998 / 0.999) / 2.0)).abs() < 1e-15);
        assert!((r.fidelity - 0.9995).abs() < 1e-6);
        assert!(!r.unphysical);
        assert!(irb_fidelity(0.9995, 0.999).unphysical);
    }

    #[test]
    fn variance_of_identical_sequences_is_zero() {
        let data = RBDataset {
            lengths: vec![1, 2],
            fidelities: vec![vec![0.9; 4], vec![0.8; 4]],
            noise: String::new(),
            seed: 0,
        };
        assert!(sequence_variance(&data).iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn runs_are_deterministic_and_shots_are_binomial() {
        let group = CliffordGroup::new();
        let set = GateSet::standard(GateSetKind::Gaussian, &static_detuning(0.01)).unwrap();
        let ch = set.clifford_channels(&group, &DecoherenceSetting::none()).unwrap();
        let mut cfg = config(vec![5, 30], 4);
        let a = rb_run(&group, &ch, None, &cfg, "d").unwrap();
        let b = rb_run(&group, &ch, None, &cfg, "d").unwrap();
        assert_eq!(a, b);
        cfg.shots = Some(100);
        let s = rb_run(&group, &ch, None, &cfg, "d").unwrap();
        assert!(s.rows().all(|(_, _, f)| (f * 100.0 - (f * 100.0).round()).abs() < 1e-9));
    }

    #[test]
    fn interleaving_identity_like_gate_matches_reference_decay() {
        let group = CliffordGroup::new();
        let s = DecoherenceSetting::new(20.0, 25.0, DephasingModel::PureDephasing).unwrap();
        let ch = GateSet::ideal(50.0).clifford_channels(&group, &s).unwrap();
        let inter = Interleaved {
            clifford: 0,
            channel: Superop::identity(2),
        };
        let cfg = config(STANDARD_LENGTHS.to_vec(), 20);
        let r = rb_fit(&rb_run(&group, &ch, None, &cfg, "").unwrap(), DEFAULT_DIVISOR).unwrap();
        let i = rb_fit(&rb_run(&group, &ch, Some(&inter), &cfg, "").unwrap(), DEFAULT_DIVISOR).unwrap();
        assert!((irb_fidelity(i.p, r.p).fidelity - 1.0).abs() < 2e-4);
    }
}

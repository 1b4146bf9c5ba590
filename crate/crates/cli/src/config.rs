//! Experiment configuration (TOML). Physical values carry their unit in the
//! key name; frequencies are `f = ω/2π` in MHz.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rcp_core::channel::{DecoherenceSetting, DephasingModel};
use rcp_core::library;
use rcp_core::noise::NoiseFamily;
use rcp_core::optimizer::{CostWeights, DriveMode};
use rcp_core::pulse::XYPulse;
use rcp_core::quantum::{Axis, ComplexMatrix};
use rcp_core::rb::{GateSetKind, DEFAULT_DIVISOR, STANDARD_LENGTHS};
use rcp_core::twoqubit::PairModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::pulsefile::PulseFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Design,
    Curve,
    Sweep1d,
    Sweep2d,
    Qpt,
    Rb,
    Irb,
    Twoqubit,
    Margin,
    Fig3d,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Design => "design",
            Self::Curve => "curve",
            Self::Sweep1d => "sweep1d",
            Self::Sweep2d => "sweep2d",
            Self::Qpt => "qpt",
            Self::Rb => "rb",
            Self::Irb => "irb",
            Self::Twoqubit => "twoqubit",
            Self::Margin => "margin",
            Self::Fig3d => "fig3d",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::Design | Self::Rb | Self::Irb | Self::Twoqubit)
    }
}

/// One pulse: a built-in name, a pulse file, or an inline pulse table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<PulseFile>,
    /// Stretch the duration by this factor, keeping the rotation angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale: Option<f64>,
}

/// A resolved pulse with its label and ideal target.
#[derive(Debug, Clone)]
pub struct ResolvedPulse {
    pub name: String,
    pub pulse: XYPulse,
    pub target: ComplexMatrix,
}

impl PulseRef {
    pub fn builtin(name: &str) -> Self {
        Self {
            builtin: Some(name.into()),
            file: None,
            inline: None,
            rescale: None,
        }
    }

    pub fn resolve(&self, base: &Path) -> Result<ResolvedPulse> {
        let (name, pulse, target) = match (&self.builtin, &self.file, &self.inline) {
            (Some(b), None, None) => {
                let n = library::named(b)?;
                (n.name.to_string(), n.pulse, n.target)
            }
            (None, Some(f), None) => {
                let file = PulseFile::load(&base.join(f))?;
                (file.name.clone(), file.to_pulse()?, file.target())
            }
            (None, None, Some(inline)) => (inline.name.clone(), inline.to_pulse()?, inline.target()),
            _ => bail!("a pulse needs exactly one of `builtin`, `file` or `inline`"),
        };
        Ok(match self.rescale {
            None => ResolvedPulse { name, pulse, target },
            Some(alpha) => ResolvedPulse {
                name: format!("{name}@x{alpha}"),
                pulse: pulse.rescale(alpha)?,
                target,
            },
        })
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// A noise axis. Values of frequency families are in MHz, amplitude noise
/// is dimensionless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseAxis {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeSpec>,
}

impl NoiseAxis {
    pub fn family(&self) -> Result<NoiseFamily> {
        self.family.parse().map_err(|e| anyhow!("{e}"))
    }

    /// Values as written in the config.
    pub fn raw_values(&self) -> Result<Vec<f64>> {
        match (&self.values, &self.range) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some(r)) => Ok(r.values()),
            (None, None) => Ok(Vec::new()),
            (Some(_), Some(_)) => bail!("give either `values` or `range`, not both"),
        }
    }

    /// Config values converted to internal units (rad/ns or dimensionless).
    pub fn internal_values(&self) -> Result<Vec<(f64, f64)>> {
        let fam = self.family()?;
        Ok(self
            .raw_values()?
            .into_iter()
            .map(|v| (v, if fam.is_frequency() { mhz(v) } else { v }))
            .collect())
    }

    pub fn unit(&self) -> Result<&'static str> {
        Ok(if self.family()?.is_frequency() { "MHz" } else { "1" })
    }
}

/// MHz (f = ω/2π) to rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

fn default_angle_deg() -> f64 {
    180.0
}
fn default_x() -> Axis {
    Axis::X
}
fn default_duration() -> f64 {
    library::TABLE_DURATION
}
fn default_order() -> usize {
    2
}
fn default_mode() -> DriveMode {
    DriveMode::XOnly
}
fn default_restarts() -> usize {
    8
}
fn default_tolerance() -> f64 {
    1e-4
}
fn default_iterations() -> usize {
    300
}
fn default_verify() -> usize {
    4000
}
fn default_design_noise() -> Vec<String> {
    vec!["detuning".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    #[serde(default = "default_x")]
    pub target_axis: Axis,
    #[serde(default = "default_angle_deg")]
    pub target_angle_deg: f64,
    #[serde(default = "default_design_noise")]
    pub noise: Vec<String>,
    #[serde(rename = "T_ns", default = "default_duration")]
    pub t_ns: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_mode")]
    pub mode: DriveMode,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_verify")]
    pub verify_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<CostWeights>,
}

impl Default for DesignSection {
    fn default() -> Self {
        toml::from_str("").expect("all design fields have defaults")
    }
}

impl DesignSection {
    pub fn target(&self) -> ComplexMatrix {
        library::rotation(self.target_axis, self.target_angle_deg.to_radians())
    }
}

fn default_gate_sets() -> Vec<GateSetKind> {
    vec![GateSetKind::Gaussian, GateSetKind::Rcp]
}
fn default_lengths() -> Vec<usize> {
    STANDARD_LENGTHS.to_vec()
}
fn default_sequences() -> usize {
    20
}
fn default_divisor() -> f64 {
    DEFAULT_DIVISOR
}
fn default_interleave() -> String {
    "X".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbSection {
    #[serde(default = "default_gate_sets")]
    pub gate_sets: Vec<GateSetKind>,
    #[serde(default = "default_lengths")]
    pub lengths: Vec<usize>,
    #[serde(default = "default_sequences")]
    pub sequences: usize,
    /// Extra run with more sequences for the variance table; defaults to
    /// `sequences`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_sequences: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default = "default_divisor")]
    pub divisor: f64,
    /// Generator interleaved in `irb` runs.
    #[serde(default = "default_interleave")]
    pub interleave: String,
}

impl Default for RbSection {
    fn default() -> Self {
        toml::from_str("").expect("all rb fields have defaults")
    }
}

fn default_models() -> Vec<PairModel> {
    vec![PairModel::Qubit4, PairModel::Transmon9]
}
fn default_rcp_source() -> String {
    "design".into()
}
fn default_threshold() -> f64 {
    0.999
}
fn default_omega_max() -> f64 {
    library::OMEGA_MAX / TAU * 1e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitSection {
    #[serde(default = "default_models")]
    pub models: Vec<PairModel>,
    /// `design` to optimize a robust coupling, or a built-in pulse name.
    #[serde(default = "default_rcp_source")]
    pub rcp: String,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Peak of the matched drive, so `g` peaks at half of it.
    #[serde(rename = "omega_max_MHz", default = "default_omega_max")]
    pub omega_max_mhz: f64,
    #[serde(default)]
    pub design: DesignSection,
}

impl Default for TwoQubitSection {
    fn default() -> Self {
        toml::from_str("").expect("all twoqubit fields have defaults")
    }
}

fn default_fidelity_floor() -> f64 {
    0.99
}
fn default_margin_families() -> Vec<String> {
    vec!["detuning".into()]
}
fn default_upper_mhz() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginSection {
    #[serde(default = "default_margin_families")]
    pub families: Vec<String>,
    #[serde(default = "default_fidelity_floor")]
    pub f: f64,
    /// Search limit for frequency families.
    #[serde(rename = "upper_MHz", default = "default_upper_mhz")]
    pub upper_mhz: f64,
    /// Search limit for amplitude noise.
    #[serde(default = "default_upper_amplitude")]
    pub upper_amplitude: f64,
}

fn default_upper_amplitude() -> f64 {
    0.5
}

impl Default for MarginSection {
    fn default() -> Self {
        toml::from_str("").expect("all margin fields have defaults")
    }
}

fn default_tr() -> f64 {
    80.0
}
fn default_tg() -> f64 {
    34.0
}
fn default_eps() -> RangeSpec {
    RangeSpec {
        start: 0.0,
        stop: 0.2,
        points: 21,
    }
}
fn default_times() -> RangeSpec {
    RangeSpec {
        start: 1.0,
        stop: 100.0,
        points: 21,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3dSection {
    #[serde(rename = "rcp_duration_ns", default = "default_tr")]
    pub rcp_duration_ns: f64,
    #[serde(rename = "gaussian_duration_ns", default = "default_tg")]
    pub gaussian_duration_ns: f64,
    /// Relative amplitude error ε; the detuning is `ε·Ω_max`.
    #[serde(default = "default_eps")]
    pub eps: RangeSpec,
    /// `T1 = T2` values, log-spaced when `log_times` is set.
    #[serde(rename = "t_us", default = "default_times")]
    pub t_us: RangeSpec,
    #[serde(default = "default_true")]
    pub log_times: bool,
    #[serde(default)]
    pub model: DephasingModel,
}

fn default_true() -> bool {
    true
}

impl Default for Fig3dSection {
    fn default() -> Self {
        toml::from_str("").expect("all fig3d fields have defaults")
    }
}

impl Fig3dSection {
    pub fn times(&self) -> Vec<f64> {
        if !self.log_times || self.t_us.points < 2 {
            return self.t_us.values();
        }
        let (a, b) = (self.t_us.start.ln(), self.t_us.stop.ln());
        RangeSpec {
            start: a,
            stop: b,
            points: self.t_us.points,
        }
        .values()
        .into_iter()
        .map(f64::exp)
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Time steps per pulse (optimizer grid for `design`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoherence: Option<DecoherenceSetting>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulses: Vec<PulseRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise2: Option<NoiseAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb: Option<RbSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twoqubit: Option<TwoQubitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<MarginSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fig3d: Option<Fig3dSection>,
}

impl ExperimentConfig {
    /// Parse TOML, reporting schema violations with the offending field path.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)?;
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| anyhow!("config field `{}`: {}", e.path(), e.inner()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Checks that need more than the type system.
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.steps {
            if s == 0 {
                bail!("config field `steps`: must be positive");
            }
        }
        if let Some(d) = &self.decoherence {
            d.validate().context("config field `decoherence`")?;
        }
        for (name, axis) in [("noise", &self.noise), ("noise2", &self.noise2)] {
            if let Some(a) = axis {
                if a.family != "delta_minus" {
                    a.family().with_context(|| format!("config field `{name}.family`"))?;
                }
                a.raw_values().with_context(|| format!("config field `{name}`"))?;
            }
        }
        if let Some(d) = &self.design {
            for (i, n) in d.noise.iter().enumerate() {
                n.parse::<NoiseFamily>()
                    .map_err(|e| anyhow!("config field `design.noise[{i}]`: {e}"))?;
            }
            if !(d.t_ns > 0.0) {
                bail!("config field `design.T_ns`: must be positive");
            }
        }
        if let Some(m) = &self.margin {
            for (i, n) in m.families.iter().enumerate() {
                n.parse::<NoiseFamily>()
                    .map_err(|e| anyhow!("config field `margin.families[{i}]`: {e}"))?;
            }
            if !(m.f > 0.0 && m.f < 1.0) {
                bail!("config field `margin.f`: must lie in (0, 1)");
            }
        }
        if let Some(r) = &self.rb {
            if r.divisor <= 0.0 {
                bail!("config field `rb.divisor`: must be positive");
            }
        }
        Ok(())
    }

    /// Experiment kind: the subcommand wins, but must agree with the file.
    pub fn resolve_kind(&self, requested: ExperimentKind) -> Result<ExperimentKind> {
        let kind = match (requested, self.experiment) {
            (ExperimentKind::Sweep1d, Some(k @ (ExperimentKind::Sweep1d | ExperimentKind::Sweep2d))) => k,
            (ExperimentKind::Sweep1d, None) if self.noise2.is_some() => ExperimentKind::Sweep2d,
            (r, None) => r,
            (r, Some(k)) if r == k => r,
            (r, Some(k)) => bail!("config declares experiment `{}` but `{}` was requested", k.label(), r.label()),
        };
        if kind.is_stochastic() && self.seed.is_none() {
            bail!("config field `seed`: required for `{}`", kind.label());
        }
        Ok(kind)
    }

    pub fn decoherence(&self) -> DecoherenceSetting {
        self.decoherence.unwrap_or_else(DecoherenceSetting::none)
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> Result<String> {
        let canonical = toml::to_string(self)?;
        Ok(Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_name_the_field() {
        let err = ExperimentConfig::parse("seed = 1\n[noise]\nfamily = 'detuning'\nvalue = [1]\n").unwrap_err();
        assert!(format!("{err:#}").contains("noise"), "{err:#}");
        let err = ExperimentConfig::parse("[decoherence]\nt1_us = 'x'\nt2_us = 1\n").unwrap_err();
        assert!(format!("{err:#}").contains("decoherence.t1_us"), "{err:#}");
        let err = ExperimentConfig::parse("[noise]\nfamily = 'bogus'\nvalues = []\n").unwrap_err();
        assert!(format!("{err:#}").contains("noise.family"), "{err:#}");
    }

    #[test]
    fn unphysical_decoherence_rejected() {
        assert!(ExperimentConfig::parse("[decoherence]\nt1_us = 10\nt2_us = 30\n").is_err());
    }

    #[test]
    fn seed_required_for_stochastic_runs() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert!(cfg.resolve_kind(ExperimentKind::Rb).is_err());
        assert!(cfg.resolve_kind(ExperimentKind::Sweep1d).is_ok());
    }

    #[test]
    fn sweep_dimension_follows_axes() {
        let cfg = ExperimentConfig::parse(
            "[noise]\nfamily='amplitude'\nvalues=[0]\n[noise2]\nfamily='detuning'\nvalues=[0]\n",
        )
        .unwrap();
        assert_eq!(cfg.resolve_kind(ExperimentKind::Sweep1d).unwrap(), ExperimentKind::Sweep2d);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::parse("seed = 1").unwrap();
        let b = ExperimentConfig::parse("seed=1\n").unwrap();
        let c = ExperimentConfig::parse("seed = 2").unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn ranges() {
        let r = RangeSpec {
            start: -6.0,
            stop: 6.0,
            points: 5,
        };
        assert_eq!(r.values(), vec![-6.0, -3.0, 0.0, 3.0, 6.0]);
        assert!(RangeSpec { points: 0, ..r }.values().is_empty());
    }

    #[test]
    fn section_defaults() {
        assert_eq!(DesignSection::default().order, 2);
        assert_eq!(RbSection::default().sequences, 20);
        assert_eq!(TwoQubitSection::default().threshold, 0.999);
        assert!((Fig3dSection::default().times()[20] - 100.0).abs() < 1e-9);
    }
}

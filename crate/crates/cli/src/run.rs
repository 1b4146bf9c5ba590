//! Experiment execution. Every experiment renders its tables into an
//! [`Outputs`] value; nothing touches the file system until the caller
//! commits it.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use rcp_core::channel::{decoherence_channel, DecoherenceSetting, Superop};
use rcp_core::clifford::{CliffordGroup, Generator};
use rcp_core::fidelity::{channel_gate_fidelity, noise_margin, FidelityReport, MARGIN_RESOLUTION};
use rcp_core::geometry::{curve_rows, error_curve, frenet_frame, total_error_distance};
use rcp_core::library;
use rcp_core::noise::{NoiseFamily, NoiseSource, NoisyQubit};
use rcp_core::optimizer::{optimize, verify_robustness, OptimizationProblem, RobustnessProbe};
use rcp_core::pulse::{ReferencePulse, ReferenceShape, XYPulse};
use rcp_core::qpt::{qpt_superop, qpt_fidelity, ProcessMatrix};
use rcp_core::quantum::{propagate_qubit_final, to_dynamic, Axis, ComplexMatrix, TimeGrid};
use rcp_core::rb::{irb_fidelity, rb_fit, rb_run, sequence_variance, GateSet, Interleaved, RbConfig};
use rcp_core::twoqubit::{
    amplitude_matched_coupling, cosine_coupling, design_iswap_coupling, iswap_fidelity_sweep, iswap_plateau,
    TransmonPair,
};

use crate::config::{mhz, DesignSection, ExperimentConfig, ExperimentKind, NoiseAxis, RangeSpec, ResolvedPulse};
use crate::output::{num, Meta, Outputs, Table};
use crate::pulsefile::PulseFile;

/// Everything a run needs besides the configuration itself.
#[derive(Debug, Clone)]
pub struct RunContext {
    /// Directory that relative pulse-file paths are resolved against.
    pub base_dir: PathBuf,
}

const FREQ_UNITS: &str = "frequencies as f = omega/2pi in MHz; amplitude noise dimensionless";

fn grid_for(pulse: &XYPulse, steps: Option<usize>) -> Result<TimeGrid> {
    Ok(match steps {
        Some(n) => TimeGrid::new(pulse.duration(), n)?,
        None => TimeGrid::with_default_density(pulse.duration())?,
    })
}

fn pulses(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Vec<ResolvedPulse>> {
    if cfg.pulses.is_empty() {
        bail!("config field `pulses`: at least one pulse is required");
    }
    cfg.pulses
        .iter()
        .enumerate()
        .map(|(i, p)| p.resolve(&ctx.base_dir).with_context(|| format!("config field `pulses[{i}]`")))
        .collect()
}

fn noise_axis<'a>(axis: &'a Option<NoiseAxis>, field: &str) -> Result<&'a NoiseAxis> {
    axis.as_ref().ok_or_else(|| anyhow!("config field `{field}`: required for this experiment"))
}

fn combine(a: NoiseSource, b: NoiseSource) -> NoiseSource {
    NoiseSource {
        label: format!("{}+{}", a.label, b.label),
        directions: a.directions.into_iter().chain(b.directions).collect(),
    }
}

fn simulate(pulse: &XYPulse, noise: &NoiseSource, steps: Option<usize>) -> Result<ComplexMatrix> {
    let grid = grid_for(pulse, steps)?;
    Ok(to_dynamic(&propagate_qubit_final(&NoisyQubit::new(pulse, noise), &grid)))
}

/// Gate channel: noisy pulse unitary followed by decoherence over its length.
fn gate_channel(pulse: &XYPulse, noise: &NoiseSource, deco: &DecoherenceSetting, steps: Option<usize>) -> Result<Superop> {
    let u = simulate(pulse, noise, steps)?;
    Ok(Superop::unitary(&u).then(&decoherence_channel(deco, pulse.duration())?))
}

pub fn execute(kind: ExperimentKind, cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outputs> {
    let meta = Meta {
        experiment: kind.label().into(),
        config_hash: cfg.hash()?,
        seed: cfg.seed,
    };
    let mut out = Outputs::default();
    let mut notes: Vec<(String, String)> = Vec::new();
    match kind {
        ExperimentKind::Design => design(cfg, &meta, &mut out, &mut notes)?,
        ExperimentKind::Curve => curve(cfg, ctx, &meta, &mut out)?,
        ExperimentKind::Sweep1d => sweep1d(cfg, ctx, &meta, &mut out)?,
        ExperimentKind::Sweep2d => sweep2d(cfg, ctx, &meta, &mut out)?,
        ExperimentKind::Qpt => qpt(cfg, ctx, &meta, &mut out)?,
        ExperimentKind::Rb => rb(cfg, &meta, &mut out, &mut notes, false)?,
        ExperimentKind::Irb => rb(cfg, &meta, &mut out, &mut notes, true)?,
        ExperimentKind::Twoqubit => twoqubit(cfg, &meta, &mut out, &mut notes)?,
        ExperimentKind::Margin => margin(cfg, ctx, &meta, &mut out)?,
        ExperimentKind::Fig3d => fig3d(cfg, &meta, &mut out, &mut notes)?,
    }
    let manifest = manifest(cfg, &meta, &out, &notes)?;
    out.add("manifest.toml", manifest.into_bytes());
    Ok(out)
}

/// Execute and write into `out_dir`.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig, ctx: &RunContext, out_dir: &Path) -> Result<Vec<PathBuf>> {
    execute(kind, cfg, ctx)?.commit(out_dir)
}

fn manifest(cfg: &ExperimentConfig, meta: &Meta, out: &Outputs, notes: &[(String, String)]) -> Result<String> {
    let mut doc = toml::Table::new();
    doc.insert("tool".into(), format!("rcp {}", env!("CARGO_PKG_VERSION")).into());
    doc.insert("experiment".into(), meta.experiment.clone().into());
    doc.insert("config_sha256".into(), meta.config_hash.clone().into());
    if let Some(s) = meta.seed {
        doc.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    doc.insert(
        "outputs".into(),
        toml::Value::Array(out.names().map(|n| toml::Value::from(n.to_string())).collect()),
    );
    let mut n = toml::Table::new();
    for (k, v) in notes {
        n.insert(k.clone(), v.clone().into());
    }
    doc.insert("results".into(), toml::Value::Table(n));
    doc.insert("config".into(), toml::Value::try_from(cfg)?);
    Ok(toml::to_string(&doc)?)
}

fn problem_from(d: &DesignSection, seed: u64, steps: Option<usize>) -> Result<OptimizationProblem> {
    let families = d
        .noise
        .iter()
        .map(|n| n.parse::<NoiseFamily>().map_err(|e| anyhow!("{e}")))
        .collect::<Result<Vec<_>>>()?;
    let mut p = OptimizationProblem::new(d.target(), families, d.t_ns, d.order);
    p.mode = d.mode;
    p.seed = seed;
    p.tolerance = d.tolerance;
    p.max_iterations = d.max_iterations;
    p.restarts = d.restarts;
    p.verify_steps = d.verify_steps;
    if let Some(n) = steps {
        p.steps = n;
    }
    if let Some(w) = d.weights {
        p.weights = w;
    }
    p.validate()?;
    Ok(p)
}

fn family_label(f: NoiseFamily) -> String {
    f.source(1.0).label
}

fn design(cfg: &ExperimentConfig, meta: &Meta, out: &mut Outputs, notes: &mut Vec<(String, String)>) -> Result<()> {
    let d = cfg.design.clone().unwrap_or_default();
    let problem = problem_from(&d, cfg.seed.unwrap_or_default(), cfg.steps)?;
    let (pulse, trace) = optimize(&problem)?;

    let labels: Vec<String> = problem.noise.iter().map(|f| family_label(*f)).collect();
    let mut header = vec!["restart".to_string(), "iteration".into(), "cost".into(), "fidelity".into()];
    header.extend(labels.iter().map(|l| format!("R_{l}")));
    let mut t = Table {
        header,
        units: "cost and fidelity dimensionless; R is the error distance per unit noise (ns for frequency noise)".into(),
        rows: Vec::new(),
    };
    for r in &trace.rows {
        let mut row = vec![r.restart.to_string(), r.iteration.to_string(), num(r.cost), num(r.fidelity)];
        row.extend(r.distances.iter().map(|v| num(*v)));
        t.push(row);
    }
    out.table("design_trace.csv", &t, meta)?;

    let grid = TimeGrid::new(problem.duration, problem.verify_steps)?;
    let probes: Vec<RobustnessProbe> = problem.noise.iter().map(|f| RobustnessProbe::standard(*f)).collect();
    let mut rt = Table::new(
        &["family", "distance", "arc_length", "closure_ratio", "infidelity_slope"],
        "distance and arc length per unit noise; slope fitted over 0.1 to 1 MHz (frequency) or 1e-3 to 1e-2 (amplitude)",
    );
    for e in verify_robustness(&pulse, &probes, &grid)? {
        rt.push(vec![e.label, num(e.distance), num(e.arc_length), num(e.closure_ratio), num(e.slope)]);
    }
    out.table("design_robustness.csv", &rt, meta)?;

    let file = PulseFile::from_fourier("design", &pulse, d.target_axis, d.target_angle_deg.to_radians())?;
    out.add("design_pulse.toml", file.to_toml()?.into_bytes());
    notes.push(("best_restart".into(), trace.restart.to_string()));
    notes.push(("cost".into(), num(trace.cost)));
    notes.push(("verified_cost".into(), num(trace.verified_cost)));
    notes.push(("converged".into(), trace.converged.to_string()));
    Ok(())
}

fn curve(cfg: &ExperimentConfig, ctx: &RunContext, meta: &Meta, out: &mut Outputs) -> Result<()> {
    let family = match &cfg.noise {
        Some(a) => a.family()?,
        None => NoiseFamily::Detuning,
    };
    for p in pulses(cfg, ctx)? {
        let grid = grid_for(&p.pulse, cfg.steps)?;
        let c = error_curve(&p.pulse, &family.source(1.0), &grid)?;
        let frame = frenet_frame(&c);
        let mut t = Table::new(
            &["t_ns", "rx", "ry", "rz", "v", "kappa", "tau"],
            "t in ns; r per unit noise strength; v = |dr/dt|; kappa and tau per unit arc length; NaN where undefined",
        );
        for row in curve_rows(&c, &frame) {
            t.push(row.iter().map(|v| num(*v)).collect());
        }
        out.table(format!("curve_{}_{}.csv", sanitize(&p.name), c.label), &t, meta)?;
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

fn report_cells(r: &FidelityReport) -> Vec<String> {
    vec![num(r.f_avg), num(r.f_worst), num(r.r), num(r.d_lower), num(r.d_upper)]
}

/// Coherent metrics plus the tomography fidelity of the full gate channel.
fn sweep_point(p: &ResolvedPulse, noise: &NoiseSource, cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let grid = grid_for(&p.pulse, cfg.steps)?;
    let report = FidelityReport::from_distance(total_error_distance(&p.pulse, noise, &grid));
    let ch = gate_channel(&p.pulse, noise, &cfg.decoherence(), cfg.steps)?;
    let f_qpt = qpt_fidelity(&qpt_superop(&ch)?, &ProcessMatrix::from_unitary(&p.target));
    let mut cells = report_cells(&report);
    cells.push(num(f_qpt));
    Ok(cells)
}

const SWEEP_COLUMNS: [&str; 6] = ["F_avg", "F_worst", "R", "D_lower", "D_upper", "F_qpt"];

fn sweep1d(cfg: &ExperimentConfig, ctx: &RunContext, meta: &Meta, out: &mut Outputs) -> Result<()> {
    let axis = noise_axis(&cfg.noise, "noise")?;
    let fam = axis.family()?;
    let values = axis.internal_values()?;
    let ps = pulses(cfg, ctx)?;
    let jobs: Vec<(usize, f64, f64)> = (0..ps.len())
        .flat_map(|i| values.iter().map(move |&(raw, v)| (i, raw, v)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, raw, v)| {
            let mut row = vec![ps[i].name.clone(), axis.family.clone(), num(raw)];
            row.extend(sweep_point(&ps[i], &fam.source(v), cfg)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["pulse", "family", "noise_value"];
    header.extend(SWEEP_COLUMNS);
    let mut t = Table::new(
        &header,
        format!("noise_value in {}; {FREQ_UNITS}; R in rad; D = diamond distance", axis.unit()?),
    );
    t.rows = rows;
    out.table("sweep1d.csv", &t, meta)
}

fn sweep2d(cfg: &ExperimentConfig, ctx: &RunContext, meta: &Meta, out: &mut Outputs) -> Result<()> {
    let a1 = noise_axis(&cfg.noise, "noise")?;
    let a2 = noise_axis(&cfg.noise2, "noise2")?;
    let (f1, f2) = (a1.family()?, a2.family()?);
    let (v1, v2) = (a1.internal_values()?, a2.internal_values()?);
    let ps = pulses(cfg, ctx)?;
    let mut jobs = Vec::new();
    for i in 0..ps.len() {
        for &x in &v1 {
            for &y in &v2 {
                jobs.push((i, x, y));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(i, (r1, x), (r2, y))| {
            let mut row = vec![ps[i].name.clone(), num(r1), num(r2)];
            row.extend(sweep_point(&ps[i], &combine(f1.source(x), f2.source(y)), cfg)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["pulse", "noise1_value", "noise2_value"];
    header.extend(SWEEP_COLUMNS);
    let mut t = Table::new(
        &header,
        format!(
            "noise1 = {} in {}, noise2 = {} in {}; {FREQ_UNITS}",
            a1.family,
            a1.unit()?,
            a2.family,
            a2.unit()?
        ),
    );
    t.rows = rows;
    out.table("sweep2d.csv", &t, meta)
}

fn default_axis() -> NoiseAxis {
    NoiseAxis {
        family: "detuning".into(),
        values: Some(vec![0.0]),
        range: None,
    }
}

fn qpt(cfg: &ExperimentConfig, ctx: &RunContext, meta: &Meta, out: &mut Outputs) -> Result<()> {
    let axis = cfg.noise.clone().unwrap_or_else(default_axis);
    let fam = axis.family()?;
    let values = axis.internal_values()?;
    let ps = pulses(cfg, ctx)?;
    let jobs: Vec<(usize, f64, f64)> = (0..ps.len())
        .flat_map(|i| values.iter().map(move |&(raw, v)| (i, raw, v)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, _, v)| {
            let ch = gate_channel(&ps[i].pulse, &fam.source(v), &cfg.decoherence(), cfg.steps)?;
            let chi = qpt_superop(&ch)?;
            let f = qpt_fidelity(&chi, &ProcessMatrix::from_unitary(&ps[i].target));
            Ok((chi, f, channel_gate_fidelity(&ch, &ps[i].target)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut chi_t = Table::new(
        &["pulse", "noise_value", "m", "n", "re", "im"],
        format!("noise_value in {}; chi in the basis I, X, Y, Z (indices 0..3)", axis.unit()?),
    );
    let mut fid_t = Table::new(
        &["pulse", "noise_value", "F_qpt", "F_avg_channel", "condition"],
        format!("noise_value in {}; fidelities dimensionless", axis.unit()?),
    );
    for (&(i, raw, _), (chi, f, favg)) in jobs.iter().zip(&results) {
        for m in 0..4 {
            for n in 0..4 {
                let z = chi.chi[(m, n)];
                chi_t.push(vec![ps[i].name.clone(), num(raw), m.to_string(), n.to_string(), num(z.re), num(z.im)]);
            }
        }
        fid_t.push(vec![ps[i].name.clone(), num(raw), num(*f), num(*favg), num(chi.condition)]);
    }
    out.table("qpt_chi.csv", &chi_t, meta)?;
    out.table("qpt_fidelity.csv", &fid_t, meta)
}

fn rb(
    cfg: &ExperimentConfig,
    meta: &Meta,
    out: &mut Outputs,
    notes: &mut Vec<(String, String)>,
    interleave: bool,
) -> Result<()> {
    let section = cfg.rb.clone().unwrap_or_default();
    let axis = cfg.noise.clone().unwrap_or_else(default_axis);
    let fam = axis.family()?;
    let values = axis.internal_values()?;
    let seed = cfg.seed.ok_or_else(|| anyhow!("config field `seed`: required"))?;
    let deco = cfg.decoherence();
    let group = CliffordGroup::new();
    notes.push(("average_gates_per_clifford".into(), num(group.average_gate_count())));
    let generator: Generator = section
        .interleave
        .parse()
        .map_err(|e| anyhow!("config field `rb.interleave`: {e}"))?;
    let config = |sequences: usize| RbConfig {
        lengths: section.lengths.clone(),
        sequences,
        seed,
        shots: section.shots,
    };
    let main_cfg = config(section.sequences);
    main_cfg.validate()?;
    let var_cfg = config(section.variance_sequences.unwrap_or(section.sequences));
    var_cfg.validate()?;

    let unit = axis.unit()?;
    let mut data = Table::new(
        &["gate_set", "noise_value", "run", "m", "seq_index", "fidelity"],
        format!("noise_value in {unit}; {FREQ_UNITS}; fidelity = ground-state return probability"),
    );
    let mut fits = Table::new(
        &["gate_set", "noise_value", "run", "A", "p", "B", "F_avg", "divisor", "error_per_gate"],
        format!("noise_value in {unit}; F_avg = 1 - (1 - p)/divisor"),
    );
    let mut var = Table::new(
        &["gate_set", "noise_value", "m", "sigma2"],
        format!("noise_value in {unit}; sigma2 = unbiased sample variance of sequence fidelity"),
    );
    let mut irb_t = Table::new(
        &["gate_set", "noise_value", "generator", "p_ref", "p_gate", "F_gate", "unphysical"],
        format!("noise_value in {unit}; F_gate = 1 - (1 - p_gate/p_ref)/2"),
    );
    for kind in &section.gate_sets {
        for &(raw, v) in &values {
            let set = GateSet::standard(*kind, &fam.source(v))?;
            let ch = set.clifford_channels(&group, &deco)?;
            let label = kind.label().to_string();
            let reference = rb_run(&group, &ch, None, &main_cfg, &format!("{}={raw}", axis.family))?;
            let ref_fit = rb_fit(&reference, section.divisor)?;
            let mut runs = vec![("reference", reference, ref_fit)];
            if interleave {
                let inter = Interleaved {
                    clifford: group
                        .find(&generator.unitary())
                        .ok_or_else(|| anyhow!("generator is not a Clifford element"))?,
                    channel: set.gate_channel(generator, &deco)?,
                };
                let d = rb_run(&group, &ch, Some(&inter), &main_cfg, &format!("{}={raw}", axis.family))?;
                let f = rb_fit(&d, section.divisor)?;
                let r = irb_fidelity(f.p, ref_fit.p);
                irb_t.push(vec![
                    label.clone(),
                    num(raw),
                    generator.label().into(),
                    num(ref_fit.p),
                    num(f.p),
                    num(r.fidelity),
                    r.unphysical.to_string(),
                ]);
                runs.push(("interleaved", d, f));
            }
            for (run, d, f) in &runs {
                for (m, s, fid) in d.rows() {
                    data.push(vec![label.clone(), num(raw), run.to_string(), m.to_string(), s.to_string(), num(fid)]);
                }
                fits.push(vec![
                    label.clone(),
                    num(raw),
                    run.to_string(),
                    num(f.a),
                    num(f.p),
                    num(f.b),
                    num(f.f_avg),
                    num(f.divisor),
                    num(f.error_per_gate()),
                ]);
            }
            let vdata = if var_cfg.sequences == main_cfg.sequences {
                runs.swap_remove(0).1
            } else {
                rb_run(&group, &ch, None, &var_cfg, &format!("{}={raw}", axis.family))?
            };
            for (m, s2) in sequence_variance(&vdata) {
                var.push(vec![label.clone(), num(raw), m.to_string(), num(s2)]);
            }
        }
    }
    let prefix = if interleave { "irb" } else { "rb" };
    out.table(format!("{prefix}_data.csv"), &data, meta)?;
    out.table(format!("{prefix}_fit.csv"), &fits, meta)?;
    out.table(format!("{prefix}_variance.csv"), &var, meta)?;
    if interleave {
        out.table("irb.csv", &irb_t, meta)?;
    }
    Ok(())
}

fn twoqubit(cfg: &ExperimentConfig, meta: &Meta, out: &mut Outputs, notes: &mut Vec<(String, String)>) -> Result<()> {
    let section = cfg.twoqubit.clone().unwrap_or_default();
    let omega_max = mhz(section.omega_max_mhz);
    let pair = TransmonPair::default_pair();
    let rcp = if section.rcp == "design" {
        let problem = problem_from(&section.design, cfg.seed.unwrap_or_default(), cfg.steps)?;
        let (g, trace, _) = design_iswap_coupling(&problem, omega_max, section.threshold)?;
        notes.push(("design_restart".into(), trace.restart.to_string()));
        notes.push(("design_verified_cost".into(), num(trace.verified_cost)));
        if let Ok(file) = PulseFile::from_fourier("iswap_coupling", &g, Axis::X, PI / 2.0) {
            out.add("twoqubit_coupling.toml", file.to_toml()?.into_bytes());
        }
        g
    } else {
        amplitude_matched_coupling(&library::named(&section.rcp)?.pulse, omega_max)?
    };
    let cosine = cosine_coupling(omega_max)?;
    let axis = cfg.noise.clone().unwrap_or(NoiseAxis {
        family: "delta_minus".into(),
        values: None,
        range: Some(RangeSpec {
            start: -5.0,
            stop: 5.0,
            points: 41,
        }),
    });
    if axis.family != "delta_minus" {
        bail!("config field `noise.family`: the two-qubit sweep runs over `delta_minus`");
    }
    let raw = axis.raw_values()?;
    let deltas: Vec<f64> = raw.iter().map(|&v| mhz(v)).collect();
    let mut sweep = Table::new(
        &["model", "noise_value_MHz", "fidelity_rcp", "fidelity_cosine"],
        "noise_value = Delta_minus as f = omega/2pi in MHz; virtual-z compensated iSWAP fidelity",
    );
    let mut plateau = Table::new(
        &["model", "threshold", "width_rcp_MHz", "width_cosine_MHz", "ratio"],
        "plateau widths in MHz; transmon threshold is relative to the zero-detuning fidelity",
    );
    for model in &section.models {
        for (row, r) in iswap_fidelity_sweep(*model, &rcp, &cosine, &deltas, &pair)?.iter().zip(&raw) {
            sweep.push(vec![model.label().into(), num(*r), num(row.fidelity_rcp), num(row.fidelity_cosine)]);
        }
        let wr = iswap_plateau(*model, &rcp, &pair, section.threshold)?;
        let wc = iswap_plateau(*model, &cosine, &pair, section.threshold)?;
        plateau.push(vec![
            model.label().into(),
            num(section.threshold),
            num(wr / TAU * 1e3),
            num(wc / TAU * 1e3),
            num(wr / wc),
        ]);
    }
    out.table("twoqubit_sweep.csv", &sweep, meta)?;
    out.table("twoqubit_plateau.csv", &plateau, meta)
}

fn margin(cfg: &ExperimentConfig, ctx: &RunContext, meta: &Meta, out: &mut Outputs) -> Result<()> {
    let section = cfg.margin.clone().unwrap_or_default();
    let families = section
        .families
        .iter()
        .map(|n| n.parse::<NoiseFamily>().map_err(|e| anyhow!("{e}")))
        .collect::<Result<Vec<_>>>()?;
    let ps = pulses(cfg, ctx)?;
    let jobs: Vec<(usize, usize)> = (0..ps.len())
        .flat_map(|i| (0..families.len()).map(move |j| (i, j)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, j)| {
            let fam = families[j];
            let grid = grid_for(&ps[i].pulse, cfg.steps)?;
            let (resolution, upper, scale, unit) = if fam.is_frequency() {
                (MARGIN_RESOLUTION, mhz(section.upper_mhz), 1e3 / TAU, "MHz")
            } else {
                (1e-4, section.upper_amplitude, 1.0, "1")
            };
            let m = noise_margin(&ps[i].pulse, fam, section.f, &grid, resolution, upper)?;
            Ok(vec![
                ps[i].name.clone(),
                section.families[j].clone(),
                num(section.f),
                num(m * scale),
                unit.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        &["pulse", "family", "f", "margin", "unit"],
        "margin = largest noise with worst-case fidelity estimate >= f; frequencies in MHz",
    );
    t.rows = rows;
    out.table("margin.csv", &t, meta)
}

fn fig3d(cfg: &ExperimentConfig, meta: &Meta, out: &mut Outputs, notes: &mut Vec<(String, String)>) -> Result<()> {
    let s = cfg.fig3d.clone().unwrap_or_default();
    let rcp = library::x_all_pi().rescale(s.rcp_duration_ns / library::TABLE_DURATION)?;
    let gauss = XYPulse::x_only(ReferencePulse::calibrated(ReferenceShape::Gaussian, s.gaussian_duration_ns, PI)?);
    let omega_max = rcp.peak_amplitude();
    notes.push(("omega_max_MHz".into(), num(omega_max / TAU * 1e3)));
    let target = library::x_gate(PI);
    let eps = s.eps.values();
    let times = s.times();
    let unitaries = eps
        .par_iter()
        .map(|&e| {
            let noise = combine(NoiseFamily::Amplitude.source(e), NoiseFamily::Detuning.source(e * omega_max));
            Ok((simulate(&rcp, &noise, cfg.steps)?, simulate(&gauss, &noise, cfg.steps)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        &["eps", "t_us", "F_rcp", "F_gauss", "diff", "abs_diff"],
        "eps = Delta/Omega_max = relative amplitude error (dimensionless); t_us = T1 = T2 in microseconds; diff = F_rcp - F_gauss",
    );
    for (e, (ur, ug)) in eps.iter().zip(&unitaries) {
        for &tu in &times {
            let deco = DecoherenceSetting::new(tu, tu, s.model)?;
            let f = |u: &ComplexMatrix, tau: f64| -> Result<f64> {
                let ch = Superop::unitary(u).then(&decoherence_channel(&deco, tau)?);
                Ok(channel_gate_fidelity(&ch, &target))
            };
            let fr = f(ur, rcp.duration())?;
            let fg = f(ug, gauss.duration())?;
            t.push(vec![num(*e), num(tu), num(fr), num(fg), num(fr - fg), num((fr - fg).abs())]);
        }
    }
    out.table("fig3d.csv", &t, meta)
}

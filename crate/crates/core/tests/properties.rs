use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use proptest::prelude::*;
use rcp_core::channel::{decoherence_channel, DecoherenceSetting, DephasingModel, Superop};
use rcp_core::clifford::CliffordGroup;
use rcp_core::fidelity::{
    avg_fidelity_from_distance, avg_fidelity_liouville, unitary_gate_fidelity, worst_case_bounds, worst_case_estimate,
    ChannelLiouville, FidelityReport,
};
use rcp_core::geometry::{error_curve, total_error_distance, unitary_error_distance};
use rcp_core::library;
use rcp_core::noise::{static_detuning, NoiseFamily, NoisyQubit};
use rcp_core::pulse::{FourierPulse, ReferencePulse, ReferenceShape, XYPulse};
use rcp_core::quantum::{
    phase_insensitive_distance, propagate_qubit, propagate_qubit_final, su2_exp, su2_log, to_dynamic, unitarity_error,
    AxisAngle, TimeGrid,
};
use rcp_core::rb::{fit_decay, irb_fidelity};

fn fourier() -> impl Strategy<Value = FourierPulse> {
    (
        20.0f64..80.0,
        prop::collection::vec(-0.3f64..0.3, 3),
        prop::collection::vec(-PI..PI, 2),
    )
        .prop_map(|(t, a, phi)| FourierPulse::new(t, a, phi).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn su2_round_trip(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
        let u = su2_exp(&AxisAngle::new(x, y, z));
        prop_assert!(unitarity_error(&u) < 1e-12);
        let back = su2_exp(&su2_log(&u).unwrap().generator);
        prop_assert!(phase_insensitive_distance(&u, &back) < 1e-10);
    }

    #[test]
    fn propagation_is_unitary_and_composes(p in fourier(), d in -0.05f64..0.05) {
        let pulse = XYPulse::x_only(p);
        let noise = static_detuning(d);
        let h = NoisyQubit::new(&pulse, &noise);
        let grid = TimeGrid::new(pulse.duration(), 400).unwrap();
        for u in propagate_qubit(&h, &grid) {
            prop_assert!(unitarity_error(&to_dynamic(&u)) < 1e-9);
        }
        let half = pulse.duration() / 2.0;
        let first = propagate_qubit_final(&h, &TimeGrid::new(half, 200).unwrap());
        let traj = propagate_qubit(&h, &grid);
        prop_assert!((traj[200] - first).norm() < 1e-8);
    }

    #[test]
    fn rescaled_pulse_has_the_same_dimensionless_robustness(
        p in fourier(), alpha in 0.5f64..2.0, eps in 0.0f64..0.03
    ) {
        let target = library::x_gate(PI);
        let fid = |pulse: &XYPulse, d: f64| {
            let noise = static_detuning(d);
            let grid = TimeGrid::new(pulse.duration(), 2000).unwrap();
            let u = propagate_qubit_final(&NoisyQubit::new(pulse, &noise), &grid);
            unitary_gate_fidelity(&to_dynamic(&u), &target)
        };
        let base = XYPulse::x_only(p.clone());
        let scaled = XYPulse::x_only(p.rescale(alpha).unwrap());
        prop_assert!((fid(&base, eps) - fid(&scaled, eps / alpha)).abs() < 1e-6);
        let back = p.rescale(alpha).unwrap().rescale(1.0 / alpha).unwrap();
        for (a, b) in back.amplitudes.iter().zip(&p.amplitudes) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn cross_formula_identity(x in -1.5f64..1.5, y in -1.5f64..1.5, z in -1.5f64..1.5) {
        let g = Vector3::new(x, y, z);
        prop_assume!(g.norm() < FRAC_PI_2);
        // exp(-i R n.sigma) has total error distance R
        let u = su2_exp(&AxisAngle(2.0 * g));
        let r = g.norm();
        let f = avg_fidelity_liouville(&ChannelLiouville::from_unitary(&u).unwrap());
        prop_assert!((f - avg_fidelity_from_distance(r)).abs() < 1e-9);
    }

    #[test]
    fn report_ordering(r in 0.0f64..FRAC_PI_2) {
        let rep = FidelityReport::from_distance(r);
        prop_assert!(rep.f_worst <= rep.f_avg + 1e-15);
        prop_assert!(rep.d_lower <= rep.d_upper + 1e-15);
        let (lo, hi) = worst_case_bounds(r, 2);
        prop_assert!(lo <= hi + 1e-15);
        prop_assert!(worst_case_estimate(r) <= avg_fidelity_from_distance(r) + 1e-15);
    }

    #[test]
    fn decoherence_channel_is_trace_preserving(
        t1 in 5.0f64..200.0, ratio in 0.1f64..2.0, tau in 0.0f64..500.0, pure in any::<bool>()
    ) {
        let model = if pure { DephasingModel::PureDephasing } else { DephasingModel::T2Process };
        let s = DecoherenceSetting::new(t1, t1 * ratio, model).unwrap();
        let ch = decoherence_channel(&s, tau).unwrap();
        prop_assert!((ch.trace_of_identity_image() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn error_curve_starts_at_origin_with_unit_z_speed(p in fourier()) {
        let pulse = XYPulse::x_only(p);
        let grid = TimeGrid::new(pulse.duration(), 500).unwrap();
        let c = error_curve(&pulse, &NoiseFamily::Detuning.source(1.0), &grid).unwrap();
        prop_assert!(c.points[0].norm() == 0.0);
        for v in c.speed() {
            prop_assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_distance_matches_curve(p in fourier()) {
        let pulse = XYPulse::x_only(p);
        let grid = TimeGrid::new(pulse.duration(), 2000).unwrap();
        let c = error_curve(&pulse, &NoiseFamily::Detuning.source(1.0), &grid).unwrap();
        let eps = 1e-5;
        let r = total_error_distance(&pulse, &NoiseFamily::Detuning.source(eps), &grid);
        // the detuning source couples with strength Δ/2
        let first_order = 0.5 * eps * c.endpoint().norm();
        prop_assert!((r - first_order).abs() < 1e-3 * first_order.max(1e-9) + 1e-9);
    }

    #[test]
    fn decay_fit_recovers_synthetic_parameters(p in 0.95f64..0.9999, a in 0.3f64..0.6, b in 0.3f64..0.6) {
        let m = [1.0, 5.0, 10.0, 25.0, 50.0, 100.0, 200.0, 400.0];
        let y: Vec<f64> = m.iter().map(|&k| a * p.powf(k) + b).collect();
        let fit = fit_decay(&m, &y, 3.75).unwrap();
        prop_assert!((fit.p - p).abs() < 1e-6, "{} vs {}", fit.p, p);
    }

    #[test]
    fn irb_recovers_gate_fidelity(p_ref in 0.9f64..0.9999, f in 0.99f64..1.0) {
        let p_gate = p_ref * (1.0 - 2.0 * (1.0 - f));
        let r = irb_fidelity(p_gate, p_ref);
        prop_assert!((r.fidelity - f).abs() < 1e-12);
    }
}

#[test]
fn unitary_error_distance_of_identity_is_zero() {
    let u = propagate_qubit_final(
        &NoisyQubit::new(&XYPulse::x_only(library::x_r_pi()), &static_detuning(0.0)),
        &TimeGrid::new(50.0, 1000).unwrap(),
    );
    assert!(unitary_error_distance(&u, &u) < 1e-12);
}

#[test]
fn clifford_group_is_closed_and_inverses_compose_to_identity() {
    let g = CliffordGroup::new();
    assert_eq!(g.len(), 24);
    for a in 0..24 {
        assert_eq!(g.compose(a, g.inverse(a)), 0);
        for b in 0..24 {
            assert!(g.compose(a, b) < 24);
        }
    }
}

#[test]
fn reference_shapes_are_nonnegative_and_peak_in_the_middle() {
    for shape in [ReferenceShape::Gaussian, ReferenceShape::Cosine] {
        let p = ReferencePulse::amplitude_matched(shape, PI, library::OMEGA_MAX).unwrap();
        let t = p.duration;
        assert!((p.value(t / 2.0) - library::OMEGA_MAX).abs() < 1e-12);
        assert!(p.value(0.0).abs() < 1e-15 && p.value(t).abs() < 1e-15);
        for k in 0..=200 {
            assert!(p.value(t * k as f64 / 200.0) >= 0.0);
        }
        assert!((p.area() - PI).abs() < 1e-9);
    }
}

#[test]
fn identity_superop_is_neutral() {
    let u = library::x_gate(PI / 3.0);
    let a = Superop::unitary(&u);
    let b = a.then(&Superop::identity(2));
    let rho = nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[1.0, 0.0, 0.0, 0.0].map(|x| rcp_core::quantum::C64::new(x, 0.0)),
    );
    assert!((a.apply(&rho) - b.apply(&rho)).norm() < 1e-14);
}

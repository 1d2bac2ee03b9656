use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use weylscope::geoflow::*;
use weylscope::manifolds::*;
use weylscope::numerics::ode::OdeOptions;

fn perturbed() -> ProfileCurve {
    make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap()
}

#[test]
fn profiles_satisfy_shape_conditions_on_a_dense_grid() {
    let profiles = [
        make_round_sphere(),
        perturbed(),
        make_perturbed_sphere(PerturbationSpec::new(0.03, 0.3, 1.2)).unwrap(),
        make_pendulum_profile(4.0).unwrap(),
    ];
    for p in &profiles {
        let (lo, hi) = p.domain();
        assert!(p.alpha(lo).abs() < 1e-12 && p.alpha(hi).abs() < 1e-12, "{}", p.label());
        for i in 1..10_000 {
            let s = lo + (hi - lo) * i as f64 / 10_000.0;
            assert!(p.alpha(s) > 0.0, "{} at {s}", p.label());
            if s.abs() > 1e-3 {
                assert!(-s * p.d_alpha(s) > 0.0, "{} at {s}", p.label());
            }
        }
    }
}

#[test]
fn volume_is_multiplicative_over_products() {
    let s2 = ManifoldConfig::sphere(2);
    let t = ManifoldConfig::torus(vec![1.5, 2.0 * PI]);
    let m = ManifoldConfig::product(s2.clone(), t.clone()).build().unwrap();
    let v = manifold_volume(&s2.build().unwrap()) * manifold_volume(&t.build().unwrap());
    assert!((manifold_volume(&m) - v).abs() < 1e-12 * v);
    assert_eq!(m.dim(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn perturbation_is_exactly_the_bump_sum(eps in 0.0..0.02f64, a in 0.2..0.6f64, w in 0.2..0.7f64, s in -1.5..1.5f64) {
        let spec = PerturbationSpec::new(eps, a, a + w);
        // Large bumps on narrow supports break monotonicity and must be refused.
        let p = match make_perturbed_sphere(spec.clone()) {
            Ok(p) => p,
            Err(e) => {
                prop_assert!(matches!(e, weylscope::Error::InvariantViolation(_)), "{e}");
                return Ok(());
            }
        };
        let want = s.cos() + eps * (spec.plus_bump().value(s) + spec.minus_bump().value(s));
        prop_assert!((p.alpha(s) - want).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn config_round_trips(eps in 0.0..0.02f64, a in 0.2..0.6f64, e in 3.5..10.0f64) {
        for c in [ManifoldConfig::perturbed(eps, a, a + 0.4), ManifoldConfig::pendulum(e), ManifoldConfig::torus(vec![a, e])] {
            let text = serde_json::to_string(&c).unwrap();
            prop_assert_eq!(serde_json::from_str::<ManifoldConfig>(&text).unwrap(), c);
        }
    }

    #[test]
    fn orbits_conserve_speed_and_clairaut(s in -1.3..1.3f64, psi in 0.1..3.0f64, t in 1.0..30.0f64) {
        let p = perturbed();
        let traj = integrate_geodesic(PhasePoint::from_angle(&p, s, 0.0, psi), t, &p, OdeOptions::default()).unwrap();
        let (speed, drift) = conservation(&traj, &p, 200);
        prop_assert!(speed < 1e-8 * (1.0 + t), "speed {speed}");
        prop_assert!(drift < 1e-8 * (1.0 + t), "drift {drift}");
    }

    #[test]
    fn mirror_conjugates_the_flow(s in -1.3..1.3f64, psi in 0.1..3.0f64, t in 1.0..20.0f64) {
        let p = perturbed();
        let p0 = PhasePoint::from_angle(&p, s, 0.3, psi);
        let a = integrate_geodesic(p0, t, &p, OdeOptions::default()).unwrap().state(t).mirrored();
        let b = integrate_geodesic(p0.mirrored(), t, &p, OdeOptions::default()).unwrap().state(t);
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            prop_assert!((x - y).abs() < 1e-8, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn clairaut_orbit_invariants(s_plus in 0.05..1.5f64) {
        let p = make_perturbed_sphere(PerturbationSpec {
            minus_weight: 0.0,
            ..PerturbationSpec::new(0.01, 0.5, 1.0)
        })
        .unwrap();
        let o = rotation_number(s_plus, &p).unwrap();
        prop_assert!(o.s_minus <= 0.0 && 0.0 <= o.s_plus);
        prop_assert!((p.alpha(o.s_minus) - o.c).abs() < 1e-12);
        prop_assert!((p.alpha(o.s_plus) - o.c).abs() < 1e-12);
        prop_assert!((o.theta0 - o.theta_plus - o.theta_minus).abs() < 1e-14);
    }

    #[test]
    fn derivative_formula_matches_finite_differences(s_plus in 0.1..1.45f64) {
        let p = perturbed();
        let f = d_rotation_number(s_plus, &p, DerivativeMethod::Formula).unwrap();
        let d = d_rotation_number(s_plus, &p, DerivativeMethod::FiniteDifference).unwrap();
        // Finite differences carry an absolute error floor near the bump edge.
        let scale = f.abs().max(d.abs());
        prop_assert!((f - d).abs() < 1e-3 * scale + 1e-10, "{f} vs {d}");
    }

    #[test]
    fn round_sphere_is_never_aperiodic(lo in 0.02..0.8f64, w in 0.1..0.7f64, n in 3usize..12) {
        let grid: Vec<f64> = (0..n).map(|i| lo + w * i as f64 / (n - 1) as f64).collect();
        let rows = classify_tori(&make_round_sphere(), &grid, &ClassifyOptions::default()).unwrap();
        prop_assert!(rows.iter().all(|r| r.status != TorusStatus::Aperiodic));
    }
}

#[test]
fn quadrature_and_return_map_agree_on_random_turning_points() {
    let p = perturbed();
    let hal = weylscope::numerics::lowdisc::ScrambledHalton::new(1, 11);
    let opts = OdeOptions {
        rtol: 1e-12,
        atol: 1e-12,
        ..OdeOptions::default()
    };
    for i in 0..20 {
        let s = 0.1 + (FRAC_PI_2 - 0.15) * hal.coord(i, 0);
        let q = rotation_number(s, &p).unwrap().theta0;
        let (theta, _) = return_map(s, &p, opts).unwrap();
        assert!((q - theta).abs() < 1e-6, "s₊ = {s}: {q} vs {theta}");
    }
}

use std::f64::consts::PI;

use proptest::prelude::*;
use weylscope::manifolds::{make_perturbed_sphere, make_round_sphere, unit_ball_volume, PerturbationSpec};
use weylscope::spectra::*;

fn cache() -> SpectrumCache {
    SpectrumCache::new(std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("spectra"))
}

fn no_efs() -> SolverOptions {
    SolverOptions {
        grid_points: 0,
        ..SolverOptions::default()
    }
}

fn weyl_ratio(s: &Spectrum, lambda: f64) -> f64 {
    let n = s.dim as i32;
    let main = (2.0 * PI).powi(-n) * unit_ball_volume(s.dim) * s.volume * lambda.powi(n);
    s.count(lambda) as f64 / main
}

#[test]
fn closed_form_sphere_matches_solver() {
    let sl = surface_spectrum_with(&make_round_sphere(), 4.0, None, no_efs()).unwrap();
    let cf = sphere_spectrum(2, 4.0);
    assert_eq!(sl.spectrum.len(), cf.len());
    for (a, b) in sl.spectrum.entries.iter().zip(&cf.entries) {
        assert!((a.lambda - b.lambda).abs() < 1e-8);
        assert_eq!(a.multiplicity, b.multiplicity);
    }
    assert!(sl.complete());
    sl.spectrum.validate().unwrap();
}

#[test]
fn perturbation_shift_is_first_order() {
    let round = surface_spectrum_with(&make_round_sphere(), 12.0, None, no_efs()).unwrap();
    let round_evs: Vec<f64> = round.spectrum.entries.iter().map(|e| e.lambda * e.lambda).collect();
    let shift = |eps: f64| {
        let p = make_perturbed_sphere(PerturbationSpec::new(eps, 0.5, 1.0)).unwrap();
        let s = surface_spectrum_with(&p, 11.5, None, no_efs()).unwrap();
        assert!(s.complete());
        s.store
            .modes
            .iter()
            .map(|e| {
                let ev = e.lambda * e.lambda;
                round_evs.iter().map(|r| (ev - r).abs()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
            / eps
    };
    let (c1, c2) = (shift(0.01), shift(0.005));
    assert!(c1 > 0.0 && c1 < 100.0, "C(0.01) = {c1}");
    assert!((c1 / c2 - 1.0).abs() < 0.1, "C(0.01) = {c1}, C(0.005) = {c2}");
}

#[test]
fn weyl_sanity_closed_forms() {
    let cases = [
        sphere_spectrum(2, 60.0),
        sphere_spectrum(3, 50.0),
        torus_spectrum(&[2.0 * PI, 2.0 * PI], 60.0),
        torus_spectrum(&[2.0 * PI, 3.0, 5.0], 50.0),
        product_spectrum(&sphere_spectrum(2, 50.0), &torus_spectrum(&[2.0 * PI], 50.0), 50.0).unwrap(),
    ];
    for s in &cases {
        s.validate().unwrap();
        let r = weyl_ratio(s, s.lambda_max);
        assert!((r - 1.0).abs() < 0.05, "{}: N/main = {r}", s.manifold);
    }
}

#[test]
fn surface_spectrum_weyl_and_parity() {
    let p = make_round_sphere();
    let s = cached_surface_spectrum(Some(&cache()), &p, 50.0, None, SolverOptions::default()).unwrap();
    assert!(s.complete());
    s.spectrum.validate().unwrap();
    let r = weyl_ratio(&s.spectrum, 50.0);
    assert!((r - 1.0).abs() < 0.05, "N/main = {r}");
    assert_eq!(s.spectrum.count(50.0), 2500);
    for (i, e) in s.store.modes.iter().enumerate().step_by(37) {
        let w = EigenStore::angular_weight(e.m);
        let reflected = |x: f64| s.store.eval(i, x) * s.store.eval(i, -x) * p.alpha(x);
        let v = w * weylscope::numerics::quad::gauss_kronrod(reflected, -PI / 2.0, PI / 2.0, 1e-12, 1e-14)
            .unwrap()
            .value;
        let want = if (e.k % 2) == 0 { 1.0 } else { -1.0 };
        assert!((v - want).abs() < 1e-8, "m={} k={}: {v}", e.m, e.k);
    }
}

fn small_spectrum() -> impl Strategy<Value = Spectrum> {
    prop_oneof![
        (1u32..4).prop_map(|n| sphere_spectrum(n, 12.0)),
        prop::collection::vec(1.0f64..8.0, 1..3).prop_map(|p| torus_spectrum(&p, 12.0)),
    ]
}

fn same(a: &Spectrum, b: &Spectrum) -> bool {
    a.len() == b.len()
        && a.entries
            .iter()
            .zip(&b.entries)
            .all(|(x, y)| (x.lambda - y.lambda).abs() <= 1e-12 * x.lambda.max(1.0) && x.multiplicity == y.multiplicity)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn product_commutes_and_associates(a in small_spectrum(), b in small_spectrum(), c in small_spectrum()) {
        let ab = product_spectrum(&a, &b, 12.0).unwrap();
        let ba = product_spectrum(&b, &a, 12.0).unwrap();
        prop_assert!(same(&ab, &ba));
        let l = product_spectrum(&ab, &c, 12.0).unwrap();
        let r = product_spectrum(&a, &product_spectrum(&b, &c, 12.0).unwrap(), 12.0).unwrap();
        prop_assert!(same(&l, &r));
    }
}

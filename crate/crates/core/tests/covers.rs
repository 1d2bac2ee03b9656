use std::f64::consts::PI;

use proptest::prelude::*;
use weylscope::covers::*;
use weylscope::manifolds::{make_perturbed_sphere, make_round_sphere, PerturbationSpec};
use weylscope::numerics::lowdisc::ScrambledHalton;

const GOLDEN: f64 = 1.618_033_988_749_895;

fn torus() -> PhaseSpace {
    PhaseSpace::torus([2.0 * PI, 2.0 * PI])
}

fn perturbed() -> PhaseSpace {
    PhaseSpace::surface(make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap())
}

fn nearest_tube(c: &GoodCover, phi: f64) -> usize {
    let gap = |t: &Tube| {
        let d = (t.phi - phi).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    };
    (0..c.len())
        .min_by(|&i, &j| gap(&c.tubes[i]).partial_cmp(&gap(&c.tubes[j])).unwrap())
        .unwrap()
}

#[test]
fn metric_triangle_inequality() {
    for ps in [torus(), perturbed()] {
        let h: Vec<ScrambledHalton> = (0..3).map(|k| ScrambledHalton::new(3, 3 + k)).collect();
        for i in 0..100_000u64 {
            let q: Vec<State> = h
                .iter()
                .map(|h| ps.liouville_state([h.coord(i, 0), h.coord(i, 1), h.coord(i, 2)]))
                .collect();
            let (ab, bc, ac) = (ps.distance(&q[0], &q[1]), ps.distance(&q[1], &q[2]), ps.distance(&q[0], &q[2]));
            assert!(ac <= ab + bc + 1e-12, "{q:?}");
        }
    }
}

#[test]
fn torus_estimate_matches_lattice_oracle() {
    let e = near_periodic_measure(&torus(), &CosphereSet::Full, 1.0, 10.0, 0.01, 100_000, 7).unwrap();
    assert_eq!(e.agrees(3.0), Some(true), "{e:?}");
    let half = (f64::ln(2.0 / 0.01) / (2.0 * e.samples as f64)).sqrt() * e.total;
    assert!((e.half_width - half).abs() < 1e-15 * e.total);
    assert!(e.value >= 0.0 && e.value <= e.total);
}

#[test]
fn torus_self_looping_matches_lattice_oracle() {
    let x = Submanifold::Point { x: BasePoint::new(1.0, 2.0) };
    let l = looping_pair_measure(&torus(), &x, &x, 1.0, 10.0, 1e-3, 100_000, 5).unwrap();
    assert_eq!(l.forward.agrees(3.0), Some(true), "{:?}", l.forward);
}

#[test]
fn pole_looping_is_of_order_r() {
    let ps = perturbed();
    let pole = Submanifold::Point { x: BasePoint::new(PI / 2.0, 0.0) };
    let x = Submanifold::Point { x: BasePoint::new(0.3, 1.0) };
    let ratios: Vec<f64> = [0.02, 0.01]
        .iter()
        .map(|&r| looping_pair_measure(&ps, &x, &pole, 1.0, 8.0, r, 20_000, 3).unwrap().forward.value / r)
        .collect();
    assert!(ratios.iter().all(|q| *q < 40.0), "{ratios:?}");
}

#[test]
fn slope_one_tube_loops_and_golden_tube_does_not() {
    let ps = torus();
    let cover = build_good_cover(&ps, &FiberCircle::point(BasePoint::new(1.0, 2.0)), 0.1, 0.01, 32).unwrap();
    let diagonal = nearest_tube(&cover, PI / 4.0);
    // Only directions within about r/T of the exact diagonal return, so sample densely.
    assert!(nonselflooping_test(&ps, &cover, &[diagonal], 1.0, 10.0, 200, 1).unwrap().is_looping());
    assert!(!nonselflooping_test(&ps, &cover, &[diagonal], 1.0, 5.0, 3, 1).unwrap().is_looping());
    let golden = nearest_tube(&cover, GOLDEN.atan());
    assert!(!nonselflooping_test(&ps, &cover, &[golden], 1.0, 20.0, 3, 1).unwrap().is_looping());
}

#[test]
fn cover_invariants_hold_exactly() {
    for (ps, x) in [(torus(), BasePoint::new(1.0, 2.0)), (perturbed(), BasePoint::new(0.3, 0.0))] {
        let c = build_good_cover(&ps, &FiberCircle::point(x), 0.1, 0.01, 64).unwrap();
        assert!(c.d <= 64 && c.families.len() == c.d);
        let mut seen = vec![false; c.len()];
        for f in &c.families {
            for &j in f {
                assert!(!seen[j]);
                seen[j] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
        assert!(c.audit_disjointness_with(&ps).is_ok());
        assert!(c.audit_coverage(&ps, 10_000, 9) < c.r);
    }
}

#[test]
fn bad_set_grows_with_time() {
    let ps = torus();
    let c = build_good_cover(&ps, &FiberCircle::point(BasePoint::new(1.0, 2.0)), 0.1, 0.02, 32).unwrap();
    let short = split_bad_good(&ps, &c, &c, 1.0, 6.0, 0.08, 2, 4).unwrap();
    let long = split_bad_good(&ps, &c, &c, 1.0, 12.0, 0.08, 2, 4).unwrap();
    assert!(short.bad.iter().all(|j| long.bad.contains(j)));
    assert!(long.bad.len() > short.bad.len());
    assert_eq!(long.bad.len() + long.good.len(), c.len());
}

#[test]
fn recurrence_verdicts() {
    let params = |t_big: f64| RecurrenceParams {
        r0: 0.2,
        t_small: ResolutionFunction::constant(1.0),
        t_big: ResolutionFunction::log(t_big),
        r: 0.01,
        big_r: 0.05,
        eps: 0.5,
        levels: 3,
        max_grid: 4000,
    };
    let torus = torus();
    let golden = recurrence_measure(&torus, &FiberCircle::point(BasePoint::new(1.0, 2.0)), GOLDEN.atan(), &params(5.0)).unwrap();
    assert!(golden.pass, "{golden:?}");
    let sphere = PhaseSpace::surface(make_round_sphere());
    let round = recurrence_measure(&sphere, &FiberCircle::point(BasePoint::new(0.3, 0.0)), 0.3, &params(5.0)).unwrap();
    assert!(!round.pass, "{round:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn near_periodic_measure_is_monotone(t in 3.0..8.0f64, r in 0.005..0.03f64, seed in 0u64..1000) {
        let ps = torus();
        let m = |t1: f64, r: f64| near_periodic_measure(&ps, &CosphereSet::Full, 1.0, t1, r, 4000, seed).unwrap().value;
        prop_assert!(m(t, r) <= m(1.5 * t, r));
        prop_assert!(m(t, r) <= m(t, 1.5 * r));
    }

    #[test]
    fn surface_estimates_stay_in_range(s0 in -1.2..0.5f64, w in 0.1..0.6f64, seed in 0u64..1000) {
        let ps = perturbed();
        let set = CosphereSet::Band { s0, s1: s0 + w };
        let e = near_periodic_measure(&ps, &set, 1.0, 4.0, 0.05, 1000, seed).unwrap();
        prop_assert!(e.value >= 0.0 && e.value <= e.total);
        prop_assert!((e.total - set.measure(&ps).unwrap()).abs() < 1e-12);
    }
}

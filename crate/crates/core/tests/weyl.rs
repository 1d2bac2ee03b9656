use std::f64::consts::PI;

use proptest::prelude::*;
use weylscope::manifolds::{make_perturbed_sphere, make_round_sphere, PerturbationSpec, ProfileCurve};
use weylscope::numerics::quad::gauss_legendre;
use weylscope::spectra::*;
use weylscope::weyl::*;

fn cache() -> SpectrumCache {
    SpectrumCache::new(std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("spectra"))
}

fn round(lambda: f64) -> (ProfileCurve, SurfaceSpectrum) {
    let p = make_round_sphere();
    let s = cached_surface_spectrum(Some(&cache()), &p, lambda, None, SolverOptions::default()).unwrap();
    (p, s)
}

fn perturbed(lambda: f64) -> (ProfileCurve, SurfaceSpectrum) {
    let p = make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap();
    let s = cached_surface_spectrum(Some(&cache()), &p, lambda, None, SolverOptions::default()).unwrap();
    (p, s)
}

/// `∫ρ(x) N(λ − x/σ) dx` by Gauss–Legendre on pieces between jumps, `ρ` evaluated directly.
fn direct_convolution(j: &Jumps, k: &SmoothingKernel, sigma: f64, lam: f64) -> f64 {
    let x_max = k.x_max();
    let base = j.step(lam - x_max / sigma);
    let mut cuts: Vec<f64> = j
        .lambdas
        .iter()
        .map(|l| sigma * (lam - l))
        .filter(|x| x.abs() < x_max)
        .collect();
    cuts.push(-x_max);
    cuts.push(x_max);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (gx, gw) = gauss_legendre(10);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let level = j.step(lam - 0.5 * (a + b) / sigma) - base;
        if level == 0.0 {
            continue;
        }
        let pieces = (b - a).ceil() as usize;
        let h = (b - a) / pieces as f64;
        let mut mass = 0.0;
        for p in 0..pieces {
            let c = a + (p as f64 + 0.5) * h;
            for (xi, wi) in gx.iter().zip(&gw) {
                mass += 0.5 * h * wi * k.rho(c + 0.5 * h * xi);
            }
        }
        total += level * mass;
    }
    base + total
}

#[test]
fn smoothed_matches_direct_convolution() {
    let k = build_smoothing_kernel(1.0).unwrap();
    let s = sphere_spectrum(2, 110.0);
    let j = Jumps::from_spectrum(&s);
    let sigma = 10.0;
    let grid: Vec<f64> = (0..6).map(|i| 20.0 + 7.3 * i as f64).collect();
    let sm = smoothed_series(&j, &k, sigma, &grid).unwrap();
    for ((lam, v), b) in grid.iter().zip(&sm.values).zip(&sm.bound) {
        let d = direct_convolution(&j, &k, sigma, *lam);
        assert!((v - d).abs() <= *b, "λ={lam}: table {v}, direct {d}, bound {b}");
    }
}

#[test]
fn sphere_smoothing_tracks_jumps() {
    // σ = λ/5: the smoothing averages over frequency windows ~5/λ, far narrower
    // than the cluster spacing, so N − smoothed follows the step structure.
    let k = build_smoothing_kernel(1.0).unwrap();
    let s = sphere_spectrum(2, 160.0);
    let j = Jumps::from_spectrum(&s);
    let lam = 50.0;
    let sigma = lam / 5.0;
    let grid: Vec<f64> = (0..40).map(|i| 45.0 + 0.25 * i as f64).collect();
    let sm = smoothed_series(&j, &k, sigma, &grid).unwrap();
    let n = counting(&s, &grid).unwrap();
    for (i, l) in grid.iter().enumerate() {
        let diff = n.n[i] - sm.values[i];
        let gap = s
            .entries
            .iter()
            .map(|e| (e.lambda - l).abs())
            .fold(f64::INFINITY, f64::min);
        if gap > 0.2 {
            // Away from a cluster the smoothed count is flat to within the ρ tail.
            assert!(diff.abs() <= 2.0 * (2.0 * l + 1.0) * k.tail(sigma * gap) + sm.bound[i], "λ={l}: {diff}");
        }
    }
    let mid = 0.5 * (s.entries[50].lambda + s.entries[51].lambda);
    let d = direct_convolution(&j, &k, sigma, mid);
    let t = smoothed_series(&j, &k, sigma, &[mid]).unwrap();
    assert!((d - t.values[0]).abs() <= t.bound[0]);
}

#[test]
fn smoothed_count_is_monotone_within_bound() {
    let k = build_smoothing_kernel(1.0).unwrap();
    let t = torus_spectrum(&[2.0 * PI, 3.0], 150.0);
    let grid: Vec<f64> = (0..400).map(|i| 10.0 + 0.1 * i as f64).collect();
    let sm = smoothed_series(&Jumps::from_spectrum(&t), &k, 20.0, &grid).unwrap();
    // P leaves [0, 1] by at most the ρ tail, which bounds any decrease.
    let dip = |a: f64, b: f64| -> f64 {
        t.entries
            .iter()
            .map(|e| e.multiplicity as f64 * (k.tail(20.0 * (a - e.lambda)) + k.tail(20.0 * (b - e.lambda))))
            .sum()
    };
    for i in 1..grid.len() {
        let slack = sm.bound[i] + sm.bound[i - 1] + dip(grid[i - 1], grid[i]);
        assert!(sm.values[i] + slack >= sm.values[i - 1], "λ={}", grid[i]);
    }
}

#[test]
fn localized_counts_on_round_sphere() {
    let (p, s) = round(20.0);
    let grid: Vec<f64> = (0..40).map(|i| 0.5 + 0.49 * i as f64).collect();
    let full = counting(&s.spectrum, &grid).unwrap();
    let whole = localized_counting(&p, &s, (-PI / 2.0, PI / 2.0), &grid).unwrap();
    for (a, b) in whole.n.iter().zip(&full.n) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    let band = (0.2, 0.9);
    let w = localized_counting(&p, &s, band, &grid).unwrap();
    let vol = 2.0 * PI * (band.1.sin() - band.0.sin());
    for (a, b) in w.n.iter().zip(&full.n) {
        assert!((a - vol / (4.0 * PI) * b).abs() < 1e-8 * b.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn localized_partition_sums_to_count() {
    let (p, s) = perturbed(16.0);
    let grid: Vec<f64> = (0..30).map(|i| 1.0 + 0.5 * i as f64).collect();
    let full = counting(&s.spectrum, &grid).unwrap();
    let cuts = [-PI / 2.0, -1.0, -0.3, 0.5, 1.0, 1.3, PI / 2.0];
    let mut sum = vec![0.0; grid.len()];
    for w in cuts.windows(2) {
        let c = localized_counting(&p, &s, (w[0], w[1]), &grid).unwrap();
        for (a, v) in sum.iter_mut().zip(&c.n) {
            *a += v;
        }
    }
    for (a, b) in sum.iter().zip(&full.n) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn kuznecov_point_equals_kernel_diagonal() {
    let k = build_smoothing_kernel(1.0).unwrap();
    let (p, s) = round(20.0);
    let closed = sphere_spectrum(2, 20.0);
    let surf = SpectralModel::Surface { profile: &p, spectrum: &s };
    let sph = SpectralModel::Sphere(&closed);
    let grid: Vec<f64> = (0..20).map(|i| 1.0 + 0.75 * i as f64).collect();
    for x in [[0.3, 1.1], [-1.2, 4.0], [0.0, 0.0]] {
        let pt = Site::Point(x.to_vec());
        let kz = kuznecov_values(&surf, &pt, &pt, &grid).unwrap();
        for (lam, v) in grid.iter().zip(&kz) {
            let a = projector_kernel(&surf, &x, &x, *lam).unwrap();
            let b = projector_kernel(&sph, &x, &x, *lam).unwrap();
            assert!((v - a.pi).abs() < 1e-8);
            assert!((v - b.pi).abs() < 1e-8, "λ={lam}: {v} vs {}", b.pi);
            assert!((b.pi - closed.count(*lam) as f64 / (4.0 * PI)).abs() < 1e-12);
        }
    }
    // Smoothing needs completeness past the grid; the closed form provides it.
    let big = sphere_spectrum(2, 500.0);
    let m = SpectralModel::Sphere(&big);
    let pt = Site::Point(vec![0.4, 0.0]);
    let ks = kuznecov(&m, &pt, &pt, &[20.0, 40.0], 1.0, &k).unwrap();
    for i in 0..2 {
        assert_eq!(ks.e_t0[i], ks.values[i] - ks.smoothed[i]);
    }
    assert!(ks.jumps.weights.iter().all(|w| *w >= 0.0));
}

#[test]
fn latitude_periods_vanish_for_nonzero_modes() {
    let (p, s) = perturbed(12.0);
    let m = SpectralModel::Surface { profile: &p, spectrum: &s };
    let lat = Site::Latitude(0.7);
    let j = period_jumps(&m, &lat, &lat).unwrap();
    for (e, w) in s.spectrum.entries.iter().zip(&j.weights) {
        if e.modes.iter().all(|t| t.0 != 0) {
            assert_eq!(*w, 0.0);
        }
        assert!(*w >= 0.0);
    }
    // On the round sphere the equator integral of odd zonal modes vanishes.
    let (rp, rs) = round(12.0);
    let rm = SpectralModel::Surface { profile: &rp, spectrum: &rs };
    let eq = Site::Latitude(0.0);
    let j = period_jumps(&rm, &eq, &eq).unwrap();
    for (l, w) in j.weights.iter().enumerate() {
        if l % 2 == 1 {
            assert!(w.abs() < 1e-10, "l={l}: {w}");
        }
    }
}

#[test]
fn torus_kernel_offdiagonal_envelope() {
    let p = [2.0 * PI, 2.0 * PI];
    let t = torus_spectrum(&p, 50.0);
    let m = SpectralModel::Torus { periods: &p, spectrum: &t };
    let kv = projector_kernel(&m, &[0.06, 0.08], &[0.0, 0.0], 50.0).unwrap();
    assert!((kv.distance - 0.1).abs() < 1e-12);
    // Lattice-sum oracle: 0.1 is small, so Π is close to the ball integral.
    assert!(kv.e0.abs() <= 3.0 * 50.0f64.sqrt(), "{kv:?}");
    assert!(matches!(
        projector_kernel(&m, &[3.1, 3.1], &[0.0, 0.0], 10.0),
        Err(weylscope::Error::Domain(_))
    ));
}

fn sphere_point() -> impl Strategy<Value = [f64; 2]> {
    (-1.5f64..1.5, 0.0f64..(2.0 * PI)).prop_map(|(s, t)| [s, t])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernels_hermitian_and_positive(x in sphere_point(), y in sphere_point(), lam in 1.0f64..20.0) {
        let closed = sphere_spectrum(2, 20.0);
        let sph = SpectralModel::Sphere(&closed);
        if let (Ok(a), Ok(b)) = (projector_kernel(&sph, &x, &y, lam), projector_kernel(&sph, &y, &x, lam)) {
            prop_assert!((a.pi - b.pi).abs() < 1e-10);
        }
        prop_assert!(projector_kernel(&sph, &x, &x, lam).unwrap().pi >= 0.0);
        let p = [2.0 * PI, 3.0];
        let t = torus_spectrum(&p, 20.0);
        let tm = SpectralModel::Torus { periods: &p, spectrum: &t };
        let (xa, ya) = ([x[0] * 0.5, x[1] * 0.1], [y[0] * 0.5, y[1] * 0.1]);
        if let (Ok(a), Ok(b)) = (projector_kernel(&tm, &xa, &ya, lam), projector_kernel(&tm, &ya, &xa, lam)) {
            prop_assert!((a.pi - b.pi).abs() < 1e-10);
        }
        prop_assert!(projector_kernel(&tm, &xa, &xa, lam).unwrap().pi >= 0.0);
    }

    #[test]
    fn counting_is_nondecreasing(periods in prop::collection::vec(1.0f64..7.0, 1..4), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let t = torus_spectrum(&periods, 10.0);
        let c = counting(&t, &[a.min(b), a.max(b)]).unwrap();
        prop_assert!(c.n[0] <= c.n[1]);
        prop_assert_eq!(c.e[0], c.n[0] - c.main[0]);
    }
}

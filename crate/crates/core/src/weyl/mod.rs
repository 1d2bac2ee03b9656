//! Counting functions, localized counts, projector kernels, smoothed series,
//! Kuznecov sums and remainder fits.

mod kernel;
mod smoothing;

pub use kernel::{bessel_comparison, legendre, period_jumps, projector_kernel, KernelValue, Site, SpectralModel};
pub use smoothing::{
    build_smoothing_kernel, direct_convolution, smoothed_series, smoothed_series_with, Jumps, KernelAudit, SmoothedSeries,
    SmoothingKernel, TAIL_TOL,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{unit_ball_volume, ProfileCurve};
use crate::numerics::fit::fit_line;
use crate::numerics::logspace;
use crate::spectra::{EigenStore, Spectrum, SurfaceSpectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingSeries {
    pub lambdas: Vec<f64>,
    pub n: Vec<f64>,
    pub main: Vec<f64>,
    pub e: Vec<f64>,
    pub dim: u32,
}

impl CountingSeries {
    fn new(lambdas: &[f64], n: Vec<f64>, coeff: f64, dim: u32) -> Self {
        let main: Vec<f64> = lambdas
            .iter()
            .map(|&l| if l > 0.0 { coeff * l.powi(dim as i32) } else { 0.0 })
            .collect();
        let e = n.iter().zip(&main).map(|(a, b)| a - b).collect();
        Self {
            lambdas: lambdas.to_vec(),
            n,
            main,
            e,
            dim,
        }
    }
}

/// `(2π)⁻ⁿ vol(Bⁿ) vol`.
pub fn weyl_coefficient(dim: u32, volume: f64) -> f64 {
    (2.0 * PI).powi(-(dim as i32)) * unit_ball_volume(dim) * volume
}

fn require(have: f64, lambdas: &[f64]) -> Result<()> {
    let need = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if need > have {
        return Err(Error::IncompleteSpectrum { have, need });
    }
    Ok(())
}

/// `N(λ) = #{j : λ_j ≤ λ}` with multiplicity.
pub fn counting(spec: &Spectrum, lambdas: &[f64]) -> Result<CountingSeries> {
    require(spec.lambda_max, lambdas)?;
    let j = Jumps::from_spectrum(spec);
    let n = cumulative(&j, lambdas);
    Ok(CountingSeries::new(lambdas, n, weyl_coefficient(spec.dim, spec.volume), spec.dim))
}

/// Step values of `j` at each grid point, exact when the weights are integers.
fn cumulative(j: &Jumps, lambdas: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(j.weights.len() + 1);
    prefix.push(0.0);
    for w in &j.weights {
        prefix.push(prefix.last().unwrap() + w);
    }
    lambdas
        .iter()
        .map(|&l| prefix[j.lambdas.partition_point(|&x| x <= l)])
        .collect()
}

/// Grid containing `lo`, `hi` and both one-sided limits at every jump in between.
pub fn jump_grid(jump_points: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut g = vec![lo];
    for &l in jump_points.iter().filter(|&&l| l > lo && l <= hi) {
        g.push(l * (1.0 - 1e-13));
        g.push(l);
    }
    g.push(hi);
    g
}

/// Band `[s₀, s₁] × S¹` volume `2π∫α` and per-mode weights `∫_W |φ|²`.
fn band_weights(profile: &ProfileCurve, spec: &SurfaceSpectrum, s0: f64, s1: f64) -> Result<Jumps> {
    let (lo, hi) = profile.domain();
    if !(s0 < s1) || s0 < lo || s1 > hi {
        return Err(Error::Domain(format!("band [{s0}, {s1}] outside [{lo}, {hi}]")));
    }
    if spec.store.modes.is_empty() {
        return Err(Error::Domain("localized counts need stored eigenfunctions".into()));
    }
    let store = &spec.store;
    let mass: Vec<f64> = (0..store.modes.len())
        .map(|i| store.integrate_weighted(i, profile, s0, s1, |u| u * u))
        .collect();
    let index: std::collections::HashMap<(i64, usize), usize> =
        store.modes.iter().enumerate().map(|(i, e)| ((e.m, e.k), i)).collect();
    let mut weights = Vec::with_capacity(spec.spectrum.len());
    for entry in &spec.spectrum.entries {
        let mut w = 0.0;
        for &(m, k) in &entry.modes {
            let i = *index
                .get(&(m.abs(), k))
                .ok_or_else(|| Error::InvariantViolation(format!("mode ({m}, {k}) missing from store")))?;
            w += EigenStore::angular_weight(m.abs()) * mass[i];
        }
        weights.push(w);
    }
    Ok(Jumps {
        lambdas: spec.spectrum.entries.iter().map(|e| e.lambda).collect(),
        weights,
        complete_to: if spec.complete() { spec.spectrum.lambda_max } else { 0.0 },
        dim: 2,
    })
}

/// `∫_W Π_λ(x,x) dv` for the band `W = [s₀, s₁] × S¹`, main term `vol(W) λ²/4π`.
pub fn localized_counting(
    profile: &ProfileCurve,
    spec: &SurfaceSpectrum,
    band: (f64, f64),
    lambdas: &[f64],
) -> Result<CountingSeries> {
    let j = band_weights(profile, spec, band.0, band.1)?;
    require(j.complete_to, lambdas)?;
    let vol = 2.0 * PI * profile.integral(band.0, band.1);
    Ok(CountingSeries::new(lambdas, cumulative(&j, lambdas), weyl_coefficient(2, vol), 2))
}

/// Jumps of the localized count, for smoothing.
pub fn localized_jumps(profile: &ProfileCurve, spec: &SurfaceSpectrum, band: (f64, f64)) -> Result<Jumps> {
    band_weights(profile, spec, band.0, band.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KuznecovSeries {
    pub h1: Site,
    pub h2: Site,
    pub t0: f64,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub e_t0: Vec<f64>,
    /// Truncation bound on `smoothed`.
    pub bound: Vec<f64>,
    pub jumps: Jumps,
}

/// `Π_{H₁,H₂}(λ) = Σ_{λ_j≤λ} (∫_{H₁}φ_j)(∫_{H₂}φ_j)` and `E^{t₀} = Π − ρ_{t₀} * Π`.
pub fn kuznecov(
    model: &SpectralModel,
    h1: &Site,
    h2: &Site,
    lambdas: &[f64],
    t0: f64,
    kernel: &SmoothingKernel,
) -> Result<KuznecovSeries> {
    let jumps = period_jumps(model, h1, h2)?;
    require(jumps.complete_to, lambdas)?;
    let values = cumulative(&jumps, lambdas);
    let sm = smoothed_series(&jumps, kernel, t0, lambdas)?;
    let e_t0 = values.iter().zip(&sm.values).map(|(a, b)| a - b).collect();
    Ok(KuznecovSeries {
        h1: h1.clone(),
        h2: h2.clone(),
        t0,
        lambdas: lambdas.to_vec(),
        values,
        smoothed: sm.values,
        e_t0,
        bound: sm.bound,
        jumps,
    })
}

/// Values of `Π_{H₁,H₂}` without smoothing.
pub fn kuznecov_values(model: &SpectralModel, h1: &Site, h2: &Site, lambdas: &[f64]) -> Result<Vec<f64>> {
    let jumps = period_jumps(model, h1, h2)?;
    require(jumps.complete_to, lambdas)?;
    Ok(cumulative(&jumps, lambdas))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemainderModel {
    /// `λ^{n−1}`.
    Standard,
    /// `λ^{n−1}/log λ`.
    LogGain,
    /// `λ^γ` with fitted `γ`.
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderFit {
    pub model: RemainderModel,
    pub constant: f64,
    pub gamma: Option<f64>,
    pub window: (f64, f64),
    /// Constant on the upper dyadic half over the constant on the lower half.
    pub trend: f64,
    /// RMS residual of the log-log envelope fit.
    pub residual: Option<f64>,
}

pub const ENVELOPE_WINDOWS: usize = 16;

fn model_value(model: RemainderModel, n: u32, l: f64) -> f64 {
    let p = l.powi(n as i32 - 1);
    match model {
        RemainderModel::Standard => p,
        RemainderModel::LogGain => p / l.ln(),
        RemainderModel::Power => 1.0,
    }
}

fn sup_ratio(lambdas: &[f64], e: &[f64], lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    lambdas
        .iter()
        .zip(e)
        .filter(|(l, _)| **l >= lo && **l <= hi)
        .map(|(l, v)| v.abs() / f(*l))
        .fold(0.0, f64::max)
}

/// Windowed maxima of `|E|` on log-spaced windows, as `(log λ_center, log max)`.
pub fn envelope(lambdas: &[f64], e: &[f64], lo: f64, hi: f64, windows: usize) -> Vec<(f64, f64)> {
    let edges = logspace(lo, hi, windows + 1);
    edges
        .windows(2)
        .filter_map(|w| {
            let m = sup_ratio(lambdas, e, w[0], w[1], |_| 1.0);
            (m > 0.0).then(|| ((w[0] * w[1]).sqrt().ln(), m.ln()))
        })
        .collect()
}

/// Fit `|E| ≲ C·model(λ)` on `window`; the dyadic split is at `hi/2` (or `√(lo·hi)` if narrower).
pub fn fit_remainder(
    lambdas: &[f64],
    e: &[f64],
    dim: u32,
    model: RemainderModel,
    window: (f64, f64),
) -> Result<RemainderFit> {
    let (lo, hi) = window;
    if !(lo >= 10.0 && hi > lo) {
        return Err(Error::Domain(format!("fit window [{lo}, {hi}] must satisfy 10 ≤ lo < hi")));
    }
    let gmin = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    let gmax = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo < gmin || hi > gmax {
        return Err(Error::Domain(format!("window [{lo}, {hi}] outside the grid [{gmin}, {gmax}]")));
    }
    let mid = if hi / 2.0 > lo { hi / 2.0 } else { (lo * hi).sqrt() };
    match model {
        RemainderModel::Standard | RemainderModel::LogGain => {
            let f = |l: f64| model_value(model, dim, l);
            let constant = sup_ratio(lambdas, e, lo, hi, f);
            let trend = sup_ratio(lambdas, e, mid, hi, f) / sup_ratio(lambdas, e, lo, mid, f);
            Ok(RemainderFit {
                model,
                constant,
                gamma: None,
                window,
                trend,
                residual: None,
            })
        }
        RemainderModel::Power => {
            let env = envelope(lambdas, e, lo, hi, ENVELOPE_WINDOWS);
            if env.len() < 3 {
                return Err(Error::DegenerateInput("fewer than 3 nonzero envelope windows".into()));
            }
            let (x, y): (Vec<f64>, Vec<f64>) = env.into_iter().unzip();
            let fit = fit_line(&x, &y);
            let g = fit.slope;
            let f = |l: f64| l.powf(g);
            let trend = sup_ratio(lambdas, e, mid, hi, f) / sup_ratio(lambdas, e, lo, mid, f);
            Ok(RemainderFit {
                model,
                constant: fit.intercept.exp(),
                gamma: Some(g),
                window,
                trend,
                residual: Some(fit.rms),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{sphere_spectrum, torus_spectrum};

    #[test]
    fn counting_examples() {
        let s = sphere_spectrum(2, 12.0);
        let c = counting(&s, &[10.0, -1.0]).unwrap();
        assert_eq!(c.n[0], 100.0);
        assert!((c.main[0] - 100.0).abs() < 1e-12);
        assert!(c.e[0].abs() < 1e-12);
        assert_eq!(c.n[1], 0.0);
        let t = torus_spectrum(&[2.0 * PI, 2.0 * PI], 6.0);
        let c = counting(&t, &[5.0]).unwrap();
        assert_eq!(c.n[0], 81.0);
        assert!((c.main[0] - 25.0 * PI).abs() < 1e-12);
        assert!((c.e[0] - (81.0 - 25.0 * PI)).abs() < 1e-12);
        assert!(matches!(counting(&t, &[7.0]), Err(Error::IncompleteSpectrum { .. })));
    }

    #[test]
    fn jumps_equal_multiplicities() {
        let s = sphere_spectrum(2, 30.0);
        let g = jump_grid(&s.entries.iter().map(|e| e.lambda).collect::<Vec<_>>(), 0.5, 30.0);
        let c = counting(&s, &g).unwrap();
        for (l, m) in s.entries.iter().skip(1).map(|e| (e.lambda, e.multiplicity)) {
            let i = g.iter().position(|x| *x == l).unwrap();
            assert_eq!(c.n[i] - c.n[i - 1], m as f64);
        }
    }

    #[test]
    fn synthetic_log_gain_constant() {
        let l = crate::numerics::linspace(10.0, 400.0, 2000);
        let e: Vec<f64> = l.iter().map(|x| x / x.ln()).collect();
        let f = fit_remainder(&l, &e, 2, RemainderModel::LogGain, (20.0, 400.0)).unwrap();
        assert!((f.constant - 1.0).abs() < 1e-6);
        assert!((f.trend - 1.0).abs() < 1e-6);
        let p = fit_remainder(&l, &e, 2, RemainderModel::Power, (20.0, 400.0)).unwrap();
        assert!(p.gamma.unwrap() < 1.0 && p.gamma.unwrap() > 0.6);
    }

    #[test]
    fn sphere_sharp_remainder() {
        let s = sphere_spectrum(2, 200.0);
        let g = jump_grid(&s.entries.iter().map(|e| e.lambda).collect::<Vec<_>>(), 20.0, 200.0);
        let c = counting(&s, &g).unwrap();
        let f = fit_remainder(&g, &c.e, 2, RemainderModel::Standard, (20.0, 200.0)).unwrap();
        assert!(f.constant >= 0.5 && f.constant <= 4.0, "{f:?}");
        assert!(f.trend >= 0.8 && f.trend <= 1.25, "{f:?}");
    }
}

//! Spectral projector kernels `Π_λ(x,y)` and per-level period-integral products.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::ProfileCurve;
use crate::numerics::bessel::j_nu_scaled;
use crate::spectra::{EigenStore, Spectrum, SurfaceSpectrum};

use super::smoothing::Jumps;

/// A spectrum together with what is needed to evaluate eigenfunctions.
#[derive(Debug, Clone, Copy)]
pub enum SpectralModel<'a> {
    /// Round `S²` in latitude–longitude `(s, θ)`, eigenfunctions by the addition theorem.
    Sphere(&'a Spectrum),
    /// Flat torus `ℝⁿ / ⊕ Lᵢℤ` with exponential eigenfunctions.
    Torus { periods: &'a [f64], spectrum: &'a Spectrum },
    /// Surface of revolution with stored radial eigenfunctions.
    Surface {
        profile: &'a ProfileCurve,
        spectrum: &'a SurfaceSpectrum,
    },
}

/// Submanifold over which eigenfunctions are integrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    /// `(s, θ)` on surfaces, `(x₁, …, xₙ)` on tori.
    Point(Vec<f64>),
    /// The circle `s = s₀` with its arclength measure.
    Latitude(f64),
    /// The band `[s₀, s₁] × S¹` with the area measure.
    Band(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub pi: f64,
    /// `(2π)⁻ⁿ ∫_{|ξ|≤λ} e^{i⟨exp_y⁻¹x, ξ⟩} dξ` at the geodesic distance.
    pub comparison: f64,
    pub e0: f64,
    pub distance: f64,
}

impl<'a> SpectralModel<'a> {
    pub fn spectrum(&self) -> &'a Spectrum {
        match self {
            Self::Sphere(s) => s,
            Self::Torus { spectrum, .. } => spectrum,
            Self::Surface { spectrum, .. } => &spectrum.spectrum,
        }
    }

    pub fn dim(&self) -> u32 {
        self.spectrum().dim
    }

    /// Level at which the spectrum stops being complete.
    pub fn complete_to(&self) -> f64 {
        match self {
            Self::Surface { spectrum, .. } if !spectrum.complete() => 0.0,
            _ => self.spectrum().lambda_max,
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Self::Sphere(s) if s.dim != 2 => Err(Error::Domain(format!("sphere model needs S², got dim {}", s.dim))),
            Self::Torus { periods, spectrum } if periods.len() as u32 != spectrum.dim => Err(Error::Domain(
                "torus periods do not match spectrum dimension".into(),
            )),
            Self::Surface { spectrum, .. } if spectrum.store.modes.is_empty() => {
                Err(Error::Domain("surface spectrum has no stored eigenfunctions".into()))
            }
            _ => Ok(()),
        }
    }

    /// Geodesic distance `d(x, y)`, failing outside the normal chart at `y`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Self::Sphere(_) => {
                point2(x)?;
                point2(y)?;
                let c = sphere_cos(x, y);
                let r = c.clamp(-1.0, 1.0).acos();
                if r > PI - 1e-9 {
                    return Err(Error::Domain(format!("antipodal points (distance {r})")));
                }
                Ok(r)
            }
            Self::Torus { periods, .. } => {
                if x.len() != periods.len() || y.len() != periods.len() {
                    return Err(Error::Domain("torus point has wrong dimension".into()));
                }
                let r2: f64 = periods
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(l, (a, b))| {
                        let d = (a - b).rem_euclid(*l);
                        d.min(l - d).powi(2)
                    })
                    .sum();
                let inj = 0.5 * periods.iter().cloned().fold(f64::INFINITY, f64::min);
                let r = r2.sqrt();
                if r >= inj {
                    return Err(Error::Domain(format!("distance {r} beyond injectivity radius {inj}")));
                }
                Ok(r)
            }
            Self::Surface { profile, .. } => {
                point2(x)?;
                point2(y)?;
                let dt = (x[1] - y[1]).rem_euclid(2.0 * PI);
                if dt.min(2.0 * PI - dt) > 1e-12 {
                    return Err(Error::Domain("surface kernel comparison needs points on a common meridian".into()));
                }
                let (lo, hi) = profile.domain();
                for p in [x, y] {
                    if p[0] <= lo || p[0] >= hi {
                        return Err(Error::Domain(format!("s = {} outside the open profile domain", p[0])));
                    }
                }
                Ok((x[0] - y[0]).abs())
            }
        }
    }
}

fn point2(p: &[f64]) -> Result<()> {
    if p.len() != 2 {
        return Err(Error::Domain(format!("surface point needs (s, θ), got {} coordinates", p.len())));
    }
    Ok(())
}

/// Cosine of the angle between latitude–longitude points on `S²`.
fn sphere_cos(x: &[f64], y: &[f64]) -> f64 {
    x[0].sin() * y[0].sin() + x[0].cos() * y[0].cos() * (x[1] - y[1]).cos()
}

/// `P_0(z), …, P_L(z)`.
pub fn legendre(l_max: usize, z: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(l_max + 1);
    p.push(1.0);
    if l_max >= 1 {
        p.push(z);
    }
    for l in 2..=l_max {
        let v = ((2 * l - 1) as f64 * z * p[l - 1] - (l - 1) as f64 * p[l - 2]) / l as f64;
        p.push(v);
    }
    p
}

/// `(2π)⁻ⁿ ∫_{|ξ|≤λ} e^{irξ₁} dξ = (2π)^{−n/2} λⁿ (λr)^{−n/2} J_{n/2}(λr)`.
pub fn bessel_comparison(n: u32, lambda: f64, r: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let nu = n as f64 / 2.0;
    (2.0 * PI).powf(-nu) * lambda.powi(n as i32) * j_nu_scaled(nu, lambda * r)
}

pub fn projector_kernel(model: &SpectralModel, x: &[f64], y: &[f64], lambda: f64) -> Result<KernelValue> {
    model.check()?;
    let distance = model.distance(x, y)?;
    let have = model.complete_to();
    if lambda > have {
        return Err(Error::IncompleteSpectrum { have, need: lambda });
    }
    let pi = match model {
        SpectralModel::Sphere(spec) => {
            let l_max = spec.entries.partition_point(|e| e.lambda <= lambda);
            let p = legendre(l_max, sphere_cos(x, y).clamp(-1.0, 1.0));
            (0..l_max).map(|l| (2 * l + 1) as f64 / (4.0 * PI) * p[l]).sum()
        }
        SpectralModel::Torus { periods, .. } => {
            let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            let vol: f64 = periods.iter().product();
            let mut total = 0.0;
            lattice_walk(periods, lambda * lambda, &mut |k: &[f64]| {
                total += k.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().cos();
            });
            total / vol
        }
        SpectralModel::Surface { spectrum, .. } => {
            let store = &spectrum.store;
            let dt = x[1] - y[1];
            store
                .modes
                .iter()
                .enumerate()
                .filter(|(_, e)| e.lambda <= lambda)
                .map(|(i, e)| {
                    let uu = store.eval(i, x[0]) * store.eval(i, y[0]);
                    if e.m == 0 {
                        uu
                    } else {
                        uu * (e.m as f64 * dt).cos()
                    }
                })
                .sum()
        }
    };
    let comparison = bessel_comparison(model.dim(), lambda, distance);
    Ok(KernelValue {
        x: x.to_vec(),
        y: y.to_vec(),
        lambda,
        pi,
        comparison,
        e0: pi - comparison,
        distance,
    })
}

/// Calls `f(k)` for every dual lattice vector `k ∈ ⊕(2π/Lᵢ)ℤ` with `|k|² ≤ cap`.
fn lattice_walk(periods: &[f64], cap: f64, f: &mut dyn FnMut(&[f64])) {
    let steps: Vec<f64> = periods.iter().map(|l| 2.0 * PI / l).collect();
    let mut k = vec![0.0; steps.len()];
    fn rec(steps: &[f64], i: usize, acc: f64, cap: f64, k: &mut Vec<f64>, f: &mut dyn FnMut(&[f64])) {
        if i == steps.len() {
            f(k);
            return;
        }
        let kmax = ((cap - acc).max(0.0).sqrt() / steps[i]).floor() as i64;
        for j in -kmax..=kmax {
            let v = j as f64 * steps[i];
            if acc + v * v <= cap {
                k[i] = v;
                rec(steps, i + 1, acc + v * v, cap, k, f);
            }
        }
    }
    rec(&steps, 0, 0.0, cap, &mut k, f);
}

/// Per-level sums `Σ_{λ_j = λ} (∫_{H₁}φ_j)(∫_{H₂}φ_j)` over an orthonormal real eigenbasis.
pub fn period_jumps(model: &SpectralModel, h1: &Site, h2: &Site) -> Result<Jumps> {
    model.check()?;
    let spec = model.spectrum();
    let mut weights = vec![0.0; spec.entries.len()];
    match model {
        SpectralModel::Sphere(_) => {
            let points = matches!((h1, h2), (Site::Point(_), Site::Point(_)));
            if points {
                let (Site::Point(x), Site::Point(y)) = (h1, h2) else { unreachable!() };
                point2(x)?;
                point2(y)?;
                let p = legendre(spec.len(), sphere_cos(x, y).clamp(-1.0, 1.0));
                for (l, w) in weights.iter_mut().enumerate() {
                    *w = (2 * l + 1) as f64 / (4.0 * PI) * p[l];
                }
            } else {
                // Only the zonal harmonic `√((2l+1)/4π) P_l(sin s)` has nonzero integrals
                // over rotation-invariant sites.
                let a = zonal_integrals(h1, spec.len())?;
                let b = zonal_integrals(h2, spec.len())?;
                for (l, w) in weights.iter_mut().enumerate() {
                    *w = (2 * l + 1) as f64 / (4.0 * PI) * a[l] * b[l];
                }
            }
        }
        SpectralModel::Torus { periods, .. } => {
            let (Site::Point(x), Site::Point(y)) = (h1, h2) else {
                return Err(Error::Domain("torus period integrals are implemented for points only".into()));
            };
            if x.len() != periods.len() || y.len() != periods.len() {
                return Err(Error::Domain("torus point has wrong dimension".into()));
            }
            let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            let vol: f64 = periods.iter().product();
            let lmax = spec.lambda_max;
            let evs: Vec<f64> = spec.entries.iter().map(|e| e.lambda * e.lambda).collect();
            let same = d.iter().all(|v| *v == 0.0);
            if same {
                for (w, e) in weights.iter_mut().zip(&spec.entries) {
                    *w = e.multiplicity as f64 / vol;
                }
            } else {
                lattice_walk(periods, lmax * lmax, &mut |k: &[f64]| {
                    let ev: f64 = k.iter().map(|v| v * v).sum();
                    let i = nearest(&evs, ev);
                    weights[i] += k.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().cos() / vol;
                });
            }
        }
        SpectralModel::Surface { profile, spectrum } => {
            let store = &spectrum.store;
            let index: HashMap<(i64, usize), usize> = store
                .modes
                .iter()
                .enumerate()
                .map(|(i, e)| ((e.m, e.k), i))
                .collect();
            let dtheta = match (h1, h2) {
                (Site::Point(x), Site::Point(y)) => {
                    point2(x)?;
                    point2(y)?;
                    Some(x[1] - y[1])
                }
                _ => None,
            };
            for (w, entry) in weights.iter_mut().zip(&spectrum.spectrum.entries) {
                for &(m, k) in entry.modes.iter().filter(|t| t.0 >= 0) {
                    let i = *index.get(&(m, k)).ok_or_else(|| {
                        Error::InvariantViolation(format!("mode ({m}, {k}) missing from eigenfunction store"))
                    })?;
                    if m == 0 {
                        *w += mode_integral(store, profile, i, h1)? * mode_integral(store, profile, i, h2)?;
                    } else if let (Some(dt), Site::Point(x), Site::Point(y)) = (dtheta, h1, h2) {
                        // cos·cos + sin·sin of the two real partners.
                        *w += store.eval(i, x[0]) * store.eval(i, y[0]) * (m as f64 * dt).cos();
                    }
                }
            }
        }
    }
    Ok(Jumps {
        lambdas: spec.entries.iter().map(|e| e.lambda).collect(),
        weights,
        complete_to: model.complete_to(),
        dim: spec.dim,
    })
}

fn nearest(sorted: &[f64], v: f64) -> usize {
    let i = sorted.partition_point(|&x| x < v);
    if i == 0 {
        return 0;
    }
    if i == sorted.len() || (v - sorted[i - 1]).abs() <= (sorted[i] - v).abs() {
        i - 1
    } else {
        i
    }
}

/// `∫_H P_l(sin s)` against the site measure, for `l < n`.
fn zonal_integrals(h: &Site, n: usize) -> Result<Vec<f64>> {
    Ok(match h {
        Site::Point(x) => {
            point2(x)?;
            legendre(n, x[0].sin())
        }
        Site::Latitude(s0) => {
            let c = 2.0 * PI * s0.cos();
            legendre(n, s0.sin()).into_iter().map(|p| c * p).collect()
        }
        Site::Band(s0, s1) => {
            // ∫ P_l(sin s) cos s ds = [P_{l+1} − P_{l−1}]/(2l+1) in z = sin s.
            let (a, b) = (legendre(n + 1, s0.sin()), legendre(n + 1, s1.sin()));
            (0..n)
                .map(|l| {
                    let prim = |p: &[f64], z: f64| {
                        if l == 0 {
                            z
                        } else {
                            (p[l + 1] - p[l - 1]) / (2 * l + 1) as f64
                        }
                    };
                    2.0 * PI * (prim(&b, s1.sin()) - prim(&a, s0.sin()))
                })
                .collect()
        }
    })
}

/// `∫_H u_i(s) dσ` for an `m = 0` mode.
fn mode_integral(store: &EigenStore, profile: &ProfileCurve, i: usize, h: &Site) -> Result<f64> {
    Ok(match h {
        Site::Point(x) => {
            point2(x)?;
            store.eval(i, x[0])
        }
        Site::Latitude(s0) => 2.0 * PI * profile.alpha(*s0) * store.eval(i, *s0),
        Site::Band(s0, s1) => 2.0 * PI * store.integrate_weighted(i, profile, *s0, *s1, |u| u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{sphere_spectrum, torus_spectrum};

    #[test]
    fn diagonal_comparison_is_ball_volume() {
        let v = bessel_comparison(2, 7.0, 0.0);
        assert!((v - 49.0 / (4.0 * PI)).abs() < 1e-12);
        let v3 = bessel_comparison(3, 2.0, 0.0);
        assert!((v3 - 8.0 * 4.0 / 3.0 * PI / (2.0 * PI).powi(3)).abs() < 1e-12);
    }

    #[test]
    fn sphere_diagonal_is_count_over_area() {
        let s = sphere_spectrum(2, 12.0);
        let m = SpectralModel::Sphere(&s);
        for lam in [0.5, 3.0, 10.0, 11.9] {
            let k = projector_kernel(&m, &[0.3, 1.0], &[0.3, 1.0], lam).unwrap();
            assert!((k.pi - s.count(lam) as f64 / (4.0 * PI)).abs() < 1e-12);
            assert!((k.comparison - lam * lam / (4.0 * PI)).abs() < 1e-12);
            assert_eq!(k.e0, k.pi - k.comparison);
        }
    }

    #[test]
    fn torus_kernel_symmetric_and_bessel_close() {
        let p = [2.0 * PI, 2.0 * PI];
        let s = torus_spectrum(&p, 50.0);
        let m = SpectralModel::Torus { periods: &p, spectrum: &s };
        let a = projector_kernel(&m, &[0.1, 0.0], &[0.0, 0.0], 50.0).unwrap();
        let b = projector_kernel(&m, &[0.0, 0.0], &[0.1, 0.0], 50.0).unwrap();
        assert!((a.pi - b.pi).abs() < 1e-10);
        assert!((a.distance - 0.1).abs() < 1e-15);
        // λJ₁(λr)/(2πr)
        let want = 50.0 * crate::numerics::bessel::jn(1, 5.0) / (2.0 * PI * 0.1);
        assert!((a.comparison - want).abs() < 1e-10);
        assert!(a.e0.abs() < 50.0f64.sqrt(), "E0 = {}", a.e0);
    }

    #[test]
    fn antipodes_rejected() {
        let s = sphere_spectrum(2, 5.0);
        let m = SpectralModel::Sphere(&s);
        assert!(matches!(
            projector_kernel(&m, &[0.0, 0.0], &[0.0, PI], 3.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sphere_jumps_from_sites() {
        let s = sphere_spectrum(2, 20.0);
        let m = SpectralModel::Sphere(&s);
        let eq = period_jumps(&m, &Site::Latitude(0.0), &Site::Latitude(0.0)).unwrap();
        for (l, w) in eq.weights.iter().enumerate() {
            if l % 2 == 1 {
                assert!(w.abs() < 1e-14, "l={l}: {w}");
            } else {
                assert!(*w > 0.0);
            }
        }
        // Full band: only the constant integrates to nonzero.
        let full = period_jumps(&m, &Site::Band(-PI / 2.0, PI / 2.0), &Site::Band(-PI / 2.0, PI / 2.0)).unwrap();
        assert!((full.weights[0] - 4.0 * PI).abs() < 1e-12);
        assert!(full.weights[1..].iter().all(|w| w.abs() < 1e-12));
    }
}

//! Laplace spectra: closed forms for spheres and flat tori, products, and
//! separable Sturm–Liouville spectra of surfaces of revolution.

mod cache;
mod sturm;

pub use cache::{cached_surface_spectrum, SpectrumCache, SOLVER_VERSION};
pub use sturm::{
    radial_eigenpairs, surface_spectrum, surface_spectrum_with, EigenStore, ModeCount, ModeEigenfunction, SolverOptions,
    SurfaceSpectrum,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{manifold_volume, ModelManifold};

/// One distinct frequency with its multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    /// Frequency `λ = √eigenvalue`.
    pub lambda: f64,
    pub multiplicity: u64,
    /// `(m, k)` labels of separable modes; empty for closed forms.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<(i64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub entries: Vec<SpectrumEntry>,
    /// Every frequency `≤ lambda_max` is present.
    pub lambda_max: f64,
    pub manifold: String,
    pub dim: u32,
    pub volume: f64,
}

/// Relative tolerance (on `λ²`) under which frequencies are merged.
pub const MERGE_TOL: f64 = 1e-12;

impl Spectrum {
    /// Build from unsorted `(λ², multiplicity, tags)` triples, merging coincident levels.
    pub fn from_levels(
        mut levels: Vec<(f64, u64, Vec<(i64, usize)>)>,
        lambda_max: f64,
        tol: f64,
        manifold: String,
        dim: u32,
        volume: f64,
    ) -> Self {
        levels.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, u64, Vec<(i64, usize)>)> = Vec::new();
        for (ev, mult, tags) in levels {
            if let Some(last) = merged.last_mut() {
                if (ev - last.0).abs() <= tol * last.0.abs().max(1.0) {
                    last.1 += mult;
                    last.2.extend(tags);
                    continue;
                }
            }
            merged.push((ev, mult, tags));
        }
        let entries = merged
            .into_iter()
            .map(|(ev, multiplicity, modes)| SpectrumEntry {
                lambda: ev.max(0.0).sqrt(),
                multiplicity,
                modes,
            })
            .collect();
        Self {
            entries,
            lambda_max,
            manifold,
            dim,
            volume,
        }
    }

    /// The spectrum of a point, the neutral element of [`product_spectrum`].
    pub fn point() -> Self {
        Self {
            entries: vec![SpectrumEntry {
                lambda: 0.0,
                multiplicity: 1,
                modes: Vec::new(),
            }],
            lambda_max: f64::INFINITY,
            manifold: "point".into(),
            dim: 0,
            volume: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Σ multiplicity` over `λ_j ≤ lambda`.
    pub fn count(&self, lambda: f64) -> u64 {
        let idx = self.entries.partition_point(|e| e.lambda <= lambda);
        self.entries[..idx].iter().map(|e| e.multiplicity).sum()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Check strict increase, a simple zero mode and positive multiplicities.
    pub fn validate(&self) -> Result<()> {
        for w in self.entries.windows(2) {
            if !(w[1].lambda > w[0].lambda) {
                return Err(Error::InvariantViolation(format!(
                    "frequencies not strictly increasing at {} ≥ {}",
                    w[0].lambda, w[1].lambda
                )));
            }
        }
        match self.entries.first() {
            Some(e) if e.lambda.abs() < 1e-6 && e.multiplicity == 1 => {}
            Some(e) => {
                return Err(Error::InvariantViolation(format!(
                    "lowest level λ = {} with multiplicity {}",
                    e.lambda, e.multiplicity
                )))
            }
            None => return Err(Error::InvariantViolation("empty spectrum".into())),
        }
        if self.entries.iter().any(|e| e.multiplicity == 0) {
            return Err(Error::InvariantViolation("zero multiplicity".into()));
        }
        Ok(())
    }
}

fn binomial(n: i64, k: i64) -> u64 {
    if k < 0 || n < k {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as u64
}

/// Frequencies `√(k(k+n−1))` of `Sⁿ` with multiplicity `C(k+n,n) − C(k+n−2,n)`.
pub fn sphere_spectrum(n: u32, lambda_max: f64) -> Spectrum {
    assert!(n >= 1, "sphere dimension must be positive");
    let nn = n as i64;
    let mut levels = Vec::new();
    let mut k: i64 = 0;
    loop {
        let ev = (k * (k + nn - 1)) as f64;
        if ev > lambda_max * lambda_max {
            break;
        }
        let mult = binomial(k + nn, nn) - binomial(k + nn - 2, nn);
        levels.push((ev, mult, Vec::new()));
        k += 1;
    }
    let m = ModelManifold::RoundSphere(n);
    Spectrum::from_levels(levels, lambda_max, MERGE_TOL, m.label(), n, manifold_volume(&m))
}

/// Frequencies `|k*|` over the dual lattice `⊕ (2π/Lᵢ)ℤ`.
pub fn torus_spectrum(periods: &[f64], lambda_max: f64) -> Spectrum {
    assert!(!periods.is_empty() && periods.iter().all(|p| *p > 0.0));
    let steps: Vec<f64> = periods.iter().map(|l| 2.0 * std::f64::consts::PI / l).collect();
    let cap = lambda_max * lambda_max;
    let mut norms = Vec::new();
    fn walk(steps: &[f64], acc: f64, cap: f64, out: &mut Vec<f64>) {
        let Some((&w, rest)) = steps.split_first() else {
            out.push(acc);
            return;
        };
        let kmax = ((cap - acc).max(0.0).sqrt() / w).floor() as i64;
        for k in -kmax..=kmax {
            let v = acc + (k as f64 * w).powi(2);
            if v <= cap {
                walk(rest, v, cap, out);
            }
        }
    }
    walk(&steps, 0.0, cap, &mut norms);
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut levels: Vec<(f64, u64, Vec<(i64, usize)>)> = Vec::new();
    for v in norms {
        match levels.last_mut() {
            Some(last) if (v - last.0).abs() <= MERGE_TOL * last.0.max(1.0) => last.1 += 1,
            _ => levels.push((v, 1, Vec::new())),
        }
    }
    let m = ModelManifold::FlatTorus(periods.to_vec());
    Spectrum::from_levels(
        levels,
        lambda_max,
        MERGE_TOL,
        m.label(),
        periods.len() as u32,
        manifold_volume(&m),
    )
}

/// Spectrum of the Riemannian product: `√(λᵢ² + νⱼ²)` with multiplicity products.
pub fn product_spectrum(s1: &Spectrum, s2: &Spectrum, lambda_max: f64) -> Result<Spectrum> {
    for s in [s1, s2] {
        if s.lambda_max < lambda_max {
            return Err(Error::IncompleteInput {
                have: s.lambda_max,
                need: lambda_max,
            });
        }
    }
    let cap = lambda_max * lambda_max;
    let mut levels = Vec::new();
    for a in &s1.entries {
        let a2 = a.lambda * a.lambda;
        if a2 > cap {
            break;
        }
        for b in &s2.entries {
            let v = a2 + b.lambda * b.lambda;
            if v > cap {
                break;
            }
            levels.push((v, a.multiplicity * b.multiplicity, Vec::new()));
        }
    }
    let label = match (s1.dim, s2.dim) {
        (0, _) => s2.manifold.clone(),
        (_, 0) => s1.manifold.clone(),
        _ => format!("{}x{}", s1.manifold, s2.manifold),
    };
    Ok(Spectrum::from_levels(
        levels,
        lambda_max,
        MERGE_TOL,
        label,
        s1.dim + s2.dim,
        s1.volume * s2.volume,
    ))
}

/// Closed-form spectrum of a model manifold; surfaces of revolution go through [`surface_spectrum`].
pub fn closed_form_spectrum(m: &ModelManifold, lambda_max: f64) -> Result<Spectrum> {
    match m {
        ModelManifold::RoundSphere(n) => Ok(sphere_spectrum(*n, lambda_max)),
        ModelManifold::FlatTorus(p) => Ok(torus_spectrum(p, lambda_max)),
        ModelManifold::Product(a, b) => {
            product_spectrum(&closed_form_spectrum(a, lambda_max)?, &closed_form_spectrum(b, lambda_max)?, lambda_max)
        }
        ModelManifold::SurfaceOfRevolution(p) => {
            Ok(surface_spectrum(p, lambda_max, None)?.spectrum)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pairs(s: &Spectrum) -> Vec<(f64, u64)> {
        s.entries.iter().map(|e| (e.lambda, e.multiplicity)).collect()
    }

    #[test]
    fn sphere_levels() {
        let s = sphere_spectrum(2, 4.0);
        let want = [(0.0, 1), (2f64.sqrt(), 3), (6f64.sqrt(), 5), (12f64.sqrt(), 7)];
        assert_eq!(s.len(), 4);
        for ((l, m), (wl, wm)) in pairs(&s).into_iter().zip(want) {
            assert!((l - wl).abs() < 1e-14 && m == wm);
        }
        assert_eq!(pairs(&sphere_spectrum(1, 2.5)), vec![(0.0, 1), (1.0, 2), (2.0, 2)]);
        let s3 = pairs(&sphere_spectrum(3, 3.0));
        assert_eq!(s3.iter().map(|p| p.1).collect::<Vec<_>>(), vec![1, 4, 9]);
        assert!((s3[2].0 - 8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn torus_levels() {
        let t = torus_spectrum(&[2.0 * PI, 2.0 * PI], 5.0);
        assert_eq!(t.count(5.0), 81);
        assert_eq!(t.entries.iter().find(|e| e.lambda == 5.0).unwrap().multiplicity, 12);
        assert_eq!(pairs(&torus_spectrum(&[2.0 * PI], 2.5)), pairs(&sphere_spectrum(1, 2.5)));
        t.validate().unwrap();
    }

    #[test]
    fn products() {
        let c = torus_spectrum(&[2.0 * PI], 20.0);
        let p = product_spectrum(&c, &c, 20.0).unwrap();
        assert_eq!(pairs(&p), pairs(&torus_spectrum(&[2.0 * PI, 2.0 * PI], 20.0)));
        let s2 = sphere_spectrum(2, 3.0);
        let ps = product_spectrum(&s2, &torus_spectrum(&[2.0 * PI], 3.0), 3.0).unwrap();
        let mut want = std::collections::BTreeMap::<i64, u64>::new();
        for l in 0..3i64 {
            for k in -3..=3i64 {
                if l * (l + 1) + k * k <= 9 {
                    *want.entry(l * (l + 1) + k * k).or_default() += 2 * l as u64 + 1;
                }
            }
        }
        assert_eq!(ps.len(), want.len());
        for (e, (ev, m)) in ps.entries.iter().zip(want) {
            assert!((e.lambda * e.lambda - ev as f64).abs() < 1e-12 && e.multiplicity == m);
        }
        let id = product_spectrum(&s2, &Spectrum::point(), 3.0).unwrap();
        assert_eq!(pairs(&id), pairs(&s2));
        assert!(matches!(
            product_spectrum(&s2, &c, 5.0),
            Err(Error::IncompleteInput { .. })
        ));
    }
}

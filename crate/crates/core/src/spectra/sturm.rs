//! Separable spectrum of `Δ = α⁻¹∂_s(α∂_s) + α⁻²∂_θ²` on a surface of revolution.
//!
//! For each angular mode `m` the radial problem
//! `−α⁻¹(αu′)′ + (m²/α²)u = Λu` is shot from both poles in scaled Prüfer
//! variables `u = ρ sin ϑ`, `αu′ = K(s)ρ cos ϑ`. The start at distance `δ` from a
//! pole uses the two-term Frobenius solution `d^m(1 + c d²)`. The mismatch
//! `F(Λ) = ϑ_L(0) − ϑ_R(0)` equals `kπ` exactly at the eigenvalue with `k`
//! nodes, and `⌊F/π⌋` is independent of the scale `K`, so
//! `#{k : kπ ≤ F(Λ)}` counts the eigenvalues `≤ Λ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::ProfileCurve;
use crate::numerics::chebyshev::{barycentric, lobatto_points, ChebSeries};
use crate::numerics::ode::{integrate, Dop853, OdeOptions, OdeSystem, Solution};
use crate::numerics::roots::brent;

use super::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Distance `δ` from each pole where shooting starts.
    pub pole_offset: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Root tolerance in `Λ = λ²`, relative to `max(Λ, 1)`.
    pub lambda_tol: f64,
    /// Lobatto nodes per stored eigenfunction (0 skips eigenfunctions).
    pub grid_points: usize,
    /// Levels closer than this (relative, in `Λ`) are merged into one entry.
    pub merge_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pole_offset: 1e-4,
            rtol: 1e-12,
            atol: 1e-12,
            lambda_tol: 1e-12,
            grid_points: 2048,
            merge_tol: 1e-8,
        }
    }
}

/// Radial factor `u_{m,k}` of the eigenfunctions `u(s)cos(mθ)`, `u(s)sin(mθ)`.
///
/// Normalized by `2π∫u²α ds = 1` for `m = 0` and `π∫u²α ds = 1` for `m > 0`,
/// so each real eigenfunction has unit `L²` norm on the surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEigenfunction {
    pub m: i64,
    pub k: usize,
    pub lambda: f64,
    /// Values at [`EigenStore::nodes`].
    pub values: Vec<f64>,
}

/// Eigenfunctions sampled on a common Lobatto grid of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenStore {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub modes: Vec<ModeEigenfunction>,
}

impl EigenStore {
    pub fn eval(&self, idx: usize, s: f64) -> f64 {
        barycentric(&self.nodes, &self.modes[idx].values, s)
    }

    /// Angular normalization `2π` (m = 0) or `π`.
    pub fn angular_weight(m: i64) -> f64 {
        if m == 0 {
            2.0 * std::f64::consts::PI
        } else {
            std::f64::consts::PI
        }
    }

    /// `∫_{s0}^{s1} f(u_idx) α ds` by Clenshaw–Curtis on the stored grid.
    pub fn integrate_weighted<F: Fn(f64) -> f64>(
        &self,
        idx: usize,
        profile: &ProfileCurve,
        s0: f64,
        s1: f64,
        f: F,
    ) -> f64 {
        let vals: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.modes[idx].values)
            .map(|(&s, &u)| f(u) * profile.alpha(s))
            .collect();
        let prim = ChebSeries::from_lobatto_values(self.lo, self.hi, &vals).antiderivative();
        prim.eval(s1.clamp(self.lo, self.hi)) - prim.eval(s0.clamp(self.lo, self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCount {
    pub m: i64,
    /// `#{k : kπ ≤ F(Λ_max)}`.
    pub winding: usize,
    pub computed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpectrum {
    pub spectrum: Spectrum,
    pub store: EigenStore,
    pub counts: Vec<ModeCount>,
    pub m_max: i64,
    pub options: SolverOptions,
}

impl SurfaceSpectrum {
    /// Index into `store.modes` of `(m, k)`.
    pub fn mode_index(&self, m: i64, k: usize) -> Option<usize> {
        self.store.modes.iter().position(|e| e.m == m && e.k == k)
    }

    pub fn complete(&self) -> bool {
        self.counts.iter().all(|c| c.winding == c.computed)
    }
}

/// Prüfer equations with the WKB-like scale `K⁴ = (Λα² − m²)² + K₀⁴`.
struct PruferAngle<'a> {
    profile: &'a ProfileCurve,
    m2: f64,
    ev: f64,
    k0_4: f64,
}

impl PruferAngle<'_> {
    fn k_at(&self, s: f64) -> f64 {
        let a = self.profile.alpha(s);
        let x = self.ev * a * a - self.m2;
        (x * x + self.k0_4).sqrt().sqrt()
    }

    fn rate(&self, s: f64, th: f64) -> (f64, f64) {
        let [a, a1, _, _] = self.profile.jet(s);
        let x = self.ev * a * a - self.m2;
        let k4 = x * x + self.k0_4;
        let k = k4.sqrt().sqrt();
        let dlk = x * self.ev * a * a1 / k4;
        let (sn, cs) = th.sin_cos();
        let q = x / (a * k);
        let dth = k * cs * cs / a + q * sn * sn + dlk * sn * cs;
        let dlr = sn * cs * (k / a - q) - cs * cs * dlk;
        (dth, dlr)
    }
}

impl OdeSystem<1> for PruferAngle<'_> {
    fn rhs(&self, s: f64, y: &[f64; 1], dy: &mut [f64; 1]) {
        dy[0] = self.rate(s, y[0]).0;
    }
}

/// `(ϑ, ln ρ)` for eigenfunction reconstruction.
struct PruferFull<'a>(PruferAngle<'a>);

impl OdeSystem<2> for PruferFull<'_> {
    fn rhs(&self, s: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
        let (a, b) = self.0.rate(s, y[0]);
        dy[0] = a;
        dy[1] = b;
    }
}

/// Shooting data for one mode.
struct Mode<'a> {
    profile: &'a ProfileCurve,
    m: i64,
    delta: f64,
    /// `α‴/6` coefficients of `α = d + a d³` at the two poles.
    a3: (f64, f64),
    opts: OdeOptions,
}

impl<'a> Mode<'a> {
    fn new(profile: &'a ProfileCurve, m: i64, so: &SolverOptions) -> Self {
        let (lo, hi) = profile.domain();
        let a_lo = profile.jet(lo)[3] / 6.0;
        let a_hi = -profile.jet(hi)[3] / 6.0;
        Self {
            profile,
            m,
            delta: so.pole_offset,
            a3: (a_lo, a_hi),
            opts: OdeOptions {
                rtol: so.rtol,
                atol: so.atol,
                ..OdeOptions::default()
            },
        }
    }

    fn system(&self, ev: f64) -> PruferAngle<'a> {
        PruferAngle {
            profile: self.profile,
            m2: (self.m * self.m) as f64,
            ev,
            k0_4: scale(ev).powi(4),
        }
    }

    /// Frobenius start `(ϑ, ln ρ)` at distance `δ` from the left (`right = false`) or right pole.
    fn start(&self, ev: f64, right: bool) -> (f64, [f64; 2]) {
        let (lo, hi) = self.profile.domain();
        let d = self.delta;
        let m = self.m as f64;
        let a = if right { self.a3.1 } else { self.a3.0 };
        let c = -(ev + 2.0 * a * m * (m + 1.0)) / (4.0 * (m + 1.0));
        let s = if right { hi - d } else { lo + d };
        let alpha = self.profile.alpha(s);
        let du = m + c * (m + 2.0) * d * d;
        let p = if right { -alpha * du } else { alpha * du };
        let th = (self.system(ev).k_at(s) * d * (1.0 + c * d * d)).atan2(p);
        let log_u = m * d.ln() + (1.0 + c * d * d).ln();
        (s, [th, log_u - th.sin().ln()])
    }

    fn mismatch(&self, ev: f64) -> Result<f64> {
        let sys = self.system(ev);
        let mut ends = [0.0; 2];
        for (i, right) in [false, true].into_iter().enumerate() {
            let (s0, y0) = self.start(ev, right);
            let mut st = Dop853::new(&sys, s0, [y0[0]], -s0, self.opts);
            while st.t != 0.0 {
                st.step(0.0)?;
            }
            ends[i] = st.y[0];
        }
        Ok(ends[0] - ends[1])
    }

    /// Eigenfunction values on `nodes` (unnormalized, positive near the left pole).
    fn eigenfunction(&self, ev: f64, nodes: &[f64]) -> Result<Vec<f64>> {
        let sys = PruferFull(self.system(ev));
        let (lo, hi) = self.profile.domain();
        let mut sides: Vec<(f64, Solution<2>)> = Vec::new();
        for right in [false, true] {
            let (s0, y0) = self.start(ev, right);
            sides.push((s0, integrate(&sys, s0, y0, 0.0, self.opts)?));
        }
        let k_mid = self.system(ev).k_at(0.0);
        let log_abs = |y: [f64; 2], use_p: bool| {
            let f = if use_p { k_mid * y[0].cos() } else { y[0].sin() };
            (y[1] + f.abs().ln(), f.signum())
        };
        let (yl, yr) = (sides[0].1.y_end(), sides[1].1.y_end());
        let use_p = yl[0].sin().abs() < yl[0].cos().abs();
        let (ll, sl) = log_abs(yl, use_p);
        let (lr, sr) = log_abs(yr, use_p);
        let shift = ll - lr;
        let flip = sl * sr;
        let m = self.m as f64;
        let frob = |d: f64, right: bool| {
            let a = if right { self.a3.1 } else { self.a3.0 };
            let c = -(ev + 2.0 * a * m * (m + 1.0)) / (4.0 * (m + 1.0));
            if d == 0.0 {
                return if self.m == 0 { (0.0, 1.0) } else { (f64::NEG_INFINITY, 1.0) };
            }
            (m * d.ln() + (1.0 + c * d * d).ln(), 1.0)
        };
        let mut logs = Vec::with_capacity(nodes.len());
        for &s in nodes {
            let (l, sg) = if s <= sides[0].0 {
                frob(s - lo, false)
            } else if s >= sides[1].0 {
                let (l, sg) = frob(hi - s, true);
                (l + shift, sg * flip)
            } else if s <= 0.0 {
                let y = sides[0].1.eval(s);
                let (l, sg) = log_abs(y, false);
                (l, sg)
            } else {
                let y = sides[1].1.eval(s);
                let (l, sg) = log_abs(y, false);
                (l + shift, sg * flip)
            };
            logs.push((l, sg));
        }
        let top = logs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        Ok(logs.into_iter().map(|(l, sg)| sg * (l - top).exp()).collect())
    }
}

/// Turning-point floor `K₀ = max(Λ, 1)^{1/3}` of the Prüfer scale (the Airy scale).
/// The node count `⌊F/π⌋` does not depend on the scale.
fn scale(ev: f64) -> f64 {
    ev.max(1.0).cbrt()
}

fn winding_of(f: f64) -> usize {
    if f < 0.0 {
        0
    } else {
        (f / std::f64::consts::PI).floor() as usize + 1
    }
}

/// Spectrum with default options; `m_max` defaults to `⌈λ_max max α⌉ + 2`.
pub fn surface_spectrum(
    profile: &ProfileCurve,
    lambda_max: f64,
    m_max: Option<i64>,
) -> Result<SurfaceSpectrum> {
    surface_spectrum_with(profile, lambda_max, m_max, SolverOptions::default())
}

pub fn surface_spectrum_with(
    profile: &ProfileCurve,
    lambda_max: f64,
    m_max: Option<i64>,
    so: SolverOptions,
) -> Result<SurfaceSpectrum> {
    if !(lambda_max > 0.0) {
        return Err(Error::Domain(format!("lambda_max = {lambda_max} must be positive")));
    }
    let top = profile.max_alpha();
    let floor = (lambda_max * top).ceil() as i64;
    let m_max = m_max.unwrap_or(floor + 2);
    if m_max < floor {
        return Err(Error::Domain(format!(
            "m_max = {m_max} below λ_max·max α = {:.3}; higher modes would be missed",
            lambda_max * top
        )));
    }
    let (lo, hi) = profile.domain();
    let nodes = if so.grid_points >= 2 {
        lobatto_points(so.grid_points, lo, hi)
    } else {
        Vec::new()
    };
    let ev_max = lambda_max * lambda_max;
    let per_mode: Vec<Result<(ModeCount, Vec<ModeEigenfunction>)>> = (0..=m_max)
        .into_par_iter()
        .map(|m| {
            let mode = Mode::new(profile, m, &so);
            solve_mode(&mode, ev_max, top, &nodes, profile, &so)
        })
        .collect();
    let mut counts = Vec::new();
    let mut modes = Vec::new();
    for r in per_mode {
        let (c, mut efs) = r?;
        counts.push(c);
        modes.append(&mut efs);
    }
    let mut levels = Vec::new();
    for e in &modes {
        let ev = e.lambda * e.lambda;
        if e.m == 0 {
            levels.push((ev, 1, vec![(0, e.k)]));
        } else {
            levels.push((ev, 2, vec![(e.m, e.k), (-e.m, e.k)]));
        }
    }
    let area = profile.area();
    let mut spectrum = Spectrum::from_levels(levels, lambda_max, so.merge_tol, profile.label().to_string(), 2, area);
    if let Some(first) = spectrum.entries.first_mut() {
        if first.lambda < 1e-6 {
            first.lambda = 0.0;
        }
    }
    Ok(SurfaceSpectrum {
        spectrum,
        store: EigenStore { lo, hi, nodes, modes },
        counts,
        m_max,
        options: so,
    })
}

fn solve_mode(
    mode: &Mode,
    ev_max: f64,
    top: f64,
    nodes: &[f64],
    profile: &ProfileCurve,
    so: &SolverOptions,
) -> Result<(ModeCount, Vec<ModeEigenfunction>)> {
    let m = mode.m;
    let floor = (m * m) as f64 / (top * top);
    if floor > ev_max {
        return Ok((
            ModeCount {
                m,
                winding: 0,
                computed: 0,
            },
            Vec::new(),
        ));
    }
    let f_max = mode.mismatch(ev_max)?;
    let winding = winding_of(f_max);
    let pi = std::f64::consts::PI;
    let lo0 = floor - 1.0;
    // F grows roughly linearly in λ, so a scan uniform in λ isolates most roots.
    let n_scan = winding + 1;
    let (l0, l1) = (lo0.max(0.0).sqrt(), ev_max.sqrt());
    let mut samples = vec![(lo0, mode.mismatch(lo0)?), (ev_max, f_max)];
    for i in 1..n_scan {
        let l = l0 + (l1 - l0) * i as f64 / n_scan as f64;
        let ev = l * l;
        samples.push((ev, mode.mismatch(ev)?));
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = Vec::with_capacity(winding);
    let mut lo = lo0;
    for idx in 0..winding {
        let target = idx as f64 * pi;
        let ev = if m == 0 && idx == 0 {
            0.0
        } else {
            let a = samples
                .iter()
                .filter(|p| p.0 >= lo && p.1 < target)
                .map(|p| p.0)
                .fold(lo, f64::max);
            let b = samples
                .iter()
                .filter(|p| p.0 > a && p.1 >= target)
                .map(|p| p.0)
                .fold(ev_max, f64::min);
            let g = |ev: f64| mode.mismatch(ev).map(|f| f - target).unwrap_or(f64::NAN);
            let (glo, ghi) = (g(a), g(b));
            if !(glo < 0.0 && ghi >= 0.0) {
                return Err(Error::SolverFailure {
                    m,
                    lo: a,
                    hi: b,
                    reason: format!("no sign change for node count {idx} ({glo:e}, {ghi:e})"),
                });
            }
            if ghi == 0.0 {
                b
            } else {
                let tol = so.lambda_tol * ev_max.max(1.0);
                brent(g, a, b, tol).map_err(|e| Error::SolverFailure {
                    m,
                    lo: a,
                    hi: b,
                    reason: e.to_string(),
                })?
            }
        };
        lo = ev + so.lambda_tol * ev.abs().max(1.0);
        let values = if nodes.is_empty() {
            Vec::new()
        } else {
            let raw = mode.eigenfunction(ev, nodes)?;
            let sq: Vec<f64> = nodes.iter().zip(&raw).map(|(&s, &u)| u * u * profile.alpha(s)).collect();
            let lo_n = *nodes.last().unwrap();
            let hi_n = nodes[0];
            let norm = ChebSeries::from_lobatto_values(lo_n, hi_n, &sq).integral()
                * EigenStore::angular_weight(m);
            let scale = 1.0 / norm.sqrt();
            raw.into_iter().map(|u| u * scale).collect()
        };
        out.push(ModeEigenfunction {
            m,
            k: idx,
            lambda: ev.max(0.0).sqrt(),
            values,
        });
    }
    Ok((
        ModeCount {
            m,
            winding,
            computed: out.len(),
        },
        out,
    ))
}

/// Eigenpairs of the single radial problem for mode `m` with `λ ≤ lambda_max`.
pub fn radial_eigenpairs(
    profile: &ProfileCurve,
    m: i64,
    lambda_max: f64,
    so: SolverOptions,
) -> Result<(ModeCount, Vec<ModeEigenfunction>)> {
    let (lo, hi) = profile.domain();
    let nodes = if so.grid_points >= 2 {
        lobatto_points(so.grid_points, lo, hi)
    } else {
        Vec::new()
    };
    let mode = Mode::new(profile, m.abs(), &so);
    solve_mode(&mode, lambda_max * lambda_max, profile.max_alpha(), &nodes, profile, &so)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::make_round_sphere;

    #[test]
    fn legendre_eigenvalues() {
        let p = make_round_sphere();
        let so = SolverOptions {
            grid_points: 0,
            ..SolverOptions::default()
        };
        for m in 0..=5i64 {
            let (count, efs) = radial_eigenpairs(&p, m, 10.5, so).unwrap();
            assert_eq!(efs.len(), (10 - m + 1) as usize);
            assert_eq!(count.winding, count.computed);
            for (i, e) in efs.iter().enumerate() {
                let l = (m + i as i64) as f64;
                let want = l * (l + 1.0);
                let ev = e.lambda * e.lambda;
                assert!((ev - want).abs() <= 1e-6 * want.max(1.0), "m={m} k={i}: {ev} vs {want}");
            }
        }
    }

    #[test]
    fn eigenfunctions_are_legendre() {
        let p = make_round_sphere();
        let so = SolverOptions {
            grid_points: 513,
            ..SolverOptions::default()
        };
        let s = surface_spectrum_with(&p, 5.0, None, so).unwrap();
        // u_{0,2} ∝ P_2(sin s), u_{1,1} ∝ cos s · P_2′(sin s) ∝ cos s sin s
        let i = s.mode_index(0, 2).unwrap();
        let norm = (5.0 / (4.0 * std::f64::consts::PI)).sqrt();
        for x in [-1.2f64, -0.3, 0.0, 0.8, 1.5] {
            let want = norm * 0.5 * (3.0 * x.sin().powi(2) - 1.0);
            assert!((s.store.eval(i, x).abs() - want.abs()).abs() < 1e-8);
        }
        let j = s.mode_index(1, 1).unwrap();
        let c = (15.0 / (4.0 * std::f64::consts::PI)).sqrt();
        for x in [-1.0f64, 0.4, 1.2] {
            let want = c * x.cos() * x.sin();
            assert!((s.store.eval(j, x).abs() - want.abs()).abs() < 1e-8, "{x}");
        }
    }
}

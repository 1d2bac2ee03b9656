//! The smoothing kernel `ρ` and smoothed step series `Σ w_j P(σ(λ − λ_j))`.
//!
//! `ρ̂ = 1_{[−1.5,1.5]} * φ` with `φ` the normalized bump `exp(−1/(1−4u²))` on
//! `|u| < 1/2`, so `ρ̂ ≡ 1` on `[−1,1]` and vanishes outside `[−2,2]`. With the
//! convention `ρ(s) = (2π)⁻¹∫ρ̂(τ)e^{isτ}dτ` both `ρ` and its antiderivative `P`
//! are evaluated by the trapezoid rule in `τ`, which is exact up to aliasing
//! from `ρ` at distance `π/Δτ`. Values on `[0, X_MAX]` are tabulated once and
//! read back by quintic Hermite interpolation.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::gauss_kronrod;

/// Trapezoid nodes on `(0, 2]`.
const NODES: usize = 1024;
/// Table step.
const STEP: f64 = 1.0 / 16.0;
/// Table extent.
const X_MAX: f64 = 600.0;
/// Default tail tolerance defining the decay margin.
pub const TAIL_TOL: f64 = 1e-9;

fn bump(u: f64) -> f64 {
    let v = 1.0 - 4.0 * u * u;
    if v <= 0.0 {
        0.0
    } else {
        (-1.0 / v).exp()
    }
}

struct Table {
    /// `(τ_k, ρ̂(τ_k))` for `k = 1..=NODES`.
    taus: Vec<(f64, f64)>,
    p: Vec<f64>,
    rho: Vec<f64>,
    drho: Vec<f64>,
    /// `∫_{x_i}^∞ |ρ|` upper estimates.
    tail: Vec<f64>,
    decay: Vec<(u32, f64)>,
    interp_error: f64,
}

/// Tabulated smoothing kernel together with the scale it was built for.
#[derive(Clone)]
pub struct SmoothingKernel {
    pub scale: f64,
    table: Arc<Table>,
}

impl std::fmt::Debug for SmoothingKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothingKernel")
            .field("scale", &self.scale)
            .field("x_max", &X_MAX)
            .field("interp_error", &self.table.interp_error)
            .finish()
    }
}

/// Audit record of a kernel table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAudit {
    pub step: f64,
    pub x_max: f64,
    /// Measured `K_j = sup |ρ(s)|⟨s⟩^j` on the table, `j = 0..=8`.
    pub decay: Vec<(u32, f64)>,
    pub interp_error: f64,
    pub tail_at_x_max: f64,
    pub margin: f64,
}

pub fn build_smoothing_kernel(scale: f64) -> Result<SmoothingKernel> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("smoothing scale must be positive, got {scale}")));
    }
    static TABLE: OnceLock<Arc<Table>> = OnceLock::new();
    let table = TABLE.get_or_init(|| Arc::new(Table::build())).clone();
    Ok(SmoothingKernel { scale, table })
}

impl Table {
    fn build() -> Self {
        let z = gauss_kronrod(bump, -0.5, 0.5, 1e-13, 1e-18).expect("bump mass").value;
        let cdf = |x: f64| -> f64 {
            if x <= -0.5 {
                0.0
            } else if x >= 0.5 {
                1.0
            } else if x <= 0.0 {
                gauss_kronrod(bump, -0.5, x, 1e-13, 1e-18).expect("bump cdf").value / z
            } else {
                1.0 - gauss_kronrod(bump, x, 0.5, 1e-13, 1e-18).expect("bump cdf").value / z
            }
        };
        let dt = 2.0 / NODES as f64;
        let taus: Vec<(f64, f64)> = (1..=NODES)
            .map(|k| {
                let t = k as f64 * dt;
                (t, cdf(t + 1.5) - cdf(t - 1.5))
            })
            .collect();
        let n = (X_MAX / STEP).round() as usize;
        let vals: Vec<[f64; 3]> = (0..=n)
            .into_par_iter()
            .map(|i| direct(&taus, i as f64 * STEP))
            .collect();
        let p: Vec<f64> = vals.iter().map(|v| v[0]).collect();
        let rho: Vec<f64> = vals.iter().map(|v| v[1]).collect();
        let drho: Vec<f64> = vals.iter().map(|v| v[2]).collect();

        let decay: Vec<(u32, f64)> = (0..=8u32)
            .map(|j| {
                let k = rho
                    .iter()
                    .enumerate()
                    .map(|(i, r)| r.abs() * (1.0 + (i as f64 * STEP).powi(2)).powf(j as f64 / 2.0))
                    .fold(0.0f64, f64::max);
                (j, 1.1 * k)
            })
            .collect();
        let beyond = decay
            .iter()
            .filter(|(j, _)| *j >= 2)
            .map(|&(j, k)| k * X_MAX.powi(1 - j as i32) / (j - 1) as f64)
            .fold(f64::INFINITY, f64::min);
        let mut tail = vec![0.0; n + 1];
        tail[n] = beyond;
        for i in (0..n).rev() {
            tail[i] = tail[i + 1] + 1.01 * 0.5 * STEP * (rho[i].abs() + rho[i + 1].abs());
        }

        let mut t = Self {
            taus,
            p,
            rho,
            drho,
            tail,
            decay,
            interp_error: 0.0,
        };
        let worst = (0..n)
            .into_par_iter()
            .step_by(7)
            .map(|i| {
                let x = (i as f64 + 0.5) * STEP;
                (t.p_table(x) - direct(&t.taus, x)[0]).abs()
            })
            .reduce(|| 0.0, f64::max);
        t.interp_error = 2.0 * worst + 4.0 * f64::EPSILON;
        t
    }

    /// Quintic Hermite interpolation of `P` from `(P, ρ, ρ′)` on the table.
    fn p_table(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0 - self.p_table(-x);
        }
        if x >= X_MAX {
            return 1.0;
        }
        let i = ((x / STEP) as usize).min(self.p.len() - 2);
        let h = STEP;
        let t = (x - i as f64 * h) / h;
        let (y0, y1) = (self.p[i], self.p[i + 1]);
        let (d0, d1) = (self.rho[i] * h, self.rho[i + 1] * h);
        let (s0, s1) = (self.drho[i] * h * h, self.drho[i + 1] * h * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        h0 * y0 + h1 * d0 + h2 * s0 + h3 * s1 + h4 * d1 + h5 * y1
    }

    fn tail_at(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= X_MAX {
            let j = self.decay.iter().filter(|(j, _)| *j >= 2);
            return j
                .map(|&(j, k)| k * x.powi(1 - j as i32) / (j - 1) as f64)
                .fold(f64::INFINITY, f64::min);
        }
        self.tail[(x / STEP) as usize]
    }
}

/// `[P(x), ρ(x), ρ′(x)]` by the trapezoid rule over the nodes.
fn direct(taus: &[(f64, f64)], x: f64) -> [f64; 3] {
    let dt = 2.0 / NODES as f64;
    let (mut p, mut r, mut dr) = (x, 1.0, 0.0);
    for &(t, w) in taus {
        if w == 0.0 {
            break;
        }
        let (s, c) = (x * t).sin_cos();
        p += 2.0 * w * s / t;
        r += 2.0 * w * c;
        dr -= 2.0 * w * t * s;
    }
    let f = dt / (2.0 * std::f64::consts::PI);
    [0.5 + f * p, f * r, f * dr]
}

impl SmoothingKernel {
    /// `ρ̂(τ)`, exactly 1 on `[−1,1]` and 0 outside `(−2,2)`.
    pub fn rho_hat(&self, tau: f64) -> f64 {
        let t = tau.abs();
        if t <= 1.0 {
            return 1.0;
        }
        if t >= 2.0 {
            return 0.0;
        }
        let z = gauss_kronrod(bump, -0.5, 0.5, 1e-13, 1e-18).expect("bump mass").value;
        gauss_kronrod(bump, t - 1.5, 0.5, 1e-13, 1e-18).expect("bump cdf").value / z
    }

    /// `ρ(s)` evaluated directly.
    pub fn rho(&self, s: f64) -> f64 {
        direct(&self.table.taus, s)[1]
    }

    /// `P(x) = ∫_{−∞}^x ρ` evaluated directly.
    pub fn p_direct(&self, x: f64) -> f64 {
        direct(&self.table.taus, x)[0]
    }

    /// `P(x)` from the table.
    pub fn p(&self, x: f64) -> f64 {
        self.table.p_table(x)
    }

    /// Upper estimate of `∫_{|x|}^∞ |ρ|`.
    pub fn tail(&self, x: f64) -> f64 {
        self.table.tail_at(x)
    }

    pub fn interp_error(&self) -> f64 {
        self.table.interp_error
    }

    pub fn x_max(&self) -> f64 {
        X_MAX
    }

    /// Smallest table abscissa beyond which the `|ρ|` tail is below `tol`.
    pub fn margin(&self, tol: f64) -> f64 {
        let i = self.table.tail.partition_point(|&t| t > tol);
        (i as f64 * STEP).min(X_MAX)
    }

    pub fn audit(&self) -> KernelAudit {
        KernelAudit {
            step: STEP,
            x_max: X_MAX,
            decay: self.table.decay.clone(),
            interp_error: self.table.interp_error,
            tail_at_x_max: self.table.tail_at(X_MAX),
            margin: self.margin(TAIL_TOL),
        }
    }
}

/// Weighted jumps of a right-continuous step series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jumps {
    /// Increasing jump locations.
    pub lambdas: Vec<f64>,
    pub weights: Vec<f64>,
    /// All jumps at or below this frequency are present.
    pub complete_to: f64,
    /// Growth exponent of the jump density, used to bound missing jumps.
    pub dim: u32,
}

impl Jumps {
    pub fn from_spectrum(s: &crate::spectra::Spectrum) -> Self {
        Self {
            lambdas: s.entries.iter().map(|e| e.lambda).collect(),
            weights: s.entries.iter().map(|e| e.multiplicity as f64).collect(),
            complete_to: s.lambda_max,
            dim: s.dim,
        }
    }

    /// The step function `Σ_{λ_j ≤ λ} w_j`.
    pub fn step(&self, lambda: f64) -> f64 {
        let i = self.lambdas.partition_point(|&l| l <= lambda);
        self.weights[..i].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedSeries {
    pub sigma: f64,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// Truncation bound: interpolation, tail beyond the table and missing jumps.
    pub bound: Vec<f64>,
}

/// `(ρ_σ * step)(λ) = Σ_j w_j P(σ(λ − λ_j))` on `lambdas`.
pub fn smoothed_series(j: &Jumps, kernel: &SmoothingKernel, sigma: f64, lambdas: &[f64]) -> Result<SmoothedSeries> {
    smoothed_series_with(j, kernel, sigma, lambdas, TAIL_TOL)
}

pub fn smoothed_series_with(
    j: &Jumps,
    kernel: &SmoothingKernel,
    sigma: f64,
    lambdas: &[f64],
    tail_tol: f64,
) -> Result<SmoothedSeries> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let top = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let required = top + kernel.margin(tail_tol) / sigma;
    if j.complete_to < required {
        return Err(Error::WindowTooSmall {
            required,
            have: j.complete_to,
        });
    }
    let mut prefix = Vec::with_capacity(j.weights.len() + 1);
    let mut abs_prefix = Vec::with_capacity(j.weights.len() + 1);
    prefix.push(0.0);
    abs_prefix.push(0.0);
    for w in &j.weights {
        prefix.push(prefix.last().unwrap() + w);
        abs_prefix.push(abs_prefix.last().unwrap() + w.abs());
    }
    let reach = X_MAX / sigma;
    let last_block = {
        let width = 1.0 / sigma;
        let i0 = j.lambdas.partition_point(|&l| l <= j.complete_to - width);
        let i1 = j.lambdas.partition_point(|&l| l <= j.complete_to);
        (width, abs_prefix[i1] - abs_prefix[i0])
    };
    let out: Vec<(f64, f64)> = lambdas
        .par_iter()
        .map(|&lam| {
            let lo = j.lambdas.partition_point(|&l| l < lam - reach);
            let hi = j.lambdas.partition_point(|&l| l <= lam + reach);
            let mut v = prefix[lo];
            let mut bound = (abs_prefix[lo] + abs_prefix[j.lambdas.len()] - abs_prefix[hi]) * kernel.tail(X_MAX);
            let mut window = 0.0;
            for i in lo..hi {
                v += j.weights[i] * kernel.p(sigma * (lam - j.lambdas[i]));
                window += j.weights[i].abs();
            }
            bound += window * kernel.interp_error();
            bound += missing_bound(kernel, sigma, lam, j.complete_to, last_block, j.dim);
            (v, bound)
        })
        .collect();
    Ok(SmoothedSeries {
        sigma,
        lambdas: lambdas.to_vec(),
        values: out.iter().map(|v| v.0).collect(),
        bound: out.iter().map(|v| v.1).collect(),
    })
}

/// Bound on `Σ w P(σ(λ − μ))` over jumps `μ > complete_to`, extrapolating the
/// weight of the last block of width `B` by `(1 + g/λ_c)^dim` at distance `g`.
/// Blocks have width `B` inside the table and grow geometrically beyond it.
fn missing_bound(kernel: &SmoothingKernel, sigma: f64, lam: f64, top: f64, block: (f64, f64), dim: u32) -> f64 {
    let (width, w) = block;
    let density = w.max(1.0) / width;
    let grow = |g: f64| (1.0 + g / top.max(1.0)).powi(dim as i32);
    let mut total = 0.0;
    let mut g = 0.0;
    let mut step = width;
    for _ in 0..10_000 {
        let t = kernel.tail(sigma * (top + g - lam));
        let inc = density * step * grow(g + step) * t;
        total += inc;
        if sigma * (top + g - lam) >= X_MAX {
            if inc < 1e-3 * total.max(1e-300) {
                break;
            }
            step = g.max(width);
        }
        g += step;
    }
    total
}

/// `(ρ_σ * step)(λ) = Σ_j w_j P(σ(λ − λ_j))` with `P` evaluated directly at
/// every jump within `X_MAX/σ`; jumps further below contribute their full weight.
pub fn direct_convolution(j: &Jumps, kernel: &SmoothingKernel, sigma: f64, lam: f64) -> f64 {
    let below = j.step(lam - X_MAX / sigma);
    let lo = j.lambdas.partition_point(|&l| l <= lam - X_MAX / sigma);
    let hi = j.lambdas.partition_point(|&l| l <= lam + X_MAX / sigma);
    let inside: f64 = (lo..hi)
        .map(|i| j.weights[i] * kernel.p_direct(sigma * (lam - j.lambdas[i])))
        .sum();
    inside + below
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_support_and_mass() {
        let k = build_smoothing_kernel(1.0).unwrap();
        assert_eq!(k.rho_hat(0.9), 1.0);
        assert_eq!(k.rho_hat(2.1), 0.0);
        assert!((k.rho_hat(1.5) - 0.5).abs() < 1e-12);
        // ∫ρ = ρ̂(0): P(∞) − P(−∞).
        assert!((k.p_direct(400.0) - k.p_direct(-400.0) - 1.0).abs() < 1e-10);
        assert!((k.p(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn table_matches_direct() {
        let k = build_smoothing_kernel(1.0).unwrap();
        assert!(k.interp_error() < 1e-10, "{}", k.interp_error());
        for &x in &[0.013, 0.7, 3.3, 17.01, 123.4567, 599.9] {
            let d = (k.p(x) - k.p_direct(x)).abs();
            assert!(d <= k.interp_error(), "x={x}: {d}");
        }
    }

    #[test]
    fn decay_constants_and_tail_envelope() {
        let k = build_smoothing_kernel(1.0).unwrap();
        let a = k.audit();
        let k4 = a.decay[4].1;
        assert!(k4.is_finite() && k4 < 1e4, "K_4 = {k4}");
        for &x in &[1.0, 5.0, 20.0, 80.0, 300.0] {
            assert!((1.0 - k.p(x)).abs() <= k.tail(x));
            assert!(k.p(-x).abs() <= k.tail(x));
        }
        assert!(a.margin > 10.0 && a.margin < X_MAX);
    }

    #[test]
    fn single_jump_and_plateau() {
        let k = build_smoothing_kernel(1.0).unwrap();
        let j = Jumps {
            lambdas: vec![0.0],
            weights: vec![1.0],
            complete_to: 1e4,
            dim: 1,
        };
        let s = smoothed_series(&j, &k, 1.0, &[-3.0, 0.5, 2.0]).unwrap();
        for (lam, v) in s.lambdas.iter().zip(&s.values) {
            assert!((v - k.p(*lam)).abs() < 1e-15);
        }
        let far = smoothed_series(&j, &k, 1.0, &[k.margin(TAIL_TOL)]).unwrap();
        assert!((far.values[0] - 1.0).abs() <= k.tail(k.margin(TAIL_TOL)) + far.bound[0]);
    }

    #[test]
    fn direct_convolution_single_jump() {
        let k = build_smoothing_kernel(1.0).unwrap();
        let j = Jumps {
            lambdas: vec![0.0, 3.0],
            weights: vec![1.0, 2.0],
            complete_to: 1e4,
            dim: 1,
        };
        // Quadrature of ρ against the step function.
        let (gx, gw) = crate::numerics::quad::gauss_legendre(12);
        let conv = |lam: f64| {
            let mut total = 0.0;
            for k0 in -600..600 {
                let c = k0 as f64 + 0.5;
                for (xi, wi) in gx.iter().zip(&gw) {
                    let x = c + 0.5 * xi;
                    total += 0.5 * wi * k.rho(x) * j.step(lam - x);
                }
            }
            total
        };
        for lam in [-2.0, 1.0, 3.0, 7.0] {
            let got = direct_convolution(&j, &k, 1.0, lam);
            assert!((got - conv(lam)).abs() < 1e-9, "{lam}: {got} vs {}", conv(lam));
        }
    }

    #[test]
    fn window_too_small() {
        let k = build_smoothing_kernel(1.0).unwrap();
        let j = Jumps {
            lambdas: vec![0.0, 1.0],
            weights: vec![1.0, 1.0],
            complete_to: 20.0,
            dim: 1,
        };
        match smoothed_series(&j, &k, 1.0, &[10.0]) {
            Err(Error::WindowTooSmall { required, have }) => {
                assert_eq!(have, 20.0);
                assert!(required > 20.0);
            }
            other => panic!("{other:?}"),
        }
    }
}

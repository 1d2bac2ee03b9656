//! Quadrature: tanh-sinh for endpoint singularities, adaptive Gauss-Kronrod
//! for smooth integrands, and fixed Gauss-Legendre rules.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

/// Double-exponential quadrature on a finite interval.
///
/// The integrand receives `(x, x - a, b - x)`. The two distances are computed
/// without cancellation, so integrands like `1/sqrt(g(b) - g(x))` can be
/// evaluated accurately arbitrarily close to the endpoint.
#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_level: usize,
    pub t_max: f64,
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_level: 12,
            t_max: 4.0,
        }
    }
}

impl TanhSinh {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<QuadResult>
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        if a == b {
            return Ok(QuadResult {
                value: 0.0,
                error: 0.0,
                evals: 0,
            });
        }
        if b < a {
            let r = self.integrate(b, a, f)?;
            return Ok(QuadResult {
                value: -r.value,
                ..r
            });
        }
        let half = 0.5 * (b - a);
        let mut evals = 0usize;
        let mut node = |t: f64, evals: &mut usize| -> f64 {
            let u = std::f64::consts::FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            let w = half * std::f64::consts::FRAC_PI_2 * t.cosh() / (cu * cu);
            if w == 0.0 || !w.is_finite() {
                return 0.0;
            }
            let dl = 2.0 * half / (1.0 + (-2.0 * u).exp());
            let dr = 2.0 * half / (1.0 + (2.0 * u).exp());
            if dl <= 0.0 || dr <= 0.0 {
                return 0.0;
            }
            let x = if t < 0.0 { a + dl } else { b - dr };
            *evals += 1;
            let v = f(x, dl, dr);
            w * v
        };

        let mut h = 1.0;
        let n0 = self.t_max.ceil() as i64;
        let mut sum = node(0.0, &mut evals);
        for k in 1..=n0 {
            let t = k as f64;
            sum += node(t, &mut evals) + node(-t, &mut evals);
        }
        let mut prev = h * sum;
        let mut err = f64::INFINITY;
        for level in 1..=self.max_level {
            h *= 0.5;
            let kmax = (self.t_max / h).ceil() as i64;
            let mut add = 0.0;
            let mut k = 1;
            while k <= kmax {
                let t = k as f64 * h;
                add += node(t, &mut evals) + node(-t, &mut evals);
                k += 2;
            }
            sum += add;
            let cur = h * sum;
            if !cur.is_finite() {
                return Err(Error::QuadratureFailure {
                    achieved: f64::INFINITY,
                    target: self.rel_tol,
                });
            }
            err = (cur - prev).abs();
            prev = cur;
            if level >= 3 && err <= self.rel_tol * cur.abs().max(self.abs_tol) {
                return Ok(QuadResult {
                    value: cur,
                    error: err,
                    evals,
                });
            }
        }
        let scale = prev.abs().max(self.abs_tol);
        Err(Error::QuadratureFailure {
            achieved: err / scale,
            target: self.rel_tol,
        })
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive 15-point Gauss-Kronrod quadrature for smooth integrands.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    parts.push((a, b, v, e));
    let mut evals = 15;
    let max_parts = 4000;
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadResult {
                value: total,
                error: err,
                evals,
            });
        }
        if parts.len() >= max_parts {
            return Err(Error::QuadratureFailure {
                achieved: err / total.abs().max(f64::MIN_POSITIVE),
                target: rel_tol,
            });
        }
        let (imax, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _) = parts.swap_remove(imax);
        let m = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&mut f, pa, m);
        let (v2, e2) = gk15(&mut f, m, pb);
        evals += 30;
        parts.push((pa, m, v1, e1));
        parts.push((m, pb, v2, e2));
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule with `panels` equal panels of `n` nodes.
pub fn composite_gauss<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    n: usize,
    panels: usize,
) -> f64 {
    let (x, w) = gauss_legendre(n);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let c = lo + 0.5 * width;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(c + 0.5 * width * xi);
        }
        total += 0.5 * width * s;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn tanh_sinh_inverse_sqrt_endpoint() {
        let r = TanhSinh::default()
            .integrate(0.0, 1.0, |_, da, _| 1.0 / da.sqrt())
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn tanh_sinh_arcsine_law() {
        // ∫_{-1}^{1} dx/sqrt(1-x^2) = π, singular at both ends
        let r = TanhSinh::default()
            .integrate(-1.0, 1.0, |_, da, db| 1.0 / (da * db).sqrt())
            .unwrap();
        assert!((r.value - PI).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_reversed_interval() {
        let r = TanhSinh::default()
            .integrate(1.0, 0.0, |x, _, _| x * x)
            .unwrap();
        assert!((r.value + 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn kronrod_polynomial_exactness() {
        let r = gauss_kronrod(|x| x.powi(12) - 3.0 * x.powi(5), -1.0, 2.0, 1e-14, 0.0).unwrap();
        let exact = (2f64.powi(13) + 1.0) / 13.0 - 0.5 * (64.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-11 * exact.abs());
    }

    #[test]
    fn kronrod_oscillatory() {
        let r = gauss_kronrod(|x| (30.0 * x).cos(), 0.0, PI, 1e-12, 1e-14).unwrap();
        assert!((r.value - (30.0 * PI).sin() / 30.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_weights_and_moments() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((m - exact).abs() < 1e-12, "n={n}");
        }
    }
}

//! Maximal expansion rate from the tangent (variational) flow.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{make_round_sphere, ModelManifold, ProfileCurve};
use crate::numerics::fit::fit_line;
use crate::numerics::linspace;
use crate::numerics::ode::{integrate, OdeOptions, OdeSystem};

use super::flow::bump_limited;
use super::PhasePoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionEstimate {
    pub lambda_max: f64,
    pub t_grid: Vec<f64>,
    /// Running maximum over samples and earlier times of `log ‖dφ_t‖`.
    pub growth: Vec<f64>,
    /// Slope of `growth` against `t`.
    pub exp_slope: f64,
    /// Slope of `growth` against `log t`.
    pub power_slope: f64,
    pub sub_exponential: bool,
}

/// Geodesic equations together with `Y′ = J Y` for the 4×4 fundamental matrix.
struct Variational<'a> {
    profile: &'a ProfileCurve,
}

impl OdeSystem<20> for Variational<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 20], dy: &mut [f64; 20]) {
        let [a, a1, a2, _] = self.profile.jet(y[0]);
        let (xs, xt) = (y[2], y[3]);
        let i = 1.0 / a;
        let i2 = i * i;
        let i3 = i2 * i;
        dy[0] = xs;
        dy[1] = xt * i2;
        dy[2] = xt * xt * a1 * i3;
        dy[3] = 0.0;
        let j10 = -2.0 * xt * a1 * i3;
        let j13 = i2;
        let j20 = xt * xt * (a2 * i3 - 3.0 * a1 * a1 * i3 * i);
        let j23 = 2.0 * xt * a1 * i3;
        for c in 0..4 {
            let col = |r: usize| y[4 + 4 * r + c];
            dy[4 + c] = col(2);
            dy[8 + c] = j10 * col(0) + j13 * col(3);
            dy[12 + c] = j20 * col(0) + j23 * col(3);
            dy[16 + c] = 0.0;
        }
    }
}

/// `log ‖dφ_t‖_F` measured in orthonormal frames at both ends.
fn log_norm(y: &[f64; 20], a0: f64, a1: f64) -> f64 {
    let out = [1.0, a1, 1.0, 1.0 / a1];
    let inp = [1.0, 1.0 / a0, 1.0, a0];
    let mut f = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            let v = out[r] * y[4 + 4 * r + c] * inp[c];
            f += v * v;
        }
    }
    0.5 * f.ln()
}

fn surface_growth(profile: &ProfileCurve, samples: usize, t_grid: &[f64]) -> Result<Vec<f64>> {
    let top = profile.max_alpha();
    // Start on the equator, away from near-meridian orbits where the chart degenerates.
    let psi_min = 0.2f64.asin();
    let mut best = vec![f64::NEG_INFINITY; t_grid.len()];
    let t_end = *t_grid.last().unwrap();
    for k in 0..samples {
        let psi = psi_min + (PI - 2.0 * psi_min) * (k as f64 + 0.5) / samples as f64;
        let mut y0 = [0.0; 20];
        y0[2] = psi.cos();
        y0[3] = top * psi.sin();
        for d in 0..4 {
            y0[4 + 5 * d] = 1.0;
        }
        let sys = Variational { profile };
        let p0 = PhasePoint::new(0.0, 0.0, y0[2], y0[3]);
        let sol = integrate(&sys, 0.0, y0, t_end, bump_limited(OdeOptions::default(), profile, p0))?;
        for (i, &t) in t_grid.iter().enumerate() {
            let y = sol.eval(t);
            best[i] = best[i].max(log_norm(&y, top, profile.alpha(y[0])));
        }
    }
    Ok(best)
}

/// Estimate `Λ_max` as the slope of the maximal `log ‖dφ_t‖` against `t`,
/// reporting 0 when growth is better explained by a power law.
pub fn expansion_rate(m: &ModelManifold, samples: usize, t: f64) -> Result<ExpansionEstimate> {
    if !(t > 2.0) || samples == 0 {
        return Err(Error::Domain(format!(
            "need T > 2 and at least one sample (T = {t}, samples = {samples})"
        )));
    }
    let t_grid = linspace((t / 20.0).max(1.0), t, 40);
    let raw = match m {
        ModelManifold::SurfaceOfRevolution(p) => surface_growth(p, samples, &t_grid)?,
        ModelManifold::RoundSphere(2) => surface_growth(&make_round_sphere(), samples, &t_grid)?,
        ModelManifold::FlatTorus(periods) => {
            let n = periods.len() as f64;
            t_grid.iter().map(|t| 0.5 * (n * (2.0 + t * t)).ln()).collect()
        }
        other => {
            return Err(Error::Domain(format!(
                "no tangent flow implemented for {}",
                other.label()
            )))
        }
    };
    let mut growth = raw;
    for i in 1..growth.len() {
        growth[i] = growth[i].max(growth[i - 1]);
    }
    let lin = fit_line(&t_grid, &growth);
    let logt: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    let pow = fit_line(&logt, &growth);
    let sub = pow.rms <= lin.rms || pow.slope <= 3.0;
    Ok(ExpansionEstimate {
        lambda_max: if sub { 0.0 } else { lin.slope.max(0.0) },
        t_grid,
        growth,
        exp_slope: lin.slope,
        power_slope: pow.slope,
        sub_exponential: sub,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{make_perturbed_sphere, PerturbationSpec};

    #[test]
    fn integrable_examples_do_not_expand() {
        let torus = ModelManifold::FlatTorus(vec![2.0 * PI, 2.0 * PI]);
        assert_eq!(expansion_rate(&torus, 1, 50.0).unwrap().lambda_max, 0.0);
        let s2 = ModelManifold::RoundSphere(2);
        let e = expansion_rate(&s2, 6, 30.0).unwrap();
        assert_eq!(e.lambda_max, 0.0);
        assert!(e.power_slope < 2.0);
        let p = make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap();
        let m = ModelManifold::SurfaceOfRevolution(p);
        let a = expansion_rate(&m, 6, 30.0).unwrap();
        let b = expansion_rate(&m, 6, 60.0).unwrap();
        assert!(a.lambda_max >= 0.0 && a.lambda_max == b.lambda_max);
        assert!(a.growth.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn tangent_flow_matches_difference_quotient() {
        let p = make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap();
        let sys = Variational { profile: &p };
        let mut y0 = [0.0; 20];
        y0[0] = 0.1;
        y0[2] = 0.6;
        y0[3] = 0.8 * p.alpha(0.1);
        for d in 0..4 {
            y0[4 + 5 * d] = 1.0;
        }
        let opts = OdeOptions {
            rtol: 1e-12,
            atol: 1e-12,
            ..OdeOptions::default()
        };
        let t = 7.0;
        let y = integrate(&sys, 0.0, y0, t, opts).unwrap().y_end();
        let h = 1e-6;
        let mut yp = y0;
        yp[2] += h;
        let mut ym = y0;
        ym[2] -= h;
        let a = integrate(&sys, 0.0, yp, t, opts).unwrap().y_end();
        let b = integrate(&sys, 0.0, ym, t, opts).unwrap().y_end();
        for r in 0..4 {
            let fd = (a[r] - b[r]) / (2.0 * h);
            assert!((fd - y[4 + 4 * r + 2]).abs() < 1e-5 * (1.0 + fd.abs()), "row {r}");
        }
    }
}

//! Periodic / aperiodic classification of invariant tori by `Θ₀`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::ProfileCurve;
use crate::numerics::contfrac::detect_rational;

use super::clairaut::{d_rotation_number, rotation_number, DerivativeMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorusStatus {
    Periodic(i64, u64),
    Aperiodic,
    Uncertain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusClassification {
    pub s_plus: f64,
    pub c: f64,
    pub status: TorusStatus,
    pub theta0: f64,
    pub d_theta0: f64,
    pub return_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub q_max: u64,
    pub rational_tol: f64,
    pub deriv_floor: f64,
    /// Number of grid points whose derivative sign must agree.
    pub neighborhood: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            q_max: 50,
            rational_tol: 1e-9,
            deriv_floor: 1e-6,
            neighborhood: 5,
        }
    }
}

/// Classify a single rotation value with a known neighborhood-sign verdict.
pub fn status_of(theta0: f64, d: f64, sign_stable: bool, opts: &ClassifyOptions) -> TorusStatus {
    if let Some((p, q)) = detect_rational(theta0 / (2.0 * PI), opts.q_max, opts.rational_tol) {
        return TorusStatus::Periodic(p, q);
    }
    if d.abs() > opts.deriv_floor && sign_stable {
        TorusStatus::Aperiodic
    } else {
        TorusStatus::Uncertain
    }
}

/// Indices of the `k` grid points nearest to index `i` (including `i`).
fn nearest(grid: &[f64], i: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..grid.len()).collect();
    idx.sort_by(|&a, &b| {
        let da = (grid[a] - grid[i]).abs();
        let db = (grid[b] - grid[i]).abs();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

pub fn classify_tori(
    profile: &ProfileCurve,
    grid: &[f64],
    opts: &ClassifyOptions,
) -> Result<Vec<TorusClassification>> {
    if let Some(s) = grid.iter().find(|s| !(**s > 0.0 && **s < profile.hi())) {
        return Err(Error::Domain(format!("grid value {s} outside (0, {})", profile.hi())));
    }
    let data: Vec<(f64, f64, f64, f64)> = grid
        .par_iter()
        .map(|&s| -> Result<(f64, f64, f64, f64)> {
            let o = rotation_number(s, profile)?;
            let d = match d_rotation_number(s, profile, DerivativeMethod::Formula) {
                Ok(d) => d,
                Err(Error::DegenerateInput(_)) => {
                    d_rotation_number(s, profile, DerivativeMethod::FiniteDifference)?
                }
                Err(e) => return Err(e),
            };
            Ok((o.c, o.theta0, d, o.return_time))
        })
        .collect::<Result<_>>()?;
    Ok((0..grid.len())
        .map(|i| {
            let (c, theta0, d, return_time) = data[i];
            let sign = d.signum();
            let stable = nearest(grid, i, opts.neighborhood)
                .into_iter()
                .all(|j| data[j].2.signum() == sign && data[j].2 != 0.0);
            TorusClassification {
                s_plus: grid[i],
                c,
                status: status_of(theta0, d, stable, opts),
                theta0,
                d_theta0: d,
                return_time,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::make_round_sphere;

    #[test]
    fn round_sphere_is_periodic_everywhere() {
        let p = make_round_sphere();
        let grid: Vec<f64> = (0..12).map(|i| 0.05 + 0.12 * i as f64).collect();
        let out = classify_tori(&p, &grid, &ClassifyOptions::default()).unwrap();
        assert!(out.iter().all(|t| t.status == TorusStatus::Periodic(1, 1)));
    }

    #[test]
    fn golden_rotation_is_not_periodic() {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let o = ClassifyOptions::default();
        assert_eq!(status_of(2.0 * PI * phi, 0.1, true, &o), TorusStatus::Aperiodic);
        assert_eq!(status_of(2.0 * PI * phi, 0.1, false, &o), TorusStatus::Uncertain);
        assert_eq!(status_of(2.0 * PI * 0.4, 0.1, true, &o), TorusStatus::Periodic(2, 5));
    }
}

//! Resolution functions `𝐓(R)` and the sub-logarithmic calculus.

use serde::{Deserialize, Serialize};

use crate::numerics::fit::fit_line;
use crate::numerics::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ResolutionForm {
    /// `c · log R⁻¹`
    Log { c: f64 },
    /// `a + c · log R⁻¹`
    AffineLog { a: f64, c: f64 },
    /// `c · (log R⁻¹)^β`
    LogPower { c: f64, beta: f64 },
    /// `c`
    Constant { c: f64 },
    /// `c · R^{-p}`
    Power { c: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionFunction {
    pub form: ResolutionForm,
    /// Upper end of the domain `(0, r_max)`.
    pub r_max: f64,
}

impl ResolutionFunction {
    pub fn new(form: ResolutionForm) -> Self {
        Self { form, r_max: 1.0 }
    }

    pub fn log(c: f64) -> Self {
        Self::new(ResolutionForm::Log { c })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(ResolutionForm::Constant { c })
    }

    pub fn power(c: f64, p: f64) -> Self {
        Self::new(ResolutionForm::Power { c, p })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let l = (1.0 / r).ln();
        match self.form {
            ResolutionForm::Log { c } => c * l,
            ResolutionForm::AffineLog { a, c } => a + c * l,
            ResolutionForm::LogPower { c, beta } => c * l.max(0.0).powf(beta),
            ResolutionForm::Constant { c } => c,
            ResolutionForm::Power { c, p } => c * r.powf(-p),
        }
    }

    /// `Ω(𝐓) = limsup 𝐓(R)/log R⁻¹` from the closed form.
    pub fn omega_exact(&self) -> f64 {
        match self.form {
            ResolutionForm::Log { c } | ResolutionForm::AffineLog { c, .. } => c,
            ResolutionForm::LogPower { c, beta } => {
                if beta < 1.0 {
                    0.0
                } else if beta == 1.0 {
                    c
                } else {
                    f64::INFINITY
                }
            }
            ResolutionForm::Constant { .. } => 0.0,
            ResolutionForm::Power { .. } => f64::INFINITY,
        }
    }

    /// Numerical `(log 𝐓)′(R)` by central differences with step `R·1e-6`.
    pub fn log_derivative(&self, r: f64) -> f64 {
        let h = r * 1e-6;
        ((self.eval(r + h)).ln() - (self.eval(r - h)).ln()) / (2.0 * h)
    }

    /// `𝐓⁻¹(s)` by bisection in `log R` on `[1e-300, r_max)`.
    pub fn inverse(&self, s: f64) -> Option<f64> {
        let g = |x: f64| self.eval(x.exp()) - s;
        let (lo, hi) = (1e-300f64.ln(), (self.r_max * (1.0 - 1e-12)).ln());
        if g(lo) < 0.0 || g(hi) > 0.0 {
            return None;
        }
        bisect(g, lo, hi, 1e-14).ok().map(f64::exp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SublogCertificate {
    Pass,
    Fail { r_witness: f64, log_derivative: f64, lower: f64 },
}

const SLACK: f64 = 1e-8;

/// Check `−1/(R log R⁻¹) ≤ (log 𝐓)′(R) ≤ 0` on `grid ⊂ (0, 1)`.
pub fn check_sublogarithmic(t: &ResolutionFunction, grid: &[f64]) -> SublogCertificate {
    for &r in grid {
        let d = t.log_derivative(r);
        let lower = -1.0 / (r * (1.0 / r).ln());
        let scale = lower.abs().max(1.0);
        if d < lower - SLACK * scale || d > SLACK * scale {
            return SublogCertificate::Fail {
                r_witness: r,
                log_derivative: d,
                lower,
            };
        }
    }
    SublogCertificate::Pass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaTag {
    ClosedForm,
    /// Slope of `𝐓` against `log R⁻¹` on the tail of the grid.
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaEstimate {
    pub value: f64,
    /// `max 𝐓(R)/log R⁻¹` over the tail.
    pub tail_ratio: f64,
    pub tail_slope: f64,
    pub tag: OmegaTag,
}

/// Estimate `Ω(𝐓)` from the smallest third of `r_grid`.
pub fn omega(t: &ResolutionFunction, r_grid: &[f64]) -> OmegaEstimate {
    let mut rs: Vec<f64> = r_grid.iter().copied().filter(|r| *r > 0.0 && *r < 1.0).collect();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = (rs.len() / 3).max(2).min(rs.len());
    let tail = &rs[..k];
    let l: Vec<f64> = tail.iter().map(|r| (1.0 / r).ln()).collect();
    let v: Vec<f64> = tail.iter().map(|r| t.eval(*r)).collect();
    let tail_ratio = l
        .iter()
        .zip(&v)
        .map(|(l, v)| v / l)
        .fold(f64::NEG_INFINITY, f64::max);
    let tail_slope = if tail.len() >= 2 { fit_line(&l, &v).slope } else { f64::NAN };
    let exact = t.omega_exact();
    let (value, tag) = if exact.is_finite() || matches!(t.form, ResolutionForm::Power { .. }) {
        (exact, OmegaTag::ClosedForm)
    } else {
        (tail_slope, OmegaTag::Extrapolated)
    };
    OmegaEstimate {
        value,
        tail_ratio,
        tail_slope,
        tag,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublogReport {
    pub t_a: f64,
    pub t_b: f64,
    /// `(log a/log b) 𝐓(b)`
    pub upper: f64,
    pub item1: bool,
    /// `𝐓(b)` and the bound `(log b/(log μ + log b)) 𝐓(μ b)`.
    pub scaled_lhs: f64,
    pub scaled_rhs: f64,
    pub scaled: bool,
    /// `f(s) = −log 𝐓⁻¹(s)` at `s_a = 𝐓(b) < s_b = 𝐓(a)`, with the bound `(s_a/s_b) f(s_b)`.
    pub f_a: f64,
    pub f_bound: f64,
    pub item2: bool,
}

impl SublogReport {
    pub fn holds(&self) -> bool {
        self.item1 && self.scaled && self.item2
    }
}

const REL: f64 = 1e-12;

/// Evaluate both items of the sub-logarithmic calculus at `0 < a < b < 1`.
pub fn sublog_inequalities(t: &ResolutionFunction, a: f64, b: f64, mu: f64) -> SublogReport {
    let (ta, tb) = (t.eval(a), t.eval(b));
    let upper = a.ln() / b.ln() * tb;
    let item1 = tb <= ta * (1.0 + REL) && ta <= upper * (1.0 + REL);
    let scaled_lhs = tb;
    let scaled_rhs = b.ln() / (mu.ln() + b.ln()) * t.eval(mu * b);
    let scaled = scaled_lhs <= scaled_rhs * (1.0 + REL);
    let f = |s: f64| t.inverse(s).map(|r| -r.ln());
    let (sa, sb) = (tb.min(ta), tb.max(ta));
    let (f_a, f_bound, item2) = match (f(sa), f(sb)) {
        (Some(fa), Some(fb)) if sb > sa => {
            let bound = sa / sb * fb;
            (fa, bound, fa <= bound * (1.0 + 1e-9) + 1e-12)
        }
        (Some(fa), Some(_)) => (fa, fa, true),
        _ => (f64::NAN, f64::NAN, false),
    };
    SublogReport {
        t_a: ta,
        t_b: tb,
        upper,
        item1,
        scaled_lhs,
        scaled_rhs,
        scaled,
        f_a,
        f_bound,
        item2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::logspace;

    #[test]
    fn sublog_certificates() {
        let grid = logspace(1e-10, 0.3, 60);
        assert_eq!(check_sublogarithmic(&ResolutionFunction::log(1.0), &grid), SublogCertificate::Pass);
        assert_eq!(
            check_sublogarithmic(&ResolutionFunction::constant(4.0), &grid),
            SublogCertificate::Pass
        );
        match check_sublogarithmic(&ResolutionFunction::power(1.0, 1.0), &grid) {
            SublogCertificate::Fail { r_witness, .. } => assert!(r_witness < (-1f64).exp()),
            SublogCertificate::Pass => panic!("1/R is not sub-logarithmic"),
        }
    }

    #[test]
    fn omega_values() {
        let grid = logspace(1e-8, 0.1, 50);
        assert_eq!(omega(&ResolutionFunction::log(0.3), &grid).value, 0.3);
        let half = ResolutionFunction::new(ResolutionForm::LogPower { c: 1.0, beta: 0.5 });
        assert_eq!(omega(&half, &grid).value, 0.0);
        let aff = ResolutionFunction::new(ResolutionForm::AffineLog { a: 3.0, c: 2.0 });
        let e = omega(&aff, &grid);
        assert!((e.tail_slope - 2.0).abs() < 0.02);
    }

    #[test]
    fn resolution_conditions() {
        let log = ResolutionFunction::log(1.0);
        let r = sublog_inequalities(&log, 1e-4, 1e-2, 10.0);
        assert!(r.holds());
        assert!((r.t_a - r.upper).abs() < 1e-12);
        assert!((r.f_a - r.f_bound).abs() < 1e-9);
        let half = ResolutionFunction::new(ResolutionForm::LogPower { c: 1.0, beta: 0.5 });
        let r = sublog_inequalities(&half, 1e-4, 1e-2, 10.0);
        assert!(r.holds());
        assert!(r.t_b < r.t_a && r.t_a < r.upper && r.f_a < r.f_bound);
    }
}

//! Clairaut integrals: turning points, half-oscillation azimuthal advances,
//! return times, the rotation increment `Θ₀` and its derivatives.
//!
//! All integrals are computed in a frame where the turning point is positive.
//! The minus side is handled by the reflection `β(w) = α(-w)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{PerturbationSpec, ProfileCurve};
use crate::numerics::quad::{gauss_kronrod, TanhSinh};
use crate::numerics::roots::brent;

/// Conserved data of the orbit through the equator with turning latitude `s₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClairautOrbit {
    pub c: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub theta0: f64,
    pub return_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    Formula,
    FiniteDifference,
}

const QUAD_TOL: f64 = 1e-11;
const FD_STEP: f64 = 1e-4;

/// The profile seen from one side of the equator.
struct View<'a> {
    p: &'a ProfileCurve,
    sign: f64,
}

impl<'a> View<'a> {
    fn new(p: &'a ProfileCurve, side: Side) -> Self {
        let sign = match side {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        };
        Self { p, sign }
    }

    fn jet(&self, w: f64) -> [f64; 4] {
        let j = self.p.jet(self.sign * w);
        if self.sign > 0.0 {
            j
        } else {
            [j[0], -j[1], j[2], -j[3]]
        }
    }

    fn alpha(&self, w: f64) -> f64 {
        self.p.alpha(self.sign * w)
    }

    /// `β(t + d) - β(t)`.
    fn step(&self, t: f64, d: f64) -> f64 {
        self.p.alpha_step(self.sign * t, self.sign * d)
    }

    /// Panel boundaries of `[lo, hi]` including interior knots.
    fn panels(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .p
            .knots()
            .into_iter()
            .map(|x| self.sign * x)
            .filter(|x| *x > lo && *x < hi)
            .collect();
        k.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out = vec![lo];
        out.extend(k);
        out.push(hi);
        out
    }

    /// `∫_0^σ g(w, β(w), β(w) - c) dw` where `c = β(σ)`, singular at `σ`.
    fn turning_integral<G>(&self, sigma: f64, g: G) -> Result<f64>
    where
        G: Fn(f64, f64, f64) -> f64,
    {
        self.turning_integral_from(0.0, sigma, g)
    }

    fn turning_integral_from<G>(&self, from: f64, sigma: f64, g: G) -> Result<f64>
    where
        G: Fn(f64, f64, f64) -> f64,
    {
        let ts = TanhSinh::with_tol(QUAD_TOL);
        let pts = self.panels(from, sigma);
        let mut total = 0.0;
        for (i, w) in pts.windows(2).enumerate() {
            let last = i == pts.len() - 2;
            let r = ts.integrate(w[0], w[1], |x, _da, db| {
                let dist = if last { db } else { sigma - x };
                let gap = self.step(sigma, -dist);
                if gap <= 0.0 {
                    return 0.0;
                }
                g(x, self.alpha(x), gap)
            })?;
            total += r.value;
        }
        Ok(total)
    }

    /// `θ` advance over the half-oscillation to `σ` and back.
    fn theta_half(&self, sigma: f64) -> Result<f64> {
        let c = self.alpha(sigma);
        let v = self.turning_integral(sigma, |_, a, gap| c / (a * (gap * (a + c)).sqrt()))?;
        Ok(2.0 * v)
    }

    fn time_half(&self, sigma: f64) -> Result<f64> {
        let c = self.alpha(sigma);
        let v = self.turning_integral(sigma, |_, a, gap| a / (gap * (a + c)).sqrt())?;
        Ok(2.0 * v)
    }

    /// `dθ_half/dσ` by integrating by parts on `[b, σ]` with `b = split·σ`.
    fn d_theta_half(&self, sigma: f64, split: f64) -> Result<f64> {
        let b = split * sigma;
        let jb = self.jet(b);
        let [c, c1, _, _] = self.jet(sigma);
        if sigma < 1e-7 || !(0.0 < split && split < 1.0) || jb[1].abs() < 1e-12 {
            return Err(Error::DegenerateInput(format!(
                "splitting point {b} cannot be placed below turning point {sigma}"
            )));
        }
        let c2 = c * c;
        let outer = self.turning_integral_from(b, sigma, |x, a, gap| {
            let j = self.jet(x);
            (a * a - 2.0 * c2) * (2.0 * j[1] * j[1] + a * j[2])
                / ((gap * (a + c)).sqrt() * a * a * a * j[1] * j[1])
        })?;
        let ab = jb[0];
        let gap_b = self.step(sigma, b - sigma);
        let boundary = (ab * ab - 2.0 * c2) / ((gap_b * (ab + c)).sqrt() * ab * ab * jb[1]);
        let ts = TanhSinh::with_tol(QUAD_TOL);
        let mut inner = 0.0;
        for w in self.panels(0.0, b).windows(2) {
            inner += ts
                .integrate(w[0], w[1], |x, _, _| {
                    let a = self.alpha(x);
                    let gap = self.step(sigma, x - sigma);
                    a / (gap * (a + c)).powf(1.5)
                })?
                .value;
        }
        Ok(2.0 * c1 * (outer - boundary + inner))
    }
}

/// Turning latitudes `(s₋, s₊)` of orbits with Clairaut constant `c`.
pub fn turning_points(c: f64, profile: &ProfileCurve) -> Result<(f64, f64)> {
    let top = profile.max_alpha();
    if !(c > 0.0 && c < top) {
        return Err(Error::Domain(format!(
            "Clairaut constant {c} outside (0, {top})"
        )));
    }
    let f = |s: f64| profile.alpha(s) - c;
    let sp = brent(f, 0.0, profile.hi(), 1e-15)?;
    let sm = if profile.is_even() {
        -sp
    } else {
        brent(f, profile.lo(), 0.0, 1e-15)?
    };
    Ok((sm, sp))
}

/// Negative turning latitude paired with `s₊`.
fn partner(s_plus: f64, profile: &ProfileCurve) -> Result<f64> {
    if profile.is_even() {
        return Ok(-s_plus);
    }
    let c = profile.alpha(s_plus);
    brent(|s| profile.alpha_gap(s_plus, s), profile.lo(), 0.0, 1e-15).or_else(|_| {
        Err(Error::Domain(format!(
            "no negative turning point for c = {c}"
        )))
    })
}

fn check_turn(s_turn: f64, side: Side, profile: &ProfileCurve) -> Result<f64> {
    let (lo, hi) = profile.domain();
    let ok = match side {
        Side::Plus => s_turn > 0.0 && s_turn < hi,
        Side::Minus => s_turn < 0.0 && s_turn > lo,
    };
    if !ok {
        return Err(Error::Domain(format!(
            "turning point {s_turn} not valid on the {side:?} side"
        )));
    }
    Ok(s_turn.abs())
}

/// Azimuthal advance `θ₊(s₊)` (or `θ₋(s₋)`) over a half-oscillation.
pub fn theta_half(s_turn: f64, side: Side, profile: &ProfileCurve) -> Result<f64> {
    let sigma = check_turn(s_turn, side, profile)?;
    View::new(profile, side).theta_half(sigma)
}

/// Full Clairaut data of the orbit with turning latitude `s₊`.
pub fn rotation_number(s_plus: f64, profile: &ProfileCurve) -> Result<ClairautOrbit> {
    check_turn(s_plus, Side::Plus, profile)?;
    let s_minus = partner(s_plus, profile)?;
    let plus = View::new(profile, Side::Plus);
    let theta_plus = plus.theta_half(s_plus)?;
    let t_plus = plus.time_half(s_plus)?;
    let (theta_minus, t_minus) = if profile.is_even() {
        (theta_plus, t_plus)
    } else {
        let minus = View::new(profile, Side::Minus);
        (minus.theta_half(-s_minus)?, minus.time_half(-s_minus)?)
    };
    Ok(ClairautOrbit {
        c: profile.alpha(s_plus),
        s_plus,
        s_minus,
        theta_plus,
        theta_minus,
        theta0: theta_plus + theta_minus,
        return_time: t_plus + t_minus,
    })
}

/// `∂Θ₀/∂s₊`.
pub fn d_rotation_number(
    s_plus: f64,
    profile: &ProfileCurve,
    method: DerivativeMethod,
) -> Result<f64> {
    match method {
        DerivativeMethod::Formula => d_rotation_number_split(s_plus, profile, 0.5),
        DerivativeMethod::FiniteDifference => {
            let h = FD_STEP;
            if s_plus - 2.0 * h <= 0.0 || s_plus + 2.0 * h >= profile.hi() {
                return Err(Error::DegenerateInput(format!(
                    "finite-difference stencil at {s_plus} leaves the domain"
                )));
            }
            let th = |k: f64| rotation_number(s_plus + k * h, profile).map(|o| o.theta0);
            Ok((th(-2.0)? - 8.0 * th(-1.0)? + 8.0 * th(1.0)? - th(2.0)?) / (12.0 * h))
        }
    }
}

/// Formula derivative with the splitting point at `split·s₊` (and `split·|s₋|`).
pub fn d_rotation_number_split(s_plus: f64, profile: &ProfileCurve, split: f64) -> Result<f64> {
    check_turn(s_plus, Side::Plus, profile)?;
    let s_minus = partner(s_plus, profile)?;
    let dp = View::new(profile, Side::Plus).d_theta_half(s_plus, split)?;
    // θ₋ depends on s₊ through s₋, with ds₋/ds₊ = α′(s₊)/α′(s₋).
    let dm = if profile.is_even() {
        dp
    } else {
        View::new(profile, Side::Minus).d_theta_half(-s_minus, split)?
    };
    let ratio = profile.d_alpha(s_plus) / profile.d_alpha(s_minus);
    Ok(dp - dm * ratio)
}

/// `∂_ε ∂_{s₊} Θ₀` at `ε = 0` for the round sphere perturbed by `spec`'s bumps.
///
/// Valid once `s₊` exceeds both bump supports, so each bump lies inside the
/// orbit's latitude range.
pub fn eps_derivative(s_plus: f64, spec: &PerturbationSpec) -> Result<f64> {
    let plus = spec.plus_bump();
    let minus = spec.minus_bump();
    let reach = plus.b.max(-minus.a);
    if !(s_plus >= reach && s_plus < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "s₊ = {s_plus} must lie in [{reach}, π/2)"
        )));
    }
    let (sn, c) = s_plus.sin_cos();
    let c2 = c * c;
    let kernel = |w: f64| {
        let a = w.cos();
        // cos²w - cos²s₊ = sin(s₊ - w) sin(s₊ + w)
        let gap = (s_plus - w.abs()).sin() * (s_plus + w.abs()).sin();
        if gap <= 0.0 {
            return 0.0;
        }
        (2.0 * a * a + c2) / gap.powf(2.5)
    };
    let mut total = 0.0;
    for (bump, weight) in [(plus, spec.plus_weight), (minus, spec.minus_weight)] {
        if weight == 0.0 {
            continue;
        }
        let r = gauss_kronrod(|w| bump.value(w) * kernel(w), bump.a, bump.b, 1e-12, 1e-300)?;
        total += weight * r.value;
    }
    // -2 α₀′(s₊) with α₀ = cos
    Ok(2.0 * sn * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{make_perturbed_sphere, make_pendulum_profile, make_round_sphere};
    use std::f64::consts::PI;

    fn perturbed() -> ProfileCurve {
        make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap()
    }

    #[test]
    fn round_sphere_half_advance_is_pi() {
        let p = make_round_sphere();
        for s in [0.3, 0.7, 1.2, 1e-4, 1.55] {
            let t = theta_half(s, Side::Plus, &p).unwrap();
            assert!((t - PI).abs() < 1e-9, "s₊={s}: {t}");
            let t = theta_half(-s, Side::Minus, &p).unwrap();
            assert!((t - PI).abs() < 1e-9);
        }
    }

    #[test]
    fn round_sphere_orbit_data() {
        let p = make_round_sphere();
        let o = rotation_number(0.5, &p).unwrap();
        assert!((o.theta0 - 2.0 * PI).abs() < 1e-9);
        assert!((o.return_time - 2.0 * PI).abs() < 1e-9);
        assert_eq!(o.s_minus, -0.5);
        for s in [0.1, 0.9, 1.4] {
            let o = rotation_number(s, &p).unwrap();
            assert!((o.return_time - 2.0 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn turning_points_round_sphere() {
        let p = make_round_sphere();
        let (m, s) = turning_points(0.5f64.sqrt(), &p).unwrap();
        assert!((s - PI / 4.0).abs() < 1e-12 && (m + PI / 4.0).abs() < 1e-12);
        let (m, s) = turning_points(1.0 - 1e-12, &p).unwrap();
        assert!(s < 1e-5 && m > -1e-5);
        assert!(turning_points(1.0, &p).is_err());
        assert!(turning_points(0.0, &p).is_err());
    }

    #[test]
    fn orbit_below_support_sees_round_sphere() {
        let o = rotation_number(0.25, &perturbed()).unwrap();
        assert!((o.theta0 - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn minus_only_perturbation_breaks_symmetry() {
        let mut spec = PerturbationSpec::new(0.01, 0.5, 1.0);
        spec.plus_weight = 0.0;
        let p = make_perturbed_sphere(spec).unwrap();
        let (sm, sp) = turning_points(0.8f64.cos(), &p).unwrap();
        assert!((sp - 0.8).abs() < 1e-12);
        // Bisection oracle for the negative root.
        let (mut lo, mut hi) = (-PI / 2.0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p.alpha(mid) < 0.8f64.cos() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((sm - lo).abs() < 1e-12);
        assert!((sm + sp).abs() > 1e-4);
    }

    #[test]
    fn formula_matches_finite_difference() {
        let p = perturbed();
        for s in [0.3, 0.6, 0.9, 1.1, 1.4] {
            let f = d_rotation_number(s, &p, DerivativeMethod::Formula).unwrap();
            let d = d_rotation_number(s, &p, DerivativeMethod::FiniteDifference).unwrap();
            let third = d_rotation_number_split(s, &p, 1.0 / 3.0).unwrap();
            assert!((f - d).abs() <= 1e-3 * f.abs().max(d.abs()) + 1e-9, "{s}: {f} vs {d}");
            assert!((f - third).abs() <= 1e-8 * f.abs() + 1e-12, "{s}: {f} vs {third}");
        }
        let r = make_round_sphere();
        for s in [0.3, 1.2] {
            assert!(d_rotation_number(s, &r, DerivativeMethod::Formula).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn eps_derivative_matches_central_difference() {
        let e = 1e-4;
        let dp = |eps: f64, s: f64| {
            let p = make_perturbed_sphere(PerturbationSpec::new(eps, 0.5, 1.0)).unwrap();
            d_rotation_number(s, &p, DerivativeMethod::Formula).unwrap()
        };
        for s in [1.0, 1.2, 1.5] {
            let spec = PerturbationSpec::new(0.0, 0.5, 1.0);
            let exact = eps_derivative(s, &spec).unwrap();
            let fd = (dp(e, s) - dp(-e, s)) / (2.0 * e);
            assert!(exact > 0.0);
            assert!((exact - fd).abs() < 1e-3 * exact, "{s}: {exact} vs {fd}");
        }
        assert!(eps_derivative(0.8, &PerturbationSpec::new(0.0, 0.5, 1.0)).is_err());
    }

    #[test]
    fn pendulum_rotation_is_finite_and_monotone() {
        let p = make_pendulum_profile(4.0).unwrap();
        let o = rotation_number(0.01, &p).unwrap();
        assert!(o.theta0 > 0.0 && o.theta0 / 0.01f64.sqrt() > 1.0);
        let d = d_rotation_number(0.5, &p, DerivativeMethod::Formula).unwrap();
        let f = d_rotation_number(0.5, &p, DerivativeMethod::FiniteDifference).unwrap();
        assert!((d - f).abs() < 1e-3 * d.abs(), "{d} vs {f}");
        assert!(d.abs() > 0.0);
    }
}

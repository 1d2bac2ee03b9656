//! Hamiltonian geodesic flow in the `(s, θ)` chart with dense output.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::manifolds::ProfileCurve;
use crate::numerics::ode::{integrate, Dop853, OdeOptions, OdeSystem, Solution};
use crate::numerics::roots::brent;

use super::PhasePoint;

/// Below this Clairaut constant an orbit is treated as a meridian.
pub const MERIDIAN_CUTOFF: f64 = 1e-9;

/// Hamilton's equations for `H = (ξ_s² + ξ_θ²/α²)/2`.
pub struct GeodesicSystem<'a> {
    pub profile: &'a ProfileCurve,
}

impl OdeSystem<4> for GeodesicSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let [a, a1, _, _] = self.profile.jet(y[0]);
        let inv = 1.0 / a;
        dy[0] = y[2];
        dy[1] = y[3] * inv * inv;
        dy[2] = y[3] * y[3] * a1 * inv * inv * inv;
        dy[3] = 0.0;
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Chart(Solution<4>),
    Meridian { start: PhasePoint, lo: f64, hi: f64 },
}

/// A geodesic on `[t0, t_end]` (either orientation).
#[derive(Debug, Clone)]
pub struct Trajectory {
    kind: Kind,
    pub t0: f64,
    pub t_end: f64,
}

impl Trajectory {
    pub fn state(&self, t: f64) -> PhasePoint {
        match &self.kind {
            Kind::Chart(sol) => PhasePoint::from_array(sol.eval(t)),
            Kind::Meridian { start, lo, hi } => meridian_state(start, *lo, *hi, t - self.t0),
        }
    }

    /// Step boundaries of the underlying integration, including both ends.
    pub fn knots(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Chart(sol) => {
                let mut v: Vec<f64> = sol.segments.iter().map(|s| s.t0).collect();
                v.push(self.t_end);
                v
            }
            Kind::Meridian { .. } => vec![self.t0, self.t_end],
        }
    }

    pub fn is_meridian(&self) -> bool {
        matches!(self.kind, Kind::Meridian { .. })
    }

    pub fn steps(&self) -> usize {
        match &self.kind {
            Kind::Chart(sol) => sol.segments.len(),
            Kind::Meridian { .. } => 0,
        }
    }
}

/// Great-circle motion through the poles with unit speed.
fn meridian_state(start: &PhasePoint, lo: f64, hi: f64, dt: f64) -> PhasePoint {
    let dir = if start.xi_s >= 0.0 { 1.0 } else { -1.0 };
    let half = hi - lo;
    let v = (start.s - lo + dir * dt).rem_euclid(2.0 * half);
    if v <= half {
        PhasePoint::new(lo + v, start.theta, dir, 0.0)
    } else {
        PhasePoint::new(hi - (v - half), start.theta + PI, -dir, 0.0)
    }
}

/// Caps the step so `s` moves at most an eighth of the narrowest bump support.
/// Without it a long step can land inside the bump's onset, where the local
/// error estimate misses most of the error.
pub(crate) fn bump_limited(mut opts: OdeOptions, profile: &ProfileCurve, p0: PhasePoint) -> OdeOptions {
    let k = profile.knots();
    let width = k.chunks(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if width.is_finite() {
        opts.h_max = opts.h_max.min(width / (8.0 * p0.speed(profile)));
    }
    opts
}

/// Integrate the geodesic through `p0` for time `t` (negative runs backwards).
pub fn integrate_geodesic(
    p0: PhasePoint,
    t: f64,
    profile: &ProfileCurve,
    opts: OdeOptions,
) -> Result<Trajectory> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("integration time {t} is not finite")));
    }
    let (lo, hi) = profile.domain();
    let meridian = p0.xi_theta.abs() < MERIDIAN_CUTOFF;
    let inside = if meridian {
        p0.s >= lo && p0.s <= hi
    } else {
        p0.s > lo && p0.s < hi
    };
    if !inside {
        return Err(Error::Domain(format!(
            "start latitude {} is not interior to the chart",
            p0.s
        )));
    }
    if meridian {
        return Ok(Trajectory {
            kind: Kind::Meridian {
                start: p0,
                lo,
                hi,
            },
            t0: 0.0,
            t_end: t,
        });
    }
    let sys = GeodesicSystem { profile };
    let sol = integrate(&sys, 0.0, p0.to_array(), t, bump_limited(opts, profile, p0)).map_err(|e| match e {
        Error::StepFailure { t, reason } => Error::StepFailure {
            t,
            reason: format!("{reason} (pole passage with c = {:e}?)", p0.xi_theta.abs()),
        },
        e => e,
    })?;
    Ok(Trajectory {
        kind: Kind::Chart(sol),
        t0: 0.0,
        t_end: t,
    })
}

/// Azimuthal advance and elapsed time for one full radial oscillation of the
/// orbit with turning latitude `s₊`, found by locating the second upward
/// crossing of the equator.
pub fn return_map(s_plus: f64, profile: &ProfileCurve, opts: OdeOptions) -> Result<(f64, f64)> {
    let c = profile.alpha(s_plus);
    let top = profile.max_alpha();
    if !(c > 0.0 && c < top) {
        return Err(Error::Domain(format!("turning latitude {s_plus} gives c = {c}")));
    }
    let xi_s = ((top - c) * (top + c)).sqrt() / top;
    let sys = GeodesicSystem { profile };
    let t_bound = 1e4;
    let p0 = PhasePoint::new(0.0, 0.0, xi_s, c);
    let mut st = Dop853::new(&sys, 0.0, p0.to_array(), 1.0, bump_limited(opts, profile, p0));
    let mut went_down = false;
    while st.t < t_bound {
        let seg = st.step(t_bound)?;
        let (y0, y1) = (seg.start(), seg.end());
        if !went_down && y0[0] > 0.0 && y1[0] <= 0.0 {
            went_down = true;
            continue;
        }
        if went_down && y0[0] < 0.0 && y1[0] >= 0.0 {
            let t1 = seg.t1();
            let tc = if y1[0] == 0.0 {
                t1
            } else {
                brent(|t| seg.eval(t)[0], seg.t0, t1, 1e-15)?
            };
            return Ok((seg.eval(tc)[1], tc));
        }
    }
    Err(Error::StepFailure {
        t: st.t,
        reason: "no return to the equator".into(),
    })
}

/// Worst unit-speed and normalized Clairaut drift along a trajectory, sampled at `n` times.
///
/// The normalized constant `ξ_θ/|ξ|` is what a velocity-based measurement of
/// `α² θ̇` on a unit-speed curve reports.
pub fn conservation(traj: &Trajectory, profile: &ProfileCurve, n: usize) -> (f64, f64) {
    let p0 = traj.state(traj.t0);
    let c0 = p0.xi_theta / p0.speed(profile);
    let (mut ds, mut dc) = (0.0f64, 0.0f64);
    for i in 0..=n {
        let t = traj.t0 + (traj.t_end - traj.t0) * i as f64 / n as f64;
        let p = traj.state(t);
        let v = p.speed(profile);
        ds = ds.max((v * v - 1.0).abs());
        dc = dc.max((p.xi_theta / v - c0).abs());
    }
    (ds, dc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoflow::rotation_number;
    use crate::manifolds::{make_perturbed_sphere, make_round_sphere, PerturbationSpec};

    #[test]
    fn equator_is_invariant() {
        let p = make_round_sphere();
        let tr = integrate_geodesic(PhasePoint::new(0.0, 0.0, 0.0, 1.0), 20.0, &p, OdeOptions::default())
            .unwrap();
        for t in [1.0, 7.3, 20.0] {
            let q = tr.state(t);
            assert!(q.s.abs() < 1e-14);
            assert!((q.theta - t).abs() < 1e-10);
        }
    }

    #[test]
    fn round_sphere_closes_after_two_pi() {
        let p = make_round_sphere();
        let p0 = PhasePoint::from_angle(&p, 0.3, 0.2, 0.9);
        let tr = integrate_geodesic(p0, 2.0 * PI, &p, OdeOptions::default()).unwrap();
        let q = tr.state(2.0 * PI);
        assert!((q.s - p0.s).abs() < 1e-7);
        assert!(((q.theta - p0.theta) - 2.0 * PI).abs() < 1e-7);
        assert!((q.xi_s - p0.xi_s).abs() < 1e-7);
        let (ds, dc) = conservation(&tr, &p, 200);
        assert!(ds < 1e-8 * (1.0 + 2.0 * PI) && dc < 1e-8 * (1.0 + 2.0 * PI));
    }

    #[test]
    fn return_map_matches_quadrature() {
        let p = make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap();
        for s in [0.2, 0.7, 1.05, 1.4] {
            let (th, t) = return_map(s, &p, OdeOptions::default()).unwrap();
            let o = rotation_number(s, &p).unwrap();
            assert!((th - o.theta0).abs() < 1e-6, "{s}: {th} vs {}", o.theta0);
            assert!((t - o.return_time).abs() < 1e-6);
        }
    }

    #[test]
    fn meridian_closed_form_wraps_through_poles() {
        let p = make_round_sphere();
        let tr = integrate_geodesic(PhasePoint::new(0.0, 0.5, 1.0, 0.0), 10.0, &p, OdeOptions::default())
            .unwrap();
        assert!(tr.is_meridian());
        let q = tr.state(PI / 2.0 + 0.25);
        assert!((q.s - (PI / 2.0 - 0.25)).abs() < 1e-14);
        assert!((q.theta - (0.5 + PI)).abs() < 1e-14 && q.xi_s == -1.0);
        let q = tr.state(2.0 * PI);
        assert!(q.s.abs() < 1e-12 && (q.theta - 0.5).abs() < 1e-14);
        let back = integrate_geodesic(PhasePoint::new(0.0, 0.5, 1.0, 0.0), -1.0, &p, OdeOptions::default())
            .unwrap();
        assert!((back.state(-1.0).s + 1.0).abs() < 1e-14);
    }

    #[test]
    fn mirror_symmetry() {
        let p = make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap();
        let p0 = PhasePoint::from_angle(&p, 0.1, 0.4, 0.5);
        let a = integrate_geodesic(p0, 15.0, &p, OdeOptions::default()).unwrap();
        let b = integrate_geodesic(p0.mirrored(), 15.0, &p, OdeOptions::default()).unwrap();
        for t in [3.0, 9.0, 15.0] {
            let (x, y) = (a.state(t), b.state(t).mirrored());
            assert!((x.s - y.s).abs() < 1e-12 && (x.theta - y.theta).abs() < 1e-12);
        }
    }
}

//! Unit cosphere bundles of the model surfaces: metric, Liouville sampling,
//! flow orbits and closest-approach tracking.
//!
//! Surfaces of revolution are embedded isometrically in ℝ³ as
//! `ι(s, θ) = (α cos θ, α sin θ, z(s))` with `z′ = sqrt(1 - α′²)`. A unit
//! covector is represented by its base point and unit tangent in ℝ³, and the
//! phase distance is the max of the two chordal distances. The flat 2-torus
//! uses the flat min-image distance on the base and the chord between unit
//! directions on the fiber.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geoflow::{integrate_geodesic, PhasePoint, Trajectory};
use crate::manifolds::{ModelManifold, ProfileCurve};
use crate::numerics::ode::OdeOptions;
use crate::numerics::quad::gauss_legendre;
use crate::numerics::roots::golden_min;

/// A base point: `(s, θ)` on a surface, `(x, y)` on the torus.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BasePoint {
    pub a: f64,
    pub b: f64,
}

impl BasePoint {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }
}

/// A unit covector: base point and direction angle `ψ`.
///
/// On a surface `ψ` is measured from the northward meridian, so
/// `ξ_s = cos ψ` and `ξ_θ = α sin ψ`. At a pole the pair `(θ, ψ = π)` means
/// leaving along the meridian `θ`. On the torus the direction is `(cos ψ, sin ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub a: f64,
    pub b: f64,
    pub psi: f64,
}

/// Embedded representative used for distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedded {
    pub p: [f64; 3],
    pub u: [f64; 3],
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Tabulated height function and area distribution of a profile.
#[derive(Debug, Clone)]
struct Tables {
    s: Vec<f64>,
    z: Vec<f64>,
    dz: Vec<f64>,
    cum_area: Vec<f64>,
    alpha: Vec<f64>,
}

const TABLE_CELLS: usize = 4096;

impl Tables {
    fn new(p: &ProfileCurve) -> Self {
        let (lo, hi) = p.domain();
        let n = TABLE_CELLS;
        let (xs, ws) = gauss_legendre(8);
        let h = (hi - lo) / n as f64;
        let dzf = |s: f64| (1.0 - p.d_alpha(s).powi(2)).max(0.0).sqrt();
        let mut s = Vec::with_capacity(n + 1);
        let mut z = vec![0.0; n + 1];
        let mut dz = Vec::with_capacity(n + 1);
        let mut cum = vec![0.0; n + 1];
        let mut alpha = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let si = if i == n { hi } else { lo + h * i as f64 };
            s.push(si);
            dz.push(dzf(si));
            alpha.push(p.alpha(si));
        }
        for i in 0..n {
            let (a, b) = (s[i], s[i + 1]);
            let (mut iz, mut ia) = (0.0, 0.0);
            for (x, w) in xs.iter().zip(&ws) {
                let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
                iz += w * dzf(t);
                ia += w * p.alpha(t);
            }
            z[i + 1] = z[i] + 0.5 * (b - a) * iz;
            cum[i + 1] = cum[i] + 0.5 * (b - a) * ia;
        }
        // Put the equator at height 0.
        let z0 = Self::hermite(&s, &z, &dz, 0.0);
        for v in z.iter_mut() {
            *v -= z0;
        }
        Self {
            s,
            z,
            dz,
            cum_area: cum,
            alpha,
        }
    }

    fn cell(s: &[f64], x: f64) -> usize {
        let n = s.len() - 1;
        let h = (s[n] - s[0]) / n as f64;
        (((x - s[0]) / h).floor().max(0.0) as usize).min(n - 1)
    }

    fn hermite(s: &[f64], v: &[f64], dv: &[f64], x: f64) -> f64 {
        let i = Self::cell(s, x);
        let h = s[i + 1] - s[i];
        let t = (x - s[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * v[i]
            + (t3 - 2.0 * t2 + t) * h * dv[i]
            + (-2.0 * t3 + 3.0 * t2) * v[i + 1]
            + (t3 - t2) * h * dv[i + 1]
    }

    fn z(&self, x: f64) -> f64 {
        Self::hermite(&self.s, &self.z, &self.dz, x)
    }

    /// Latitude with area fraction `q` below it.
    fn inverse_area(&self, p: &ProfileCurve, q: f64) -> f64 {
        let total = *self.cum_area.last().unwrap();
        let target = q.clamp(0.0, 1.0) * total;
        let i = self.cum_area.partition_point(|c| *c <= target).clamp(1, self.s.len() - 1) - 1;
        let (a, b) = (self.s[i], self.s[i + 1]);
        // Newton on the cell, where α is smooth and positive on the interior.
        let mut x = 0.5 * (a + b);
        let base = self.cum_area[i];
        let (xs, ws) = gl4();
        for _ in 0..30 {
            let m: f64 = xs
                .iter()
                .zip(ws)
                .map(|(t, w)| w * p.alpha(0.5 * (a + x) + 0.5 * (x - a) * t))
                .sum::<f64>()
                * 0.5
                * (x - a);
            let f = base + m - target;
            let d = p.alpha(x).max(1e-300);
            let next = (x - f / d).clamp(a, b);
            if (next - x).abs() < 1e-15 {
                return next;
            }
            x = next;
        }
        let _ = &self.alpha;
        x
    }
}

fn gl4() -> (&'static [f64; 4], &'static [f64; 4]) {
    const X: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    (&X, &W)
}

#[derive(Debug, Clone)]
enum Geometry {
    Surface {
        profile: ProfileCurve,
        tables: Tables,
        kappa: f64,
    },
    Torus {
        periods: [f64; 2],
    },
}

/// The unit cosphere bundle of a surface of revolution or a flat 2-torus.
#[derive(Debug, Clone)]
pub struct PhaseSpace {
    geom: Geometry,
    pub ode: OdeOptions,
}

/// A flow line through a state, available for `t ∈ [-t_back, t_fwd]`.
pub enum Orbit {
    Surface {
        fwd: Trajectory,
        bwd: Trajectory,
    },
    Torus {
        x: [f64; 2],
        dir: [f64; 2],
        psi: f64,
    },
}

impl PhaseSpace {
    pub fn surface(profile: ProfileCurve) -> Self {
        let tables = Tables::new(&profile);
        let kappa = max_curvature(&profile);
        Self {
            geom: Geometry::Surface {
                profile,
                tables,
                kappa,
            },
            ode: OdeOptions::default(),
        }
    }

    pub fn torus(periods: [f64; 2]) -> Self {
        Self {
            geom: Geometry::Torus { periods },
            ode: OdeOptions::default(),
        }
    }

    /// Phase space of a 2-dimensional model manifold.
    pub fn of_manifold(m: &ModelManifold) -> Result<Self> {
        match m {
            ModelManifold::SurfaceOfRevolution(p) => Ok(Self::surface(p.clone())),
            ModelManifold::RoundSphere(2) => {
                Ok(Self::surface(crate::manifolds::make_round_sphere()))
            }
            ModelManifold::FlatTorus(p) if p.len() == 2 => Ok(Self::torus([p[0], p[1]])),
            other => Err(Error::Domain(format!(
                "phase-space tools need a surface, got {}",
                other.label()
            ))),
        }
    }

    pub fn profile(&self) -> Option<&ProfileCurve> {
        match &self.geom {
            Geometry::Surface { profile, .. } => Some(profile),
            Geometry::Torus { .. } => None,
        }
    }

    pub fn periods(&self) -> Option<[f64; 2]> {
        match &self.geom {
            Geometry::Torus { periods } => Some(*periods),
            _ => None,
        }
    }

    pub fn area(&self) -> f64 {
        match &self.geom {
            Geometry::Surface { tables, .. } => 2.0 * PI * tables.cum_area.last().unwrap(),
            Geometry::Torus { periods } => periods[0] * periods[1],
        }
    }

    /// Liouville measure of the unit cosphere bundle (area × 2π).
    pub fn liouville_total(&self) -> f64 {
        self.area() * 2.0 * PI
    }

    /// Upper bound for the speed of `t ↦ d(φ_t q, p)`.
    pub fn lipschitz(&self) -> f64 {
        match &self.geom {
            Geometry::Surface { kappa, .. } => kappa.max(1.0),
            Geometry::Torus { .. } => 1.0,
        }
    }

    /// Bound on the normal curvature of geodesics in the embedding (0 on the torus).
    pub fn fiber_drift(&self) -> f64 {
        match &self.geom {
            Geometry::Surface { kappa, .. } => *kappa,
            Geometry::Torus { .. } => 0.0,
        }
    }

    /// Whether `x` is a pole of the surface.
    pub fn is_pole(&self, x: BasePoint) -> bool {
        match &self.geom {
            Geometry::Surface { profile, .. } => x.a <= profile.lo() || x.a >= profile.hi(),
            Geometry::Torus { .. } => false,
        }
    }

    /// The point of `S*_x M` with fiber parameter `phi ∈ [-π, π)`.
    pub fn fiber_state(&self, x: BasePoint, phi: f64) -> State {
        match &self.geom {
            Geometry::Surface { profile, .. } if x.a >= profile.hi() => State {
                a: profile.hi(),
                b: phi,
                psi: PI,
            },
            Geometry::Surface { profile, .. } if x.a <= profile.lo() => State {
                a: profile.lo(),
                b: phi,
                psi: 0.0,
            },
            _ => State {
                a: x.a,
                b: x.b,
                psi: phi,
            },
        }
    }

    /// Liouville-uniform state from a point of the unit cube.
    pub fn liouville_state(&self, u: [f64; 3]) -> State {
        match &self.geom {
            Geometry::Surface {
                profile, tables, ..
            } => State {
                a: tables.inverse_area(profile, u[0]),
                b: 2.0 * PI * u[1],
                psi: 2.0 * PI * u[2] - PI,
            },
            Geometry::Torus { periods } => State {
                a: periods[0] * u[0],
                b: periods[1] * u[1],
                psi: 2.0 * PI * u[2] - PI,
            },
        }
    }

    pub fn embed(&self, q: &State) -> Embedded {
        match &self.geom {
            Geometry::Surface {
                profile, tables, ..
            } => {
                let [a, a1, _, _] = profile.jet(q.a);
                let dz = (1.0 - a1 * a1).max(0.0).sqrt();
                let (st, ct) = q.b.sin_cos();
                let (sp, cp) = q.psi.sin_cos();
                let p = [a.max(0.0) * ct, a.max(0.0) * st, tables.z(q.a)];
                let u = [
                    cp * a1 * ct - sp * st,
                    cp * a1 * st + sp * ct,
                    cp * dz,
                ];
                Embedded { p, u }
            }
            Geometry::Torus { .. } => {
                let (sp, cp) = q.psi.sin_cos();
                Embedded {
                    p: [q.a, q.b, 0.0],
                    u: [cp, sp, 0.0],
                }
            }
        }
    }

    fn base_gap(&self, a: &Embedded, b: &Embedded) -> f64 {
        match &self.geom {
            Geometry::Surface { .. } => norm3(sub3(a.p, b.p)),
            Geometry::Torus { periods } => {
                let wrap = |d: f64, l: f64| d - l * (d / l).round();
                let dx = wrap(a.p[0] - b.p[0], periods[0]);
                let dy = wrap(a.p[1] - b.p[1], periods[1]);
                dx.hypot(dy)
            }
        }
    }

    /// Phase distance `max(base chord, direction chord)`.
    pub fn distance_embedded(&self, a: &Embedded, b: &Embedded) -> f64 {
        self.base_gap(a, b).max(norm3(sub3(a.u, b.u)))
    }

    pub fn distance(&self, a: &State, b: &State) -> f64 {
        self.distance_embedded(&self.embed(a), &self.embed(b))
    }

    /// Base-only distance.
    pub fn base_distance(&self, a: &Embedded, b: &Embedded) -> f64 {
        self.base_gap(a, b)
    }

    /// Distance from `q` to the whole fiber `S*_y M`.
    pub fn distance_to_fiber(&self, q: &Embedded, y: BasePoint) -> f64 {
        let ey = self.embed(&self.fiber_state(y, 0.0));
        let base = self.base_gap(q, &ey);
        match &self.geom {
            Geometry::Torus { .. } => base,
            Geometry::Surface { profile, .. } => {
                let n = self.normal(y, profile);
                let un = dot3(q.u, n).clamp(-1.0, 1.0);
                let fib = (2.0 - 2.0 * (1.0 - un * un).sqrt()).max(0.0).sqrt();
                base.max(fib)
            }
        }
    }

    /// Distance from `q` to the conormal directions of the latitude `{s = s0}`,
    /// evaluated at the nearest point of the circle in the embedding.
    pub fn distance_to_conormal(&self, q: &State, s0: f64) -> Result<f64> {
        match &self.geom {
            Geometry::Surface { .. } => {
                let eq = self.embed(q);
                let foot = self.embed(&State {
                    a: s0,
                    b: q.b,
                    psi: 0.0,
                });
                let base = self.base_gap(&eq, &foot);
                let m = foot.u;
                let fib = norm3(sub3(eq.u, m)).min(norm3([eq.u[0] + m[0], eq.u[1] + m[1], eq.u[2] + m[2]]));
                Ok(base.max(fib))
            }
            Geometry::Torus { .. } => Err(Error::Domain(
                "latitude circles are defined on surfaces of revolution".into(),
            )),
        }
    }

    fn normal(&self, y: BasePoint, profile: &ProfileCurve) -> [f64; 3] {
        let a1 = profile.d_alpha(y.a);
        let dz = (1.0 - a1 * a1).max(0.0).sqrt();
        let (st, ct) = y.b.sin_cos();
        [-dz * ct, -dz * st, a1]
    }

    /// Flow line through `q` on `[-t_back, t_fwd]`.
    pub fn orbit(&self, q: &State, t_fwd: f64, t_back: f64) -> Result<Orbit> {
        match &self.geom {
            Geometry::Surface { profile, .. } => {
                let p0 = PhasePoint::from_angle(profile, q.a, q.b, q.psi);
                let p0 = if p0.xi_theta.abs() < crate::geoflow::flow::MERIDIAN_CUTOFF {
                    PhasePoint::new(p0.s, p0.theta, p0.xi_s.signum(), 0.0)
                } else {
                    p0
                };
                Ok(Orbit::Surface {
                    fwd: integrate_geodesic(p0, t_fwd, profile, self.ode)?,
                    bwd: integrate_geodesic(p0, -t_back, profile, self.ode)?,
                })
            }
            Geometry::Torus { .. } => {
                let (sp, cp) = q.psi.sin_cos();
                Ok(Orbit::Torus {
                    x: [q.a, q.b],
                    dir: [cp, sp],
                    psi: q.psi,
                })
            }
        }
    }

    /// State on an orbit at time `t`.
    pub fn orbit_state(&self, o: &Orbit, t: f64) -> State {
        match o {
            Orbit::Surface { fwd, bwd } => {
                let p = if t >= 0.0 { fwd.state(t) } else { bwd.state(t) };
                let profile = self.profile().unwrap();
                let a = profile.alpha(p.s);
                let sp = if a > 0.0 {
                    (p.xi_theta / a).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
                State {
                    a: p.s,
                    b: p.theta,
                    psi: sp.atan2(p.xi_s),
                }
            }
            Orbit::Torus { x, dir, psi } => State {
                a: x[0] + t * dir[0],
                b: x[1] + t * dir[1],
                psi: *psi,
            },
        }
    }

    pub fn orbit_embedded(&self, o: &Orbit, t: f64) -> Embedded {
        self.embed(&self.orbit_state(o, t))
    }

    /// Integration error allowance added to approach thresholds.
    pub fn integration_budget(&self, t: f64) -> f64 {
        match &self.geom {
            Geometry::Surface { .. } => 10.0 * self.ode.rtol.max(self.ode.atol) * (1.0 + t.abs()),
            Geometry::Torus { .. } => 0.0,
        }
    }
}

/// Largest principal curvature of the embedded surface (sampled, with margin).
fn max_curvature(p: &ProfileCurve) -> f64 {
    let (lo, hi) = p.domain();
    let n = 4000;
    let mut k = 0.0f64;
    for i in 1..n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        let [a, a1, a2, _] = p.jet(s);
        let dz = (1.0 - a1 * a1).max(0.0).sqrt();
        if dz < 1e-3 || a < 1e-3 {
            continue;
        }
        k = k.max((a2 / dz).abs()).max(dz / a);
    }
    1.05 * k.max(1.0)
}

/// Mesh of the approach tracker relative to the threshold.
pub const MESH: f64 = 0.002;

/// First time in the interval from `t_start` towards `t_stop` at which
/// `dist(t) < thr`, stepping by the Lipschitz bound `lip`.
///
/// Samples are never more than `(d - thr)/lip` apart, or `MESH·thr/lip` where
/// that is smaller, so a true dip below `thr` lies within one minimal step of
/// a sample with `d < thr·(1 + MESH)`. Such samples are refined by a local
/// golden-section search.
pub fn first_approach<F: FnMut(f64) -> f64>(
    mut dist: F,
    t_start: f64,
    t_stop: f64,
    thr: f64,
    lip: f64,
) -> Option<(f64, f64)> {
    let dir = if t_stop >= t_start { 1.0 } else { -1.0 };
    let len = (t_stop - t_start).abs();
    let h_min = MESH * thr / lip;
    let near = thr * (1.0 + MESH);
    let (w_lo, w_hi) = (t_start.min(t_stop), t_start.max(t_stop));
    let mut s = 0.0f64;
    loop {
        let t = t_start + dir * s.min(len);
        let d = dist(t);
        if d < thr {
            return Some((t, d));
        }
        if d < near {
            let (lo, hi) = ((t - h_min).max(w_lo), (t + h_min).min(w_hi));
            let (x, fx) = golden_min(&mut dist, lo, hi, 1e-3 * h_min);
            if fx < thr {
                return Some((x, fx));
            }
        }
        if s >= len {
            return None;
        }
        s += ((d - thr) / lip).max(h_min);
    }
}

/// Minimum of `dist` over the interval, sampled with Lipschitz skipping
/// relative to the current best.
pub fn closest_approach<F: FnMut(f64) -> f64>(
    mut dist: F,
    t_start: f64,
    t_stop: f64,
    resolution: f64,
    lip: f64,
) -> (f64, f64) {
    let dir = if t_stop >= t_start { 1.0 } else { -1.0 };
    let len = (t_stop - t_start).abs();
    let h_min = resolution / lip;
    let mut best = (t_start, f64::INFINITY);
    let mut s = 0.0f64;
    loop {
        let t = t_start + dir * s.min(len);
        let d = dist(t);
        if d < best.1 {
            best = (t, d);
        }
        if s >= len {
            return best;
        }
        s += ((d - best.1) / lip).max(h_min);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{make_perturbed_sphere, make_round_sphere, PerturbationSpec};

    #[test]
    fn round_sphere_embedding_is_the_unit_sphere() {
        let ps = PhaseSpace::surface(make_round_sphere());
        assert!((ps.area() - 4.0 * PI).abs() < 1e-10);
        for (s, th, psi) in [(0.3, 1.0, 0.4), (-1.2, 4.0, -2.0), (1.5, 0.2, 3.0)] {
            let e = ps.embed(&State { a: s, b: th, psi });
            assert!((norm3(e.p) - 1.0).abs() < 1e-12);
            assert!((norm3(e.u) - 1.0).abs() < 1e-12);
            assert!(dot3(e.p, e.u).abs() < 1e-12);
        }
        assert!((ps.lipschitz() - 1.05).abs() < 1e-9);
    }

    #[test]
    fn pole_fiber_is_a_circle_of_meridians() {
        let ps = PhaseSpace::surface(make_round_sphere());
        let x = BasePoint::new(PI / 2.0, 0.0);
        let a = ps.embed(&ps.fiber_state(x, 0.3));
        let b = ps.embed(&ps.fiber_state(x, 0.3 + PI / 2.0));
        assert!((a.p[2] - 1.0).abs() < 1e-12);
        assert!((norm3(sub3(a.u, b.u)) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn liouville_sampling_matches_area_distribution() {
        let p = make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap();
        let ps = PhaseSpace::surface(p.clone());
        for q in [0.1, 0.37, 0.5, 0.93] {
            let s = ps.liouville_state([q, 0.0, 0.5]).a;
            let frac = p.integral(p.lo(), s) / p.integral(p.lo(), p.hi());
            assert!((frac - q).abs() < 1e-10, "{q}: {frac}");
        }
    }

    #[test]
    fn torus_distance_wraps() {
        let ps = PhaseSpace::torus([2.0 * PI, 2.0 * PI]);
        let a = State { a: 0.01, b: 0.0, psi: 0.0 };
        let b = State { a: 2.0 * PI - 0.01, b: 2.0 * PI, psi: 0.0 };
        assert!((ps.distance(&a, &b) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn approach_tracker_finds_thin_dips() {
        let f = |t: f64| (t - 3.0).abs() + 0.5;
        assert!(first_approach(f, 0.0, 10.0, 0.500001, 1.0).is_some());
        assert!(first_approach(f, 0.0, 10.0, 0.4999, 1.0).is_none());
        assert!(first_approach(f, 10.0, 3.0 + 1e-9, 0.500001, 1.0).is_some());
        let (t, d) = closest_approach(f, 10.0, 0.0, 1e-6, 1.0);
        assert!((t - 3.0).abs() < 1e-5 && (d - 0.5).abs() < 1e-5);
    }
}

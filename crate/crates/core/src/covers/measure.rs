//! Monte-Carlo measures of near-periodic, looping and recurrent sets, with
//! exact lattice oracles on the flat torus.
//!
//! A point `ρ` belongs to the near-periodic set when some `ρ′ ∈ B(ρ, R)`
//! returns to `B(ρ, R)`, and to the looping set when some `ρ′ ∈ B(ρ, R)`
//! reaches `B(target, R)`. Both are tested through the orbit of `ρ` itself
//! with the threshold `KAPPA·R`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::lowdisc::ScrambledHalton;
use crate::numerics::quad::TanhSinh;

use super::phase::{first_approach, BasePoint, Embedded, PhaseSpace, State};
use super::resolution::ResolutionFunction;

/// Threshold factor for approaches of the reference orbit.
pub const KAPPA: f64 = 2.0;

/// Failure probability of the reported Hoeffding interval.
pub const HOEFFDING_DELTA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub half_width: f64,
    pub samples: usize,
    pub brute_force: Option<f64>,
    /// Measure of the sampled set.
    pub total: f64,
    /// Amount added to the approach threshold for integration error.
    pub inflation: f64,
}

pub fn hoeffding_half_width(samples: usize, total: f64) -> f64 {
    ((2.0 / HOEFFDING_DELTA).ln() / (2.0 * samples as f64)).sqrt() * total
}

impl MeasureEstimate {
    fn from_hits(hits: usize, samples: usize, total: f64, inflation: f64) -> Self {
        Self {
            value: total * hits as f64 / samples as f64,
            half_width: hoeffding_half_width(samples, total),
            samples,
            brute_force: None,
            total,
            inflation,
        }
    }

    /// `|value − brute_force| ≤ k·half_width`, if an exact value exists.
    pub fn agrees(&self, k: f64) -> Option<bool> {
        self.brute_force
            .map(|b| (self.value - b).abs() <= k * self.half_width)
    }
}

/// Subsets of the unit cosphere bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum CosphereSet {
    Full,
    /// `s0 ≤ s ≤ s1` (on the torus, `s0 ≤ x ≤ s1`).
    Band { s0: f64, s1: f64 },
    /// `c_lo ≤ |ξ_θ| ≤ c_hi`.
    ClairautBand { c_lo: f64, c_hi: f64 },
    /// The fiber `S*_x M`.
    Fiber { x: BasePoint },
}

impl CosphereSet {
    /// Liouville measure (for `Fiber`, the fiber angle measure).
    pub fn measure(&self, ps: &PhaseSpace) -> Result<f64> {
        match (*self, ps.profile(), ps.periods()) {
            (CosphereSet::Full, _, _) => Ok(ps.liouville_total()),
            (CosphereSet::Fiber { .. }, _, _) => Ok(2.0 * PI),
            (CosphereSet::Band { s0, s1 }, Some(p), _) => {
                let (s0, s1) = (s0.max(p.lo()), s1.min(p.hi()));
                Ok(if s1 > s0 { 4.0 * PI * PI * p.integral(s0, s1) } else { 0.0 })
            }
            (CosphereSet::Band { s0, s1 }, None, Some(per)) => {
                Ok(2.0 * PI * per[1] * (s1.min(per[0]) - s0.max(0.0)).max(0.0))
            }
            (CosphereSet::ClairautBand { c_lo, c_hi }, Some(p), _) => {
                // 2π ∫ α(s) · |{ψ : c_lo ≤ α|sin ψ| ≤ c_hi}| ds
                let frac = |c: f64, a: f64| 4.0 * (c / a).min(1.0).asin();
                let f = |s: f64| {
                    let a = p.alpha(s);
                    if a <= 0.0 {
                        0.0
                    } else {
                        a * (frac(c_hi, a) - frac(c_lo.max(0.0), a))
                    }
                };
                let mut pts = vec![p.lo(), p.hi()];
                for c in [c_lo, c_hi] {
                    if c > 0.0 && c < p.max_alpha() {
                        let (a, b) = crate::geoflow::turning_points(c, p)?;
                        pts.extend([a, b]);
                    }
                }
                pts.extend(p.knots());
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup();
                let ts = TanhSinh::with_tol(1e-12);
                let mut total = 0.0;
                for w in pts.windows(2) {
                    total += ts.integrate(w[0], w[1], |x, _, _| f(x))?.value;
                }
                Ok(2.0 * PI * total)
            }
            (CosphereSet::ClairautBand { .. }, None, _) => Err(Error::Domain(
                "Clairaut bands need a surface of revolution".into(),
            )),
            _ => Err(Error::Domain("unsupported cosphere set".into())),
        }
    }

    /// Candidate state from a point of the unit cube; `None` if rejected.
    fn draw(&self, ps: &PhaseSpace, u: [f64; 3]) -> Option<State> {
        match *self {
            CosphereSet::Full => Some(ps.liouville_state(u)),
            CosphereSet::Fiber { x } => Some(ps.fiber_state(x, 2.0 * PI * u[0] - PI)),
            CosphereSet::Band { s0, s1 } => match (ps.profile(), ps.periods()) {
                (Some(p), _) => {
                    let total = p.integral(p.lo(), p.hi());
                    let f0 = p.integral(p.lo(), s0.max(p.lo())) / total;
                    let f1 = p.integral(p.lo(), s1.min(p.hi())) / total;
                    Some(ps.liouville_state([f0 + (f1 - f0) * u[0], u[1], u[2]]))
                }
                (None, Some(per)) => Some(State {
                    a: s0 + (s1 - s0) * u[0],
                    b: per[1] * u[1],
                    psi: 2.0 * PI * u[2] - PI,
                }),
                _ => None,
            },
            CosphereSet::ClairautBand { c_lo, c_hi } => {
                let q = ps.liouville_state(u);
                let p = ps.profile()?;
                let c = (p.alpha(q.a) * q.psi.sin()).abs();
                (c >= c_lo && c <= c_hi).then_some(q)
            }
        }
    }

    /// The first `n` accepted states of the seeded low-discrepancy stream.
    pub fn sample(&self, ps: &PhaseSpace, n: usize, seed: u64) -> Result<Vec<State>> {
        let h = ScrambledHalton::new(3, seed);
        let mut out = Vec::with_capacity(n);
        let mut i = 0u64;
        let cap = 1000 * n as u64 + 100_000;
        while out.len() < n {
            if i > cap {
                return Err(Error::DegenerateInput(format!(
                    "cosphere set accepted {} of {i} candidates",
                    out.len()
                )));
            }
            if let Some(q) = self.draw(ps, [h.coord(i, 0), h.coord(i, 1), h.coord(i, 2)]) {
                out.push(q);
            }
            i += 1;
        }
        Ok(out)
    }
}

/// A point or a latitude circle `{s = s0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Submanifold {
    Point { x: BasePoint },
    Latitude { s0: f64 },
}

/// One component of `S*_x M` or of the unit conormal bundle of a latitude,
/// parametrized by an angle `φ`.
///
/// Within the circle the phase distance between parameters `φ₁, φ₂` is
/// `2m·sin(|φ₁ − φ₂|/2)` and the measure is `w·dφ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberCircle {
    pub target: Submanifold,
    /// `+1` or `−1` (the conormal direction `±∂_s`); ignored for points.
    pub sign: f64,
    pub m: f64,
    pub w: f64,
}

impl FiberCircle {
    pub fn point(x: BasePoint) -> Self {
        Self {
            target: Submanifold::Point { x },
            sign: 1.0,
            m: 1.0,
            w: 1.0,
        }
    }

    pub fn latitude(ps: &PhaseSpace, s0: f64, sign: f64) -> Result<Self> {
        let p = ps.profile().ok_or_else(|| {
            Error::Domain("latitude circles are defined on surfaces of revolution".into())
        })?;
        if !(s0 > p.lo() && s0 < p.hi()) {
            return Err(Error::Domain(format!("latitude {s0} is not interior")));
        }
        let (a, a1) = (p.alpha(s0), p.d_alpha(s0));
        Ok(Self {
            target: Submanifold::Latitude { s0 },
            sign: sign.signum(),
            m: a.max(a1.abs()),
            w: a,
        })
    }

    pub fn state(&self, ps: &PhaseSpace, phi: f64) -> State {
        match self.target {
            Submanifold::Point { x } => ps.fiber_state(x, phi),
            Submanifold::Latitude { s0 } => State {
                a: s0,
                b: phi,
                psi: if self.sign > 0.0 { 0.0 } else { PI },
            },
        }
    }

    pub fn total(&self) -> f64 {
        2.0 * PI * self.w
    }

    /// Parameter half-width of a ball of phase radius `r`.
    pub fn angle_of(&self, r: f64) -> f64 {
        if r >= 2.0 * self.m {
            PI
        } else {
            2.0 * (r / (2.0 * self.m)).asin()
        }
    }

    /// Phase distance from `q` to the arc `|φ − c| ≤ beta` of the circle.
    pub fn distance_to_arc(&self, ps: &PhaseSpace, q: &Embedded, c: f64, beta: f64) -> f64 {
        match self.target {
            Submanifold::Point { x } => {
                let e1 = ps.embed(&ps.fiber_state(x, 0.0));
                let e2 = ps.embed(&ps.fiber_state(x, PI / 2.0));
                let base = ps.base_distance(q, &e1);
                let u1 = q.u[0] * e1.u[0] + q.u[1] * e1.u[1] + q.u[2] * e1.u[2];
                let u2 = q.u[0] * e2.u[0] + q.u[1] * e2.u[1] + q.u[2] * e2.u[2];
                let rho = u1.hypot(u2);
                let phi_u = u2.atan2(u1);
                let off = wrap(phi_u - c);
                let gap = if off.abs() <= beta { 0.0 } else { off.abs() - beta };
                let fib = (2.0 - 2.0 * rho * gap.cos()).max(0.0).sqrt();
                base.max(fib)
            }
            Submanifold::Latitude { .. } => {
                let f = |phi: f64| ps.distance_embedded(q, &ps.embed(&self.state(ps, phi)));
                let beta = beta.min(PI);
                let n = 32;
                let mut best = (c, f64::INFINITY);
                for i in 0..=n {
                    let phi = c - beta + 2.0 * beta * i as f64 / n as f64;
                    let d = f(phi);
                    if d < best.1 {
                        best = (phi, d);
                    }
                }
                let h = 2.0 * beta / n as f64;
                let lo = (best.0 - h).max(c - beta);
                let hi = (best.0 + h).min(c + beta);
                let (_, d) = crate::numerics::roots::golden_min(f, lo, hi, 1e-12);
                d.min(best.1)
            }
        }
    }

    /// Phase distance from `q` to the whole target (both conormal signs).
    pub fn distance_to_target(&self, ps: &PhaseSpace, q: &State, eq: &Embedded) -> Result<f64> {
        match self.target {
            Submanifold::Point { x } => Ok(ps.distance_to_fiber(eq, x)),
            Submanifold::Latitude { s0 } => ps.distance_to_conormal(q, s0),
        }
    }
}

/// Angle reduced to `[-π, π)`.
pub fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Total length of a union of arcs `[a, b]` (with `b − a ≤ 2π`) on the circle.
pub fn circle_union_measure(arcs: &[(f64, f64)]) -> f64 {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in arcs {
        if b - a >= 2.0 * PI {
            return 2.0 * PI;
        }
        if b <= a {
            continue;
        }
        let a0 = a.rem_euclid(2.0 * PI);
        let b0 = a0 + (b - a);
        if b0 <= 2.0 * PI {
            pieces.push((a0, b0));
        } else {
            pieces.push((a0, 2.0 * PI));
            pieces.push((0.0, b0 - 2.0 * PI));
        }
    }
    pieces.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in pieces {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((a, b)) = cur {
        total += b - a;
    }
    total
}

/// Directions `ω` (as arcs of angle) with `dist(tω, Λ + offset) < radius` for
/// some `t ∈ [t0, t1]`, where `Λ = periods[0]ℤ × periods[1]ℤ`.
pub fn torus_approach_arcs(
    periods: [f64; 2],
    offset: [f64; 2],
    t0: f64,
    t1: f64,
    radius: f64,
) -> Vec<(f64, f64)> {
    let mut arcs = Vec::new();
    if t1 < t0 {
        return arcs;
    }
    let reach = t1 + radius;
    let mx = (reach / periods[0]).ceil() as i64 + 1;
    let my = (reach / periods[1]).ceil() as i64 + 1;
    for i in -mx..=mx {
        for j in -my..=my {
            let k = [i as f64 * periods[0] + offset[0], j as f64 * periods[1] + offset[1]];
            let nk = k[0].hypot(k[1]);
            if nk > reach || nk < 1e-14 {
                continue;
            }
            // Distance from k to the segment {tω : t ∈ [t0, t1]} at angle δ from k̂,
            // nondecreasing in |δ|.
            let d = |delta: f64| {
                let tp = (nk * delta.cos()).clamp(t0, t1);
                (nk * nk + tp * tp - 2.0 * nk * tp * delta.cos()).max(0.0).sqrt()
            };
            if d(0.0) >= radius {
                continue;
            }
            let half = if d(PI) < radius {
                PI
            } else {
                let (mut lo, mut hi) = (0.0, PI);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if d(mid) < radius {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                lo
            };
            let ang = k[1].atan2(k[0]);
            arcs.push((ang - half, ang + half));
        }
    }
    arcs
}

/// Exact fiber measure of directions whose orbit from a point comes within
/// `radius` of its start for some `t0 ≤ |t| ≤ t1`.
pub fn torus_near_periodic_exact(periods: [f64; 2], t0: f64, t1: f64, radius: f64) -> f64 {
    circle_union_measure(&torus_approach_arcs(periods, [0.0; 2], t0, t1, radius))
}

/// Exact fiber measure of directions at `x` whose orbit comes within `radius`
/// of `y` for some `t0 ≤ |t| ≤ t1`.
pub fn torus_looping_exact(
    periods: [f64; 2],
    x: BasePoint,
    y: BasePoint,
    t0: f64,
    t1: f64,
    radius: f64,
) -> f64 {
    let o = [y.a - x.a, y.b - x.b];
    let mut arcs = torus_approach_arcs(periods, o, t0, t1, radius);
    arcs.extend(torus_approach_arcs(periods, [-o[0], -o[1]], t0, t1, radius));
    circle_union_measure(&arcs)
}

/// `μ(B(𝒫ᴿ, R))` for a whole fiber of the flat torus, computed from the
/// definition: a `2R` base approach thickened twice by the fiber `R`-ball.
pub fn torus_near_periodic_ball_exact(periods: [f64; 2], t0: f64, t1: f64, r: f64) -> f64 {
    let grow = 2.0 * 2.0 * (r / 2.0).min(1.0).asin();
    let arcs: Vec<(f64, f64)> = torus_approach_arcs(periods, [0.0; 2], t0, t1, 2.0 * r)
        .into_iter()
        .map(|(a, b)| (a - grow, b + grow))
        .collect();
    circle_union_measure(&arcs)
}

fn torus_fiber_factor(ps: &PhaseSpace, u: &CosphereSet) -> Option<f64> {
    let per = ps.periods()?;
    match *u {
        CosphereSet::Full => Some(per[0] * per[1]),
        CosphereSet::Fiber { .. } => Some(1.0),
        CosphereSet::Band { s0, s1 } => Some(per[1] * (s1.min(per[0]) - s0.max(0.0)).max(0.0)),
        CosphereSet::ClairautBand { .. } => None,
    }
}

/// Whether the orbit of `q` returns within `thr` of `q` for `t0 ≤ |t| ≤ t1`.
fn returns(ps: &PhaseSpace, q: &State, t0: f64, t1: f64, thr: f64) -> Result<bool> {
    let o = ps.orbit(q, t1, t1)?;
    let e0 = ps.embed(q);
    let lip = ps.lipschitz();
    let mut d = |t: f64| ps.distance_embedded(&ps.orbit_embedded(&o, t), &e0);
    Ok(first_approach(&mut d, t0, t1, thr, lip).is_some()
        || first_approach(&mut d, -t0, -t1, thr, lip).is_some())
}

/// Estimate of `μ(B(𝒫ᴿ_U(t₀, T), R))` by Liouville sampling of `U`.
pub fn near_periodic_measure(
    ps: &PhaseSpace,
    u: &CosphereSet,
    t0: f64,
    t1: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    if samples == 0 || !(r > 0.0) || !(t0 >= 0.0) {
        return Err(Error::Domain(format!(
            "need samples > 0, R > 0, t0 ≥ 0 (got {samples}, {r}, {t0})"
        )));
    }
    let total = u.measure(ps)?;
    let thr = KAPPA * r;
    let budget = ps.integration_budget(t1);
    let bf = torus_fiber_factor(ps, u)
        .map(|f| f * torus_near_periodic_exact(ps.periods().unwrap(), t0, t1, thr));
    if t1 < t0 {
        let mut e = MeasureEstimate::from_hits(0, samples, total, budget);
        e.brute_force = bf;
        return Ok(e);
    }
    let states = u.sample(ps, samples, seed)?;
    let flags: Vec<bool> = states
        .par_iter()
        .map(|q| returns(ps, q, t0, t1, thr + budget))
        .collect::<Result<_>>()?;
    let hits = flags.iter().filter(|f| **f).count();
    let mut e = MeasureEstimate::from_hits(hits, samples, total, budget);
    e.brute_force = bf;
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopingEstimate {
    /// `μ(B(ℒ_{1,2}, R))` on the first circle.
    pub forward: MeasureEstimate,
    /// `μ(B(ℒ_{2,1}, R))` on the second.
    pub backward: MeasureEstimate,
    /// `forward · backward · T²`.
    pub product_t2: f64,
}

fn source_states(ps: &PhaseSpace, h: &Submanifold, n: usize, seed: u64) -> Result<(Vec<State>, f64)> {
    let hal = ScrambledHalton::new(2, seed);
    match *h {
        Submanifold::Point { x } => Ok((
            (0..n as u64)
                .map(|i| ps.fiber_state(x, 2.0 * PI * hal.coord(i, 0) - PI))
                .collect(),
            2.0 * PI,
        )),
        Submanifold::Latitude { s0 } => {
            let plus = FiberCircle::latitude(ps, s0, 1.0)?;
            let minus = FiberCircle::latitude(ps, s0, -1.0)?;
            Ok((
                (0..n as u64)
                    .map(|i| {
                        let c = if hal.coord(i, 1) < 0.5 { &plus } else { &minus };
                        c.state(ps, 2.0 * PI * hal.coord(i, 0) - PI)
                    })
                    .collect(),
                plus.total() + minus.total(),
            ))
        }
    }
}

fn loop_side(
    ps: &PhaseSpace,
    from: &Submanifold,
    to: &Submanifold,
    t0: f64,
    t1: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<MeasureEstimate> {
    let (states, total) = source_states(ps, from, samples, seed)?;
    let target = match *to {
        Submanifold::Point { x } => FiberCircle::point(x),
        Submanifold::Latitude { s0 } => FiberCircle::latitude(ps, s0, 1.0)?,
    };
    let thr = KAPPA * r;
    let budget = ps.integration_budget(t1);
    let bf = match (ps.periods(), from, to) {
        (Some(per), Submanifold::Point { x }, Submanifold::Point { x: y }) => {
            Some(torus_looping_exact(per, *x, *y, t0, t1, thr))
        }
        _ => None,
    };
    let hits = if t1 < t0 {
        0
    } else {
        let lip = ps.lipschitz();
        let flags: Vec<bool> = states
            .par_iter()
            .map(|q| -> Result<bool> {
                let o = ps.orbit(q, t1, t1)?;
                let mut err = None;
                let mut d = |t: f64| {
                    let s = ps.orbit_state(&o, t);
                    match target.distance_to_target(ps, &s, &ps.embed(&s)) {
                        Ok(v) => v,
                        Err(e) => {
                            err = Some(e);
                            0.0
                        }
                    }
                };
                let hit = first_approach(&mut d, t0, t1, thr + budget, lip).is_some()
                    || first_approach(&mut d, -t0, -t1, thr + budget, lip).is_some();
                match err {
                    Some(e) => Err(e),
                    None => Ok(hit),
                }
            })
            .collect::<Result<_>>()?;
        flags.iter().filter(|f| **f).count()
    };
    let mut e = MeasureEstimate::from_hits(hits, samples, total, budget);
    e.brute_force = bf;
    Ok(e)
}

/// Estimates of both looping measures of the pair `(h1, h2)` and their product with `T²`.
#[allow(clippy::too_many_arguments)]
pub fn looping_pair_measure(
    ps: &PhaseSpace,
    h1: &Submanifold,
    h2: &Submanifold,
    t0: f64,
    t1: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<LoopingEstimate> {
    if samples == 0 || !(r > 0.0) {
        return Err(Error::Domain("need samples > 0 and R > 0".into()));
    }
    let forward = loop_side(ps, h1, h2, t0, t1, r, samples, seed)?;
    let backward = loop_side(ps, h2, h1, t0, t1, r, samples, seed.wrapping_add(1))?;
    Ok(LoopingEstimate {
        forward,
        backward,
        product_t2: forward.value * backward.value * t1 * t1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceParams {
    pub r0: f64,
    /// `𝔱`, evaluated at `eps`.
    pub t_small: ResolutionFunction,
    /// `𝐓`, evaluated at `r`.
    pub t_big: ResolutionFunction,
    pub r: f64,
    pub big_r: f64,
    pub eps: f64,
    /// Number of dyadic balls `B(ρ, R₀ 2^{-k})`, `k < levels`.
    pub levels: usize,
    /// Upper bound on the number of circle grid points per sign.
    pub max_grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceRow {
    pub k: usize,
    pub radius: f64,
    /// `μ(B(ℛ_{A,+}, rR))` and `μ(B(ℛ_{A,−}, rR))`.
    pub plus: f64,
    pub minus: f64,
    /// `ε μ(B(A, R))`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub window: (f64, f64),
    pub vacuous: bool,
    pub rows: Vec<RecurrenceRow>,
    pub grid_points: usize,
    pub grid_spacing: f64,
    /// `+1` or `−1`.
    pub best_sign: f64,
    pub pass: bool,
    /// `(k, ε)` pairs failing for the best sign.
    pub failing: Vec<(usize, f64)>,
}

/// Check the non-recurrence inequality at `ρ = circle(center)` for dyadic balls `A`.
///
/// Points `ζ` of the circle near `A` lie in `φ_t(B(A, rR))` exactly when
/// `φ_{−t} ζ` comes within `rR` of `A`, which is tested on a grid of `ζ`.
pub fn recurrence_measure(
    ps: &PhaseSpace,
    circle: &FiberCircle,
    center: f64,
    p: &RecurrenceParams,
) -> Result<RecurrenceReport> {
    if !(p.r > 0.0 && p.big_r > 0.0 && p.big_r < p.r0 && p.eps > 0.0 && p.levels > 0) {
        return Err(Error::Domain(
            "need r > 0, 0 < R < R0, eps > 0 and at least one level".into(),
        ));
    }
    let ta = p.t_small.eval(p.eps);
    let tb = p.t_big.eval(p.r);
    let rr = p.r * p.big_r;
    let delta = circle.angle_of(rr);
    let delta_big = circle.angle_of(p.big_r);
    let betas: Vec<f64> = (0..p.levels)
        .map(|k| circle.angle_of(p.r0 * 0.5f64.powi(k as i32)))
        .collect();
    let bounds: Vec<f64> = betas
        .iter()
        .map(|b| p.eps * circle.w * 2.0 * (b + delta_big).min(PI))
        .collect();
    let vacuous = tb <= ta;
    let span = (betas[0] + delta).min(PI);
    let n = ((2.0 * span / (0.5 * delta)).ceil() as usize).clamp(16, p.max_grid.max(16));
    let h = 2.0 * span / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| center - span + h * i as f64).collect();
    let mut rows: Vec<RecurrenceRow> = betas
        .iter()
        .enumerate()
        .map(|(k, _)| RecurrenceRow {
            k,
            radius: p.r0 * 0.5f64.powi(k as i32),
            plus: 0.0,
            minus: 0.0,
            bound: bounds[k],
        })
        .collect();
    if !vacuous {
        let budget = ps.integration_budget(tb);
        let lip = ps.lipschitz();
        // hits[i] = (plus levels, minus levels) as bit masks.
        let hits: Vec<(u64, u64)> = grid
            .par_iter()
            .map(|&phi| -> Result<(u64, u64)> {
                let mut mp = 0u64;
                let mut mm = 0u64;
                let rel = wrap(phi - center).abs();
                let active: Vec<usize> = (0..betas.len()).filter(|&k| rel < betas[k] + delta).collect();
                if active.is_empty() {
                    return Ok((0, 0));
                }
                let z = circle.state(ps, phi);
                let o = ps.orbit(&z, tb, tb)?;
                for &k in &active {
                    let mut d = |t: f64| {
                        circle.distance_to_arc(ps, &ps.orbit_embedded(&o, t), center, betas[k])
                    };
                    // ℛ_+ uses images φ_t with t > 0, so ζ is flowed backwards.
                    if first_approach(&mut d, -ta, -tb, rr + budget, lip).is_some() {
                        mp |= 1 << k;
                    }
                    if first_approach(&mut d, ta, tb, rr + budget, lip).is_some() {
                        mm |= 1 << k;
                    }
                }
                Ok((mp, mm))
            })
            .collect::<Result<_>>()?;
        for (k, row) in rows.iter_mut().enumerate() {
            let arcs = |pick: &dyn Fn(&(u64, u64)) -> u64| -> Vec<(f64, f64)> {
                grid.iter()
                    .zip(&hits)
                    .filter(|(_, m)| pick(m) & (1 << k) != 0)
                    .map(|(phi, _)| (phi - delta, phi + delta))
                    .collect()
            };
            row.plus = circle.w * circle_union_measure(&arcs(&|m| m.0));
            row.minus = circle.w * circle_union_measure(&arcs(&|m| m.1));
        }
    }
    let fails = |sign: f64| -> Vec<(usize, f64)> {
        rows.iter()
            .filter(|r| (if sign > 0.0 { r.plus } else { r.minus }) >= r.bound)
            .map(|r| (r.k, p.eps))
            .collect()
    };
    let worst = |sign: f64| -> f64 {
        rows.iter()
            .map(|r| (if sign > 0.0 { r.plus } else { r.minus }) / r.bound)
            .fold(0.0, f64::max)
    };
    let (fp, fm) = (fails(1.0), fails(-1.0));
    let best_sign = if fp.is_empty() {
        1.0
    } else if fm.is_empty() || worst(-1.0) < worst(1.0) {
        -1.0
    } else {
        1.0
    };
    let failing = if best_sign > 0.0 { fp } else { fm };
    Ok(RecurrenceReport {
        window: (ta, tb),
        vacuous,
        rows,
        grid_points: grid.len(),
        grid_spacing: h,
        best_sign,
        pass: failing.is_empty(),
        failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::make_round_sphere;

    #[test]
    fn union_measure_handles_wrap_and_overlap() {
        let m = circle_union_measure(&[(3.0, 3.5), (3.4, 3.6), (-0.1, 0.1), (6.2, 6.3)]);
        assert!((m - 0.8).abs() < 1e-12, "{m}");
        assert!((circle_union_measure(&[(0.0, 1.0), (0.5, 2.0)]) - 2.0).abs() < 1e-15);
        assert!((circle_union_measure(&[(PI - 0.1, PI + 0.1), (-PI - 0.05, -PI + 0.05)]) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn lattice_arcs_match_small_angle_formula() {
        let per = [2.0 * PI, 2.0 * PI];
        // Only the four axis points and four diagonals are within reach for T = 10.
        let arcs = torus_approach_arcs(per, [0.0; 2], 1.0, 10.0, 0.02);
        assert_eq!(arcs.len(), 8);
        let expect = 4.0 * 2.0 * (0.02 / (2.0 * PI)).asin() + 4.0 * 2.0 * (0.02 / (2.0 * PI * 2f64.sqrt())).asin();
        let got = torus_near_periodic_exact(per, 1.0, 10.0, 0.02);
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn torus_estimate_matches_lattice() {
        let ps = PhaseSpace::torus([2.0 * PI, 2.0 * PI]);
        let e = near_periodic_measure(&ps, &CosphereSet::Full, 1.0, 10.0, 0.01, 20_000, 3).unwrap();
        assert_eq!(e.agrees(3.0), Some(true), "{e:?}");
    }

    #[test]
    fn round_sphere_is_fully_near_periodic() {
        let ps = PhaseSpace::surface(make_round_sphere());
        let e = near_periodic_measure(&ps, &CosphereSet::Full, 1.0, 7.0, 0.01, 1000, 1).unwrap();
        assert!((e.value - e.total).abs() < 1e-12);
        let x = BasePoint::new(0.3, 0.0);
        let l = looping_pair_measure(
            &ps,
            &Submanifold::Point { x },
            &Submanifold::Point { x },
            1.0,
            7.0,
            0.01,
            1000,
            1,
        )
        .unwrap();
        assert_eq!(l.forward.value, 2.0 * PI);
    }

    #[test]
    fn clairaut_band_measure_matches_sampling() {
        let ps = PhaseSpace::surface(make_round_sphere());
        let u = CosphereSet::ClairautBand { c_lo: 0.2, c_hi: 0.6 };
        let m = u.measure(&ps).unwrap();
        let h = ScrambledHalton::new(3, 9);
        let n = 200_000u64;
        let acc = (0..n)
            .filter(|&i| u.draw(&ps, [h.coord(i, 0), h.coord(i, 1), h.coord(i, 2)]).is_some())
            .count();
        let mc = ps.liouville_total() * acc as f64 / n as f64;
        assert!((mc - m).abs() < 2e-3 * ps.liouville_total(), "{mc} vs {m}");
    }
}

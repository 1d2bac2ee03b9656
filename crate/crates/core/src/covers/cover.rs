//! Flow tubes over a fiber circle, good covers, non-self-looping tests and
//! the bad/good splitting.
//!
//! The tube around `ρ_j` is `⋃_{|t| ≤ τ+r} φ_t(B(ρ_j, r))`, with the ball
//! taken in the unit cosphere bundle. A point `q` lies in tube `j` exactly
//! when its orbit passes within `r` of `ρ_j` during `|t| ≤ τ + r`, so
//! re-entry questions become closest-approach questions along one orbit.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::lowdisc::sample_rng;

use super::measure::{wrap, FiberCircle, KAPPA};
use super::phase::{first_approach, Embedded, PhaseSpace, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tube {
    /// Circle parameter of the center.
    pub phi: f64,
    pub center: State,
    pub radius: f64,
    pub half_time: f64,
}

#[derive(Debug, Clone)]
pub struct GoodCover {
    pub target: FiberCircle,
    pub tubes: Vec<Tube>,
    pub families: Vec<Vec<usize>>,
    /// Number of families.
    pub d: usize,
    pub tau: f64,
    pub r: f64,
    /// Certified same-family pairs.
    pub checked_pairs: usize,
    embedded: Vec<Embedded>,
}

/// Default family budget for surfaces.
pub const FAMILY_BUDGET: usize = 32;

/// Longest admissible flow-out half-time for tubes.
pub fn injectivity_time(ps: &PhaseSpace) -> f64 {
    match ps.periods() {
        Some(p) => 0.5 * p[0].min(p[1]),
        None => PI / ps.fiber_drift().max(1.0),
    }
}

/// Inverse of the Schur chord bound: a unit-speed curve with curvature at most
/// `κ` and chord `y` has length at most `(2/κ) asin(κy/2)`.
fn chord_lower_inv(ps: &PhaseSpace, y: f64) -> f64 {
    let k = ps.fiber_drift();
    if k > 0.0 {
        if 0.5 * k * y >= 1.0 {
            f64::INFINITY
        } else {
            2.0 / k * (0.5 * k * y).asin()
        }
    } else {
        y
    }
}

/// A certificate that the `3r` tubes around `a` and `b` are disjoint.
///
/// If `φ_u(p) = q` with `p, q` within `3r` of `b` and `a`, then
/// `|u| ≤ 2(τ + 3r)`, the base chord forces `D_b − 6r ≤ |u|` and
/// `chord_lower(|u|) < D_b + 6r`, and the direction moves by at most `κ|u|`,
/// forcing `D_f − 6r < κ|u|`. Disjointness holds when no `u` satisfies all.
pub fn tubes_disjoint(ps: &PhaseSpace, a: &Embedded, b: &Embedded, tau: f64, r: f64) -> bool {
    let db = ps.base_distance(a, b);
    let df = ((a.u[0] - b.u[0]).powi(2) + (a.u[1] - b.u[1]).powi(2) + (a.u[2] - b.u[2]).powi(2)).sqrt();
    let k = ps.fiber_drift();
    let fib_need = if k > 0.0 {
        ((df - 6.0 * r) / k).max(0.0)
    } else if df >= 6.0 * r {
        f64::INFINITY
    } else {
        0.0
    };
    let lower = fib_need.max(db - 6.0 * r).max(0.0);
    let upper = (2.0 * (tau + 3.0 * r)).min(chord_lower_inv(ps, db + 6.0 * r));
    lower > upper
}

/// Greedily colored cover of a fiber circle by tubes of radius `r`.
///
/// Centers are equally spaced with neighbouring half-gaps below `r/2`, so the
/// `r/2` neighbourhood of the circle lies in the union of the `r`-balls.
pub fn build_good_cover(
    ps: &PhaseSpace,
    target: &FiberCircle,
    tau: f64,
    r: f64,
    budget: usize,
) -> Result<GoodCover> {
    if !(r > 0.0 && r < 0.25 * target.m && tau > 0.0) {
        return Err(Error::Domain(format!(
            "need 0 < r < {} and tau > 0 (r = {r}, tau = {tau})",
            0.25 * target.m
        )));
    }
    let inj = injectivity_time(ps);
    if 2.0 * (tau + 3.0 * r) >= inj {
        return Err(Error::Domain(format!(
            "tau + 3r = {} exceeds half the injectivity time {inj}",
            tau + 3.0 * r
        )));
    }
    let gap = 2.0 * target.angle_of(0.5 * r);
    let n = (2.0 * PI / gap).ceil() as usize;
    let tubes: Vec<Tube> = (0..n)
        .map(|i| {
            let phi = -PI + 2.0 * PI * i as f64 / n as f64;
            Tube {
                phi,
                center: target.state(ps, phi),
                radius: r,
                half_time: tau,
            }
        })
        .collect();
    let embedded: Vec<Embedded> = tubes.iter().map(|t| ps.embed(&t.center)).collect();
    let conflicts: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && !tubes_disjoint(ps, &embedded[i], &embedded[j], tau, r))
                .collect()
        })
        .collect();
    let mut color = vec![usize::MAX; n];
    for i in 0..n {
        let used: Vec<usize> = conflicts[i].iter().map(|&j| color[j]).filter(|c| *c != usize::MAX).collect();
        color[i] = (0..).find(|c| !used.contains(c)).unwrap();
    }
    let d = color.iter().max().map_or(0, |c| c + 1);
    if d > budget {
        return Err(Error::CoverFailure(format!(
            "{n} tubes need {d} families, budget is {budget}"
        )));
    }
    let mut families = vec![Vec::new(); d];
    for (i, c) in color.iter().enumerate() {
        families[*c].push(i);
    }
    let mut cover = GoodCover {
        target: *target,
        tubes,
        families,
        d,
        tau,
        r,
        checked_pairs: 0,
        embedded,
    };
    cover.checked_pairs = cover.audit_disjointness_with(ps)?;
    Ok(cover)
}

impl GoodCover {
    pub fn len(&self) -> usize {
        self.tubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tubes.is_empty()
    }

    pub fn center_embedded(&self, j: usize) -> &Embedded {
        &self.embedded[j]
    }

    /// Recheck the certificate for every same-family pair.
    pub fn audit_disjointness_with(&self, ps: &PhaseSpace) -> Result<usize> {
        let mut pairs = 0;
        for fam in &self.families {
            for (x, &i) in fam.iter().enumerate() {
                for &j in &fam[x + 1..] {
                    pairs += 1;
                    let a = ps.embed(&self.tubes[i].center);
                    let b = ps.embed(&self.tubes[j].center);
                    if !tubes_disjoint(ps, &a, &b, self.tau, self.r) {
                        return Err(Error::CoverFailure(format!(
                            "tubes {i} and {j} share a family but are not certified disjoint"
                        )));
                    }
                }
            }
        }
        Ok(pairs)
    }

    /// Max over `probes` random points `z` with `d(z, circle) < r/2` of the
    /// distance to the nearest center, which must stay below `r`.
    pub fn audit_coverage(&self, ps: &PhaseSpace, probes: usize, seed: u64) -> f64 {
        (0..probes as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i);
                let phi = rng.gen_range(-PI..PI);
                let base = self.target.state(ps, phi);
                let z = perturb_within(ps, &base, 0.5 * self.r, &mut rng);
                let ez = ps.embed(&z);
                self.nearest_center(ps, &ez, phi).1
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Nearest center to `q`, scanning centers near parameter `phi` first.
    fn nearest_center(&self, ps: &PhaseSpace, q: &Embedded, phi: f64) -> (usize, f64) {
        let n = self.tubes.len();
        let i0 = (((wrap(phi) + PI) / (2.0 * PI) * n as f64).round() as usize) % n;
        let mut best = (i0, f64::INFINITY);
        for off in 0..n.min(9) {
            for j in [(i0 + off) % n, (i0 + n - off % n) % n] {
                let d = ps.distance_embedded(q, &self.embedded[j]);
                if d < best.1 {
                    best = (j, d);
                }
            }
        }
        best
    }

    /// Smallest distance from `q` to a center in `subset`, using the distance
    /// to the whole circle as a lower bound when it already exceeds `floor`.
    fn distance_to_centers(&self, ps: &PhaseSpace, q: &State, subset: &[usize], floor: f64) -> Result<f64> {
        let eq = ps.embed(q);
        let lb = self.target.distance_to_target(ps, q, &eq)?;
        if lb >= floor {
            return Ok(lb);
        }
        Ok(subset
            .iter()
            .map(|&j| ps.distance_embedded(&eq, &self.embedded[j]))
            .fold(f64::INFINITY, f64::min))
    }
}

/// Random state within phase distance `rad` of `c` (rejection sampling).
fn perturb_within<R: Rng>(ps: &PhaseSpace, c: &State, rad: f64, rng: &mut R) -> State {
    let ec = ps.embed(c);
    let a_scale = match ps.profile() {
        Some(p) => p.alpha(c.a).max(rad),
        None => 1.0,
    };
    for _ in 0..200 {
        let mut z = State {
            a: c.a + rad * rng.gen_range(-1.0..1.0),
            b: c.b + rad / a_scale * rng.gen_range(-1.0..1.0),
            psi: c.psi + rad * rng.gen_range(-1.0..1.0),
        };
        if let Some(p) = ps.profile() {
            z.a = z.a.clamp(p.lo(), p.hi());
        }
        if ps.distance_embedded(&ps.embed(&z), &ec) < rad {
            return z;
        }
    }
    *c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopWitness {
    pub tube: usize,
    pub a: f64,
    pub b: f64,
    pub psi: f64,
    /// Orbit time of the re-entry.
    pub time: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LoopVerdict {
    /// No re-entry found in the forward (`+1`), backward (`−1`) or either (`0`) window.
    Nonlooping { sign: i8, inflation: f64 },
    Looping {
        forward: LoopWitness,
        backward: LoopWitness,
        inflation: f64,
    },
}

impl LoopVerdict {
    pub fn is_looping(&self) -> bool {
        matches!(self, LoopVerdict::Looping { .. })
    }
}

/// Sample points of the tube union and look for re-entry into it over `[t0, T0]`
/// and over `[−T0, −t0]`.
///
/// A point of tube `j` is `φ_s(z)` with `z ∈ B(ρ_j, r)`, `|s| ≤ τ + r`, so
/// re-entry after time `t ∈ [t0, T0]` happens iff the orbit of `z` passes
/// within `r` of a subset center at some time in `[t0 − 2(τ+r), T0 + 2(τ+r)]`.
pub fn nonselflooping_test(
    ps: &PhaseSpace,
    cover: &GoodCover,
    subset: &[usize],
    t0: f64,
    t_end: f64,
    density: usize,
    seed: u64,
) -> Result<LoopVerdict> {
    let inflation = ps.integration_budget(t_end);
    if t_end < t0 || subset.is_empty() {
        return Ok(LoopVerdict::Nonlooping { sign: 0, inflation });
    }
    let slack = 2.0 * (cover.tau + cover.r);
    let (lo, hi) = (t0 - slack, t_end + slack);
    let r = cover.r;
    let thr = r + inflation;
    let lip = ps.lipschitz();
    let jobs: Vec<(usize, u64)> = subset
        .iter()
        .flat_map(|&j| (0..density as u64).map(move |k| (j, k)))
        .collect();
    let found: Vec<(Option<LoopWitness>, Option<LoopWitness>)> = jobs
        .par_iter()
        .map(|&(j, k)| -> Result<_> {
            let mut rng = sample_rng(seed, (j as u64) << 32 | k);
            let z = if k == 0 {
                cover.tubes[j].center
            } else {
                perturb_within(ps, &cover.tubes[j].center, r, &mut rng)
            };
            let o = ps.orbit(&z, hi, hi)?;
            let mut err = None;
            let mut d = |t: f64| match cover.distance_to_centers(ps, &ps.orbit_state(&o, t), subset, thr * 1.01) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            };
            let wit = |hit: Option<(f64, f64)>| {
                hit.map(|(time, distance)| LoopWitness {
                    tube: j,
                    a: z.a,
                    b: z.b,
                    psi: z.psi,
                    time,
                    distance,
                })
            };
            let f = wit(first_approach(&mut d, lo.max(0.0), hi, thr, lip));
            let b = wit(first_approach(&mut d, -lo.max(0.0), -hi, thr, lip));
            match err {
                Some(e) => Err(e),
                None => Ok((f, b)),
            }
        })
        .collect::<Result<_>>()?;
    let fw = found.iter().find_map(|x| x.0);
    let bw = found.iter().find_map(|x| x.1);
    Ok(match (fw, bw) {
        (Some(forward), Some(backward)) => LoopVerdict::Looping {
            forward,
            backward,
            inflation,
        },
        (None, None) => LoopVerdict::Nonlooping { sign: 0, inflation },
        (None, Some(_)) => LoopVerdict::Nonlooping { sign: 1, inflation },
        (Some(_), None) => LoopVerdict::Nonlooping { sign: -1, inflation },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSplit {
    pub bad: Vec<usize>,
    pub good: Vec<usize>,
    pub t0: f64,
    pub t_end: f64,
    pub r: f64,
    pub s: f64,
    /// Circle parameters of the sampled looping set.
    pub looping: Vec<f64>,
    pub audited_samples: usize,
}

/// Split `cover1` into tubes near the looping set towards `cover2` and the
/// rest, then audit every good tube by direct flow.
#[allow(clippy::too_many_arguments)]
pub fn split_bad_good(
    ps: &PhaseSpace,
    cover1: &GoodCover,
    cover2: &GoodCover,
    t0: f64,
    t_end: f64,
    s: f64,
    density: usize,
    seed: u64,
) -> Result<CoverSplit> {
    let r = cover1.r;
    if s < 4.0 * r {
        return Err(Error::Domain(format!("need S ≥ 4r (S = {s}, r = {r})")));
    }
    let n1 = cover1.len();
    if t_end < t0 {
        return Ok(CoverSplit {
            bad: vec![],
            good: (0..n1).collect(),
            t0,
            t_end,
            r,
            s,
            looping: vec![],
            audited_samples: 0,
        });
    }
    let budget = ps.integration_budget(t_end);
    let lip = ps.lipschitz();
    // Looping set on circle 1: orbits reaching within KAPPA·S of the second target.
    let step = cover1.target.angle_of(0.5 * r);
    let m = ((2.0 * PI / step).ceil() as usize).max(density * n1);
    let probes: Vec<f64> = (0..m).map(|i| -PI + 2.0 * PI * i as f64 / m as f64).collect();
    let thr = KAPPA * s + budget;
    let hit: Vec<bool> = probes
        .par_iter()
        .map(|&phi| -> Result<bool> {
            let q = cover1.target.state(ps, phi);
            let o = ps.orbit(&q, t_end, t_end)?;
            let mut err = None;
            let mut d = |t: f64| {
                let st = ps.orbit_state(&o, t);
                match cover2.target.distance_to_target(ps, &st, &ps.embed(&st)) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            };
            let h = first_approach(&mut d, t0, t_end, thr, lip).is_some()
                || first_approach(&mut d, -t0, -t_end, thr, lip).is_some();
            match err {
                Some(e) => Err(e),
                None => Ok(h),
            }
        })
        .collect::<Result<_>>()?;
    let looping: Vec<f64> = probes.iter().zip(&hit).filter(|x| *x.1).map(|x| *x.0).collect();
    let near = cover1.target.angle_of(2.0 * r);
    let is_bad = |j: usize| {
        let c = cover1.tubes[j].phi;
        looping.iter().any(|&p| wrap(p - c).abs() < near)
    };
    let (bad, good): (Vec<usize>, Vec<usize>) = (0..n1).partition(|&j| is_bad(j));
    // Audit: no point of a good tube reaches a tube of cover2 for t0 ≤ |t| ≤ T.
    let all2: Vec<usize> = (0..cover2.len()).collect();
    let thr2 = cover2.r + budget;
    let failures: Vec<(usize, f64)> = good
        .par_iter()
        .flat_map_iter(|&j| (0..density as u64).map(move |k| (j, k)))
        .filter_map(|(j, k)| {
            let mut rng = sample_rng(seed ^ 0xa5a5, (j as u64) << 32 | k);
            let z = if k == 0 {
                cover1.tubes[j].center
            } else {
                perturb_within(ps, &cover1.tubes[j].center, r, &mut rng)
            };
            let o = ps.orbit(&z, t_end, t_end).ok()?;
            let mut d = |t: f64| {
                cover2
                    .distance_to_centers(ps, &ps.orbit_state(&o, t), &all2, thr2 * 1.01)
                    .unwrap_or(0.0)
            };
            first_approach(&mut d, t0, t_end, thr2, lip)
                .or_else(|| first_approach(&mut d, -t0, -t_end, thr2, lip))
                .map(|(t, _)| (j, t))
        })
        .collect();
    if let Some((j, t)) = failures.first() {
        return Err(Error::AuditFailure(format!(
            "good tube {j} re-enters the partner cover at t = {t:.4} ({} failing samples); raise the sample density",
            failures.len()
        )));
    }
    Ok(CoverSplit {
        bad,
        good: good.clone(),
        t0,
        t_end,
        r,
        s,
        looping,
        audited_samples: good.len() * density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::phase::BasePoint;
    use crate::manifolds::make_round_sphere;

    #[test]
    fn torus_fiber_cover_counts() {
        let ps = PhaseSpace::torus([2.0 * PI, 2.0 * PI]);
        let f = FiberCircle::point(BasePoint::new(1.0, 2.0));
        let c = build_good_cover(&ps, &f, 0.1, 0.01, FAMILY_BUDGET).unwrap();
        let n = c.len();
        assert!(n >= (2.0 * PI / 0.02).ceil() as usize && n <= (2.0 * PI / 0.01).ceil() as usize);
        assert!(c.audit_disjointness_with(&ps).is_ok());
        assert!(c.audit_coverage(&ps, 2000, 4) < 0.01);
        let c2 = build_good_cover(&ps, &f, 0.1, 0.02, FAMILY_BUDGET).unwrap();
        let ratio = c2.len() as f64 / n as f64;
        assert!((1.0 / 3.0..=1.0).contains(&ratio));
    }

    #[test]
    fn sphere_cover_needs_more_families() {
        let ps = PhaseSpace::surface(make_round_sphere());
        let f = FiberCircle::point(BasePoint::new(0.4, 0.0));
        let c = build_good_cover(&ps, &f, 0.1, 0.01, FAMILY_BUDGET).unwrap();
        assert!(c.d > 7 && c.d <= FAMILY_BUDGET);
        assert!(c.audit_disjointness_with(&ps).is_ok());
        assert!(matches!(
            build_good_cover(&ps, &f, 0.1, 0.01, 4),
            Err(Error::CoverFailure(_))
        ));
    }

    #[test]
    fn empty_windows_are_vacuous() {
        let ps = PhaseSpace::surface(make_round_sphere());
        let f = FiberCircle::point(BasePoint::new(0.4, 0.0));
        let c = build_good_cover(&ps, &f, 0.1, 0.02, FAMILY_BUDGET).unwrap();
        let v = nonselflooping_test(&ps, &c, &[0, 1], 5.0, 4.0, 3, 1).unwrap();
        assert!(!v.is_looping());
        let s = split_bad_good(&ps, &c, &c, 5.0, 4.0, 0.08, 2, 1).unwrap();
        assert_eq!(s.good.len(), c.len());
    }
}

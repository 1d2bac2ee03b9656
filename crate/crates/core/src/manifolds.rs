//! Model geometries: surfaces of revolution `ds² + α(s)² dθ²`, round spheres
//! `Sⁿ`, flat tori and Riemannian products.
//!
//! A [`ProfileCurve`] lives on a domain `[lo, hi]` of length π with the
//! equator (the maximum of α) at `s = 0`. For the round and perturbed spheres
//! the domain is `[-π/2, π/2]`; the pendulum profile is shifted so that its
//! maximum sits at the origin, which makes its domain slightly asymmetric.
//! Derivatives are exact for every profile shipped here.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::chebyshev::ChebSeries;
use crate::numerics::quad::{gauss_kronrod, gauss_legendre};

/// `exp(-1/(x-a) - 1/(b-x))` on `(a, b)`, scaled to maximum 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub a: f64,
    pub b: f64,
}

impl Bump {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Value and first three derivatives.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        if x <= self.a || x >= self.b {
            return [0.0; 4];
        }
        let p = x - self.a;
        let q = self.b - x;
        let phi = -1.0 / p - 1.0 / q + 4.0 / (self.b - self.a);
        let f = phi.exp();
        if f == 0.0 {
            return [0.0; 4];
        }
        let d1 = 1.0 / (p * p) - 1.0 / (q * q);
        let d2 = -2.0 / (p * p * p) - 2.0 / (q * q * q);
        let d3 = 6.0 / (p * p * p * p) - 6.0 / (q * q * q * q);
        [
            f,
            f * d1,
            f * (d1 * d1 + d2),
            f * (d1 * d1 * d1 + 3.0 * d1 * d2 + d3),
        ]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }
}

/// Perturbation data for `α_ε = cos s + ε (w₊ f₊ + w₋ f₋)`.
///
/// `f₊` is the default bump on `(a, b)`, `f₋` the bump on `minus_support`
/// (default `(-b, -a)`). The weights allow one-sided perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default = "one")]
    pub plus_weight: f64,
    #[serde(default = "one")]
    pub minus_weight: f64,
    #[serde(default)]
    pub minus_support: Option<(f64, f64)>,
}

fn one() -> f64 {
    1.0
}

impl PerturbationSpec {
    pub fn new(epsilon: f64, a: f64, b: f64) -> Self {
        Self {
            epsilon,
            a,
            b,
            plus_weight: 1.0,
            minus_weight: 1.0,
            minus_support: None,
        }
    }

    pub fn plus_bump(&self) -> Bump {
        Bump::new(self.a, self.b)
    }

    pub fn minus_bump(&self) -> Bump {
        let (lo, hi) = self.minus_support.unwrap_or((-self.b, -self.a));
        Bump::new(lo, hi)
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.epsilon) && ok(self.a) && ok(self.b)) {
            return Err(Error::Domain("non-finite perturbation parameter".into()));
        }
        if !(0.0 < self.a && self.a < self.b && self.b < FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "support must satisfy 0 < a < b < π/2 (a = {}, b = {})",
                self.a, self.b
            )));
        }
        let m = self.minus_bump();
        if !(-FRAC_PI_2 < m.a && m.a < m.b && m.b < 0.0) {
            return Err(Error::Domain(format!(
                "negative-side support ({}, {}) must lie in (-π/2, 0)",
                m.a, m.b
            )));
        }
        if !(self.plus_weight >= 0.0 && self.minus_weight >= 0.0) {
            return Err(Error::Domain("bump weights must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Reparametrization data for the spherical pendulum profile.
#[derive(Debug, Clone)]
struct PendulumMap {
    energy: f64,
    /// Global length scale making the profile domain length π.
    scale: f64,
    /// Chebyshev series of the scaled arclength `σ(u)` on `[-π/2, π/2]`, `σ(u*) = 0`.
    sigma: ChebSeries,
}

impl PendulumMap {
    fn weight(&self, u: f64) -> f64 {
        (self.energy - 2.0 * u.sin()).sqrt()
    }

    /// Original latitude `u` with `σ(u) = s`, by safeguarded Newton.
    fn latitude(&self, s: f64, lo: f64, hi: f64) -> f64 {
        if s <= lo {
            return -FRAC_PI_2;
        }
        if s >= hi {
            return FRAC_PI_2;
        }
        let (mut a, mut b) = (-FRAC_PI_2, FRAC_PI_2);
        let mut u = -FRAC_PI_2 + PI * (s - lo) / (hi - lo);
        for _ in 0..60 {
            let f = self.sigma.eval(u) - s;
            if f < 0.0 {
                a = u;
            } else {
                b = u;
            }
            let step = f / (self.scale * self.weight(u));
            let mut next = u - step;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - u).abs() < 1e-16 {
                return next;
            }
            u = next;
        }
        u
    }

    /// `α(σ(u₀) + d) - α(σ(u₀))` without subtracting nearby values.
    ///
    /// The latitude offset solves `k ∫_{u₀}^{u₀+δ} w = d` by Newton with a
    /// Gauss-Legendre rule on the short interval; the profile difference then
    /// uses trigonometric difference identities for `F = (E - 2 sin u) cos² u`.
    fn step(&self, u0: f64, d: f64) -> f64 {
        static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
        let (xs, ws) = GL.get_or_init(|| gauss_legendre(12));
        let k = self.scale;
        let mut du = d / (k * self.weight(u0));
        let clamp = |du: f64| du.clamp(-FRAC_PI_2 - u0, FRAC_PI_2 - u0);
        for _ in 0..30 {
            du = clamp(du);
            let u1 = u0 + du;
            let integral: f64 = xs
                .iter()
                .zip(ws)
                .map(|(x, w)| w * self.weight(u0 + 0.5 * du * (1.0 + x)))
                .sum::<f64>()
                * 0.5
                * du;
            let r = k * integral - d;
            let next = du - r / (k * self.weight(u1));
            if (next - du).abs() <= 4e-16 * du.abs() {
                du = next;
                break;
            }
            du = next;
        }
        let du = clamp(du);
        let u1 = u0 + du;
        let e = self.energy;
        let (s0, c0) = u0.sin_cos();
        let (s1, c1) = u1.sin_cos();
        let dcos2 = -(2.0 * u0 + du).sin() * du.sin();
        let dsin = 2.0 * (u0 + 0.5 * du).cos() * (0.5 * du).sin();
        let df = e * dcos2 - 2.0 * dsin * (1.0 - (s1 * s1 + s1 * s0 + s0 * s0));
        let f0 = (e - 2.0 * s0) * c0 * c0;
        let f1 = (e - 2.0 * s1) * c1 * c1;
        let den = f0.max(0.0).sqrt() + f1.max(0.0).sqrt();
        if den == 0.0 {
            return 0.0;
        }
        k * df / den
    }

    /// Jet of the scaled profile in terms of the original latitude `u`.
    fn jet(&self, u: f64) -> [f64; 3] {
        let w = self.weight(u);
        let (su, cu) = u.sin_cos();
        // g(u) = w cos u,  α = k g,  d/ds = (1/(k w)) d/du
        let g = w * cu;
        let dw = -cu / w;
        let dg = dw * cu - w * su;
        let a1 = dg / w;
        // derivative of a1 with respect to u
        let ddw = su / w - cu * cu / (w * w * w);
        let ddg = ddw * cu - 2.0 * dw * su - w * cu;
        let da1 = (ddg * w - dg * dw) / (w * w);
        let a2 = da1 / (self.scale * w);
        [self.scale * g, a1, a2]
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Cosine,
    Perturbed {
        spec: PerturbationSpec,
        plus: Bump,
        minus: Bump,
    },
    Pendulum(PendulumMap),
}

/// The function α defining the metric `ds² + α(s)² dθ²`.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    label: String,
    lo: f64,
    hi: f64,
    shape: Shape,
}

impl ProfileCurve {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Domain `[lo, hi]`; α vanishes at both ends.
    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Whether `α(-s) = α(s)` identically.
    pub fn is_even(&self) -> bool {
        match &self.shape {
            Shape::Cosine => true,
            Shape::Perturbed { spec, plus, minus } => {
                spec.epsilon == 0.0
                    || (spec.plus_weight == spec.minus_weight
                        && minus.a == -plus.b
                        && minus.b == -plus.a)
            }
            Shape::Pendulum(_) => false,
        }
    }

    /// `[α, α′, α″, α‴]` at `s`. The pendulum's third derivative is a central difference.
    pub fn jet(&self, s: f64) -> [f64; 4] {
        match &self.shape {
            Shape::Cosine => {
                let (sn, cs) = s.sin_cos();
                [cs, -sn, -cs, sn]
            }
            Shape::Perturbed { spec, plus, minus } => {
                let (sn, cs) = s.sin_cos();
                let mut j = [cs, -sn, -cs, sn];
                let e = spec.epsilon;
                if e != 0.0 {
                    let fp = plus.jet(s);
                    let fm = minus.jet(s);
                    for k in 0..4 {
                        j[k] += e * (spec.plus_weight * fp[k] + spec.minus_weight * fm[k]);
                    }
                }
                j
            }
            Shape::Pendulum(map) => {
                let u = map.latitude(s, self.lo, self.hi);
                let [a, a1, a2] = map.jet(u);
                let h = 1e-4;
                let lo = (s - h).max(self.lo);
                let hi = (s + h).min(self.hi);
                let ja = map.jet(map.latitude(lo, self.lo, self.hi))[2];
                let jb = map.jet(map.latitude(hi, self.lo, self.hi))[2];
                [a, a1, a2, (jb - ja) / (hi - lo)]
            }
        }
    }

    pub fn alpha(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Cosine => s.cos(),
            Shape::Perturbed { spec, plus, minus } => {
                s.cos()
                    + spec.epsilon
                        * (spec.plus_weight * plus.value(s) + spec.minus_weight * minus.value(s))
            }
            Shape::Pendulum(map) => {
                if s <= self.lo || s >= self.hi {
                    return 0.0;
                }
                map.jet(map.latitude(s, self.lo, self.hi))[0]
            }
        }
    }

    pub fn d_alpha(&self, s: f64) -> f64 {
        self.jet(s)[1]
    }

    pub fn dd_alpha(&self, s: f64) -> f64 {
        self.jet(s)[2]
    }

    /// `α(s) - α(t)` evaluated without catastrophic cancellation for `s ≈ t`.
    pub fn alpha_gap(&self, t: f64, s: f64) -> f64 {
        self.alpha_step(t, s - t)
    }

    /// `α(t + d) - α(t)` for a precisely known offset `d`.
    pub fn alpha_step(&self, t: f64, d: f64) -> f64 {
        let taylor = |j: [f64; 4]| d * (j[1] + d * (0.5 * j[2] + d * j[3] / 6.0));
        match &self.shape {
            Shape::Cosine => -2.0 * (t + 0.5 * d).sin() * (0.5 * d).sin(),
            Shape::Perturbed { spec, plus, minus } => {
                let base = -2.0 * (t + 0.5 * d).sin() * (0.5 * d).sin();
                if spec.epsilon == 0.0 {
                    return base;
                }
                let bump = |b: &Bump| {
                    if d.abs() < 1e-7 {
                        taylor(b.jet(t))
                    } else {
                        b.value(t + d) - b.value(t)
                    }
                };
                base + spec.epsilon
                    * (spec.plus_weight * bump(plus) + spec.minus_weight * bump(minus))
            }
            Shape::Pendulum(map) => {
                if d.abs() < 0.5 && t > self.lo && t < self.hi {
                    map.step(map.latitude(t, self.lo, self.hi), d)
                } else {
                    self.alpha(t + d) - self.alpha(t)
                }
            }
        }
    }

    /// Bump support endpoints, where the profile is smooth but not analytic.
    /// Quadrature panels are split there.
    pub fn knots(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Perturbed { spec, plus, minus } if spec.epsilon != 0.0 => {
                let mut k = Vec::new();
                if spec.plus_weight != 0.0 {
                    k.extend([plus.a, plus.b]);
                }
                if spec.minus_weight != 0.0 {
                    k.extend([minus.a, minus.b]);
                }
                k.sort_by(|a, b| a.partial_cmp(b).unwrap());
                k
            }
            _ => Vec::new(),
        }
    }

    /// Maximum of α (attained at `s = 0`).
    pub fn max_alpha(&self) -> f64 {
        self.alpha(0.0)
    }

    /// Pendulum energy and the global length scale applied to its metric.
    pub fn pendulum_scale(&self) -> Option<(f64, f64)> {
        match &self.shape {
            Shape::Pendulum(m) => Some((m.energy, m.scale)),
            _ => None,
        }
    }

    pub fn perturbation(&self) -> Option<&PerturbationSpec> {
        match &self.shape {
            Shape::Perturbed { spec, .. } => Some(spec),
            _ => None,
        }
    }

    /// `∫_{s0}^{s1} α ds` split at the knots.
    pub fn integral(&self, s0: f64, s1: f64) -> f64 {
        let mut pts = vec![s0];
        pts.extend(self.knots().into_iter().filter(|k| *k > s0 && *k < s1));
        pts.push(s1);
        pts.windows(2)
            .map(|w| {
                gauss_kronrod(|s| self.alpha(s), w[0], w[1], 1e-14, 1e-16)
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            })
            .sum()
    }

    /// Area `2π ∫ α`.
    pub fn area(&self) -> f64 {
        2.0 * PI * self.integral(self.lo, self.hi)
    }

    /// Check the profile invariants on an `n`-point grid.
    pub fn validate(&self, n: usize) -> Result<()> {
        let (lo, hi) = self.domain();
        for end in [lo, hi] {
            let a = self.alpha(end);
            if a.abs() > 1e-12 {
                return Err(Error::InvariantViolation(format!(
                    "α({end}) = {a:e} does not vanish"
                )));
            }
        }
        let d_lo = self.d_alpha(lo);
        let d_hi = self.d_alpha(hi);
        if (d_lo - 1.0).abs() > 1e-8 || (d_hi + 1.0).abs() > 1e-8 {
            return Err(Error::InvariantViolation(format!(
                "end slopes α′(lo) = {d_lo}, α′(hi) = {d_hi}; need 1 and -1"
            )));
        }
        if self.dd_alpha(0.0) >= 0.0 {
            return Err(Error::InvariantViolation("α″(0) must be negative".into()));
        }
        for i in 1..n - 1 {
            let s = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let a = self.alpha(s);
            if !(a > 0.0) {
                return Err(Error::InvariantViolation(format!("α({s}) = {a} ≤ 0")));
            }
            if s.abs() > 1e-3 && -s * self.d_alpha(s) <= 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "-s α′(s) ≤ 0 at s = {s} (α′ = {})",
                    self.d_alpha(s)
                )));
            }
        }
        Ok(())
    }
}

/// α(s) = cos s.
pub fn make_round_sphere() -> ProfileCurve {
    ProfileCurve {
        label: "round-sphere".into(),
        lo: -FRAC_PI_2,
        hi: FRAC_PI_2,
        shape: Shape::Cosine,
    }
}

/// α_ε = cos s + ε(w₊f₊ + w₋f₋), validated on a 10⁴-point grid.
pub fn make_perturbed_sphere(spec: PerturbationSpec) -> Result<ProfileCurve> {
    spec.validate()?;
    let plus = spec.plus_bump();
    let minus = spec.minus_bump();
    let p = ProfileCurve {
        label: format!(
            "perturbed-sphere(eps={}, a={}, b={})",
            spec.epsilon, spec.a, spec.b
        ),
        lo: -FRAC_PI_2,
        hi: FRAC_PI_2,
        shape: Shape::Perturbed { spec, plus, minus },
    };
    p.validate(10_000)?;
    Ok(p)
}

/// Profile of the spherical pendulum metric `(E - 2 sin u)(du² + cos²u dθ²)` at energy `E`.
///
/// The new coordinate is the arclength `σ = ∫ √(E - 2 sin u) du`, shifted so
/// the maximum of `α = √(E - 2 sin u) cos u` is at `σ = 0` and scaled by
/// `k = π / L` (L the meridian length). The scale multiplies the metric by
/// `k²`, which leaves rotation numbers unchanged.
pub fn make_pendulum_profile(energy: f64) -> Result<ProfileCurve> {
    if !(energy > 2.0) || !energy.is_finite() {
        return Err(Error::Domain(format!(
            "pendulum energy must exceed 2 (got {energy})"
        )));
    }
    let w = |u: f64| (energy - 2.0 * u.sin()).sqrt();
    let density = ChebSeries::from_fn(-FRAC_PI_2, FRAC_PI_2, 129, w);
    let raw = density.antiderivative();
    let length = raw.eval(FRAC_PI_2);
    let scale = PI / length;
    let u_star = ((energy - (energy * energy + 12.0).sqrt()) / 6.0).asin();
    let shift = raw.eval(u_star);
    let mut sigma = raw.clone();
    sigma.coeffs[0] -= shift;
    for c in sigma.coeffs.iter_mut() {
        *c *= scale;
    }
    let lo = sigma.eval(-FRAC_PI_2);
    let hi = sigma.eval(FRAC_PI_2);
    let p = ProfileCurve {
        label: format!("pendulum(E={energy}, metric-scale={:.12})", scale * scale),
        lo,
        hi,
        shape: Shape::Pendulum(PendulumMap {
            energy,
            scale,
            sigma,
        }),
    };
    p.validate(2_000)?;
    Ok(p)
}

/// Closed model manifolds.
#[derive(Debug, Clone)]
pub enum ModelManifold {
    SurfaceOfRevolution(ProfileCurve),
    RoundSphere(u32),
    FlatTorus(Vec<f64>),
    Product(Box<ModelManifold>, Box<ModelManifold>),
}

impl ModelManifold {
    pub fn dim(&self) -> u32 {
        match self {
            Self::SurfaceOfRevolution(_) => 2,
            Self::RoundSphere(n) => *n,
            Self::FlatTorus(p) => p.len() as u32,
            Self::Product(a, b) => a.dim() + b.dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        manifold_volume(self)
    }

    pub fn label(&self) -> String {
        match self {
            Self::SurfaceOfRevolution(p) => p.label().to_string(),
            Self::RoundSphere(n) => format!("S^{n}"),
            Self::FlatTorus(p) => format!("torus{p:?}"),
            Self::Product(a, b) => format!("{}x{}", a.label(), b.label()),
        }
    }
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// `vol_g(M)`.
pub fn manifold_volume(m: &ModelManifold) -> f64 {
    match m {
        ModelManifold::SurfaceOfRevolution(p) => p.area(),
        // vol(Sⁿ) = (n + 1) vol(B^{n+1})
        ModelManifold::RoundSphere(n) => (*n as f64 + 1.0) * unit_ball_volume(n + 1),
        ModelManifold::FlatTorus(p) => p.iter().product(),
        ModelManifold::Product(a, b) => manifold_volume(a) * manifold_volume(b),
    }
}

/// JSON manifold description `{kind, epsilon, a, b, E, periods, factors, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub kind: ManifoldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<ManifoldConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plus_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus_support: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    /// S² as the surface of revolution α = cos.
    RoundSphere,
    PerturbedSphere,
    Pendulum,
    /// Sⁿ through its closed-form spectrum.
    Sphere,
    FlatTorus,
    Product,
}

impl ManifoldConfig {
    pub fn of_kind(kind: ManifoldKind) -> Self {
        Self {
            kind,
            epsilon: None,
            a: None,
            b: None,
            energy: None,
            n: None,
            periods: None,
            factors: None,
            plus_weight: None,
            minus_weight: None,
            minus_support: None,
        }
    }

    pub fn perturbed(epsilon: f64, a: f64, b: f64) -> Self {
        Self {
            epsilon: Some(epsilon),
            a: Some(a),
            b: Some(b),
            ..Self::of_kind(ManifoldKind::PerturbedSphere)
        }
    }

    pub fn pendulum(energy: f64) -> Self {
        Self {
            energy: Some(energy),
            ..Self::of_kind(ManifoldKind::Pendulum)
        }
    }

    pub fn sphere(n: u32) -> Self {
        Self {
            n: Some(n),
            ..Self::of_kind(ManifoldKind::Sphere)
        }
    }

    pub fn torus(periods: Vec<f64>) -> Self {
        Self {
            periods: Some(periods),
            ..Self::of_kind(ManifoldKind::FlatTorus)
        }
    }

    pub fn product(a: ManifoldConfig, b: ManifoldConfig) -> Self {
        Self {
            factors: Some(vec![a, b]),
            ..Self::of_kind(ManifoldKind::Product)
        }
    }

    fn need<T: Clone>(v: &Option<T>, field: &str) -> Result<T> {
        v.clone()
            .ok_or_else(|| Error::Domain(format!("manifold config: missing field `{field}`")))
    }

    pub fn perturbation_spec(&self) -> Result<PerturbationSpec> {
        Ok(PerturbationSpec {
            epsilon: Self::need(&self.epsilon, "epsilon")?,
            a: Self::need(&self.a, "a")?,
            b: Self::need(&self.b, "b")?,
            plus_weight: self.plus_weight.unwrap_or(1.0),
            minus_weight: self.minus_weight.unwrap_or(1.0),
            minus_support: self.minus_support,
        })
    }

    pub fn build(&self) -> Result<ModelManifold> {
        Ok(match self.kind {
            ManifoldKind::RoundSphere => ModelManifold::SurfaceOfRevolution(make_round_sphere()),
            ManifoldKind::PerturbedSphere => {
                ModelManifold::SurfaceOfRevolution(make_perturbed_sphere(self.perturbation_spec()?)?)
            }
            ManifoldKind::Pendulum => ModelManifold::SurfaceOfRevolution(make_pendulum_profile(
                Self::need(&self.energy, "E")?,
            )?),
            ManifoldKind::Sphere => {
                let n = Self::need(&self.n, "n")?;
                if n == 0 {
                    return Err(Error::Domain("manifold config: sphere dimension n ≥ 1".into()));
                }
                ModelManifold::RoundSphere(n)
            }
            ManifoldKind::FlatTorus => {
                let p = Self::need(&self.periods, "periods")?;
                if p.is_empty() || p.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::Domain(
                        "manifold config: `periods` must be a nonempty list of positive numbers"
                            .into(),
                    ));
                }
                ModelManifold::FlatTorus(p)
            }
            ManifoldKind::Product => {
                let f = Self::need(&self.factors, "factors")?;
                if f.len() < 2 {
                    return Err(Error::Domain(
                        "manifold config: `factors` needs at least two entries".into(),
                    ));
                }
                let mut it = f.iter();
                let mut acc = it.next().unwrap().build()?;
                for g in it {
                    acc = ModelManifold::Product(Box::new(acc), Box::new(g.build()?));
                }
                acc
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sphere_values() {
        let p = make_round_sphere();
        assert_eq!(p.alpha(0.0), 1.0);
        assert!((p.d_alpha(-FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert_eq!(p.dd_alpha(0.0), -1.0);
        assert!(p.validate(10_000).is_ok());
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump::new(0.5, 1.0);
        for &x in &[0.55, 0.7, 0.75, 0.93] {
            let j = b.jet(x);
            let h = 1e-5;
            let fd = |k: usize| (b.jet(x + h)[k] - b.jet(x - h)[k]) / (2.0 * h);
            for k in 0..3 {
                assert!((fd(k) - j[k + 1]).abs() < 1e-5 * (1.0 + j[k + 1].abs()), "x={x} k={k}");
            }
        }
        assert!((b.value(0.75) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn large_perturbation_is_rejected() {
        let e = make_perturbed_sphere(PerturbationSpec::new(10.0, 0.5, 1.0)).unwrap_err();
        assert!(matches!(e, Error::InvariantViolation(_)));
        assert!(make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).is_ok());
    }

    #[test]
    fn alpha_gap_is_accurate_near_diagonal() {
        let p = make_perturbed_sphere(PerturbationSpec::new(0.01, 0.5, 1.0)).unwrap();
        let t = 0.8;
        for &d0 in &[1e-3, 1e-6, 1e-9, 1e-12] {
            let s = t - d0;
            let d = t - s;
            let g = p.alpha_gap(t, s);
            let approx = -p.d_alpha(t) * d + 0.5 * p.dd_alpha(t) * d * d;
            assert!((g / approx - 1.0).abs() < 100.0 * d * d + 1e-9, "d={d} g={g:e} approx={approx:e}");
        }
    }

    #[test]
    fn pendulum_profile_shape() {
        let p = make_pendulum_profile(4.0).unwrap();
        let (lo, hi) = p.domain();
        assert!(((hi - lo) - PI).abs() < 1e-12);
        assert!(p.alpha(lo).abs() < 1e-12 && p.alpha(hi).abs() < 1e-12);
        assert!(hi > FRAC_PI_2 - 0.05);
        // maximum at zero
        assert!(p.d_alpha(0.0).abs() < 1e-10);
        assert!(matches!(make_pendulum_profile(2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn pendulum_derivatives_match_differences() {
        let p = make_pendulum_profile(4.0).unwrap();
        for &s in &[-1.2, -0.3, 0.4, 1.3] {
            let h = 1e-5;
            let fd1 = (p.alpha(s + h) - p.alpha(s - h)) / (2.0 * h);
            let fd2 = (p.d_alpha(s + h) - p.d_alpha(s - h)) / (2.0 * h);
            assert!((fd1 - p.d_alpha(s)).abs() < 1e-8, "s={s}");
            assert!((fd2 - p.dd_alpha(s)).abs() < 1e-7, "s={s}");
        }
    }

    #[test]
    fn volumes() {
        assert!((manifold_volume(&ModelManifold::RoundSphere(2)) - 4.0 * PI).abs() < 1e-12);
        assert!((manifold_volume(&ModelManifold::RoundSphere(1)) - 2.0 * PI).abs() < 1e-12);
        assert!(
            (manifold_volume(&ModelManifold::RoundSphere(3)) - 2.0 * PI * PI).abs() < 1e-12
        );
        let t = ModelManifold::FlatTorus(vec![2.0 * PI, 2.0 * PI]);
        assert!((manifold_volume(&t) - 4.0 * PI * PI).abs() < 1e-12);
        let s = ModelManifold::SurfaceOfRevolution(make_round_sphere());
        assert!((manifold_volume(&s) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip() {
        let c = ManifoldConfig::product(
            ManifoldConfig::sphere(2),
            ManifoldConfig::torus(vec![2.0 * PI]),
        );
        let s = serde_json::to_string(&c).unwrap();
        let back: ManifoldConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
        assert_eq!(back.build().unwrap().dim(), 3);
        let bad = r#"{"kind":"flat_torus"}"#;
        let c: ManifoldConfig = serde_json::from_str(bad).unwrap();
        assert!(c.build().unwrap_err().to_string().contains("periods"));
    }
}

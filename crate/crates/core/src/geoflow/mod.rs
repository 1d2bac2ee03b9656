//! Geodesic dynamics on surfaces of revolution `ds² + α(s)² dθ²`.
//!
//! Orbits are integrable: the Clairaut constant `ξ_θ` fixes the turning
//! latitudes, and one radial oscillation advances the azimuth by `Θ₀`.
//! Periodic invariant tori are those with `Θ₀ ∈ 2πℚ`.

pub mod clairaut;
pub mod classify;
pub mod expansion;
pub mod flow;

pub use clairaut::{
    d_rotation_number, d_rotation_number_split, eps_derivative, rotation_number, theta_half,
    turning_points, ClairautOrbit, DerivativeMethod, Side,
};
pub use classify::{classify_tori, ClassifyOptions, TorusClassification, TorusStatus};
pub use expansion::{expansion_rate, ExpansionEstimate};
pub use flow::{conservation, integrate_geodesic, return_map, GeodesicSystem, Trajectory};

use serde::{Deserialize, Serialize};

use crate::manifolds::ProfileCurve;

/// A covector over `(s, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub s: f64,
    pub theta: f64,
    pub xi_s: f64,
    pub xi_theta: f64,
}

impl PhasePoint {
    pub fn new(s: f64, theta: f64, xi_s: f64, xi_theta: f64) -> Self {
        Self {
            s,
            theta,
            xi_s,
            xi_theta,
        }
    }

    /// Unit covector at `(s, θ)` making angle `psi` with the northward meridian.
    pub fn from_angle(profile: &ProfileCurve, s: f64, theta: f64, psi: f64) -> Self {
        let (sn, cs) = psi.sin_cos();
        Self::new(s, theta, cs, profile.alpha(s) * sn)
    }

    /// Angle of the covector from the northward meridian, in `(-π, π]`.
    pub fn angle(&self, profile: &ProfileCurve) -> f64 {
        let a = profile.alpha(self.s);
        (self.xi_theta / a).atan2(self.xi_s)
    }

    /// Dual norm `sqrt(ξ_s² + ξ_θ²/α²)`.
    pub fn speed(&self, profile: &ProfileCurve) -> f64 {
        let a = profile.alpha(self.s);
        (self.xi_s * self.xi_s + (self.xi_theta / a).powi(2)).sqrt()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s, self.theta, self.xi_s, self.xi_theta]
    }

    pub fn from_array(y: [f64; 4]) -> Self {
        Self::new(y[0], y[1], y[2], y[3])
    }

    /// Image under the reflection `θ ↦ -θ`.
    pub fn mirrored(self) -> Self {
        Self::new(self.s, -self.theta, self.xi_s, -self.xi_theta)
    }
}

/// Clairaut constant `|ξ_θ|`; equals `α(s₊)` on a unit covector.
pub fn clairaut_constant(p: &PhasePoint, _profile: &ProfileCurve) -> f64 {
    p.xi_theta.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::make_round_sphere;

    #[test]
    fn clairaut_constant_examples() {
        let p = make_round_sphere();
        let eq = PhasePoint::new(0.0, 0.0, 0.0, p.alpha(0.0));
        assert_eq!(clairaut_constant(&eq, &p), 1.0);
        let mer = PhasePoint::new(0.3, 1.0, 1.0, 0.0);
        assert_eq!(clairaut_constant(&mer, &p), 0.0);
        let c = std::f64::consts::FRAC_PI_4.cos();
        let q = PhasePoint::new(0.0, 0.0, (1.0 - c * c).sqrt(), c);
        assert!((q.speed(&p) - 1.0).abs() < 1e-15);
        let (_, sp) = turning_points(clairaut_constant(&q, &p), &p).unwrap();
        assert!((sp - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn angle_round_trip() {
        let p = make_round_sphere();
        let q = PhasePoint::from_angle(&p, 0.4, 0.0, 2.0);
        assert!((q.speed(&p) - 1.0).abs() < 1e-15);
        assert!((q.angle(&p) - 2.0).abs() < 1e-14);
    }
}

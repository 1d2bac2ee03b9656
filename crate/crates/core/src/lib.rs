//! Numerical laboratory for logarithmically improved Weyl remainders.
//!
//! The crate models a handful of explicitly computable manifolds (round
//! spheres, flat tori, products, surfaces of revolution, the spherical
//! pendulum), integrates their geodesic flows, estimates the dynamical
//! conditions that drive the remainder improvements, and computes the
//! spectral quantities whose remainders are being measured.

pub mod error;
pub mod numerics;

pub mod covers;
pub mod geoflow;
pub mod manifolds;
pub mod spectra;
pub mod weyl;

pub use error::{Error, Result};

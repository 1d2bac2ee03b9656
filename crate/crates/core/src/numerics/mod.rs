//! Numerical kernels shared by the geometric and spectral modules.

pub mod bessel;
pub mod chebyshev;
pub mod contfrac;
pub mod fit;
pub mod lowdisc;
pub mod ode;
pub mod quad;
pub mod roots;

/// Five-point central difference of `f` at `x` with step `h`.
pub fn central_diff5<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Five-point central second difference of `f` at `x` with step `h`.
pub fn central_diff5_second<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` logarithmically spaced points from `a` to `b` inclusive (both positive).
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

//! Chebyshev-Lobatto grids, coefficient transforms (DCT-I through an FFT),
//! Clenshaw evaluation, antiderivatives, and barycentric interpolation.

use rustfft::{num_complex::Complex, FftPlanner};

/// Lobatto points `x_j = mid + half cos(π j / (n-1))`, ordered from `b` down to `a`.
pub fn lobatto_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(n >= 2);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let nn = (n - 1) as f64;
    (0..n)
        .map(|j| {
            if j == 0 {
                b
            } else if j == n - 1 {
                a
            } else {
                mid + half * (std::f64::consts::PI * j as f64 / nn).cos()
            }
        })
        .collect()
}

/// Chebyshev expansion `f(x) = Σ c_k T_k(t)` with `t` the affine image of `x` in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl ChebSeries {
    /// Coefficients from samples at [`lobatto_points`].
    pub fn from_lobatto_values(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2);
        let big_n = n - 1;
        let len = 2 * big_n;
        let mut buf: Vec<Complex<f64>> = Vec::with_capacity(len);
        for v in values {
            buf.push(Complex::new(*v, 0.0));
        }
        for j in (1..big_n).rev() {
            buf.push(Complex::new(values[j], 0.0));
        }
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_forward(len).process(&mut buf);
        let coeffs = (0..n)
            .map(|k| {
                let scale = if k == 0 || k == big_n { 0.5 } else { 1.0 };
                scale * buf[k].re / big_n as f64
            })
            .collect();
        Self { a, b, coeffs }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> Self {
        let xs = lobatto_points(n, a, b);
        let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        Self::from_lobatto_values(a, b, &vals)
    }

    fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = self.to_unit(x).clamp(-1.0, 1.0);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Antiderivative vanishing at `a`.
    pub fn antiderivative(&self) -> Self {
        let c = &self.coeffs;
        let n = c.len();
        let get = |k: usize| if k < n { c[k] } else { 0.0 };
        let scale = 0.5 * (self.b - self.a);
        let mut out = vec![0.0; n + 1];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let v = if k == 1 {
                get(0) - 0.5 * get(2)
            } else {
                (get(k - 1) - get(k + 1)) / (2.0 * k as f64)
            };
            *slot = scale * v;
        }
        // T_k(-1) = (-1)^k
        let at_lo: f64 = out
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
            .sum();
        out[0] = -at_lo;
        Self {
            a: self.a,
            b: self.b,
            coeffs: out,
        }
    }

    /// Clenshaw-Curtis integral over `[a, b]`.
    pub fn integral(&self) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(k, _)| k % 2 == 0)
            .map(|(k, c)| 2.0 * c / (1.0 - (k * k) as f64))
            .sum();
        0.5 * (self.b - self.a) * s
    }

    /// Magnitude of the trailing coefficients, a cheap resolution diagnostic.
    pub fn tail_magnitude(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(8)..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// Barycentric interpolation on Lobatto points (values ordered as in [`lobatto_points`]).
pub fn barycentric(xs: &[f64], values: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let d = x - xs[j];
        if d == 0.0 {
            return values[j];
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n - 1 {
            w *= 0.5;
        }
        let q = w / d;
        num += q * values[j];
        den += q;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_of_known_polynomial() {
        // 3 T_0 + 2 T_2 - T_5 on [-1, 1]
        let f = |x: f64| 3.0 + 2.0 * (2.0 * x * x - 1.0) - (16.0 * x.powi(5) - 20.0 * x.powi(3) + 5.0 * x);
        let s = ChebSeries::from_fn(-1.0, 1.0, 9, f);
        let expect = [3.0, 0.0, 2.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0];
        for (c, e) in s.coeffs.iter().zip(expect) {
            assert!((c - e).abs() < 1e-13, "{:?}", s.coeffs);
        }
    }

    #[test]
    fn eval_integral_antiderivative_on_interval() {
        let s = ChebSeries::from_fn(0.0, 2.0, 40, |x| (3.0 * x).cos());
        assert!((s.eval(1.3) - (3.9f64).cos()).abs() < 1e-13);
        assert!((s.integral() - (6.0f64).sin() / 3.0).abs() < 1e-13);
        let anti = s.antiderivative();
        assert!(anti.eval(0.0).abs() < 1e-14);
        assert!((anti.eval(1.1) - (3.3f64).sin() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn barycentric_matches_function() {
        let xs = lobatto_points(33, -1.0, 3.0);
        let vals: Vec<f64> = xs.iter().map(|x| (x * 0.7).exp()).collect();
        assert!((barycentric(&xs, &vals, 0.123) - (0.123f64 * 0.7).exp()).abs() < 1e-13);
    }
}

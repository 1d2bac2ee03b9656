//! Bessel functions of the first kind for integer and half-integer order.

fn gamma_shifted(nu: f64) -> f64 {
    // Γ(ν + 1) for ν a nonnegative integer or half-integer
    let mut g = if (nu - nu.floor()).abs() < 1e-12 {
        1.0
    } else {
        std::f64::consts::PI.sqrt() * 0.5 // Γ(3/2)
    };
    let mut k = if (nu - nu.floor()).abs() < 1e-12 { 1.0 } else { 1.5 };
    while k < nu + 1.0 - 1e-12 {
        k += 1.0;
        g *= k - 1.0;
    }
    g
}

/// Power series for `J_ν(x) / x^ν`; accurate for small `x`.
fn scaled_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0 / (gamma_shifted(nu) * 2f64.powf(nu));
    let mut sum = term;
    for m in 1..200 {
        term *= q / (m as f64 * (m as f64 + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_n(x)` for integer `n ≥ 0` by Miller's backward recurrence.
pub fn jn(n: u32, x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-3 {
        let v = scaled_series(n as f64, ax) * ax.powi(n as i32);
        return if x < 0.0 && n % 2 == 1 { -v } else { v };
    }
    let top = (n as f64).max(ax);
    let mut m = (top + 30.0 + (60.0 * top).sqrt()) as usize;
    m += m % 2;
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let mut result = 0.0;
    for k in (1..=m).rev() {
        let jm = 2.0 * k as f64 / ax * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if k - 1 == n as usize {
            result = j;
        }
    }
    norm += j;
    let v = result / norm;
    if x < 0.0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `J_{k+1/2}(x)` for `x > 0`.
pub fn j_half(k: u32, x: f64) -> f64 {
    let nu = k as f64 + 0.5;
    if x < nu + 1.0 {
        return scaled_series(nu, x) * x.powf(nu);
    }
    let pre = (2.0 / (std::f64::consts::PI * x)).sqrt();
    let j0 = pre * x.sin();
    if k == 0 {
        return j0;
    }
    let mut jm = j0;
    let mut j = pre * (x.sin() / x - x.cos());
    for i in 1..k {
        let order = i as f64 + 0.5;
        let next = 2.0 * order / x * j - jm;
        jm = j;
        j = next;
    }
    j
}

/// `J_ν(x)` for ν an integer or half-integer, `x ≥ 0`.
pub fn j_nu(nu: f64, x: f64) -> f64 {
    let twice = (2.0 * nu).round() as i64;
    assert!(twice >= 0 && ((2.0 * nu) - twice as f64).abs() < 1e-12);
    if twice % 2 == 0 {
        jn((twice / 2) as u32, x)
    } else {
        j_half(((twice - 1) / 2) as u32, x)
    }
}

/// `J_ν(x) / x^ν`, finite at `x = 0`.
pub fn j_nu_scaled(nu: f64, x: f64) -> f64 {
    if x < 2.0 {
        scaled_series(nu, x)
    } else {
        j_nu(nu, x) / x.powf(nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun tables
        assert!((jn(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((jn(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((jn(0, 10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((jn(1, 10.0) - 0.043_472_746_168_861_44).abs() < 1e-14);
        assert!((jn(5, 2.5) - 0.019_501_625_134_503_22).abs() < 1e-14);
    }

    #[test]
    fn large_argument_asymptotics() {
        let x = 1234.5f64;
        let asym = (2.0 / (std::f64::consts::PI * x)).sqrt()
            * (x - 0.75 * std::f64::consts::PI).cos();
        assert!((jn(1, x) - asym).abs() < 1e-5);
    }

    #[test]
    fn half_integer_closed_forms() {
        for &x in &[0.3, 1.0, 7.5, 40.0] {
            let pre = (2.0 / (std::f64::consts::PI * x)).sqrt();
            assert!((j_half(0, x) - pre * x.sin()).abs() < 1e-13);
            let j32 = pre * (x.sin() / x - x.cos());
            assert!((j_half(1, x) - j32).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn scaled_limit_at_zero() {
        assert!((j_nu_scaled(1.0, 0.0) - 0.5).abs() < 1e-15);
        assert!((j_nu_scaled(1.0, 3.0) - jn(1, 3.0) / 3.0).abs() < 1e-15);
        assert!((j_nu_scaled(1.0, 1.999) - jn(1, 1.999) / 1.999).abs() < 1e-14);
    }
}

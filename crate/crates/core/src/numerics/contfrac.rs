//! Continued-fraction convergents and rational detection.

/// Convergents `p/q` of `x` with `q ≤ q_max`, in order.
pub fn convergents(x: f64, q_max: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0u64, x.floor() as i64, 1u64);
    out.push((p1, q1));
    let mut r = x - x.floor();
    for _ in 0..64 {
        if r.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / r;
        let a = inv.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        r = inv - a as f64;
        let p2 = a as i64 * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 > q_max {
            break;
        }
        out.push((p2, q2));
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    out
}

/// First convergent (smallest denominator) within `tol` of `x`.
pub fn detect_rational(x: f64, q_max: u64, tol: f64) -> Option<(i64, u64)> {
    convergents(x, q_max)
        .into_iter()
        .find(|&(p, q)| (x - p as f64 / q as f64).abs() < tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_is_not_rational() {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        assert_eq!(detect_rational(phi, 50, 1e-9), None);
        let cs = convergents(phi, 50);
        let qs: Vec<u64> = cs.iter().map(|c| c.1).collect();
        assert_eq!(qs, vec![1, 1, 2, 3, 5, 8, 13, 21, 34]);
    }

    #[test]
    fn exact_rationals() {
        assert_eq!(detect_rational(1.0, 50, 1e-9), Some((1, 1)));
        assert_eq!(detect_rational(22.0 / 7.0, 50, 1e-9), Some((22, 7)));
        assert_eq!(detect_rational(3.0 / 47.0 + 1e-11, 50, 1e-9), Some((3, 47)));
        assert_eq!(detect_rational(std::f64::consts::PI, 50, 1e-9), None);
    }
}

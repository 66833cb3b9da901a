//! Special-function kernels: Laguerre, Hermite and Bessel J0, plus the
//! log-space combinatorics used by the Gauss-Laguerre series.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_4, PI};

/// Largest polynomial degree accepted by the recurrences.
pub const DEGREE_GATE: usize = 64;

fn gate(n: usize) -> Result<()> {
    if n > DEGREE_GATE {
        Err(Error::AboveGate {
            index: n,
            gate: DEGREE_GATE,
        })
    } else {
        Ok(())
    }
}

/// Laguerre polynomial L_n(x) by the three-term recurrence
/// (k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}.
pub fn laguerre(n: usize, x: f64) -> Result<f64> {
    gate(n)?;
    Ok(laguerre_unchecked(n, x))
}

pub(crate) fn laguerre_unchecked(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut l0, mut l1) = (1.0, 1.0 - x);
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 - x) * l1 - kf * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Physicists' Hermite polynomial H_n(x).
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    gate(n)?;
    if n == 0 {
        return Ok(1.0);
    }
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    Ok(h1)
}

/// Normalized Hermite functions h_k(x) = H_k(x) e^{-x^2/2} / sqrt(2^k k!)
/// for k = 0..=n. The recurrence never forms H_k or k! explicitly, so it is
/// free of overflow for every degree under the gate.
pub fn hermite_functions(n: usize, x: f64) -> Result<Vec<f64>> {
    gate(n)?;
    let mut h = Vec::with_capacity(n + 1);
    h.push((-0.5 * x * x).exp());
    if n >= 1 {
        h.push(std::f64::consts::SQRT_2 * x * h[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    Ok(h)
}

/// Bessel function of the first kind, order zero.
///
/// Power series for |x| < 8, Hankel asymptotic expansion (truncated at its
/// smallest term) beyond. Absolute accuracy is about 1e-8 right at the
/// split and improves quickly on both sides.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let q = -0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * kf);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        // b_k = prod_{j<=k} (2j-1)^2 / (k! 8^k x^k), alternating into P and Q.
        let mut p = 1.0;
        let mut q = 0.0;
        let mut b = 1.0;
        let mut prev = f64::INFINITY;
        for k in 1..60 {
            let kf = k as f64;
            b *= (2.0 * kf - 1.0).powi(2) / (kf * 8.0 * ax);
            if b >= prev {
                break;
            }
            prev = b;
            // k even -> P, k odd -> Q with sign pattern (+,-,-,+,+,-,-,...)
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * b;
            } else {
                q -= sign * b;
            }
        }
        let chi = ax - FRAC_PI_4;
        (2.0 / (PI * ax)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// ln(n!) by direct summation; exact enough for the small n used here.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// ln C(n, k).
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Coefficients 2^{-2m} C(2(m-s), m-s) C(2s, s) for s = 0..=m, built in log
/// space. They sum to one.
pub fn central_binomial_weights(m: usize) -> Vec<f64> {
    let ln4 = 4f64.ln();
    (0..=m)
        .map(|s| {
            (ln_binomial(2 * (m - s), m - s) + ln_binomial(2 * s, s) - m as f64 * ln4).exp()
        })
        .collect()
}

/// Sum of values ordered by decreasing magnitude.
pub(crate) fn sum_largest_first(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    // Accumulate from the smallest so the large terms are added last.
    terms.iter().rev().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// J0(x) = (1/pi) int_0^pi cos(x sin t) dt; the trapezoid rule on a
    /// periodic integrand converges geometrically.
    fn j0_integral(x: f64) -> f64 {
        let n = 400;
        let h = PI / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            s += (x * (i as f64 * h).sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn polynomial_spot_values() {
        assert_eq!(laguerre(1, 2.0).unwrap(), -1.0);
        assert_eq!(hermite(2, 0.0).unwrap(), -2.0);
        assert_eq!(bessel_j0(0.0), 1.0);
        assert!((laguerre(2, 1.0).unwrap() - (-0.5)).abs() < 1e-15);
        assert!((hermite(3, 0.5).unwrap() - (8.0 * 0.125 - 12.0 * 0.5)).abs() < 1e-14);
    }

    #[test]
    fn gate_rejects_high_degree() {
        assert!(matches!(laguerre(65, 1.0), Err(Error::AboveGate { .. })));
        assert!(hermite(65, 1.0).is_err());
        assert!(laguerre(64, 1.0).is_ok());
    }

    #[test]
    fn hermite_functions_match_polynomials() {
        for &x in &[-2.3, 0.0, 0.7, 3.1] {
            let h = hermite_functions(12, x).unwrap();
            for (k, hk) in h.iter().enumerate() {
                let direct = hermite(k, x).unwrap() * (-0.5 * x * x).exp()
                    / (2f64.powi(k as i32) * ln_factorial(k).exp()).sqrt();
                assert!((hk - direct).abs() < 1e-12 * direct.abs().max(1.0), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn bessel_matches_integral_representation() {
        let mut x = 0.0;
        while x < 40.0 {
            let tol = if (6.0..12.0).contains(&x) { 2e-8 } else { 1e-10 };
            let err = (bessel_j0(x) - j0_integral(x)).abs();
            assert!(err < tol, "x={x} err={err:e}");
            x += 0.173;
        }
        assert!((bessel_j0(-3.0) - bessel_j0(3.0)).abs() < 1e-16);
    }

    #[test]
    fn central_binomial_weights_sum_to_one() {
        for m in 0..=32 {
            let s: f64 = central_binomial_weights(m).iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "m={m}");
        }
    }
}

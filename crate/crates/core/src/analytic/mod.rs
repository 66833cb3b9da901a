//! Closed-form tomograms and characteristic functions.
//!
//! Every tomogram here is a single-mode function of a line (X, mu, nu); a
//! factorized multimode tomogram is the product over modes. The kernels
//! taking an explicit mean/variance/sigma are public so that audits can
//! evaluate them with perturbed constants.

pub mod special;

pub use special::{bessel_j0, hermite, laguerre};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::composite_gl;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use special::{central_binomial_weights, hermite_functions, laguerre_unchecked, sum_largest_first};
use std::f64::consts::{PI, SQRT_2};

/// Largest Laguerre index accepted by the Gauss-Laguerre formulas. This is a
/// numerical stability boundary, not a mathematical one.
pub const GL_INDEX_GATE: usize = 32;

/// Factor between the displacement z and the phase-space mean of the
/// normalized coherent density: <xi> = sqrt(2) Re z, <eta> = sqrt(2) Im z.
/// Checked against the quadrature mean of the density in the tests.
pub const COHERENT_MEAN_SCALE: f64 = SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GLDescriptor {
    pub omega: f64,
    pub m: usize,
}

impl GLDescriptor {
    pub fn new(omega: f64, m: usize) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        if m > GL_INDEX_GATE {
            return Err(Error::AboveGate { index: m, gate: GL_INDEX_GATE });
        }
        Ok(Self { omega, m })
    }

    /// sigma = sqrt(2 (mu^2 + nu^2) / omega)
    pub fn sigma(&self, mu: f64, nu: f64) -> f64 {
        (2.0 * (mu * mu + nu * nu) / self.omega).sqrt()
    }
}

pub(crate) fn line_radius_sq(mu: f64, nu: f64) -> Result<f64> {
    ensure_finite(mu, "mu")?;
    ensure_finite(nu, "nu")?;
    let r2 = mu * mu + nu * nu;
    if r2 == 0.0 {
        Err(Error::DegenerateLine { mode: 0 })
    } else {
        Ok(r2)
    }
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Normal density in X.
pub fn gaussian_tomogram(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

/// Variance of X = mu xi + nu eta under the Gibbs state.
pub fn gibbs_variance(mu: f64, nu: f64, beta: f64, omega: f64) -> f64 {
    (mu * mu + nu * nu) / (beta * omega)
}

pub fn gibbs_tomogram(x: f64, mu: f64, nu: f64, beta: f64, omega: f64) -> Result<f64> {
    positive(beta, "beta")?;
    positive(omega, "omega")?;
    ensure_finite(x, "X")?;
    let r2 = line_radius_sq(mu, nu)?;
    Ok(gaussian_tomogram(x, 0.0, r2 / (beta * omega)))
}

/// Mean of X on the line (mu, nu) for the coherent state displaced by z.
pub fn coherent_mean(mu: f64, nu: f64, z: Complex64) -> f64 {
    COHERENT_MEAN_SCALE * (mu * z.re + nu * z.im)
}

pub fn coherent_variance(mu: f64, nu: f64, omega: f64) -> f64 {
    (mu * mu + nu * nu) / omega
}

pub fn coherent_tomogram(x: f64, mu: f64, nu: f64, z: Complex64, omega: f64) -> Result<f64> {
    positive(omega, "omega")?;
    ensure_finite(x, "X")?;
    let r2 = line_radius_sq(mu, nu)?;
    Ok(gaussian_tomogram(x, coherent_mean(mu, nu, z), r2 / omega))
}

/// Gauss-Laguerre tomogram.
pub fn gl_tomogram(x: f64, mu: f64, nu: f64, d: &GLDescriptor) -> Result<f64> {
    ensure_finite(x, "X")?;
    line_radius_sq(mu, nu)?;
    gl_tomogram_with_sigma(x, d.sigma(mu, nu), d.m)
}

/// The Gauss-Laguerre series at a given sigma:
/// (1 / (sqrt(pi) sigma)) sum_s c_s h_{2s}(X / sigma)^2, where h_k are the
/// normalized Hermite functions, so each term already carries
/// e^{-X^2/sigma^2} H_{2s}^2 / (2^{2s} (2s)!).
pub fn gl_tomogram_with_sigma(x: f64, sigma: f64, m: usize) -> Result<f64> {
    if m > GL_INDEX_GATE {
        return Err(Error::AboveGate { index: m, gate: GL_INDEX_GATE });
    }
    positive(sigma, "sigma")?;
    let t = x / sigma;
    let h = hermite_functions(2 * m, t)?;
    let weights = central_binomial_weights(m);
    let terms: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(s, c)| c * h[2 * s] * h[2 * s])
        .collect();
    Ok(sum_largest_first(terms) / (PI.sqrt() * sigma))
}

/// Characteristic function of the Gauss-Laguerre tomogram as a function of
/// the scaled variable y = K sqrt(mu^2 + nu^2) / sqrt(omega):
/// e^{-y^2/2} [L_m(y^2/2)]^2.
pub fn gl_charfun_y(y: f64, m: usize) -> Result<f64> {
    if m > GL_INDEX_GATE {
        return Err(Error::AboveGate { index: m, gate: GL_INDEX_GATE });
    }
    let u = 0.5 * y * y;
    let l = laguerre_unchecked(m, u);
    Ok((-u).exp() * l * l)
}

/// The same characteristic function through the Laguerre addition formula:
/// e^{-y^2/2} sum_s c_s L_{2s}(y^2). Returns (value, scale) where scale is
/// the sum of term magnitudes, the natural yardstick for rounding error.
pub fn gl_charfun_addition_y(y: f64, m: usize) -> Result<(f64, f64)> {
    if m > GL_INDEX_GATE {
        return Err(Error::AboveGate { index: m, gate: GL_INDEX_GATE });
    }
    let y2 = y * y;
    let damp = (-0.5 * y2).exp();
    let terms: Vec<f64> = central_binomial_weights(m)
        .iter()
        .enumerate()
        .map(|(s, c)| c * laguerre_unchecked(2 * s, y2))
        .collect();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>() * damp;
    Ok((sum_largest_first(terms) * damp, scale))
}

fn scaled_y(k: f64, mu: f64, nu: f64, d: &GLDescriptor) -> Result<f64> {
    ensure_finite(k, "K")?;
    Ok(k * (mu * mu + nu * nu).sqrt() / d.omega.sqrt())
}

pub fn gl_charfun(k: f64, mu: f64, nu: f64, d: &GLDescriptor) -> Result<f64> {
    gl_charfun_y(scaled_y(k, mu, nu, d)?, d.m)
}

pub fn gl_charfun_addition(k: f64, mu: f64, nu: f64, d: &GLDescriptor) -> Result<f64> {
    Ok(gl_charfun_addition_y(scaled_y(k, mu, nu, d)?, d.m)?.0)
}

fn normal_cdf(x: f64, mean: f64, variance: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-(x - mean) / (2.0 * variance).sqrt())
}

/// Closed-form single-mode tomogram descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Gibbs { beta: f64, omega: f64 },
    Coherent { omega: f64, z: Complex64 },
    GaussLaguerre(GLDescriptor),
}

impl ClosedForm {
    pub fn eval(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        match *self {
            ClosedForm::Gibbs { beta, omega } => gibbs_tomogram(x, mu, nu, beta, omega),
            ClosedForm::Coherent { omega, z } => coherent_tomogram(x, mu, nu, z, omega),
            ClosedForm::GaussLaguerre(d) => gl_tomogram(x, mu, nu, &d),
        }
    }

    /// CDF in X at each of the ascending points `xs`.
    pub fn cdf_sorted(&self, mu: f64, nu: f64, xs: &[f64]) -> Result<Vec<f64>> {
        let r2 = line_radius_sq(mu, nu)?;
        match *self {
            ClosedForm::Gibbs { beta, omega } => {
                Ok(xs.iter().map(|&x| normal_cdf(x, 0.0, r2 / (beta * omega))).collect())
            }
            ClosedForm::Coherent { omega, z } => {
                let mean = coherent_mean(mu, nu, z);
                Ok(xs.iter().map(|&x| normal_cdf(x, mean, r2 / omega)).collect())
            }
            ClosedForm::GaussLaguerre(d) => {
                let sigma = d.sigma(mu, nu);
                // h_{2m}^2 is negligible beyond its turning point plus 7.
                let lower = -sigma * ((4 * d.m + 1) as f64).sqrt() - 7.0 * sigma;
                let pdf = |x: f64| gl_tomogram_with_sigma(x, sigma, d.m).unwrap_or(0.0);
                let mut out = Vec::with_capacity(xs.len());
                let mut acc = 0.0;
                let mut last = lower;
                for &x in xs {
                    if x > last {
                        let panels = (((x - last) / (0.25 * sigma)).ceil() as usize).max(1);
                        acc += composite_gl(pdf, last, x, panels);
                        last = x;
                    }
                    out.push(acc.min(1.0));
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

    #[test]
    fn gibbs_spot_values() {
        assert!((gibbs_tomogram(0.0, 1.0, 0.0, 1.0, 1.0).unwrap() - INV_SQRT_2PI).abs() < 1e-15);
        let v = gibbs_tomogram(1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert!((v - INV_SQRT_2PI * (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.2419707).abs() < 1e-7);
        let half = gibbs_tomogram(2.0, 2.0, 0.0, 1.0, 1.0).unwrap();
        assert!((half - 0.5 * v).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_invalid_parameters() {
        assert!(matches!(gibbs_tomogram(0.0, 0.0, 0.0, 1.0, 1.0), Err(Error::DegenerateLine { .. })));
        assert!(gibbs_tomogram(0.0, 1.0, 0.0, -1.0, 1.0).is_err());
        assert!(coherent_tomogram(0.0, 0.0, 0.0, Complex64::new(1.0, 0.0), 1.0).is_err());
        let d = GLDescriptor::new(1.0, 2).unwrap();
        assert!(gl_tomogram(0.0, 0.0, 0.0, &d).is_err());
        assert!(GLDescriptor::new(1.0, 33).is_err());
        assert!(GLDescriptor::new(0.0, 1).is_err());
    }

    #[test]
    fn coherent_reduces_to_gibbs_at_zero_displacement() {
        let z = Complex64::new(0.0, 0.0);
        for i in 0..50 {
            let th = i as f64 * 0.37;
            let (mu, nu, x) = (1.3 * th.cos(), 0.8 * th.sin() + 0.1, (i as f64 - 25.0) * 0.11);
            let a = coherent_tomogram(x, mu, nu, z, 1.7).unwrap();
            let b = gibbs_tomogram(x, mu, nu, 1.0, 1.7).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gl_m0_is_gibbs_at_unit_beta() {
        let d = GLDescriptor::new(2.3, 0).unwrap();
        for i in 0..40 {
            let x = -5.0 + 0.25 * i as f64;
            let a = gl_tomogram(x, 0.7, -0.4, &d).unwrap();
            let b = gibbs_tomogram(x, 0.7, -0.4, 1.0, 2.3).unwrap();
            assert!((a - b).abs() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn gl_m1_at_origin() {
        let d = GLDescriptor::new(1.0, 1).unwrap();
        let v = gl_tomogram(0.0, 1.0, 0.0, &d).unwrap();
        assert!((v - 0.75 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((v - 0.2992067).abs() < 1e-7);
    }

    #[test]
    fn gl_parity_and_homogeneity() {
        let d = GLDescriptor::new(1.4, 4).unwrap();
        for i in 0..30 {
            let x = 0.3 * i as f64;
            let a = gl_tomogram(x, 0.6, 0.9, &d).unwrap();
            assert_eq!(a, gl_tomogram(-x, 0.6, 0.9, &d).unwrap());
            let b = gl_tomogram(2.0 * x, 1.2, 1.8, &d).unwrap() * 2.0;
            assert!((a - b).abs() <= 1e-14 * a.max(1e-300));
        }
    }

    #[test]
    fn gl_normalization_m3() {
        let d = GLDescriptor::new(1.0, 3).unwrap();
        let total = composite_gl(|x| gl_tomogram(x, 1.0, 0.0, &d).unwrap(), -20.0, 20.0, 80);
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gl_large_index_stays_finite() {
        let d = GLDescriptor::new(1.0, 32).unwrap();
        for &x in &[0.0, 3.0, 15.0, 60.0] {
            let v = gl_tomogram(x, 1.0, 0.0, &d).unwrap();
            assert!(v.is_finite() && v >= 0.0);
        }
        let total = composite_gl(|x| gl_tomogram(x, 1.0, 0.0, &d).unwrap(), -30.0, 30.0, 300);
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn charfun_spot_values() {
        let d = GLDescriptor::new(1.0, 3).unwrap();
        assert_eq!(gl_charfun(0.0, 1.0, 0.0, &d).unwrap(), 1.0);
        // m = 1, y^2/2 = 1: L_1(1) = 0
        assert!(gl_charfun_y(2f64.sqrt(), 1).unwrap().abs() < 1e-16);
    }

    #[test]
    fn charfun_forms_agree() {
        for m in 0..=10 {
            let mut y = 0.0;
            while y <= 20.0 {
                let a = gl_charfun_y(y, m).unwrap();
                let (b, scale) = gl_charfun_addition_y(y, m).unwrap();
                assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(scale), "m={m} y={y}");
                y += 0.0917;
            }
        }
    }

    #[test]
    fn cdf_matches_quadrature() {
        let forms = [
            ClosedForm::Gibbs { beta: 2.0, omega: 0.5 },
            ClosedForm::Coherent { omega: 1.0, z: Complex64::new(0.5, -1.0) },
            ClosedForm::GaussLaguerre(GLDescriptor::new(1.0, 2).unwrap()),
        ];
        let xs = [-2.0, -0.3, 0.0, 1.1, 2.5];
        for f in forms {
            let cdf = f.cdf_sorted(0.8, 0.6, &xs).unwrap();
            for (x, c) in xs.iter().zip(&cdf) {
                let q = composite_gl(|t| f.eval(t, 0.8, 0.6).unwrap(), -30.0, *x, 200);
                assert!((q - c).abs() < 1e-10, "{f:?} x={x}");
            }
        }
    }
}

//! The inverse of d/dX on periodic grids.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Largest zero-frequency coefficient magnitude accepted by the inverse
/// derivative.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-10;

/// Samples of a real periodic function on x0 + j L / N, j = 0..N.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction1D {
    x0: f64,
    period: f64,
    values: Vec<f64>,
}

impl SpectralFunction1D {
    pub fn new(x0: f64, period: f64, values: Vec<f64>) -> Result<Self> {
        if !values.len().is_power_of_two() || values.len() < 2 {
            return Err(Error::NotPowerOfTwo(values.len()));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectral samples"));
        }
        Ok(Self { x0, period, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(x0: f64, period: f64, n: usize, f: F) -> Result<Self> {
        let h = period / n as f64;
        Self::new(x0, period, (0..n).map(|j| f(x0 + h * j as f64)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + self.period * j as f64 / self.values.len() as f64
    }

    /// Fourier coefficients c_j with f(x_l) = sum_j c_j e^{2 pi i j l / N}.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let n = self.values.len();
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        for c in &mut buf {
            *c /= n as f64;
        }
        buf
    }

    /// Signed wavenumber of coefficient j.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.values.len();
        let s = if j > n / 2 { j as f64 - n as f64 } else { j as f64 };
        2.0 * PI * s / self.period
    }

    fn from_coefficients(&self, mut c: Vec<Complex64>) -> Self {
        let n = c.len();
        FftPlanner::new().plan_fft_inverse(n).process(&mut c);
        Self { x0: self.x0, period: self.period, values: c.iter().map(|v| v.re).collect() }
    }

    /// Spectral derivative.
    pub fn derivative(&self) -> Self {
        let n = self.values.len();
        let c: Vec<Complex64> = self
            .coefficients()
            .into_iter()
            .enumerate()
            .map(|(j, c)| if j == n / 2 { Complex64::new(0.0, 0.0) } else { c * Complex64::new(0.0, self.wavenumber(j)) })
            .collect();
        self.from_coefficients(c)
    }
}

/// [d/dX]^{-1}: each coefficient divided by iK. The zero mode has no
/// preimage, so inputs with a non-zero mean are rejected.
pub fn inverse_partial_x(f: &SpectralFunction1D) -> Result<SpectralFunction1D> {
    let c = f.coefficients();
    let n = c.len();
    if c[0].norm() >= ZERO_MEAN_TOLERANCE {
        return Err(Error::NonZeroMean(c[0].norm()));
    }
    let out: Vec<Complex64> = c
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            if j == 0 || j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                c / Complex64::new(0.0, f.wavenumber(j))
            }
        })
        .collect();
    Ok(f.from_coefficients(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_integrates_to_minus_cosine() {
        let f = SpectralFunction1D::from_fn(0.0, 2.0 * PI, 64, f64::sin).unwrap();
        let g = inverse_partial_x(&f).unwrap();
        for (j, v) in g.values().iter().enumerate() {
            assert!((v + g.x(j).cos()).abs() < 1e-10);
        }
        let back = g.derivative();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn single_component_is_divided_by_ik() {
        let (l, k) = (5.0, 3.0);
        let kk = 2.0 * PI * k / l;
        let f = SpectralFunction1D::from_fn(-1.0, l, 32, |x| (kk * x).cos()).unwrap();
        let g = inverse_partial_x(&f).unwrap();
        // Re[e^{iKX} / (iK)] = sin(KX) / K
        for (j, v) in g.values().iter().enumerate() {
            assert!((v - (kk * g.x(j)).sin() / kk).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_input_hits_the_pole() {
        let f = SpectralFunction1D::from_fn(0.0, 1.0, 16, |_| 1.0).unwrap();
        assert!(matches!(inverse_partial_x(&f), Err(Error::NonZeroMean(_))));
        assert!(matches!(SpectralFunction1D::new(0.0, 1.0, vec![0.0; 12]), Err(Error::NotPowerOfTwo(12))));
    }
}

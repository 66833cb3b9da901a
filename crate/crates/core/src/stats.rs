//! Goodness of fit of sampled line projections against closed forms.

use crate::analytic::ClosedForm;
use crate::error::{Error, Result};
use crate::states::PhasePoint;

/// Kolmogorov-Smirnov distance between sorted samples and their model CDF
/// values.
pub fn ks_distance(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    cdf_at_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| (f - i as f64 / n).max((i + 1) as f64 / n - f))
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// X = mu xi + nu eta for each single-mode sample, sorted ascending.
pub fn line_projection(points: &[PhasePoint], mu: f64, nu: f64) -> Result<Vec<f64>> {
    let mut xs = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: p.len() });
        }
        xs.push(mu * p.xi[0] + nu * p.eta[0]);
    }
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// KS distance between the projected samples and the closed-form tomogram.
pub fn ks_against(form: &ClosedForm, points: &[PhasePoint], mu: f64, nu: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let xs = line_projection(points, mu, nu)?;
    Ok(ks_distance(&form.cdf_sorted(mu, nu, &xs)?))
}

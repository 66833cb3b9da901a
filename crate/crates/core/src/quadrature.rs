//! Quadrature rules shared by the transforms.
//!
//! Two families are used: composite Gauss-Legendre for line integrals and
//! tensor trapezoid for integrals of rapidly decaying smooth functions over
//! boxes (spectrally accurate in that setting).

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Resolution level for every quadrature in the crate. `Fine` doubles the
/// resolution of `Default`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadLevel {
    #[default]
    Default,
    Fine,
}

impl QuadLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            QuadLevel::Default => "default",
            QuadLevel::Fine => "fine",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "default" => Some(QuadLevel::Default),
            "fine" => Some(QuadLevel::Fine),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub level: QuadLevel,
    /// Points per axis of the tensor trapezoid rule (odd).
    pub trapezoid_points: usize,
    /// Panels of the composite Gauss-Legendre rule used along lines.
    pub line_panels: usize,
    /// Relative tolerance of the refinement comparison.
    pub tolerance: f64,
}

impl QuadConfig {
    pub fn new(level: QuadLevel) -> Self {
        match level {
            QuadLevel::Default => Self {
                level,
                trapezoid_points: 513,
                line_panels: 48,
                tolerance: 1e-8,
            },
            QuadLevel::Fine => Self {
                level,
                trapezoid_points: 1025,
                line_panels: 96,
                tolerance: 1e-8,
            },
        }
    }

    pub fn fine() -> Self {
        Self::new(QuadLevel::Fine)
    }

    /// The next refinement: twice the intervals per axis.
    pub fn refined(&self) -> Self {
        Self {
            trapezoid_points: 2 * (self.trapezoid_points - 1) + 1,
            line_panels: 2 * self.line_panels,
            ..*self
        }
    }
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self::new(QuadLevel::Default)
    }
}

/// Nodes per Gauss-Legendre panel.
pub const GL_ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Composite Gauss-Legendre integral of `f` over [a, b] with `panels` panels
/// of 16 nodes each.
pub fn composite_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gl16();
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            acc += wi * f(mid + half * xi);
        }
        total += acc * half;
    }
    total
}

/// Uniform grid of `n` points spanning [a, b] inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + h * i as f64).collect()
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Tensor trapezoid rule over the box [x0, x1] x [y0, y1].
pub fn trapezoid_2d<F>(f: F, x: (f64, f64), y: (f64, f64), points: usize) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    use rayon::prelude::*;
    let xs = linspace(x.0, x.1, points);
    let ys = linspace(y.0, y.1, points);
    let hx = (x.1 - x.0) / (points - 1) as f64;
    let hy = (y.1 - y.0) / (points - 1) as f64;
    let rows: Vec<f64> = ys
        .par_iter()
        .map(|&yj| {
            let vals: Vec<f64> = xs.iter().map(|&xi| f(xi, yj)).collect();
            trapezoid(&vals, hx)
        })
        .collect();
    trapezoid(&rows, hy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is the exactness limit for 8 nodes
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((approx - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn composite_gl_of_gaussian() {
        let v = composite_gl(|x| (-x * x).exp(), -10.0, 10.0, 20);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_2d_gaussian_mass() {
        let f = |x: f64, y: f64| (-(x * x + y * y) / 2.0).exp() / (2.0 * std::f64::consts::PI);
        let m = trapezoid_2d(f, (-9.0, 9.0), (-9.0, 9.0), 129);
        assert!((m - 1.0).abs() < 1e-12);
    }
}

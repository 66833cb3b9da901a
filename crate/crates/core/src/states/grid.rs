use crate::error::{Error, Result};
use crate::quadrature::trapezoid;
use serde::{Deserialize, Serialize};

/// Tolerated mass deviation of raw grid data before normalization.
pub const RAW_MASS_TOLERANCE: f64 = 0.01;

/// A single-mode density sampled on a rectangular (xi, eta) grid.
///
/// Values are row-major with xi varying fastest: `values[j * nx + i]` is the
/// density at (xi_i, eta_j). Construction clamps negative samples to zero and
/// normalizes the trapezoid mass to one; the most negative raw sample is
/// kept as a diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    xi_range: (f64, f64),
    eta_range: (f64, f64),
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    raw_min: f64,
    raw_mass: f64,
}

fn check_axis(range: (f64, f64), n: usize, name: &str) -> Result<()> {
    if !(range.0.is_finite() && range.1.is_finite() && range.1 > range.0) {
        return Err(Error::InvalidParameter(format!("{name} extent must be increasing and finite")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("{name} needs at least 2 samples")));
    }
    Ok(())
}

impl GridDensity {
    pub fn new(xi_range: (f64, f64), eta_range: (f64, f64), nx: usize, ny: usize, mut values: Vec<f64>) -> Result<Self> {
        check_axis(xi_range, nx, "xi")?;
        check_axis(eta_range, ny, "eta")?;
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid value"));
        }
        let raw_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hx = (xi_range.1 - xi_range.0) / (nx - 1) as f64;
        let hy = (eta_range.1 - eta_range.0) / (ny - 1) as f64;
        let raw_mass = mass_of(&values, nx, ny, hx, hy);
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        let mass = mass_of(&values, nx, ny, hx, hy);
        if mass <= 0.0 {
            return Err(Error::InvalidParameter("grid density has no positive mass".into()));
        }
        for v in values.iter_mut() {
            *v /= mass;
        }
        Ok(Self { xi_range, eta_range, nx, ny, values, raw_min, raw_mass })
    }

    /// Constructor for externally supplied data: rejects inputs whose raw
    /// mass is off by more than one percent.
    pub fn from_raw_checked(xi_range: (f64, f64), eta_range: (f64, f64), nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        let g = Self::new(xi_range, eta_range, nx, ny, values)?;
        if (g.raw_mass - 1.0).abs() > RAW_MASS_TOLERANCE {
            return Err(Error::Format(format!(
                "raw grid mass {:.6} deviates from 1 by more than {}",
                g.raw_mass, RAW_MASS_TOLERANCE
            )));
        }
        Ok(g)
    }

    /// Samples `f` on the grid and normalizes.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(xi_range: (f64, f64), eta_range: (f64, f64), nx: usize, ny: usize, f: F) -> Result<Self> {
        let hx = (xi_range.1 - xi_range.0) / (nx.max(2) - 1) as f64;
        let hy = (eta_range.1 - eta_range.0) / (ny.max(2) - 1) as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(xi_range.0 + hx * i as f64, eta_range.0 + hy * j as f64));
            }
        }
        Self::new(xi_range, eta_range, nx, ny, values)
    }

    pub fn xi_range(&self) -> (f64, f64) {
        self.xi_range
    }
    pub fn eta_range(&self) -> (f64, f64) {
        self.eta_range
    }
    pub fn counts(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    /// Most negative sample before clamping (positive if none were negative).
    pub fn raw_min(&self) -> f64 {
        self.raw_min
    }
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.xi_range.1 - self.xi_range.0) / (self.nx - 1) as f64,
            (self.eta_range.1 - self.eta_range.0) / (self.ny - 1) as f64,
        )
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.xi_range.0 + self.spacing().0 * i as f64
    }
    pub fn eta(&self, j: usize) -> f64 {
        self.eta_range.0 + self.spacing().1 * j as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn mass(&self) -> f64 {
        let (hx, hy) = self.spacing();
        mass_of(&self.values, self.nx, self.ny, hx, hy)
    }

    /// Bilinear interpolation; zero outside the extents.
    pub fn eval(&self, xi: f64, eta: f64) -> f64 {
        let (hx, hy) = self.spacing();
        let fx = (xi - self.xi_range.0) / hx;
        let fy = (eta - self.eta_range.0) / hy;
        let maxx = (self.nx - 1) as f64;
        let maxy = (self.ny - 1) as f64;
        if !(fx >= 0.0 && fx <= maxx && fy >= 0.0 && fy <= maxy) {
            return 0.0;
        }
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let s = fx - i as f64;
        let t = fy - j as f64;
        let a = self.at(i, j);
        let b = self.at(i + 1, j);
        let c = self.at(i, j + 1);
        let d = self.at(i + 1, j + 1);
        (1.0 - t) * ((1.0 - s) * a + s * b) + t * ((1.0 - s) * c + s * d)
    }

    /// First and second moments (E xi, E eta, E xi^2, E eta^2, E xi eta) by
    /// the trapezoid rule on the nodes.
    pub fn moments(&self) -> [f64; 5] {
        let (hx, hy) = self.spacing();
        let mut m = [0.0; 5];
        for j in 0..self.ny {
            let wy = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
            let y = self.eta(j);
            for i in 0..self.nx {
                let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
                let x = self.xi(i);
                let w = wx * wy * hx * hy * self.at(i, j);
                m[0] += w * x;
                m[1] += w * y;
                m[2] += w * x * x;
                m[3] += w * y * y;
                m[4] += w * x * y;
            }
        }
        m
    }
}

fn mass_of(values: &[f64], nx: usize, ny: usize, hx: f64, hy: f64) -> f64 {
    let rows: Vec<f64> = values.chunks(nx).map(|row| trapezoid(row, hx)).collect();
    debug_assert_eq!(rows.len(), ny);
    trapezoid(&rows, hy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_grid(scale: f64) -> GridDensity {
        GridDensity::from_fn((-8.0, 8.0), (-8.0, 8.0), 161, 161, |x, y| {
            scale * (-(x * x + y * y) / 2.0).exp() / (2.0 * std::f64::consts::PI)
        })
        .unwrap()
    }

    #[test]
    fn constructor_normalizes() {
        let g = gaussian_grid(2.0);
        assert!((g.mass() - 1.0).abs() < 1e-12);
        assert!((g.raw_mass() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn raw_mass_gate() {
        let ok = gaussian_grid(1.005);
        let values = ok.values().to_vec();
        assert!(GridDensity::from_raw_checked((-8.0, 8.0), (-8.0, 8.0), 161, 161, values.clone()).is_ok());
        let doubled: Vec<f64> = values.iter().map(|v| 2.0 * v).collect();
        assert!(matches!(
            GridDensity::from_raw_checked((-8.0, 8.0), (-8.0, 8.0), 161, 161, doubled),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn negative_samples_are_clamped_and_reported() {
        let mut values = vec![1.0; 9];
        values[4] = -0.5;
        let g = GridDensity::new((0.0, 1.0), (0.0, 1.0), 3, 3, values).unwrap();
        assert_eq!(g.raw_min(), -0.5);
        assert_eq!(g.at(1, 1), 0.0);
        assert!(g.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn bilinear_interpolation_and_outside() {
        let g = GridDensity::new((0.0, 1.0), (0.0, 1.0), 2, 2, vec![0.0, 2.0, 2.0, 4.0]).unwrap();
        // mass of the raw values is 2, so values are halved
        assert!((g.eval(0.5, 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(g.eval(1.5, 0.5), 0.0);
        assert_eq!(g.eval(0.5, -0.1), 0.0);
    }

    #[test]
    fn shape_errors() {
        assert!(GridDensity::new((0.0, 1.0), (0.0, 1.0), 2, 2, vec![1.0; 3]).is_err());
        assert!(GridDensity::new((1.0, 0.0), (0.0, 1.0), 2, 2, vec![1.0; 4]).is_err());
        assert!(GridDensity::new((0.0, 1.0), (0.0, 1.0), 2, 2, vec![0.0; 4]).is_err());
    }
}

//! Reconstruction of a density from a ray tomogram through its
//! characteristic function.

use super::grid::{NodeLayout, TomogramGrid};
use crate::error::{Error, Result};
use crate::interp::{cubic_weights, lagrange};
use crate::states::GridDensity;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

pub const MIN_RAYS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseConfig {
    /// Side of the Cartesian frequency grid (power of two).
    pub fft_size: usize,
    /// Zero-padding factor of the per-ray transforms.
    pub radial_oversample: usize,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self { fft_size: 256, radial_oversample: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseReport {
    /// Most negative reconstructed value before clamping (0 if none).
    pub min_before_clamp: f64,
    /// Largest imaginary part left by the inverse transform.
    pub max_imaginary: f64,
    /// Output grid spacing.
    pub spacing: f64,
}

/// rho(xi, eta) = (2 pi)^-2 int chi(kx, ky) e^{-i (kx xi + ky eta)} dk, with
/// chi on each ray from the Fourier transform of the X-slice and the
/// Cartesian frequency grid filled by interpolation across rays.
pub fn inverse_radon(w: &TomogramGrid, cfg: &InverseConfig) -> Result<(GridDensity, InverseReport)> {
    let NodeLayout::Rays { count: rays } = w.layout() else {
        return Err(Error::Unsupported("inversion needs a ray layout".into()));
    };
    if rays < MIN_RAYS {
        return Err(Error::InsufficientRays { rays, min: MIN_RAYS });
    }
    let m = cfg.fft_size;
    if !m.is_power_of_two() || m < 4 {
        return Err(Error::NotPowerOfTwo(m));
    }
    let ax = w.x_axis();
    let nx = ax.count;
    let dx = ax.step();
    let pad = nx * cfg.radial_oversample.max(1);
    let dk_r = 2.0 * PI / (pad as f64 * dx);
    let dk = 2.0 * PI / (nx as f64 * dx);

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(pad);
    let usable = pad / 2;
    let ray_chi: Vec<Vec<Complex64>> = (0..rays)
        .into_par_iter()
        .map(|j| {
            let mut buf: Vec<Complex64> = w.slice(j).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            buf.resize(pad, Complex64::new(0.0, 0.0));
            ifft.process(&mut buf);
            buf.truncate(usable);
            for (l, c) in buf.iter_mut().enumerate() {
                *c *= Complex64::from_polar(dx, l as f64 * dk_r * ax.min);
            }
            buf
        })
        .collect();

    // chi along direction index j in [0, 2 rays) at radial position s (units of dk_r)
    let radial = |j: usize, s: f64| -> Complex64 {
        let (jj, conj) = if j >= rays { (j - rays, true) } else { (j, false) };
        let data = &ray_chi[jj];
        let i0 = (s.floor() as i64 - 2).clamp(0, usable as i64 - 6) as usize;
        let xs: Vec<f64> = (i0..i0 + 6).map(|i| i as f64).collect();
        let re: Vec<f64> = data[i0..i0 + 6].iter().map(|c| c.re).collect();
        let im: Vec<f64> = data[i0..i0 + 6].iter().map(|c| c.im).collect();
        let v = Complex64::new(lagrange(&xs, &re, s), lagrange(&xs, &im, s));
        if conj {
            v.conj()
        } else {
            v
        }
    };
    let kmax = 0.5 * m as f64 * dk;
    let ang = PI / rays as f64;
    let period = 2 * rays;
    let mut spec: Vec<Complex64> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let (qi, pi) = (idx / m, idx % m);
            let p = if pi >= m / 2 { pi as f64 - m as f64 } else { pi as f64 };
            let q = if qi >= m / 2 { qi as f64 - m as f64 } else { qi as f64 };
            let (kx, ky) = (p * dk, q * dk);
            let k = kx.hypot(ky);
            if k > kmax {
                return Complex64::new(0.0, 0.0);
            }
            let s = k / dk_r;
            if k == 0.0 {
                return radial(0, 0.0);
            }
            let th = ky.atan2(kx).rem_euclid(2.0 * PI);
            let a = th / ang;
            let j0 = a.floor() as i64;
            let wts = cubic_weights(a - j0 as f64);
            let mut acc = Complex64::new(0.0, 0.0);
            for (o, wt) in wts.iter().enumerate() {
                let j = (j0 - 1 + o as i64).rem_euclid(period as i64) as usize;
                acc += radial(j, s) * *wt;
            }
            acc
        })
        .collect();

    let fft = planner.plan_fft_forward(m);
    spec.par_chunks_mut(m).for_each(|row| fft.process(row));
    let mut cols = vec![Complex64::new(0.0, 0.0); m * m];
    for q in 0..m {
        for p in 0..m {
            cols[p * m + q] = spec[q * m + p];
        }
    }
    cols.par_chunks_mut(m).for_each(|col| fft.process(col));
    // cols[a * m + b] now holds the sum for output indices xi = a, eta = b
    let norm = dk * dk / (4.0 * PI * PI);
    let delta = 2.0 * PI / (m as f64 * dk);
    let mut values = vec![0.0; m * m];
    let mut min_raw = 0.0f64;
    let mut max_im = 0.0f64;
    for jb in 0..m {
        for ia in 0..m {
            let a = (ia + m / 2) % m;
            let b = (jb + m / 2) % m;
            let v = cols[a * m + b] * norm;
            min_raw = min_raw.min(v.re);
            max_im = max_im.max(v.im.abs());
            values[jb * m + ia] = v.re;
        }
    }
    let lo = -(m as f64 / 2.0) * delta;
    let hi = lo + (m - 1) as f64 * delta;
    let grid = GridDensity::new((lo, hi), (lo, hi), m, m, values)?;
    Ok((grid, InverseReport { min_before_clamp: min_raw, max_imaginary: max_im, spacing: delta }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{coherent_tomogram, gibbs_tomogram};
    use crate::radon::{tomogram_grid, Audit, Axis, TomogramMeta};
    use crate::quadrature::{QuadConfig, QuadLevel};
    use crate::states::{DensityState, ModeDensity};

    fn meta() -> TomogramMeta {
        TomogramMeta { state: serde_json::Value::Null, quad_level: QuadLevel::Default, audit: Audit::default(), modes: None }
    }

    #[test]
    fn gibbs_round_trip() {
        let g = TomogramGrid::rays(Axis::symmetric(12.0, 1024).unwrap(), 64, meta(), |x, mu, nu| {
            gibbs_tomogram(x, mu, nu, 1.0, 1.0)
        })
        .unwrap();
        let (rho, rep) = inverse_radon(&g, &InverseConfig::default()).unwrap();
        let (nx, _) = rho.counts();
        let c = nx / 2;
        assert!(rho.xi(c).abs() < 1e-12);
        assert!((rho.at(c, c) - 0.159_154_943_091_895_34).abs() < 1e-3);
        let st = DensityState::gibbs_1(1.0, 1.0).unwrap().modes().remove(0);
        let mut worst: f64 = 0.0;
        for j in 0..nx {
            for i in 0..nx {
                let (x, y) = (rho.xi(i), rho.eta(j));
                if x.abs() <= 4.0 && y.abs() <= 4.0 {
                    worst = worst.max((rho.at(i, j) - st.density(x, y)).abs());
                }
            }
        }
        assert!(worst < 1e-3, "{worst}");
        assert!(rep.max_imaginary < 1e-6);
    }

    #[test]
    fn coherent_peak_location() {
        let z = Complex64::new(1.0, 0.0);
        let g = TomogramGrid::rays(Axis::symmetric(20.0, 1024).unwrap(), 64, meta(), |x, mu, nu| {
            coherent_tomogram(x, mu, nu, z, 1.0)
        })
        .unwrap();
        let (rho, rep) = inverse_radon(&g, &InverseConfig::default()).unwrap();
        let (nx, ny) = rho.counts();
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for j in 0..ny {
            for i in 0..nx {
                if rho.at(i, j) > best {
                    best = rho.at(i, j);
                    at = (i, j);
                }
            }
        }
        assert!((rho.xi(at.0) - 2f64.sqrt()).abs() <= rep.spacing);
        assert!(rho.eta(at.1).abs() <= rep.spacing);
    }

    #[test]
    fn preconditions() {
        let q = QuadConfig::default();
        let s = DensityState::gibbs_1(1.0, 1.0).unwrap();
        let g = tomogram_grid(&s, 16, Some(Axis::symmetric(12.0, 257).unwrap()), &q).unwrap();
        assert!(matches!(inverse_radon(&g, &InverseConfig::default()), Err(Error::InsufficientRays { rays: 16, .. })));
        let g = tomogram_grid(&s, 32, Some(Axis::symmetric(12.0, 257).unwrap()), &q).unwrap();
        let cfg = InverseConfig { fft_size: 200, ..Default::default() };
        assert!(matches!(inverse_radon(&g, &cfg), Err(Error::NotPowerOfTwo(200))));
    }
}

//! Seeded Monte Carlo sampling of states.

use super::{gl_u_max, DensityState, GridDensity, ModeState, PhasePoint};
use crate::analytic::special::laguerre_unchecked;
use crate::error::{Error, Result};
use crate::quadrature::composite_gl;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Nodes of the radial inverse-CDF table.
pub const INVERSE_CDF_NODES: usize = 4096;
const TABLE_TOLERANCE: f64 = 1e-8;

/// Tabulated CDF of a 1D density on [a, b] with monotone cubic
/// (Fritsch-Carlson) interpolation between nodes.
#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    nodes: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
}

impl InverseCdfTable {
    /// Tabulates `pdf` on `n` nodes. The integral over [a, b] must already
    /// be 1 within 1e-8; the table is then renormalized exactly.
    pub fn new<F: Fn(f64) -> f64>(pdf: F, a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(Error::InverseCdf(format!("bad table range [{a}, {b}] with {n} nodes")));
        }
        let h = (b - a) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in nodes.windows(2) {
            acc += composite_gl(&pdf, w[0], w[1], 1);
            cdf.push(acc);
        }
        if !acc.is_finite() || (acc - 1.0).abs() > TABLE_TOLERANCE {
            return Err(Error::InverseCdf(format!("tabulated mass {acc} deviates from 1")));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        let mut slopes: Vec<f64> = nodes.iter().map(|&x| pdf(x).max(0.0) / acc).collect();
        // Fritsch-Carlson limiter keeps each cubic piece monotone
        for i in 0..n - 1 {
            let delta = (cdf[i + 1] - cdf[i]) / h;
            if delta <= 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let alpha = slopes[i] / delta;
            let beta = slopes[i + 1] / delta;
            let r = alpha * alpha + beta * beta;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * alpha * delta;
                slopes[i + 1] = tau * beta * delta;
            }
        }
        Ok(Self { nodes, cdf, slopes })
    }

    fn interp(&self, i: usize, x: f64) -> f64 {
        let h = self.nodes[i + 1] - self.nodes[i];
        let t = (x - self.nodes[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.cdf[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.cdf[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }

    /// Interpolated CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return 0.0;
        }
        if x >= self.nodes[n - 1] {
            return 1.0;
        }
        let h = self.nodes[1] - self.nodes[0];
        let i = (((x - self.nodes[0]) / h) as usize).min(n - 2);
        self.interp(i, x)
    }

    /// Inverse of the interpolated CDF by bisection inside the bracketing cell.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.nodes.len();
        let p = p.clamp(0.0, 1.0);
        let i = match self.cdf.partition_point(|&c| c <= p) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let (mut lo, mut hi) = (self.nodes[i], self.nodes[i + 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.interp(i, mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Radial law L_m(u)^2 e^{-u} of the Gauss-Laguerre state.
pub fn gl_radial_table(m: usize) -> Result<InverseCdfTable> {
    InverseCdfTable::new(
        |u| {
            let l = laguerre_unchecked(m, u);
            l * l * (-u).exp()
        },
        0.0,
        gl_u_max(m),
        INVERSE_CDF_NODES,
    )
}

enum ModeSampler<'a> {
    Normal { center: [f64; 2], sd: f64 },
    Radial { omega: f64, table: InverseCdfTable },
    Grid { grid: &'a GridDensity, cell_cdf: Vec<f64> },
}

impl<'a> ModeSampler<'a> {
    fn new(mode: &'a ModeState) -> Result<Self> {
        Ok(match mode {
            ModeState::Gibbs { beta, omega } => ModeSampler::Normal { center: [0.0, 0.0], sd: 1.0 / (beta * omega).sqrt() },
            ModeState::Coherent { omega, .. } => ModeSampler::Normal { center: mode.center(), sd: 1.0 / omega.sqrt() },
            ModeState::GaussLaguerre { omega, m } => ModeSampler::Radial { omega: *omega, table: gl_radial_table(*m)? },
            ModeState::Grid(g) => {
                let (nx, ny) = g.counts();
                let mut cell_cdf = Vec::with_capacity((nx - 1) * (ny - 1));
                let mut acc = 0.0;
                for j in 0..ny - 1 {
                    for i in 0..nx - 1 {
                        acc += g.at(i, j) + g.at(i + 1, j) + g.at(i, j + 1) + g.at(i + 1, j + 1);
                        cell_cdf.push(acc);
                    }
                }
                if !(acc > 0.0) {
                    return Err(Error::InverseCdf("grid density has no mass".into()));
                }
                for c in &mut cell_cdf {
                    *c /= acc;
                }
                ModeSampler::Grid { grid: g, cell_cdf }
            }
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            ModeSampler::Normal { center, sd } => {
                let n = Normal::new(0.0, *sd).expect("positive standard deviation");
                (center[0] + n.sample(rng), center[1] + n.sample(rng))
            }
            ModeSampler::Radial { omega, table } => {
                let u = table.quantile(rng.random::<f64>());
                let r = (2.0 * u / omega).sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                (r * phi.cos(), r * phi.sin())
            }
            ModeSampler::Grid { grid, cell_cdf } => {
                let (nx, _) = grid.counts();
                let p: f64 = rng.random();
                let c = cell_cdf.partition_point(|&v| v < p).min(cell_cdf.len() - 1);
                let (i, j) = (c % (nx - 1), c / (nx - 1));
                let (a, b) = (grid.at(i, j), grid.at(i + 1, j));
                let (cc, d) = (grid.at(i, j + 1), grid.at(i + 1, j + 1));
                let s = linear_inverse(0.5 * (a + cc), 0.5 * (b + d), rng.random());
                let t = linear_inverse(a * (1.0 - s) + b * s, cc * (1.0 - s) + d * s, rng.random());
                let (hx, hy) = grid.spacing();
                (grid.xi(i) + s * hx, grid.eta(j) + t * hy)
            }
        }
    }
}

/// Inverse CDF on [0, 1] of the density proportional to p0 (1 - s) + p1 s.
fn linear_inverse(p0: f64, p1: f64, u: f64) -> f64 {
    let area = 0.5 * (p0 + p1);
    if !(area > 0.0) {
        return u;
    }
    let target = u * area;
    let disc = (p0 * p0 + 2.0 * (p1 - p0) * target).max(0.0);
    let denom = p0 + disc.sqrt();
    if denom > 0.0 {
        (2.0 * target / denom).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Draws `count` i.i.d. points from `state`, deterministically from `seed`.
pub fn sample(state: &DensityState, count: usize, seed: u64) -> Result<Vec<PhasePoint>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let modes = state.modes();
    let samplers = modes.iter().map(ModeSampler::new).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = modes.len();
    Ok((0..count)
        .map(|_| {
            let mut xi = Vec::with_capacity(n);
            let mut eta = Vec::with_capacity(n);
            for s in &samplers {
                let (x, e) = s.draw(&mut rng);
                xi.push(x);
                eta.push(e);
            }
            PhasePoint { xi, eta }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::ModeDensity;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn chi_square_pvalue(state: &DensityState, pts: &[PhasePoint], half: f64) -> f64 {
        let mode = &state.modes()[0];
        let bins = 20;
        let h = 2.0 * half / bins as f64;
        let mut counts = vec![0usize; bins * bins];
        let mut outside = 0usize;
        for p in pts {
            let i = ((p.xi[0] + half) / h).floor();
            let j = ((p.eta[0] + half) / h).floor();
            if i < 0.0 || j < 0.0 || i >= bins as f64 || j >= bins as f64 {
                outside += 1;
            } else {
                counts[j as usize * bins + i as usize] += 1;
            }
        }
        let n = pts.len() as f64;
        let mut stat = 0.0;
        let mut dof = 0usize;
        let mut inside_p = 0.0;
        for j in 0..bins {
            for i in 0..bins {
                let x0 = -half + i as f64 * h;
                let y0 = -half + j as f64 * h;
                let p = crate::quadrature::composite_gl(
                    |y| crate::quadrature::composite_gl(|x| mode.density(x, y), x0, x0 + h, 2),
                    y0,
                    y0 + h,
                    2,
                );
                inside_p += p;
                let expected = n * p;
                if expected >= 5.0 {
                    let o = counts[j * bins + i] as f64;
                    stat += (o - expected).powi(2) / expected;
                    dof += 1;
                }
            }
        }
        let expected_out = n * (1.0 - inside_p);
        if expected_out >= 5.0 {
            stat += (outside as f64 - expected_out).powi(2) / expected_out;
            dof += 1;
        }
        1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(stat)
    }

    #[test]
    fn gibbs_variance_and_determinism() {
        let s = DensityState::gibbs_1(1.0, 1.0).unwrap();
        let a = sample(&s, 100_000, 7).unwrap();
        let n = a.len() as f64;
        let mean = a.iter().map(|p| p.xi[0]).sum::<f64>() / n;
        let var = a.iter().map(|p| (p.xi[0] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.02, "{var}");
        let b = sample(&s, 100_000, 7).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.xi[0].to_bits() == y.xi[0].to_bits()
            && x.eta[0].to_bits() == y.eta[0].to_bits()));
    }

    #[test]
    fn gl_radial_mean() {
        // oracle: int_0^inf u L_1(u)^2 e^{-u} du = 3
        let oracle = composite_gl(|u| u * (1.0 - u).powi(2) * (-u).exp(), 0.0, 80.0, 64);
        assert!((oracle - 3.0).abs() < 1e-12);
        let s = DensityState::gauss_laguerre_1(1.0, 1).unwrap();
        let pts = sample(&s, 100_000, 11).unwrap();
        let mean_u = pts.iter().map(|p| 0.5 * (p.xi[0].powi(2) + p.eta[0].powi(2))).sum::<f64>() / pts.len() as f64;
        assert!((mean_u - oracle).abs() < 0.05, "{mean_u}");
    }

    #[test]
    fn table_interpolation_is_monotone_and_accurate() {
        let t = gl_radial_table(3).unwrap();
        let mut last = -1.0;
        for k in 0..=2000 {
            let u = k as f64 * gl_u_max(3) / 2000.0;
            let c = t.cdf(u);
            assert!(c >= last);
            last = c;
        }
        for &p in &[1e-6, 0.1, 0.5, 0.9, 0.999] {
            assert!((t.cdf(t.quantile(p)) - p).abs() < 1e-12);
        }
        assert!(InverseCdfTable::new(|_| 2.0, 0.0, 1.0, 64).is_err());
    }

    #[test]
    fn chi_square_goodness_of_fit() {
        let coherent = DensityState::coherent_1(1.0, num_complex::Complex64::new(0.5, -0.3)).unwrap();
        for (state, half) in [
            (DensityState::gibbs_1(1.0, 1.0).unwrap(), 4.0),
            (DensityState::gauss_laguerre_1(1.0, 2).unwrap(), 5.0),
            (coherent, 5.0),
        ] {
            let pts = sample(&state, 100_000, 2024).unwrap();
            let p = chi_square_pvalue(&state, &pts, half);
            assert!(p > 1e-3, "{state:?}: p = {p}");
        }
    }

    #[test]
    fn grid_sampler_matches_bilinear_density() {
        let g = GridDensity::from_fn((-3.0, 3.0), (-3.0, 3.0), 25, 19, |x, y| {
            (-(x - 0.5).powi(2) - 0.5 * y * y).exp() * (1.0 + 0.5 * x.sin())
        })
        .unwrap();
        let state = DensityState::grid(g);
        let pts = sample(&state, 100_000, 5).unwrap();
        assert!(pts.iter().all(|p| p.xi[0].abs() <= 3.0 && p.eta[0].abs() <= 3.0));
        let p = chi_square_pvalue(&state, &pts, 3.0);
        assert!(p > 1e-3, "p = {p}");
    }

    #[test]
    fn linear_inverse_edges() {
        assert_eq!(linear_inverse(0.0, 0.0, 0.3), 0.3);
        assert!((linear_inverse(1.0, 1.0, 0.3) - 0.3).abs() < 1e-15);
        // density 2s has CDF s^2
        assert!((linear_inverse(0.0, 2.0, 0.25) - 0.5).abs() < 1e-15);
    }
}

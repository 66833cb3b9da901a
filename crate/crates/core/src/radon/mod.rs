//! Forward and inverse Radon transforms of phase-space densities.

mod generalized;
mod grid;
mod inverse;

pub use generalized::{generalized_radon, GeneralizedValue, LevelFunction, LevelWithGradient};
pub use grid::{lattice_nodes, ray_nodes, Audit, Axis, NodeLayout, TomogramGrid, TomogramMeta};
pub use inverse::{inverse_radon, InverseConfig, InverseReport};

use crate::error::{ensure_finite, Error, Result};
use crate::interp::uniform_cubic;
use crate::quadrature::{composite_gl, gauss_legendre, trapezoid, QuadConfig, QuadLevel};
use crate::states::{DensityState, GridDensity, ModeDensity, ModeState};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Per-mode line coordinates (X_k, mu_k, nu_k).
#[derive(Debug, Clone, PartialEq)]
pub struct LineCoords {
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl LineCoords {
    pub fn new(x: Vec<f64>, mu: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if mu.len() != x.len() || nu.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: mu.len().min(nu.len()) });
        }
        let line = Self { x, mu, nu };
        line.check()?;
        Ok(line)
    }

    pub fn single(x: f64, mu: f64, nu: f64) -> Self {
        Self { x: vec![x], mu: vec![mu], nu: vec![nu] }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn check(&self) -> Result<()> {
        for k in 0..self.len() {
            ensure_finite(self.x[k], "X")?;
            ensure_finite(self.mu[k], "mu")?;
            ensure_finite(self.nu[k], "nu")?;
            if self.mu[k] == 0.0 && self.nu[k] == 0.0 {
                return Err(Error::DegenerateLine { mode: k });
            }
        }
        Ok(())
    }

    /// The same line scaled by lambda in all coordinates.
    pub fn scaled(&self, lambda: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|a| a * lambda).collect();
        Self { x: s(&self.x), mu: s(&self.mu), nu: s(&self.nu) }
    }
}

/// Optical parametrization: unit-normalized direction angle and scaled X.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalCoords {
    pub xtilde: Vec<f64>,
    pub theta: Vec<f64>,
}

/// (X, mu, nu) -> (X / r, atan2(nu, mu)) with theta in (-pi, pi].
pub fn to_optical_1(x: f64, mu: f64, nu: f64) -> Result<(f64, f64)> {
    let r = (mu * mu + nu * nu).sqrt();
    if r == 0.0 {
        return Err(Error::DegenerateLine { mode: 0 });
    }
    let th = nu.atan2(mu);
    Ok((x / r, if th <= -PI { PI } else { th }))
}

pub fn from_optical_1(xtilde: f64, theta: f64) -> (f64, f64, f64) {
    (xtilde, theta.cos(), theta.sin())
}

pub fn to_optical(line: &LineCoords) -> Result<OpticalCoords> {
    let mut xtilde = Vec::with_capacity(line.len());
    let mut theta = Vec::with_capacity(line.len());
    for k in 0..line.len() {
        let (xt, th) = to_optical_1(line.x[k], line.mu[k], line.nu[k]).map_err(|_| Error::DegenerateLine { mode: k })?;
        xtilde.push(xt);
        theta.push(th);
    }
    Ok(OpticalCoords { xtilde, theta })
}

pub fn from_optical(opt: &OpticalCoords) -> Result<LineCoords> {
    if opt.xtilde.len() != opt.theta.len() {
        return Err(Error::DimensionMismatch { expected: opt.xtilde.len(), got: opt.theta.len() });
    }
    let mut line = LineCoords { x: vec![], mu: vec![], nu: vec![] };
    for (&xt, &th) in opt.xtilde.iter().zip(&opt.theta) {
        let (x, mu, nu) = from_optical_1(xt, th);
        line.x.push(x);
        line.mu.push(mu);
        line.nu.push(nu);
    }
    Ok(line)
}

/// Line-integral tomogram of one mode: int rho(d n + s t) ds / r with
/// n = (mu, nu) / r, t = (-nu, mu) / r and d = X / r.
pub fn mode_radon(mode: &dyn ModeDensity, x: f64, mu: f64, nu: f64, quad: &QuadConfig) -> Result<f64> {
    ensure_finite(x, "X")?;
    let r = (mu * mu + nu * nu).sqrt();
    if r == 0.0 {
        return Err(Error::DegenerateLine { mode: 0 });
    }
    let n = [mu / r, nu / r];
    let t = [-n[1], n[0]];
    let d = x / r;
    if let Some(g) = mode.as_grid() {
        return Ok(grid_line_integral(g, d, n, t) / r);
    }
    let sup = mode.support();
    let c = sup.center;
    let dperp = d - (c[0] * n[0] + c[1] * n[1]);
    if dperp.abs() >= sup.radius {
        return Ok(0.0);
    }
    let half = (sup.radius * sup.radius - dperp * dperp).sqrt();
    let sc = c[0] * t[0] + c[1] * t[1];
    let f = |s: f64| mode.density(d * n[0] + s * t[0], d * n[1] + s * t[1]);
    let full = composite_gl(f, sc - half, sc + half, quad.line_panels);
    let coarse = composite_gl(f, sc - half, sc + half, quad.line_panels / 2);
    let change = (full - coarse).abs();
    if change > quad.tolerance * full.abs() + 1e-15 {
        return Err(Error::NonConvergent { what: "line integral".into(), change, tol: quad.tolerance });
    }
    Ok(full / r)
}

/// Exact integral of the bilinear interpolant along the line d n + s t:
/// the integrand is quadratic between grid-line crossings.
fn grid_line_integral(g: &GridDensity, d: f64, n: [f64; 2], t: [f64; 2]) -> f64 {
    let (xr, yr) = (g.xi_range(), g.eta_range());
    let p0 = [d * n[0], d * n[1]];
    // clip the parameter range to the box
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (pc, tc, (a, b)) in [(p0[0], t[0], xr), (p0[1], t[1], yr)] {
        if tc.abs() < 1e-300 {
            if pc < a || pc > b {
                return 0.0;
            }
        } else {
            let (s1, s2) = ((a - pc) / tc, (b - pc) / tc);
            lo = lo.max(s1.min(s2));
            hi = hi.min(s1.max(s2));
        }
    }
    if !(hi > lo) {
        return 0.0;
    }
    let (hx, hy) = g.spacing();
    let (nx, ny) = g.counts();
    let mut cuts = vec![lo, hi];
    for (pc, tc, start, h, count) in [(p0[0], t[0], xr.0, hx, nx), (p0[1], t[1], yr.0, hy, ny)] {
        if tc.abs() < 1e-300 {
            continue;
        }
        for i in 0..count {
            let s = (start + h * i as f64 - pc) / tc;
            if s > lo && s < hi {
                cuts.push(s);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let (gx, gw) = gauss_legendre(3);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = 0.0;
        for (xq, wq) in gx.iter().zip(&gw) {
            let s = mid + half * xq;
            acc += wq * g.eval(p0[0] + s * t[0], p0[1] + s * t[1]);
        }
        total += acc * half;
    }
    total
}

/// Symplectic tomogram of an arbitrary product of mode densities.
pub fn symplectic_radon_modes(modes: &[&dyn ModeDensity], line: &LineCoords, quad: &QuadConfig) -> Result<f64> {
    if line.len() != modes.len() {
        return Err(Error::DimensionMismatch { expected: modes.len(), got: line.len() });
    }
    line.check()?;
    let mut w = 1.0;
    for (k, m) in modes.iter().enumerate() {
        w *= mode_radon(*m, line.x[k], line.mu[k], line.nu[k], quad)?;
    }
    Ok(w)
}

fn check_dims(state: &DensityState, line: &LineCoords) -> Result<Vec<ModeState>> {
    let modes = state.modes();
    if line.len() != modes.len() {
        return Err(Error::DimensionMismatch { expected: modes.len(), got: line.len() });
    }
    line.check()?;
    Ok(modes)
}

/// Symplectic tomogram W(X, mu, nu): product over modes of line integrals.
pub fn symplectic_radon(state: &DensityState, line: &LineCoords, quad: &QuadConfig) -> Result<f64> {
    let modes = check_dims(state, line)?;
    let mut w = 1.0;
    for (k, m) in modes.iter().enumerate() {
        w *= mode_radon(m, line.x[k], line.mu[k], line.nu[k], quad)?;
    }
    Ok(w)
}

/// Characteristic function chi(k mu, k nu) of one mode at each k in `ks`.
fn mode_characteristic(mode: &dyn ModeDensity, mu: f64, nu: f64, ks: &[f64]) -> Vec<Complex64> {
    if let Some(g) = mode.as_grid() {
        return ks.iter().map(|&k| grid_characteristic(g, k * mu, k * nu)).collect();
    }
    let sup = mode.support();
    let kappa = mode.bandwidth();
    let h = PI / (2.0 * kappa);
    let ((x0, x1), (y0, y1)) = sup.bbox();
    let nx = ((x1 - x0) / h).ceil() as usize + 1;
    let ny = ((y1 - y0) / h).ceil() as usize + 1;
    let hx = (x1 - x0) / (nx - 1) as f64;
    let hy = (y1 - y0) / (ny - 1) as f64;
    let xs: Vec<f64> = (0..nx).map(|i| x0 + hx * i as f64).collect();
    let ys: Vec<f64> = (0..ny).map(|j| y0 + hy * j as f64).collect();
    let rho: Vec<f64> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| mode.density(x, y))).collect();
    ks.par_iter()
        .map(|&k| {
            let ex: Vec<Complex64> = xs.iter().map(|&x| Complex64::from_polar(1.0, k * mu * x)).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &y) in ys.iter().enumerate() {
                let row = &rho[j * nx..(j + 1) * nx];
                let s: Complex64 = row.iter().zip(&ex).map(|(r, e)| e * r).sum();
                acc += s * Complex64::from_polar(1.0, k * nu * y);
            }
            acc * hx * hy
        })
        .collect()
}

/// int_0^1 (1 - u) e^{i a u} du.
fn half_hat(a: f64) -> Complex64 {
    let b = Complex64::new(0.0, a);
    if a.abs() < 1e-3 {
        // series 1/2 + b/6 + b^2/24 + b^3/120
        return 0.5 + b / 6.0 + b * b / 24.0 + b * b * b / 120.0;
    }
    (b.exp() - 1.0 - b) / (b * b)
}

/// Fourier transform of a tensor sum of hat functions on one axis.
fn hat_transform(start: f64, h: f64, count: usize, w: f64) -> Vec<Complex64> {
    let right = half_hat(w * h) * h;
    let left = half_hat(-w * h) * h;
    (0..count)
        .map(|i| {
            let phase = Complex64::from_polar(1.0, w * (start + h * i as f64));
            let mut v = Complex64::new(0.0, 0.0);
            if i + 1 < count {
                v += right;
            }
            if i > 0 {
                v += left;
            }
            phase * v
        })
        .collect()
}

/// Exact characteristic function of the bilinear interpolant.
fn grid_characteristic(g: &GridDensity, wx: f64, wy: f64) -> Complex64 {
    let (nx, ny) = g.counts();
    let (hx, hy) = g.spacing();
    let fx = hat_transform(g.xi_range().0, hx, nx, wx);
    let fy = hat_transform(g.eta_range().0, hy, ny, wy);
    let v = g.values();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..ny {
        let row: Complex64 = v[j * nx..(j + 1) * nx].iter().zip(&fx).map(|(r, e)| e * r).sum();
        acc += row * fy[j];
    }
    acc
}

/// Tomogram of one mode through its characteristic function:
/// W(X) = (1 / pi) int_0^inf Re[chi(k mu, k nu) e^{-i k X}] dk.
pub fn mode_fourier_slice(mode: &dyn ModeDensity, x: f64, mu: f64, nu: f64) -> Result<f64> {
    ensure_finite(x, "X")?;
    let r = (mu * mu + nu * nu).sqrt();
    if r == 0.0 {
        return Err(Error::DegenerateLine { mode: 0 });
    }
    let sup = mode.support();
    let c = sup.center;
    let extent = r * ((c[0] * c[0] + c[1] * c[1]).sqrt() + sup.radius);
    // sample spacing in k places the periodic images of W outside its support
    let dk = PI / (extent + x.abs());
    let kmax = if mode.as_grid().is_some() {
        // the interpolant's transform decays only algebraically
        let (hx, hy) = mode.as_grid().map(|g| g.spacing()).unwrap_or((1.0, 1.0));
        16.0 * PI / (hx.min(hy) * r)
    } else {
        mode.bandwidth() / r
    };
    let nk = (kmax / dk).ceil() as usize + 1;
    let ks: Vec<f64> = (0..nk).map(|i| dk * i as f64).collect();
    let chi = mode_characteristic(mode, mu, nu, &ks);
    let mut acc = 0.5 * chi[0].re;
    for (k, c) in ks.iter().zip(&chi).skip(1) {
        acc += (c * Complex64::from_polar(1.0, -k * x)).re;
    }
    Ok(acc * dk / PI)
}

/// Symplectic tomogram computed through the Fourier slice route.
pub fn fourier_slice_radon(state: &DensityState, line: &LineCoords, _quad: &QuadConfig) -> Result<f64> {
    let modes = check_dims(state, line)?;
    let mut w = 1.0;
    for (k, m) in modes.iter().enumerate() {
        w *= mode_fourier_slice(m, line.x[k], line.mu[k], line.nu[k])?;
    }
    Ok(w)
}

/// Center-of-mass coordinates: one X and a hyperplane normal over all modes,
/// expressed in the symmetric coordinates: X = sum_k mu_k xi_k + nu_k eta_k.
#[derive(Debug, Clone, PartialEq)]
pub struct CmCoords {
    pub x: f64,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl CmCoords {
    pub fn new(x: f64, mu: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if mu.len() != nu.len() {
            return Err(Error::DimensionMismatch { expected: mu.len(), got: nu.len() });
        }
        ensure_finite(x, "X")?;
        if mu.iter().chain(&nu).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hyperplane normal"));
        }
        if mu.iter().chain(&nu).all(|&v| v == 0.0) {
            return Err(Error::InvalidParameter("zero hyperplane normal".into()));
        }
        Ok(Self { x, mu, nu })
    }

    /// Converts a normal given against canonical (q, p) into symmetric
    /// coordinates: mu q + nu p = (mu sqrt(omega)) xi + (nu / sqrt(omega)) eta.
    pub fn from_canonical(x: f64, mu: &[f64], nu: &[f64], omegas: &[f64]) -> Result<Self> {
        if mu.len() != omegas.len() || nu.len() != omegas.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len(), got: mu.len().min(nu.len()) });
        }
        Self::new(
            x,
            mu.iter().zip(omegas).map(|(m, w)| m * w.sqrt()).collect(),
            nu.iter().zip(omegas).map(|(n, w)| n / w.sqrt()).collect(),
        )
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            x: self.x * lambda,
            mu: self.mu.iter().map(|v| v * lambda).collect(),
            nu: self.nu.iter().map(|v| v * lambda).collect(),
        }
    }
}

/// Largest mode count accepted by the direct center-of-mass quadrature.
pub const CM_MAX_MODES: usize = 3;

/// Center-of-mass tomogram by direct quadrature over the hyperplane.
pub fn cm_radon(state: &DensityState, cm: &CmCoords, quad: &QuadConfig) -> Result<f64> {
    let modes = state.modes();
    let n = modes.len();
    if cm.mu.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cm.mu.len() });
    }
    if n == 1 {
        return symplectic_radon(state, &LineCoords::new(vec![cm.x], cm.mu.clone(), cm.nu.clone())?, quad);
    }
    if n > CM_MAX_MODES {
        return Err(Error::Unsupported(format!("center-of-mass quadrature over {n} modes (cap {CM_MAX_MODES})")));
    }
    // coordinates w = (xi_1, eta_1, ..., xi_n, eta_n) with coefficients a
    let a: Vec<f64> = (0..n).flat_map(|k| [cm.mu[k], cm.nu[k]]).collect();
    let j = (0..2 * n)
        .max_by(|&p, &q| a[p].abs().total_cmp(&a[q].abs()))
        .expect("non-empty");
    let boxes: Vec<(f64, f64)> = modes
        .iter()
        .flat_map(|m| {
            let (bx, by) = m.support().bbox();
            [bx, by]
        })
        .collect();
    let panels = match (n, quad.level) {
        (2, QuadLevel::Default) => 6,
        (2, QuadLevel::Fine) => 12,
        (_, QuadLevel::Default) => 2,
        (_, QuadLevel::Fine) => 3,
    };
    let (gx, gw) = gauss_legendre(crate::quadrature::GL_ORDER);
    let free: Vec<usize> = (0..2 * n).filter(|&i| i != j).collect();
    let axes: Vec<(Vec<f64>, Vec<f64>)> = free
        .iter()
        .map(|&i| {
            let (lo, hi) = boxes[i];
            let width = (hi - lo) / panels as f64;
            let mut xs = Vec::with_capacity(panels * gx.len());
            let mut ws = Vec::with_capacity(panels * gx.len());
            for p in 0..panels {
                let mid = lo + (p as f64 + 0.5) * width;
                for (x, w) in gx.iter().zip(&gw) {
                    xs.push(mid + 0.5 * width * x);
                    ws.push(0.5 * width * w);
                }
            }
            (xs, ws)
        })
        .collect();
    let dims = axes.len();
    let per_axis = axes[0].0.len();
    let aj = a[j];
    let total: f64 = (0..per_axis)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; dims];
            idx[0] = i0;
            let mut w = vec![0.0; 2 * n];
            let mut acc = 0.0;
            loop {
                let mut weight = 1.0;
                let mut partial = 0.0;
                for (d, &coord) in free.iter().enumerate() {
                    let v = axes[d].0[idx[d]];
                    w[coord] = v;
                    weight *= axes[d].1[idx[d]];
                    partial += a[coord] * v;
                }
                w[j] = (cm.x - partial) / aj;
                let mut rho = 1.0;
                for (k, m) in modes.iter().enumerate() {
                    rho *= m.density(w[2 * k], w[2 * k + 1]);
                    if rho == 0.0 {
                        break;
                    }
                }
                acc += weight * rho;
                // advance the odometer over axes 1..dims
                let mut d = dims - 1;
                loop {
                    if d == 0 {
                        return acc;
                    }
                    idx[d] += 1;
                    if idx[d] < axes[d].0.len() {
                        break;
                    }
                    idx[d] = 0;
                    d -= 1;
                }
            }
        })
        .sum();
    Ok(total / aj.abs())
}

/// Center-of-mass tomogram assembled from per-mode symplectic tomogram
/// grids: the density of sum_k X_k is the convolution of the per-mode slices.
pub fn cm_from_symplectic(grids: &[TomogramGrid], cm: &CmCoords) -> Result<f64> {
    if grids.len() != cm.mu.len() {
        return Err(Error::DimensionMismatch { expected: grids.len(), got: cm.mu.len() });
    }
    struct Slice<'a> {
        values: &'a [f64],
        x0: f64,
        h: f64,
        r: f64,
        sign: f64,
    }
    let mut slices = Vec::new();
    for (g, (&mu, &nu)) in grids.iter().zip(cm.mu.iter().zip(&cm.nu)) {
        let r = (mu * mu + nu * nu).sqrt();
        if r == 0.0 {
            // the mode is integrated out entirely
            continue;
        }
        let (node, flip) = g.ray_index(mu, nu)?;
        let ax = g.x_axis();
        slices.push(Slice { values: g.slice(node), x0: ax.min, h: ax.step(), r, sign: if flip { -1.0 } else { 1.0 } });
    }
    // f_k(X) = g_k(sign X / r) / r
    let eval = |s: &Slice, x: f64| uniform_cubic(s.values, s.x0, s.h, s.sign * x / s.r) / s.r;
    if slices.len() == 1 {
        return Ok(eval(&slices[0], cm.x));
    }
    let step = slices.iter().map(|s| s.r * s.h).fold(f64::INFINITY, f64::min);
    let mut acc: Option<(f64, Vec<f64>)> = None;
    for s in &slices {
        let (lo, hi) = {
            let a = s.r * s.x0;
            let b = s.r * (s.x0 + s.h * (s.values.len() - 1) as f64);
            (a.min(b), a.max(b))
        };
        let i0 = (lo / step).floor() as i64;
        let i1 = (hi / step).ceil() as i64;
        let f: Vec<f64> = (i0..=i1).map(|i| eval(s, i as f64 * step)).collect();
        acc = Some(match acc {
            None => (i0 as f64 * step, f),
            Some((start, prev)) => {
                let mut out = vec![0.0; prev.len() + f.len() - 1];
                for (i, p) in prev.iter().enumerate() {
                    if *p == 0.0 {
                        continue;
                    }
                    for (k, q) in f.iter().enumerate() {
                        out[i + k] += p * q;
                    }
                }
                for v in &mut out {
                    *v *= step;
                }
                (start + i0 as f64 * step, out)
            }
        });
    }
    let (start, conv) = acc.expect("at least two slices");
    Ok(uniform_cubic(&conv, start, step, cm.x))
}

/// max over probes of |W(lX, l mu, l nu) |l| - W(X, mu, nu)| / max(|W|, floor).
pub fn homogeneity_residual<F>(w: F, probes: &[(f64, f64, f64, f64)], floor: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64>,
{
    let mut worst: f64 = 0.0;
    for &(x, mu, nu, lambda) in probes {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("scale factor must be non-zero, got {lambda}")));
        }
        let base = w(x, mu, nu)?;
        let scaled = w(lambda * x, lambda * mu, lambda * nu)? * lambda.abs();
        worst = worst.max((scaled - base).abs() / base.abs().max(floor));
    }
    Ok(worst)
}

/// Largest X-edge tail mass tolerated by the characteristic function.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

/// chi(mu, nu) = int W(X, mu, nu) e^{iX} dX at a node of the grid.
pub fn characteristic_from_tomogram(w: &TomogramGrid, node: usize) -> Result<Complex64> {
    if node >= w.node_count() {
        return Err(Error::InvalidParameter(format!("node {node} out of range")));
    }
    let ax = w.x_axis();
    let slice = w.slice(node);
    let span = ax.max - ax.min;
    let leak = (slice[0].abs() + slice[slice.len() - 1].abs()) * span;
    if leak > LEAKAGE_TOLERANCE {
        return Err(Error::TruncationLeakage { leak, tol: LEAKAGE_TOLERANCE });
    }
    let h = ax.step();
    let re: Vec<f64> = slice.iter().enumerate().map(|(i, v)| v * ax.at(i).cos()).collect();
    let im: Vec<f64> = slice.iter().enumerate().map(|(i, v)| v * ax.at(i).sin()).collect();
    Ok(Complex64::new(trapezoid(&re, h), trapezoid(&im, h)))
}

/// chi at an arbitrary (mu, nu) on one of the rays of a ray grid:
/// int W(X, r n) e^{iX} dX = int W(X', n) e^{i r X'} dX'.
pub fn characteristic_on_ray(w: &TomogramGrid, mu: f64, nu: f64) -> Result<Complex64> {
    let (node, flip) = w.ray_index(mu, nu)?;
    let r = (mu * mu + nu * nu).sqrt();
    let ax = w.x_axis();
    let slice = w.slice(node);
    let leak = (slice[0].abs() + slice[slice.len() - 1].abs()) * (ax.max - ax.min);
    if leak > LEAKAGE_TOLERANCE {
        return Err(Error::TruncationLeakage { leak, tol: LEAKAGE_TOLERANCE });
    }
    let k = if flip { -r } else { r };
    let h = ax.step();
    let re: Vec<f64> = slice.iter().enumerate().map(|(i, v)| v * (k * ax.at(i)).cos()).collect();
    let im: Vec<f64> = slice.iter().enumerate().map(|(i, v)| v * (k * ax.at(i)).sin()).collect();
    Ok(Complex64::new(trapezoid(&re, h), trapezoid(&im, h)))
}

/// X-axis covering +-12 standard deviations of the widest projection.
pub fn default_x_axis(mode: &ModeState, count: usize) -> Result<Axis> {
    let [xx, yy, xy] = mode.second_moments();
    let tr = 0.5 * (xx + yy);
    let det = xx * yy - xy * xy;
    let lmax = tr + (tr * tr - det).max(0.0).sqrt();
    Axis::symmetric(12.0 * lmax.sqrt(), count)
}

/// Default X-axis length.
pub const DEFAULT_X_POINTS: usize = 1024;
/// Default number of rays.
pub const DEFAULT_RAYS: usize = 64;

/// Numeric ray tomogram of a single-mode state by line integrals.
pub fn tomogram_grid(state: &DensityState, rays: usize, x_axis: Option<Axis>, quad: &QuadConfig) -> Result<TomogramGrid> {
    let modes = state.modes();
    if modes.len() != 1 {
        return Err(Error::Unsupported(format!("tomogram grids are per mode, state has {}", modes.len())));
    }
    let mode = &modes[0];
    let ax = match x_axis {
        Some(a) => a,
        None => default_x_axis(mode, DEFAULT_X_POINTS)?,
    };
    let meta = TomogramMeta { state: state.describe(), quad_level: quad.level, audit: Audit::default(), modes: None };
    TomogramGrid::rays(ax, rays, meta, |x, mu, nu| mode_radon(mode, x, mu, nu, quad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{gibbs_tomogram, gl_tomogram, GLDescriptor};
    use crate::states::{GridDensity, ModeSpec};

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

    #[test]
    fn gibbs_line_values() {
        let q = QuadConfig::default();
        let s = DensityState::gibbs_1(1.0, 1.0).unwrap();
        let w0 = symplectic_radon(&s, &LineCoords::single(0.0, 1.0, 0.0), &q).unwrap();
        assert!((w0 - INV_SQRT_2PI).abs() < 1e-12);
        let w1 = symplectic_radon(&s, &LineCoords::single(1.0, 1.0, 0.0), &q).unwrap();
        assert!((w1 - 0.2419707).abs() < 1e-7);
        let f = fourier_slice_radon(&s, &LineCoords::single(0.0, 1.0, 0.0), &q).unwrap();
        assert!((f - INV_SQRT_2PI).abs() < 1e-10);
    }

    #[test]
    fn gl_line_value_matches_closed_form() {
        let q = QuadConfig::default();
        let s = DensityState::gauss_laguerre_1(1.0, 1).unwrap();
        let w = symplectic_radon(&s, &LineCoords::single(0.0, 1.0, 0.0), &q).unwrap();
        let d = GLDescriptor::new(1.0, 1).unwrap();
        assert!((w - gl_tomogram(0.0, 1.0, 0.0, &d).unwrap()).abs() < 1e-10);
        assert!((w - 0.75 / (2.0 * PI).sqrt()).abs() < 1e-10);
        let s2 = DensityState::gauss_laguerre_1(1.0, 2).unwrap();
        let line = LineCoords::single(0.5, 0.6, 0.8);
        let a = symplectic_radon(&s2, &line, &q).unwrap();
        let b = fourier_slice_radon(&s2, &line, &q).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn degenerate_lines_are_errors() {
        let q = QuadConfig::default();
        let s = DensityState::gibbs_1(1.0, 1.0).unwrap();
        assert!(matches!(symplectic_radon(&s, &LineCoords::single(0.0, 0.0, 0.0), &q), Err(Error::DegenerateLine { mode: 0 })));
        assert!(matches!(
            symplectic_radon(&s, &LineCoords { x: vec![0.0, 0.0], mu: vec![1.0, 1.0], nu: vec![0.0, 0.0] }, &q),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(CmCoords::new(0.0, vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn optical_round_trip() {
        let (xt, th) = to_optical_1(1.0, 3.0, 4.0).unwrap();
        assert!((xt - 0.2).abs() < 1e-15 && (th - 0.927_295_218_001_612_2).abs() < 1e-15);
        assert_eq!(to_optical_1(0.0, 1.0, 0.0).unwrap(), (0.0, 0.0));
        let (x, mu, nu) = from_optical_1(0.2, th);
        assert!((x - 0.2).abs() < 1e-15 && (mu - 0.6).abs() < 1e-15 && (nu - 0.8).abs() < 1e-15);
        assert_eq!(to_optical_1(1.0, -1.0, -0.0).unwrap().1, PI);
        assert!(to_optical_1(1.0, 0.0, 0.0).is_err());
        let line = LineCoords::new(vec![1.0, 2.0], vec![3.0, -1.0], vec![4.0, 1.0]).unwrap();
        let back = from_optical(&to_optical(&line).unwrap()).unwrap();
        assert!((back.mu[1] + 0.5f64.sqrt()).abs() < 1e-15);
        assert!((back.x[1] - 2.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cm_single_mode_is_symplectic() {
        let q = QuadConfig::default();
        let s = DensityState::gauss_laguerre_1(1.3, 2).unwrap();
        let a = cm_radon(&s, &CmCoords::new(0.4, vec![0.7], vec![-0.2]).unwrap(), &q).unwrap();
        let b = symplectic_radon(&s, &LineCoords::single(0.4, 0.7, -0.2), &q).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn cm_two_mode_gibbs() {
        let q = QuadConfig::default();
        let s = DensityState::gibbs(ModeSpec::thermal(vec![1.0, 1.0], 1.0).unwrap()).unwrap();
        let h = 0.5f64.sqrt();
        let cm = CmCoords::new(0.0, vec![h, h], vec![0.0, 0.0]).unwrap();
        let v = cm_radon(&s, &cm, &q).unwrap();
        assert!((v - INV_SQRT_2PI).abs() < 1e-9, "{v}");
        let v2 = cm_radon(&s, &cm.scaled(2.0), &q).unwrap();
        assert!((v2 - 0.5 * v).abs() < 1e-9);
        // X = a . w is Gaussian with variance sum a_i^2 / (beta omega_i)
        let cm = CmCoords::new(0.7, vec![0.3, -1.1], vec![0.5, 0.2]).unwrap();
        let var: f64 = 0.09 + 1.21 + 0.25 + 0.04;
        let want = (-0.49 / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
        assert!((cm_radon(&s, &cm, &q).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn cm_from_per_mode_grids() {
        let q = QuadConfig::default();
        let s = DensityState::gibbs(ModeSpec::thermal(vec![1.0, 2.0], 1.0).unwrap()).unwrap();
        let grids: Vec<TomogramGrid> = s
            .modes()
            .into_iter()
            .map(|m| {
                let st = match m {
                    ModeState::Gibbs { beta, omega } => DensityState::gibbs_1(beta, omega).unwrap(),
                    _ => unreachable!(),
                };
                tomogram_grid(&st, 8, None, &q).unwrap()
            })
            .collect();
        let th = PI / 4.0;
        let cm = CmCoords::new(0.0, vec![1.0, th.cos() * 0.5], vec![0.0, th.sin() * 0.5]).unwrap();
        let oracle = cm_radon(&s, &cm, &q).unwrap();
        for x in [-1.0, -0.4, 0.0, 0.3, 1.2] {
            let cm = CmCoords { x, ..cm.clone() };
            let a = cm_from_symplectic(&grids, &cm).unwrap();
            let b = cm_radon(&s, &cm, &q).unwrap();
            assert!((a - b).abs() < 1e-6, "{x}: {a} {b}");
        }
        assert!(oracle > 0.0);
        let off = CmCoords::new(0.0, vec![1.0, 1.0], vec![0.0, 0.1]).unwrap();
        assert!(matches!(cm_from_symplectic(&grids, &off), Err(Error::GridMisalignment(_))));
    }

    #[test]
    fn grid_state_transforms() {
        let q = QuadConfig::default();
        let g = GridDensity::from_fn((-8.0, 8.0), (-8.0, 8.0), 321, 321, |x, y| {
            (-(x * x + y * y) / 2.0).exp() / (2.0 * PI)
        })
        .unwrap();
        let s = DensityState::grid(g);
        for &(x, mu, nu) in &[(0.0, 1.0, 0.0), (0.5, 0.6, 0.8), (-1.0, 1.0, 1.0)] {
            let want = gibbs_tomogram(x, mu, nu, 1.0, 1.0).unwrap();
            let a = symplectic_radon(&s, &LineCoords::single(x, mu, nu), &q).unwrap();
            let b = fourier_slice_radon(&s, &LineCoords::single(x, mu, nu), &q).unwrap();
            assert!((a - want).abs() < 1e-4, "{a} {want}");
            assert!((b - want).abs() < 1e-4, "{b} {want}");
        }
    }

    #[test]
    fn homogeneity_of_closed_and_numeric_forms() {
        let probes: Vec<_> = [-2.0, -1.0, 0.5, 2.0].iter().map(|&l| (0.7, 0.4, -0.9, l)).collect();
        let r = homogeneity_residual(|x, mu, nu| gibbs_tomogram(x, mu, nu, 1.0, 1.0), &probes, 1e-300).unwrap();
        assert!(r < 1e-12, "{r}");
        let q = QuadConfig::default();
        let s = DensityState::gauss_laguerre_1(1.0, 2).unwrap();
        let r = homogeneity_residual(|x, mu, nu| symplectic_radon(&s, &LineCoords::single(x, mu, nu), &q), &probes, 1e-12).unwrap();
        assert!(r < 1e-5, "{r}");
        assert!(homogeneity_residual(|_, _, _| Ok(1.0), &[(0.0, 1.0, 0.0, 0.0)], 1e-12).is_err());
    }

    #[test]
    fn characteristic_values() {
        let q = QuadConfig::default();
        let s = DensityState::gibbs_1(1.0, 1.0).unwrap();
        let g = tomogram_grid(&s, 8, None, &q).unwrap();
        let chi = characteristic_from_tomogram(&g, 0).unwrap();
        assert!((chi.re - (-0.5f64).exp()).abs() < 1e-10 && chi.im.abs() < 1e-12);
        let small = characteristic_on_ray(&g, 1e-3, 0.0).unwrap();
        assert!((small.norm() - 1.0).abs() < 1e-6);
        let gl = DensityState::gauss_laguerre_1(1.0, 1).unwrap();
        let g = tomogram_grid(&gl, 8, None, &q).unwrap();
        let chi = characteristic_from_tomogram(&g, 0).unwrap();
        let d = GLDescriptor::new(1.0, 1).unwrap();
        let want = crate::analytic::gl_charfun(1.0, 1.0, 0.0, &d).unwrap();
        assert!((chi.re - want).abs() < 1e-9);
        let narrow = TomogramGrid::rays(Axis::symmetric(1.0, 65).unwrap(), 4, g.meta.clone(), |x, mu, nu| {
            gibbs_tomogram(x, mu, nu, 1.0, 1.0)
        })
        .unwrap();
        assert!(matches!(characteristic_from_tomogram(&narrow, 0), Err(Error::TruncationLeakage { .. })));
    }
}

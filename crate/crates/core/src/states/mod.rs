//! Classical statistical states on phase space.
//!
//! Coordinates are the symmetric pair (xi, eta) per mode, with
//! q = sqrt(omega) xi and p = eta / sqrt(omega) available as accessors.

mod grid;
mod sample;

pub use grid::{GridDensity, RAW_MASS_TOLERANCE};
pub use sample::{sample, InverseCdfTable};

use crate::analytic::special::laguerre_unchecked;
use crate::analytic::{ClosedForm, GLDescriptor, COHERENT_MEAN_SCALE, GL_INDEX_GATE};
use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{linspace, trapezoid, trapezoid_2d, QuadConfig};
use num_complex::Complex64;
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

/// Exponent (in units of the Gaussian scale) at which densities are
/// considered to have vanished: e^{-40} ~ 4e-18.
pub const TAIL_EXPONENT: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    omegas: Vec<f64>,
    beta: Option<f64>,
}

impl ModeSpec {
    pub fn new(omegas: Vec<f64>, beta: Option<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidParameter("mode list is empty".into()));
        }
        if let Some(w) = omegas.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("frequency must be positive, got {w}")));
        }
        if let Some(b) = beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidParameter(format!("beta must be positive, got {b}")));
            }
        }
        Ok(Self { omegas, beta })
    }

    pub fn thermal(omegas: Vec<f64>, beta: f64) -> Result<Self> {
        Self::new(omegas, Some(beta))
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }
    pub fn beta(&self) -> Option<f64> {
        self.beta
    }
    pub fn len(&self) -> usize {
        self.omegas.len()
    }
    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Z_0 = (2 pi)^n prod_k (beta omega_k)^{-1}.
pub fn partition_function(spec: &ModeSpec) -> Result<f64> {
    let beta = spec
        .beta
        .ok_or_else(|| Error::InvalidParameter("partition function needs beta".into()))?;
    Ok(spec.omegas.iter().map(|w| 2.0 * PI / (beta * w)).product())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PhasePoint {
    pub fn new(xi: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        if xi.len() != eta.len() {
            return Err(Error::DimensionMismatch { expected: xi.len(), got: eta.len() });
        }
        Ok(Self { xi, eta })
    }

    pub fn single(xi: f64, eta: f64) -> Self {
        Self { xi: vec![xi], eta: vec![eta] }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }
    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Positions q_k = sqrt(omega_k) xi_k.
    pub fn q(&self, omegas: &[f64]) -> Vec<f64> {
        self.xi.iter().zip(omegas).map(|(x, w)| w.sqrt() * x).collect()
    }

    /// Momenta p_k = eta_k / sqrt(omega_k).
    pub fn p(&self, omegas: &[f64]) -> Vec<f64> {
        self.eta.iter().zip(omegas).map(|(e, w)| e / w.sqrt()).collect()
    }

    pub fn from_canonical(q: &[f64], p: &[f64], omegas: &[f64]) -> Result<Self> {
        if q.len() != omegas.len() || p.len() != omegas.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len(), got: q.len().min(p.len()) });
        }
        Ok(Self {
            xi: q.iter().zip(omegas).map(|(q, w)| q / w.sqrt()).collect(),
            eta: p.iter().zip(omegas).map(|(p, w)| p * w.sqrt()).collect(),
        })
    }
}

/// Region outside of which a single-mode density is negligible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Support {
    pub fn bbox(&self) -> ((f64, f64), (f64, f64)) {
        let [cx, cy] = self.center;
        ((cx - self.radius, cx + self.radius), (cy - self.radius, cy + self.radius))
    }
}

/// A normalized density on the phase plane of one mode.
pub trait ModeDensity: Sync {
    fn density(&self, xi: f64, eta: f64) -> f64;
    fn support(&self) -> Support;
    /// Spatial frequency beyond which the density's Fourier transform is
    /// negligible.
    fn bandwidth(&self) -> f64;
    fn as_grid(&self) -> Option<&GridDensity> {
        None
    }
}

/// Radial tail cut u_max = 2(m + 1) + 40 of the Gauss-Laguerre law in
/// u = omega r^2 / 2.
pub fn gl_u_max(m: usize) -> f64 {
    2.0 * (m as f64 + 1.0) + TAIL_EXPONENT
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeState {
    Gibbs { beta: f64, omega: f64 },
    Coherent { omega: f64, z: Complex64 },
    GaussLaguerre { omega: f64, m: usize },
    Grid(Arc<GridDensity>),
}

impl ModeState {
    /// Phase-space center (mean of xi, eta).
    pub fn center(&self) -> [f64; 2] {
        match self {
            ModeState::Coherent { z, .. } => [COHERENT_MEAN_SCALE * z.re, COHERENT_MEAN_SCALE * z.im],
            ModeState::Grid(g) => {
                let m = g.moments();
                [m[0], m[1]]
            }
            _ => [0.0, 0.0],
        }
    }

    /// Raw second moments [E xi^2, E eta^2, E xi eta].
    pub fn second_moments(&self) -> [f64; 3] {
        match *self {
            ModeState::Gibbs { beta, omega } => [1.0 / (beta * omega), 1.0 / (beta * omega), 0.0],
            ModeState::Coherent { omega, z } => {
                let a = COHERENT_MEAN_SCALE * z.re;
                let b = COHERENT_MEAN_SCALE * z.im;
                [1.0 / omega + a * a, 1.0 / omega + b * b, a * b]
            }
            // E[u] = 2m + 1 for the law L_m(u)^2 e^{-u}, and xi^2 averages to u / omega
            ModeState::GaussLaguerre { omega, m } => {
                let v = (2 * m + 1) as f64 / omega;
                [v, v, 0.0]
            }
            ModeState::Grid(ref g) => {
                let m = g.moments();
                [m[2], m[3], m[4]]
            }
        }
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        match *self {
            ModeState::Gibbs { beta, omega } => Some(ClosedForm::Gibbs { beta, omega }),
            ModeState::Coherent { omega, z } => Some(ClosedForm::Coherent { omega, z }),
            ModeState::GaussLaguerre { omega, m } => Some(ClosedForm::GaussLaguerre(GLDescriptor { omega, m })),
            ModeState::Grid(_) => None,
        }
    }

    pub fn omega(&self) -> Option<f64> {
        match *self {
            ModeState::Gibbs { omega, .. }
            | ModeState::Coherent { omega, .. }
            | ModeState::GaussLaguerre { omega, .. } => Some(omega),
            ModeState::Grid(_) => None,
        }
    }

    /// Inverse of [`ModeState::describe`] for the analytic kinds.
    pub fn from_describe(v: &serde_json::Value) -> Result<Self> {
        let num = |k: &str| {
            v.get(k)
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| Error::Format(format!("state descriptor lacks '{k}'")))
        };
        match v.get("kind").and_then(serde_json::Value::as_str) {
            Some("gibbs") => Ok(ModeState::Gibbs { beta: num("beta")?, omega: num("omega")? }),
            Some("coherent") => {
                let z = v
                    .get("z")
                    .and_then(serde_json::Value::as_array)
                    .filter(|a| a.len() == 2)
                    .and_then(|a| Some(Complex64::new(a[0].as_f64()?, a[1].as_f64()?)))
                    .ok_or_else(|| Error::Format("coherent descriptor needs z = [re, im]".into()))?;
                Ok(ModeState::Coherent { omega: num("omega")?, z })
            }
            Some("gl") => {
                let m = v
                    .get("m")
                    .and_then(serde_json::Value::as_u64)
                    .ok_or_else(|| Error::Format("state descriptor lacks 'm'".into()))?;
                Ok(ModeState::GaussLaguerre { omega: num("omega")?, m: m as usize })
            }
            Some(k) => Err(Error::Unsupported(format!("no closed form for state kind '{k}'"))),
            None => Err(Error::Format("state descriptor lacks 'kind'".into())),
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        match self {
            ModeState::Gibbs { beta, omega } => json!({"kind": "gibbs", "beta": beta, "omega": omega}),
            ModeState::Coherent { omega, z } => json!({"kind": "coherent", "omega": omega, "z": [z.re, z.im]}),
            ModeState::GaussLaguerre { omega, m } => json!({"kind": "gl", "omega": omega, "m": m}),
            ModeState::Grid(g) => {
                let (nx, ny) = g.counts();
                json!({"kind": "grid", "xi": [g.xi_range().0, g.xi_range().1], "eta": [g.eta_range().0, g.eta_range().1], "counts": [nx, ny]})
            }
        }
    }
}

impl ModeDensity for ModeState {
    fn density(&self, xi: f64, eta: f64) -> f64 {
        match self {
            ModeState::Gibbs { beta, omega } => {
                let bw = beta * omega;
                bw / (2.0 * PI) * (-0.5 * bw * (xi * xi + eta * eta)).exp()
            }
            ModeState::Coherent { omega, z } => {
                let dx = xi - COHERENT_MEAN_SCALE * z.re;
                let dy = eta - COHERENT_MEAN_SCALE * z.im;
                omega / (2.0 * PI) * (-0.5 * omega * (dx * dx + dy * dy)).exp()
            }
            ModeState::GaussLaguerre { omega, m } => {
                let u = 0.5 * omega * (xi * xi + eta * eta);
                let l = laguerre_unchecked(*m, u);
                omega / (2.0 * PI) * l * l * (-u).exp()
            }
            ModeState::Grid(g) => g.eval(xi, eta),
        }
    }

    fn support(&self) -> Support {
        match self {
            ModeState::Gibbs { beta, omega } => Support {
                center: [0.0, 0.0],
                radius: (2.0 * TAIL_EXPONENT / (beta * omega)).sqrt(),
            },
            ModeState::Coherent { omega, .. } => Support {
                center: self.center(),
                radius: (2.0 * TAIL_EXPONENT / omega).sqrt(),
            },
            ModeState::GaussLaguerre { omega, m } => Support {
                center: [0.0, 0.0],
                radius: (2.0 * gl_u_max(*m) / omega).sqrt(),
            },
            ModeState::Grid(g) => {
                let (x, y) = (g.xi_range(), g.eta_range());
                let hw = 0.5 * (x.1 - x.0);
                let hh = 0.5 * (y.1 - y.0);
                Support {
                    center: [0.5 * (x.0 + x.1), 0.5 * (y.0 + y.1)],
                    radius: (hw * hw + hh * hh).sqrt(),
                }
            }
        }
    }

    fn bandwidth(&self) -> f64 {
        match self {
            ModeState::Gibbs { beta, omega } => (2.0 * TAIL_EXPONENT * beta * omega).sqrt(),
            ModeState::Coherent { omega, .. } => (2.0 * TAIL_EXPONENT * omega).sqrt(),
            // the characteristic function has the same form in y as the density in u
            ModeState::GaussLaguerre { omega, m } => (2.0 * gl_u_max(*m) * omega).sqrt(),
            ModeState::Grid(g) => {
                let (hx, hy) = g.spacing();
                PI / hx.min(hy)
            }
        }
    }

    fn as_grid(&self) -> Option<&GridDensity> {
        match self {
            ModeState::Grid(g) => Some(g),
            _ => None,
        }
    }
}

/// A normalized probability density on the 2n-dimensional phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityState {
    Gibbs(ModeSpec),
    Coherent { spec: ModeSpec, z: Vec<Complex64> },
    GaussLaguerre { spec: ModeSpec, m: Vec<usize> },
    Grid(Arc<GridDensity>),
    Product(Vec<DensityState>),
}

impl DensityState {
    pub fn gibbs(spec: ModeSpec) -> Result<Self> {
        if spec.beta.is_none() {
            return Err(Error::InvalidParameter("Gibbs state needs beta".into()));
        }
        Ok(DensityState::Gibbs(spec))
    }

    pub fn coherent(spec: ModeSpec, z: Vec<Complex64>) -> Result<Self> {
        if z.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), got: z.len() });
        }
        if z.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("coherent amplitude"));
        }
        Ok(DensityState::Coherent { spec, z })
    }

    pub fn gauss_laguerre(spec: ModeSpec, m: Vec<usize>) -> Result<Self> {
        if m.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), got: m.len() });
        }
        if let Some(&bad) = m.iter().find(|&&m| m > GL_INDEX_GATE) {
            return Err(Error::AboveGate { index: bad, gate: GL_INDEX_GATE });
        }
        Ok(DensityState::GaussLaguerre { spec, m })
    }

    pub fn grid(g: GridDensity) -> Self {
        DensityState::Grid(Arc::new(g))
    }

    pub fn product(factors: Vec<DensityState>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("empty product".into()));
        }
        if let Some(f) = factors.iter().find(|f| f.mode_count() != 1) {
            return Err(Error::InvalidParameter(format!(
                "product factors must be single-mode, got {} modes",
                f.mode_count()
            )));
        }
        Ok(DensityState::Product(factors))
    }

    /// Convenience constructors for one mode.
    pub fn gibbs_1(beta: f64, omega: f64) -> Result<Self> {
        Self::gibbs(ModeSpec::thermal(vec![omega], beta)?)
    }
    pub fn coherent_1(omega: f64, z: Complex64) -> Result<Self> {
        Self::coherent(ModeSpec::new(vec![omega], None)?, vec![z])
    }
    pub fn gauss_laguerre_1(omega: f64, m: usize) -> Result<Self> {
        Self::gauss_laguerre(ModeSpec::new(vec![omega], None)?, vec![m])
    }

    pub fn mode_count(&self) -> usize {
        match self {
            DensityState::Gibbs(s) => s.len(),
            DensityState::Coherent { spec, .. } | DensityState::GaussLaguerre { spec, .. } => spec.len(),
            DensityState::Grid(_) => 1,
            DensityState::Product(f) => f.iter().map(|f| f.mode_count()).sum(),
        }
    }

    /// The per-mode factors of the state.
    pub fn modes(&self) -> Vec<ModeState> {
        match self {
            DensityState::Gibbs(s) => {
                let beta = s.beta.unwrap_or(1.0);
                s.omegas.iter().map(|&omega| ModeState::Gibbs { beta, omega }).collect()
            }
            DensityState::Coherent { spec, z } => spec
                .omegas
                .iter()
                .zip(z)
                .map(|(&omega, &z)| ModeState::Coherent { omega, z })
                .collect(),
            DensityState::GaussLaguerre { spec, m } => spec
                .omegas
                .iter()
                .zip(m)
                .map(|(&omega, &m)| ModeState::GaussLaguerre { omega, m })
                .collect(),
            DensityState::Grid(g) => vec![ModeState::Grid(Arc::clone(g))],
            DensityState::Product(f) => f.iter().flat_map(|f| f.modes()).collect(),
        }
    }

    /// Frequencies of the modes, where defined.
    pub fn omegas(&self) -> Option<Vec<f64>> {
        self.modes().iter().map(|m| m.omega()).collect()
    }

    pub fn describe(&self) -> serde_json::Value {
        json!({ "modes": self.modes().iter().map(|m| m.describe()).collect::<Vec<_>>() })
    }

    pub fn eval(&self, point: &PhasePoint) -> Result<f64> {
        let n = self.mode_count();
        if point.xi.len() != n || point.eta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: point.xi.len().min(point.eta.len()) });
        }
        for (x, e) in point.xi.iter().zip(&point.eta) {
            ensure_finite(*x, "xi")?;
            ensure_finite(*e, "eta")?;
        }
        Ok(self
            .modes()
            .iter()
            .zip(point.xi.iter().zip(&point.eta))
            .map(|(m, (&x, &e))| m.density(x, e))
            .product())
    }
}

/// Per-mode integral of `g * rho` over the support box, checked against the
/// next refinement.
pub fn mode_integral<G>(mode: &dyn ModeDensity, g: G, quad: &QuadConfig) -> Result<f64>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    if let Some(grid) = mode.as_grid() {
        let (hx, hy) = grid.spacing();
        let (nx, _) = grid.counts();
        let rows: Vec<f64> = grid
            .values()
            .chunks(nx)
            .enumerate()
            .map(|(j, row)| {
                let vals: Vec<f64> = row.iter().enumerate().map(|(i, v)| v * g(grid.xi(i), grid.eta(j))).collect();
                trapezoid(&vals, hx)
            })
            .collect();
        return Ok(trapezoid(&rows, hy));
    }
    let (bx, by) = mode.support().bbox();
    let f = |x: f64, y: f64| g(x, y) * mode.density(x, y);
    let coarse = trapezoid_2d(f, bx, by, quad.trapezoid_points);
    let fine = trapezoid_2d(f, bx, by, quad.refined().trapezoid_points);
    // integrands of either sign are judged against the integral of |g rho|
    let scale = trapezoid_2d(|x, y| f(x, y).abs(), bx, by, quad.trapezoid_points);
    let change = (fine - coarse).abs() / fine.abs().max(scale).max(f64::MIN_POSITIVE);
    if change > quad.tolerance {
        return Err(Error::NonConvergent { what: "phase-space quadrature".into(), change, tol: quad.tolerance });
    }
    Ok(fine)
}

/// Total probability mass by per-mode tensor trapezoid quadrature.
pub fn total_mass(state: &DensityState, quad: &QuadConfig) -> Result<f64> {
    state.modes().iter().map(|m| mode_integral(m, |_, _| 1.0, quad)).product()
}

/// Points per axis used for the 4-dimensional (two-mode) expectation grid.
const FOUR_DIM_POINTS: usize = 41;

/// Expectation of an observable f(xi, eta) (slices of length n). Supports
/// one and two modes; beyond that the tensor grid is too large.
pub fn expectation<F>(state: &DensityState, f: F, quad: &QuadConfig) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let modes = state.modes();
    match modes.len() {
        1 => mode_integral(&modes[0], |x, y| f(&[x], &[y]), quad),
        2 => {
            let coarse = expectation_4d(&modes, &f, FOUR_DIM_POINTS);
            let fine = expectation_4d(&modes, &f, 2 * FOUR_DIM_POINTS - 1);
            let change = (fine - coarse).abs() / fine.abs().max(1e-300);
            if change > quad.tolerance && (fine - coarse).abs() > 1e-14 {
                return Err(Error::NonConvergent { what: "two-mode expectation".into(), change, tol: quad.tolerance });
            }
            Ok(fine)
        }
        n => Err(Error::Unsupported(format!("expectation over {n} modes"))),
    }
}

fn expectation_4d<F>(modes: &[ModeState], f: &F, points: usize) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    use rayon::prelude::*;
    let axes: Vec<(Vec<f64>, f64)> = modes
        .iter()
        .flat_map(|m| {
            let (bx, by) = m.support().bbox();
            [bx, by]
        })
        .map(|(a, b)| (linspace(a, b, points), (b - a) / (points - 1) as f64))
        .collect();
    let w = |i: usize| if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
    let h: f64 = axes.iter().map(|a| a.1).product();
    (0..points)
        .into_par_iter()
        .map(|i0| {
            let x0 = axes[0].0[i0];
            let mut acc = 0.0;
            for (i1, &y0) in axes[1].0.iter().enumerate() {
                let r0 = modes[0].density(x0, y0);
                if r0 == 0.0 {
                    continue;
                }
                for (i2, &x1) in axes[2].0.iter().enumerate() {
                    for (i3, &y1) in axes[3].0.iter().enumerate() {
                        let r = r0 * modes[1].density(x1, y1);
                        acc += w(i1) * w(i2) * w(i3) * r * f(&[x0, x1], &[y0, y1]);
                    }
                }
            }
            w(i0) * acc
        })
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_2PI: f64 = 0.159_154_943_091_895_34;

    #[test]
    fn density_spot_values() {
        let g = DensityState::gibbs_1(1.0, 1.0).unwrap();
        assert!((g.eval(&PhasePoint::single(0.0, 0.0)).unwrap() - INV_2PI).abs() < 1e-16);
        let gl0 = DensityState::gauss_laguerre_1(1.0, 0).unwrap();
        assert!((gl0.eval(&PhasePoint::single(0.0, 0.0)).unwrap() - INV_2PI).abs() < 1e-16);
        let gl1 = DensityState::gauss_laguerre_1(1.0, 1).unwrap();
        let v = gl1.eval(&PhasePoint::single(2f64.sqrt(), 2f64.sqrt())).unwrap();
        assert!((v - INV_2PI * (-2f64).exp()).abs() < 1e-16);
        assert!((v - 0.0215393).abs() < 1e-7);
    }

    #[test]
    fn eval_errors() {
        let g = DensityState::gibbs_1(1.0, 1.0).unwrap();
        let bad = PhasePoint { xi: vec![0.0, 1.0], eta: vec![0.0, 1.0] };
        assert!(matches!(g.eval(&bad), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(g.eval(&PhasePoint::single(f64::NAN, 0.0)), Err(Error::NonFinite(_))));
    }

    #[test]
    fn constructor_validation() {
        assert!(ModeSpec::new(vec![], None).is_err());
        assert!(ModeSpec::new(vec![1.0, -1.0], None).is_err());
        assert!(ModeSpec::new(vec![1.0], Some(0.0)).is_err());
        assert!(DensityState::gibbs(ModeSpec::new(vec![1.0], None).unwrap()).is_err());
        let spec = ModeSpec::new(vec![1.0, 2.0], None).unwrap();
        assert!(DensityState::coherent(spec.clone(), vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(DensityState::gauss_laguerre(spec, vec![1, 40]).is_err());
        let two = DensityState::gibbs(ModeSpec::thermal(vec![1.0, 2.0], 1.0).unwrap()).unwrap();
        assert!(DensityState::product(vec![two]).is_err());
    }

    #[test]
    fn partition_function_values() {
        let z = partition_function(&ModeSpec::thermal(vec![1.0], 1.0).unwrap()).unwrap();
        assert!((z - 2.0 * PI).abs() < 1e-15);
        let z = partition_function(&ModeSpec::thermal(vec![1.0, 2.0], 2.0).unwrap()).unwrap();
        assert!((z - PI * PI / 2.0).abs() < 1e-14);
        assert!((z - 4.9348022).abs() < 1e-7);
        let z = partition_function(&ModeSpec::thermal(vec![2.0], 1.0).unwrap()).unwrap();
        assert!((z - PI).abs() < 1e-15);
        assert!(partition_function(&ModeSpec::new(vec![1.0], None).unwrap()).is_err());
    }

    #[test]
    fn masses() {
        let q = QuadConfig::default();
        let g = DensityState::gibbs_1(1.0, 1.0).unwrap();
        assert!((total_mass(&g, &q).unwrap() - 1.0).abs() < 1e-8);
        let gl = DensityState::gauss_laguerre_1(1.0, 3).unwrap();
        assert!((total_mass(&gl, &q).unwrap() - 1.0).abs() < 1e-8);
        let grid = GridDensity::from_fn((-6.0, 6.0), (-6.0, 6.0), 121, 121, |x, y| {
            2.0 * (-(x * x + y * y) / 2.0).exp()
        })
        .unwrap();
        assert!((total_mass(&DensityState::grid(grid), &q).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectations() {
        let q = QuadConfig::default();
        let g = DensityState::gibbs_1(1.0, 1.0).unwrap();
        let energy = expectation(&g, |x, e| 0.5 * (x[0] * x[0] + e[0] * e[0]), &q).unwrap();
        assert!((energy - 1.0).abs() < 1e-6);
        let one = expectation(&g, |_, _| 1.0, &q).unwrap();
        assert!((one - 1.0).abs() < 1e-10);
        let c = DensityState::coherent_1(1.0, Complex64::new(1.0, 0.0)).unwrap();
        let mean = expectation(&c, |x, _| x[0], &q).unwrap();
        assert!((mean - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn coherent_mean_scale_matches_density_oracle() {
        let q = QuadConfig::default();
        let z = Complex64::new(0.7, -1.3);
        let c = DensityState::coherent_1(2.5, z).unwrap();
        let mx = expectation(&c, |x, _| x[0], &q).unwrap();
        let me = expectation(&c, |_, e| e[0], &q).unwrap();
        assert!((mx / z.re - COHERENT_MEAN_SCALE).abs() < 1e-9);
        assert!((me / z.im - COHERENT_MEAN_SCALE).abs() < 1e-9);
    }

    #[test]
    fn two_mode_expectation() {
        let q = QuadConfig::default();
        let s = DensityState::gibbs(ModeSpec::thermal(vec![1.0, 2.0], 1.0).unwrap()).unwrap();
        // each mode contributes 1/beta
        let h = expectation(&s, |x, e| 0.5 * (x[0] * x[0] + e[0] * e[0]) + (x[1] * x[1] + e[1] * e[1]), &q).unwrap();
        assert!((h - 2.0).abs() < 1e-8);
    }

    #[test]
    fn descriptors_round_trip() {
        let modes = [
            ModeState::Gibbs { beta: 0.5, omega: 3.0 },
            ModeState::Coherent { omega: 1.2, z: Complex64::new(0.3, -1.0) },
            ModeState::GaussLaguerre { omega: 2.0, m: 4 },
        ];
        for m in modes {
            assert_eq!(ModeState::from_describe(&m.describe()).unwrap(), m);
        }
        assert!(ModeState::from_describe(&json!({"kind": "grid"})).is_err());
        assert!(ModeState::from_describe(&json!({"kind": "gibbs", "beta": 1.0})).is_err());
    }

    #[test]
    fn moments_of_analytic_states() {
        let q = QuadConfig::default();
        for st in [
            ModeState::GaussLaguerre { omega: 1.5, m: 2 },
            ModeState::Coherent { omega: 1.0, z: Complex64::new(0.3, 0.8) },
        ] {
            let [xx, yy, xy] = st.second_moments();
            let num_xx = mode_integral(&st, |x, _| x * x, &q).unwrap();
            let num_yy = mode_integral(&st, |_, y| y * y, &q).unwrap();
            let num_xy = mode_integral(&st, |x, y| x * y, &q).unwrap();
            assert!((num_xx - xx).abs() < 1e-9);
            assert!((num_yy - yy).abs() < 1e-9);
            assert!((num_xy - xy).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_coordinate_accessors() {
        let p = PhasePoint::from_canonical(&[2.0], &[3.0], &[4.0]).unwrap();
        assert_eq!(p.xi, vec![1.0]);
        assert_eq!(p.eta, vec![6.0]);
        assert_eq!(p.q(&[4.0]), vec![2.0]);
        assert_eq!(p.p(&[4.0]), vec![3.0]);
    }
}

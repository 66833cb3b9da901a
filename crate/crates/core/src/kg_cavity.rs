//! Klein-Gordon field in a one-dimensional Dirichlet cavity, reduced to its
//! normal modes.
//!
//! B = sqrt(-d^2/dx^2 + m^2) on (0, L) has eigenfunctions
//! Phi_k = sqrt(2 / L) sin(k pi x / L) and eigenvalues
//! omega_k = sqrt((k pi / L)^2 + m^2). The mode coordinates are
//! xi_k = sqrt(omega_k) phi_k and eta_k = phi_t,k / sqrt(omega_k).

use crate::analytic::gibbs_tomogram;
use crate::error::{ensure_finite, Error, Result};
use crate::evolution::evolve_tomogram_exact;
use crate::radon::LineCoords;
use crate::states::ModeSpec;
use serde_json::json;
use std::f64::consts::PI;

pub const DEFAULT_MODES: usize = 16;
/// Minimum samples per wavelength of the highest retained mode.
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 8.0;
/// Relative size of endpoint values tolerated by the projection.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec {
    length: f64,
    mass: f64,
    modes: usize,
    boundary: Boundary,
}

impl CavitySpec {
    pub fn new(length: f64, mass: f64, modes: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("cavity length must be positive, got {length}")));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("field mass must be non-negative, got {mass}")));
        }
        if modes == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        Ok(Self { length, mass, modes, boundary: Boundary::Dirichlet })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn modes(&self) -> usize {
        self.modes
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn mode_spec(&self, beta: Option<f64>) -> Result<ModeSpec> {
        ModeSpec::new(spectrum(self), beta)
    }

    pub fn describe(&self) -> serde_json::Value {
        json!({"length": self.length, "mass": self.mass, "modes": self.modes, "boundary": self.boundary})
    }
}

/// omega_k for k = 1..K, strictly increasing.
pub fn spectrum(c: &CavitySpec) -> Vec<f64> {
    (1..=c.modes).map(|k| wavenumber(c, k).hypot(c.mass)).collect()
}

fn wavenumber(c: &CavitySpec, k: usize) -> f64 {
    k as f64 * PI / c.length
}

/// Phi_k(x) for k >= 1.
pub fn eigenfunction(c: &CavitySpec, k: usize, x: f64) -> f64 {
    (2.0 / c.length).sqrt() * (wavenumber(c, k) * x).sin()
}

/// Mode coefficients of a field configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

/// phi and phi_t sampled on x_j = j L / (N - 1), endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
}

impl SampledField {
    pub fn from_fn<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(c: &CavitySpec, points: usize, phi: F, phi_t: G) -> Self {
        let xs = grid(c, points);
        Self { phi: xs.iter().map(|&x| phi(x)).collect(), phi_t: xs.iter().map(|&x| phi_t(x)).collect() }
    }
}

/// Uniform cavity grid including both walls.
pub fn grid(c: &CavitySpec, points: usize) -> Vec<f64> {
    let h = c.length / (points.max(2) - 1) as f64;
    (0..points).map(|j| h * j as f64).collect()
}

fn check_grid(c: &CavitySpec, points: usize) -> Result<()> {
    let ppw = 2.0 * (points as f64 - 1.0) / c.modes as f64;
    if points < 3 || ppw < MIN_POINTS_PER_WAVELENGTH {
        return Err(Error::GridTooCoarse { mode: c.modes, points_per_wavelength: ppw });
    }
    Ok(())
}

/// Projects sampled fields on the modes with the trapezoid inner product,
/// then applies B^{1/2} and B^{-1/2} spectrally.
pub fn field_to_modes(field: &SampledField, c: &CavitySpec) -> Result<FieldConfig> {
    let n = field.phi.len();
    if field.phi_t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: field.phi_t.len() });
    }
    check_grid(c, n)?;
    for (name, f) in [("phi", &field.phi), ("phi_t", &field.phi_t)] {
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(if name == "phi" { "phi" } else { "phi_t" }));
        }
        let scale = f.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let edge = f[0].abs().max(f[n - 1].abs());
        if edge > BOUNDARY_TOLERANCE * scale {
            return Err(Error::BoundaryValue(edge));
        }
    }
    let xs = grid(c, n);
    let h = c.length / (n - 1) as f64;
    let omegas = spectrum(c);
    let project = |f: &[f64], k: usize| -> f64 {
        // endpoint terms vanish, so the trapezoid rule is a plain sum
        let inner: f64 = (1..n - 1).map(|j| f[j] * eigenfunction(c, k, xs[j])).sum();
        h * inner
    };
    let mut xi = Vec::with_capacity(c.modes);
    let mut eta = Vec::with_capacity(c.modes);
    for (idx, w) in omegas.iter().enumerate() {
        xi.push(w.sqrt() * project(&field.phi, idx + 1));
        eta.push(project(&field.phi_t, idx + 1) / w.sqrt());
    }
    Ok(FieldConfig { xi, eta })
}

/// Synthesizes the sampled fields of a mode configuration.
pub fn modes_to_field(cfg: &FieldConfig, c: &CavitySpec, points: usize) -> Result<SampledField> {
    if cfg.xi.len() != c.modes || cfg.eta.len() != c.modes {
        return Err(Error::DimensionMismatch { expected: c.modes, got: cfg.xi.len().min(cfg.eta.len()) });
    }
    let omegas = spectrum(c);
    let xs = grid(c, points);
    let mut phi = vec![0.0; points];
    let mut phi_t = vec![0.0; points];
    for (k, w) in omegas.iter().enumerate() {
        let (a, b) = (cfg.xi[k] / w.sqrt(), cfg.eta[k] * w.sqrt());
        for (j, &x) in xs.iter().enumerate() {
            let e = eigenfunction(c, k + 1, x);
            phi[j] += a * e;
            phi_t[j] += b * e;
        }
    }
    // the walls are exact zeros
    phi[0] = 0.0;
    phi_t[0] = 0.0;
    phi[points - 1] = 0.0;
    phi_t[points - 1] = 0.0;
    Ok(SampledField { phi, phi_t })
}

/// (H, U) = (1/2 sum omega (xi^2 + eta^2), 1/2 sum omega xi^2).
pub fn field_hamiltonian(cfg: &FieldConfig, c: &CavitySpec) -> Result<(f64, f64)> {
    if cfg.xi.len() != c.modes || cfg.eta.len() != c.modes {
        return Err(Error::DimensionMismatch { expected: c.modes, got: cfg.xi.len().min(cfg.eta.len()) });
    }
    let omegas = spectrum(c);
    let u: f64 = omegas.iter().zip(&cfg.xi).map(|(w, x)| 0.5 * w * x * x).sum();
    let k: f64 = omegas.iter().zip(&cfg.eta).map(|(w, e)| 0.5 * w * e * e).sum();
    Ok((u + k, u))
}

/// U = 1/2 int phi (-phi'' + m^2 phi) dx with a three-point second
/// difference.
pub fn grid_potential(field: &SampledField, c: &CavitySpec) -> f64 {
    let phi = &field.phi;
    let n = phi.len();
    let h = c.length / (n - 1) as f64;
    let m2 = c.mass * c.mass;
    let inner: f64 = (1..n - 1)
        .map(|j| {
            let lap = (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]) / (h * h);
            phi[j] * (-lap + m2 * phi[j])
        })
        .sum();
    0.5 * h * inner
}

/// H = 1/2 ||phi_t||^2 + U on the grid.
pub fn grid_hamiltonian(field: &SampledField, c: &CavitySpec) -> f64 {
    let n = field.phi_t.len();
    let h = c.length / (n - 1) as f64;
    let kinetic: f64 = field.phi_t[1..n - 1].iter().map(|v| v * v).sum::<f64>() * h;
    0.5 * kinetic + grid_potential(field, c)
}

fn check_coords(line: &LineCoords, c: &CavitySpec) -> Result<()> {
    if line.len() != c.modes {
        return Err(Error::DimensionMismatch { expected: c.modes, got: line.len() });
    }
    for k in 0..line.len() {
        ensure_finite(line.x[k], "X")?;
        if line.mu[k] == 0.0 && line.nu[k] == 0.0 {
            return Err(Error::DegenerateLine { mode: k });
        }
    }
    Ok(())
}

/// log of the truncated canonical field tomogram.
pub fn log_canonical_field_tomogram(line: &LineCoords, beta: f64, c: &CavitySpec) -> Result<f64> {
    check_coords(line, c)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let mut acc = 0.0;
    for (k, w) in spectrum(c).iter().enumerate() {
        let r2 = line.mu[k] * line.mu[k] + line.nu[k] * line.nu[k];
        let bw = beta * w;
        acc += 0.5 * (bw / (2.0 * PI * r2)).ln() - bw * line.x[k] * line.x[k] / (2.0 * r2);
    }
    Ok(acc)
}

/// prod_k W_Gibbs(X_k, mu_k, nu_k; beta, omega_k), accumulated in log space.
pub fn canonical_field_tomogram(line: &LineCoords, beta: f64, c: &CavitySpec) -> Result<f64> {
    Ok(log_canonical_field_tomogram(line, beta, c)?.exp())
}

/// Scale taking X / r of mode k to the optical variable: sqrt(beta omega_k / 2).
pub fn optical_scale(beta: f64, omega: f64) -> f64 {
    (0.5 * beta * omega).sqrt()
}

/// Optical field tomogram pi^{-K/2} exp(-sum Xtilde_k^2), where Xtilde_k
/// already carries the factor sqrt(beta omega_k / 2).
pub fn optical_field_tomogram(xtilde: &[f64], c: &CavitySpec) -> Result<f64> {
    if xtilde.len() != c.modes {
        return Err(Error::DimensionMismatch { expected: c.modes, got: xtilde.len() });
    }
    for &x in xtilde {
        ensure_finite(x, "Xtilde")?;
    }
    let s: f64 = xtilde.iter().map(|x| x * x).sum();
    Ok((-(c.modes as f64) * 0.5 * PI.ln() - s).exp())
}

/// Metadata recording the truncation and the absorption of beta and
/// omega_k into the optical variable.
pub fn optical_metadata(beta: f64, c: &CavitySpec) -> serde_json::Value {
    let omegas = spectrum(c);
    let sum_log: f64 = omegas.iter().map(|w| (0.5 * beta * w).ln()).sum();
    json!({
        "truncation": c.modes,
        "optical_variable": "Xtilde_k = sqrt(beta * omega_k / 2) * X_k / sqrt(mu_k^2 + nu_k^2)",
        "normalization": "pi^(-K/2)",
        "sum_log_beta_omega_over_2": sum_log,
        "omegas": omegas,
        "beta": beta,
    })
}

/// Exact evolution of a K-mode field tomogram with the cavity frequencies.
pub fn truncated_field_evolution<F>(w: F, t: f64, c: &CavitySpec) -> Result<impl Fn(&LineCoords) -> Result<f64>>
where
    F: Fn(&LineCoords) -> Result<f64>,
{
    let spec = c.mode_spec(None)?;
    Ok(evolve_tomogram_exact(w, t, &spec))
}

/// Single-mode Gibbs tomogram of mode k (1-based).
pub fn mode_marginal(x: f64, mu: f64, nu: f64, beta: f64, c: &CavitySpec, k: usize) -> Result<f64> {
    if k == 0 || k > c.modes {
        return Err(Error::InvalidParameter(format!("mode {k} outside 1..={}", c.modes)));
    }
    gibbs_tomogram(x, mu, nu, beta, spectrum(c)[k - 1])
}

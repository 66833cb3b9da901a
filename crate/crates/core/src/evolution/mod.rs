//! Liouville dynamics of harmonic ensembles in the density and tomographic
//! pictures.

mod fd;
mod spectral;

pub use fd::{evolve_tomogram_fd, EvolutionConfig, ExactTomogram, FdReport, RimPolicy, Scheme, CFL_LIMIT, RIM_TOLERANCE, RIM_WIDTH};
pub use spectral::{inverse_partial_x, SpectralFunction1D, ZERO_MEAN_TOLERANCE};

use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;
use crate::radon::{LineCoords, NodeLayout, TomogramGrid};
use crate::states::{mode_integral, DensityState, ModeDensity, ModeSpec, ModeState, PhasePoint, Support};
use num_complex::Complex64;

/// Rotation of one mode's phase plane along the harmonic flow
/// xi' = omega eta, eta' = -omega xi.
pub fn flow_1(xi: f64, eta: f64, omega: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega * t).sin_cos();
    (xi * c + eta * s, eta * c - xi * s)
}

/// The phase point after time t.
pub fn flow_map(point: &PhasePoint, t: f64, spec: &ModeSpec) -> Result<PhasePoint> {
    let n = spec.len();
    if point.xi.len() != n || point.eta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: point.xi.len() });
    }
    let mut out = PhasePoint { xi: Vec::with_capacity(n), eta: Vec::with_capacity(n) };
    for k in 0..n {
        let (x, e) = flow_1(point.xi[k], point.eta[k], spec.omegas()[k], t);
        out.xi.push(x);
        out.eta.push(e);
    }
    Ok(out)
}

/// Coherent amplitude after time t: z e^{-i omega t}.
pub fn coherent_amplitude(z: Complex64, omega: f64, t: f64) -> Complex64 {
    z * Complex64::from_polar(1.0, -omega * t)
}

/// One mode transported by the flow: rho_t(w) = rho_0(flow(w, -t)).
#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedMode {
    pub base: ModeState,
    pub omega: f64,
    pub t: f64,
}

impl ModeDensity for EvolvedMode {
    fn density(&self, xi: f64, eta: f64) -> f64 {
        let (x0, e0) = flow_1(xi, eta, self.omega, -self.t);
        self.base.density(x0, e0)
    }

    fn support(&self) -> Support {
        let s = self.base.support();
        let (cx, cy) = flow_1(s.center[0], s.center[1], self.omega, self.t);
        Support { center: [cx, cy], radius: s.radius }
    }

    fn bandwidth(&self) -> f64 {
        self.base.bandwidth()
    }
}

/// A state transported by the harmonic flow for time t.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedDensity {
    modes: Vec<EvolvedMode>,
}

impl EvolvedDensity {
    pub fn modes(&self) -> &[EvolvedMode] {
        &self.modes
    }

    pub fn mode_densities(&self) -> Vec<&dyn ModeDensity> {
        self.modes.iter().map(|m| m as &dyn ModeDensity).collect()
    }

    pub fn eval(&self, point: &PhasePoint) -> Result<f64> {
        let n = self.modes.len();
        if point.xi.len() != n || point.eta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: point.xi.len() });
        }
        Ok(self
            .modes
            .iter()
            .enumerate()
            .map(|(k, m)| m.density(point.xi[k], point.eta[k]))
            .product())
    }

    pub fn total_mass(&self, quad: &QuadConfig) -> Result<f64> {
        self.modes.iter().map(|m| mode_integral(m, |_, _| 1.0, quad)).product()
    }

    pub fn radon(&self, line: &LineCoords, quad: &QuadConfig) -> Result<f64> {
        crate::radon::symplectic_radon_modes(&self.mode_densities(), line, quad)
    }
}

/// Transports `state` along the flow of its own mode frequencies.
pub fn evolve_density(state: &DensityState, t: f64) -> Result<EvolvedDensity> {
    let omegas = state
        .omegas()
        .ok_or_else(|| Error::InvalidParameter("state has no mode frequencies; use evolve_density_with".into()))?;
    evolve_density_with(state, &omegas, t)
}

/// Transports `state` along the flow of the given frequencies.
pub fn evolve_density_with(state: &DensityState, omegas: &[f64], t: f64) -> Result<EvolvedDensity> {
    let modes = state.modes();
    if modes.len() != omegas.len() {
        return Err(Error::DimensionMismatch { expected: modes.len(), got: omegas.len() });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    Ok(EvolvedDensity {
        modes: modes
            .into_iter()
            .zip(omegas)
            .map(|(base, &omega)| EvolvedMode { base, omega, t })
            .collect(),
    })
}

/// Rotated line direction of one mode: W_t(X, mu, nu) = W_0(X, mu', nu').
pub fn rotate_direction(mu: f64, nu: f64, omega: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega * t).sin_cos();
    (mu * c - nu * s, mu * s + nu * c)
}

/// Exact single-mode propagator of a tomogram evaluator.
pub fn evolve_tomogram_exact_1<F>(w0: F, t: f64, omega: f64) -> impl Fn(f64, f64, f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64>,
{
    move |x, mu, nu| {
        let (m, n) = rotate_direction(mu, nu, omega, t);
        w0(x, m, n)
    }
}

/// Exact propagator of a multi-mode tomogram evaluator: each mode's line
/// direction rotates with its own frequency.
pub fn evolve_tomogram_exact<F>(w0: F, t: f64, spec: &ModeSpec) -> impl Fn(&LineCoords) -> Result<f64>
where
    F: Fn(&LineCoords) -> Result<f64>,
{
    let omegas = spec.omegas().to_vec();
    move |line: &LineCoords| {
        if line.len() != omegas.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len(), got: line.len() });
        }
        let mut rotated = line.clone();
        for k in 0..line.len() {
            let (m, n) = rotate_direction(line.mu[k], line.nu[k], omegas[k], t);
            rotated.mu[k] = m;
            rotated.nu[k] = n;
        }
        w0(&rotated)
    }
}

/// Exact propagation of a sampled ray tomogram, re-sampled on its own nodes.
pub fn evolve_grid_exact(w0: &TomogramGrid, t: f64, omega: f64) -> Result<TomogramGrid> {
    if !matches!(w0.layout(), NodeLayout::Rays { .. }) {
        return Err(Error::Unsupported("exact grid propagation needs a ray layout".into()));
    }
    let prop = evolve_tomogram_exact_1(|x, mu, nu| w0.evaluate(x, mu, nu), t, omega);
    TomogramGrid::sample(w0.x_axis(), w0.layout(), w0.nodes().to_vec(), w0.meta.clone(), prop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{coherent_tomogram, gibbs_tomogram};
    use crate::radon::symplectic_radon;
    use std::f64::consts::PI;

    #[test]
    fn flow_examples() {
        let spec = ModeSpec::new(vec![1.0], None).unwrap();
        let p = flow_map(&PhasePoint::single(1.0, 0.0), PI / 2.0, &spec).unwrap();
        assert!(p.xi[0].abs() < 1e-15 && (p.eta[0] + 1.0).abs() < 1e-15);
        let spec = ModeSpec::new(vec![2.5], None).unwrap();
        let q = PhasePoint::single(0.3, -1.7);
        let full = flow_map(&q, 2.0 * PI / 2.5, &spec).unwrap();
        assert!((full.xi[0] - 0.3).abs() < 1e-14 && (full.eta[0] + 1.7).abs() < 1e-14);
        let e0 = 0.5 * 2.5 * (0.09 + 1.7 * 1.7);
        let mid = flow_map(&q, 0.77, &spec).unwrap();
        let e1 = 0.5 * 2.5 * (mid.xi[0].powi(2) + mid.eta[0].powi(2));
        assert!((e1 - e0).abs() < 1e-14);
        assert!(flow_map(&PhasePoint { xi: vec![1.0, 2.0], eta: vec![0.0, 0.0] }, 1.0, &spec).is_err());
    }

    #[test]
    fn coherent_state_rotates_in_amplitude() {
        let st = DensityState::coherent_1(1.0, Complex64::new(1.0, 0.0)).unwrap();
        let ev = evolve_density(&st, PI / 2.0).unwrap();
        let direct = DensityState::coherent_1(1.0, Complex64::new(0.0, -1.0)).unwrap();
        assert!((coherent_amplitude(Complex64::new(1.0, 0.0), 1.0, PI / 2.0) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        for i in 0..100 {
            let p = PhasePoint::single(-3.0 + 0.06 * i as f64, 2.0 - 0.041 * i as f64);
            assert!((ev.eval(&p).unwrap() - direct.eval(&p).unwrap()).abs() < 1e-12);
        }
        let q = QuadConfig::default();
        assert!((ev.total_mass(&q).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gibbs_is_stationary() {
        let st = DensityState::gibbs_1(2.0, 1.5).unwrap();
        let ev = evolve_density(&st, 0.83).unwrap();
        for i in 0..20 {
            let p = PhasePoint::single(0.1 * i as f64, -0.07 * i as f64);
            assert!((ev.eval(&p).unwrap() - st.eval(&p).unwrap()).abs() < 1e-15);
        }
        let w = evolve_tomogram_exact_1(|x, mu, nu| gibbs_tomogram(x, mu, nu, 2.0, 1.5), 0.83, 1.5);
        assert!((w(0.4, 0.3, 0.9).unwrap() - gibbs_tomogram(0.4, 0.3, 0.9, 2.0, 1.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn dual_consistency_fixes_the_rotation_sign() {
        let q = QuadConfig::default();
        let z = Complex64::new(0.9, 0.4);
        let st = DensityState::coherent_1(1.3, z).unwrap();
        for &t in &[0.3, 1.0, 2.7] {
            let ev = evolve_density(&st, t).unwrap();
            let exact = evolve_tomogram_exact_1(|x, mu, nu| symplectic_radon(&st, &LineCoords::single(x, mu, nu), &q), t, 1.3);
            let zt = coherent_amplitude(z, 1.3, t);
            for &(x, mu, nu) in &[(0.5, 1.0, 0.2), (-1.0, 0.3, -0.7), (2.0, -0.5, 1.1)] {
                let a = ev.radon(&LineCoords::single(x, mu, nu), &q).unwrap();
                let b = exact(x, mu, nu).unwrap();
                let c = coherent_tomogram(x, mu, nu, zt, 1.3).unwrap();
                assert!((a - b).abs() < 1e-10, "{t}: {a} {b}");
                assert!((a - c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tomographic_equation_residual() {
        // d/dt W_t = omega (mu d/dnu - nu d/dmu) W_t
        let z = Complex64::new(0.6, -0.8);
        let omega = 1.7;
        let w0 = |x: f64, mu: f64, nu: f64| coherent_tomogram(x, mu, nu, z, omega);
        let (x, mu, nu, t) = (0.4, 0.9, -0.5, 0.35);
        let mut errs = vec![];
        for &h in &[1e-2, 5e-3] {
            let wt = |t: f64, mu: f64, nu: f64| evolve_tomogram_exact_1(w0, t, omega)(x, mu, nu).unwrap();
            let dt = (wt(t + h, mu, nu) - wt(t - h, mu, nu)) / (2.0 * h);
            let dmu = (wt(t, mu + h, nu) - wt(t, mu - h, nu)) / (2.0 * h);
            let dnu = (wt(t, mu, nu + h) - wt(t, mu, nu - h)) / (2.0 * h);
            errs.push((dt - omega * (mu * dnu - nu * dmu)).abs());
        }
        assert!(errs[0] < 1e-3);
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn periodicity_of_the_propagator() {
        let z = Complex64::new(1.0, 0.5);
        let w = evolve_tomogram_exact_1(|x, mu, nu| coherent_tomogram(x, mu, nu, z, 2.0), PI, 2.0);
        for &(x, mu, nu) in &[(0.2, 1.0, 0.3), (-1.0, -0.4, 0.8)] {
            assert!((w(x, mu, nu).unwrap() - coherent_tomogram(x, mu, nu, z, 2.0).unwrap()).abs() < 1e-14);
        }
        let spec = ModeSpec::new(vec![1.0, 2.0], None).unwrap();
        let multi = evolve_tomogram_exact(
            |l: &LineCoords| Ok(coherent_tomogram(l.x[0], l.mu[0], l.nu[0], z, 1.0)? * coherent_tomogram(l.x[1], l.mu[1], l.nu[1], z, 2.0)?),
            2.0 * PI,
            &spec,
        );
        let l = LineCoords::new(vec![0.3, -0.2], vec![1.0, 0.5], vec![0.1, 0.9]).unwrap();
        let base = coherent_tomogram(0.3, 1.0, 0.1, z, 1.0).unwrap() * coherent_tomogram(-0.2, 0.5, 0.9, z, 2.0).unwrap();
        assert!((multi(&l).unwrap() - base).abs() < 1e-14);
    }
}

//! Finite-difference solution of the harmonic tomographic equation
//! d/dt W = omega (mu d/dnu - nu d/dmu) W on a (mu, nu) lattice.
//!
//! Strang splitting into a half sweep along mu, a full sweep along nu and a
//! half sweep along mu. Each sweep is a constant-coefficient advection along
//! its grid lines, advanced with the Beam-Warming scheme (second-order
//! upwind in space and time).

use crate::error::{Error, Result};
use crate::radon::{NodeLayout, TomogramGrid};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Largest accepted omega max(|mu|, |nu|) dt / h.
pub const CFL_LIMIT: f64 = 0.9;
/// Rim values below this count as negligible.
pub const RIM_TOLERANCE: f64 = 1e-10;
/// Layers of nodes on each side held by the rim policy.
pub const RIM_WIDTH: usize = 2;

/// Exact tomogram W(t, X, mu, nu).
pub type ExactTomogram = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Treatment of the outermost lattice layers, where the upwind stencil does
/// not fit.
#[derive(Clone)]
pub enum RimPolicy {
    /// Require |W| < 1e-10 on the rim and hold it there.
    Negligible,
    /// Hold the initial rim values.
    Frozen,
    /// Take rim values from an exact solution, traced through the split
    /// sub-steps so the rim matches the splitting.
    Prescribed(ExactTomogram),
}

impl fmt::Debug for RimPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RimPolicy::Negligible => write!(f, "Negligible"),
            RimPolicy::Frozen => write!(f, "Frozen"),
            RimPolicy::Prescribed(_) => write!(f, "Prescribed(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Characteristics,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub t: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub rim: RimPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdReport {
    pub steps: usize,
    pub dt: f64,
    pub cfl: f64,
    /// Largest change of int W dX at any node over all steps.
    pub max_normalization_drift: f64,
    pub min_value: f64,
}

#[derive(Clone, Copy)]
enum Stage {
    FirstHalf,
    Full,
    SecondHalf,
}

struct Lattice {
    nm: usize,
    nn: usize,
    nx: usize,
    mu0: f64,
    nu0: f64,
    hm: f64,
    hn: f64,
}

impl Lattice {
    fn mu(&self, i: usize) -> f64 {
        self.mu0 + self.hm * i as f64
    }
    fn nu(&self, j: usize) -> f64 {
        self.nu0 + self.hn * j as f64
    }
    fn is_rim(&self, i: usize, j: usize) -> bool {
        i < RIM_WIDTH || j < RIM_WIDTH || i + RIM_WIDTH >= self.nm || j + RIM_WIDTH >= self.nn
    }
}

/// One Beam-Warming update with Courant number c from the upwind stencil.
#[inline]
fn beam_warming(c: f64, u0: f64, u1: f64, u2: f64) -> f64 {
    // u1 = u_{i-1}, u2 = u_{i-2} on the upwind side
    u0 - 0.5 * c * (3.0 * u0 - 4.0 * u1 + u2) + 0.5 * c * c * (u0 - 2.0 * u1 + u2)
}

/// Advection along mu with speed omega nu for time tau.
fn sweep_mu(lat: &Lattice, old: &[f64], new: &mut [f64], omega: f64, tau: f64) {
    let (nm, nx) = (lat.nm, lat.nx);
    new.par_chunks_mut(nm * nx).enumerate().for_each(|(j, row)| {
        let c = omega * lat.nu(j) * tau / lat.hm;
        let base = j * nm * nx;
        for i in 0..nm {
            let at = |ii: usize, ix: usize| old[base + ii * nx + ix];
            for ix in 0..nx {
                row[i * nx + ix] = if c >= 0.0 && i >= 2 {
                    beam_warming(c, at(i, ix), at(i - 1, ix), at(i - 2, ix))
                } else if c < 0.0 && i + 2 < nm {
                    beam_warming(-c, at(i, ix), at(i + 1, ix), at(i + 2, ix))
                } else {
                    at(i, ix)
                };
            }
        }
    });
}

/// Advection along nu with speed -omega mu for time tau.
fn sweep_nu(lat: &Lattice, old: &[f64], new: &mut [f64], omega: f64, tau: f64) {
    let (nm, nn, nx) = (lat.nm, lat.nn, lat.nx);
    new.par_chunks_mut(nm * nx).enumerate().for_each(|(j, row)| {
        for i in 0..nm {
            let c = -omega * lat.mu(i) * tau / lat.hn;
            let at = |jj: usize, ix: usize| old[(jj * nm + i) * nx + ix];
            for ix in 0..nx {
                row[i * nx + ix] = if c >= 0.0 && j >= 2 {
                    beam_warming(c, at(j, ix), at(j - 1, ix), at(j - 2, ix))
                } else if c < 0.0 && j + 2 < nn {
                    beam_warming(-c, at(j, ix), at(j + 1, ix), at(j + 2, ix))
                } else {
                    at(j, ix)
                };
            }
        }
    });
}

/// Position at the start of the step from which the exact split solution
/// after `stage` transports its value.
fn trace_back(stage: Stage, mu: f64, nu: f64, omega: f64, dt: f64) -> (f64, f64) {
    let half = 0.5 * dt;
    let first = |m: f64, n: f64| (m - omega * n * half, n);
    let second = |m: f64, n: f64| first(m, n + omega * m * dt);
    match stage {
        Stage::FirstHalf => first(mu, nu),
        Stage::Full => second(mu, nu),
        Stage::SecondHalf => {
            let (m, n) = (mu - omega * nu * half, nu);
            second(m, n)
        }
    }
}

/// Advances a lattice tomogram of one mode with frequency `omega` to time
/// `cfg.t`.
pub fn evolve_tomogram_fd(w0: &TomogramGrid, omega: f64, cfg: &EvolutionConfig) -> Result<(TomogramGrid, FdReport)> {
    let NodeLayout::Lattice { mu, nu } = w0.layout() else {
        return Err(Error::Unsupported("finite differences need a lattice layout".into()));
    };
    if !(cfg.dt > 0.0) || !cfg.t.is_finite() || cfg.t < 0.0 {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t >= 0, got dt = {}, t = {}", cfg.dt, cfg.t)));
    }
    if mu.count < 2 * RIM_WIDTH + 1 || nu.count < 2 * RIM_WIDTH + 1 {
        return Err(Error::InvalidParameter("lattice too small for the rim layers".into()));
    }
    let xs = w0.x_axis().points();
    let lat = Lattice { nm: mu.count, nn: nu.count, nx: xs.len(), mu0: mu.min, nu0: nu.min, hm: mu.step(), hn: nu.step() };
    let steps = (cfg.t / cfg.dt).ceil().max(if cfg.t > 0.0 { 1.0 } else { 0.0 }) as usize;
    let dt = if steps == 0 { 0.0 } else { cfg.t / steps as f64 };
    let reach = mu.min.abs().max(mu.max.abs()).max(nu.min.abs()).max(nu.max.abs());
    let cfl = omega.abs() * reach * dt / lat.hm.min(lat.hn);
    if cfl > CFL_LIMIT {
        return Err(Error::Cfl { cfl, limit: CFL_LIMIT });
    }
    if matches!(cfg.rim, RimPolicy::Negligible) {
        let mut worst: f64 = 0.0;
        for j in 0..lat.nn {
            for i in 0..lat.nm {
                if lat.is_rim(i, j) {
                    worst = w0.slice(j * lat.nm + i).iter().fold(worst, |a, v| a.max(v.abs()));
                }
            }
        }
        if worst >= RIM_TOLERANCE {
            return Err(Error::BoundaryLeakage { value: worst, tol: RIM_TOLERANCE });
        }
    }

    let initial = w0.values().to_vec();
    let mut cur = initial.clone();
    let mut next = vec![0.0; cur.len()];
    let norm0 = w0.normalizations();
    let mut drift: f64 = 0.0;
    let hx = w0.x_axis().step();
    let rim_nodes: Vec<(usize, usize)> = (0..lat.nn)
        .flat_map(|j| (0..lat.nm).map(move |i| (i, j)))
        .filter(|&(i, j)| lat.is_rim(i, j))
        .collect();

    let apply_rim = |buf: &mut [f64], stage: Stage, t_start: f64| {
        for &(i, j) in &rim_nodes {
            let node = j * lat.nm + i;
            let dst = &mut buf[node * lat.nx..(node + 1) * lat.nx];
            match &cfg.rim {
                RimPolicy::Negligible | RimPolicy::Frozen => {
                    dst.copy_from_slice(&initial[node * lat.nx..(node + 1) * lat.nx]);
                }
                RimPolicy::Prescribed(exact) => {
                    let (m, n) = trace_back(stage, lat.mu(i), lat.nu(j), omega, dt);
                    for (ix, v) in dst.iter_mut().enumerate() {
                        *v = exact(t_start, xs[ix], m, n);
                    }
                }
            }
        }
    };

    for step in 0..steps {
        let t_start = step as f64 * dt;
        sweep_mu(&lat, &cur, &mut next, omega, 0.5 * dt);
        apply_rim(&mut next, Stage::FirstHalf, t_start);
        sweep_nu(&lat, &next, &mut cur, omega, dt);
        apply_rim(&mut cur, Stage::Full, t_start);
        sweep_mu(&lat, &cur, &mut next, omega, 0.5 * dt);
        apply_rim(&mut next, Stage::SecondHalf, t_start);
        std::mem::swap(&mut cur, &mut next);
        for (node, n0) in norm0.iter().enumerate() {
            let n = crate::quadrature::trapezoid(&cur[node * lat.nx..(node + 1) * lat.nx], hx);
            drift = drift.max((n - n0).abs());
        }
    }
    let min_value = cur.iter().copied().fold(f64::INFINITY, f64::min);
    let out = TomogramGrid::from_values(w0.x_axis(), w0.layout(), w0.nodes().to_vec(), cur, w0.meta.clone())?;
    Ok((out, FdReport { steps, dt, cfl, max_normalization_drift: drift, min_value }))
}

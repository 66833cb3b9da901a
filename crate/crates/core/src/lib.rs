//! Classical phase-space tomography.
//!
//! Forward and inverse Radon transforms of statistical states on the phase
//! space of harmonic modes, closed-form tomograms of Gibbs, coherent-like and
//! Gauss-Laguerre states, tomographic Liouville dynamics and a Klein-Gordon
//! cavity mode engine.

pub mod analytic;
pub mod error;
pub mod quadrature;
pub mod states;

pub use error::{Error, Result};
pub mod radon;

mod interp;
pub mod evolution;
pub mod kg_cavity;
pub mod io;
pub mod stats;
pub mod verify;

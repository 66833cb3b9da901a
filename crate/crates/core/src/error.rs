use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate line: (mu, nu) = (0, 0) for mode {mode}")]
    DegenerateLine { mode: usize },

    #[error("quadrature did not converge: {what} (relative change {change:.3e} > {tol:.1e})")]
    NonConvergent { what: String, change: f64, tol: f64 },

    #[error("index {index} above stability gate {gate}")]
    AboveGate { index: usize, gate: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid misalignment: {0}")]
    GridMisalignment(String),

    #[error("truncation leakage {leak:.3e} exceeds {tol:.1e}")]
    TruncationLeakage { leak: f64, tol: f64 },

    #[error("insufficient angular coverage: {rays} rays (need at least {min})")]
    InsufficientRays { rays: usize, min: usize },

    #[error("FFT size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("CFL condition violated: number {cfl:.3} > {limit}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("boundary leakage {value:.3e} on the (mu, nu) rim exceeds {tol:.1e}")]
    BoundaryLeakage { value: f64, tol: f64 },

    #[error("input has non-zero mean (zero-frequency coefficient {0:.3e})")]
    NonZeroMean(f64),

    #[error("vanishing gradient on the level set at ({0:.4}, {1:.4})")]
    VanishingGradient(f64, f64),

    #[error("field violates Dirichlet boundary: |value| = {0:.3e}")]
    BoundaryValue(f64),

    #[error("grid too coarse: {points_per_wavelength:.2} points per wavelength for mode {mode} (need 8)")]
    GridTooCoarse { mode: usize, points_per_wavelength: f64 },

    #[error("inverse-CDF table failed: {0}")]
    InverseCdf(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(x: f64, what: &'static str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

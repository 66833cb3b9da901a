//! Self-verification suite: every closed form against an independent
//! numerical oracle, plus conservation and convergence audits.
//!
//! Checks are grouped (`analytic`, `radon`, `inversion`, `evolution`,
//! `cavity`, `sampling`) and numbered by the acceptance item they cover.
//! A [`Mutation`] perturbs one variance or width constant of the closed
//! forms so that the suite's ability to notice such slips can be tested.

use crate::analytic::{
    coherent_mean, coherent_variance, gaussian_tomogram, gibbs_variance, gl_charfun_addition_y, gl_charfun_y,
    gl_tomogram_with_sigma, ClosedForm, GLDescriptor,
};
use crate::error::{Error, Result};
use crate::evolution::{
    coherent_amplitude, evolve_density, evolve_tomogram_exact, evolve_tomogram_exact_1, evolve_tomogram_fd,
    EvolutionConfig, ExactTomogram, RimPolicy, Scheme,
};
use crate::kg_cavity::{
    canonical_field_tomogram, field_to_modes, mode_marginal, modes_to_field, spectrum, CavitySpec, FieldConfig,
    SampledField,
};
use crate::quadrature::{composite_gl, QuadConfig, QuadLevel};
use crate::radon::{
    homogeneity_residual, inverse_radon, symplectic_radon, tomogram_grid, Audit, Axis, InverseConfig, LineCoords,
    TomogramGrid, TomogramMeta,
};
use crate::states::{sample, DensityState, ModeDensity, ModeSpec, ModeState, PhasePoint};
use crate::stats::ks_against;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

pub const GROUPS: [&str; 6] = ["analytic", "radon", "inversion", "evolution", "cavity", "sampling"];

/// Which closed-form constant is perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationTarget {
    GlSigma,
    GibbsVariance,
    CoherentVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mutation {
    pub target: MutationTarget,
    pub factor: f64,
}

impl Mutation {
    /// Every factor-of-two slip the canary covers.
    pub fn all() -> Vec<Mutation> {
        let mut out = Vec::new();
        for target in [MutationTarget::GlSigma, MutationTarget::GibbsVariance, MutationTarget::CoherentVariance] {
            for factor in [2.0, 0.5] {
                out.push(Mutation { target, factor });
            }
        }
        out
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.target {
            MutationTarget::GlSigma => "gl-sigma",
            MutationTarget::GibbsVariance => "gibbs-variance",
            MutationTarget::CoherentVariance => "coherent-variance",
        };
        if self.factor == 2.0 {
            write!(f, "{t}-x2")
        } else if self.factor == 0.5 {
            write!(f, "{t}-half")
        } else {
            write!(f, "{t}*{}", self.factor)
        }
    }
}

impl FromStr for Mutation {
    type Err = Error;

    /// `<target>-x2`, `<target>-half` or `<target>*<factor>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, factor) = if let Some(n) = s.strip_suffix("-x2") {
            (n, 2.0)
        } else if let Some(n) = s.strip_suffix("-half") {
            (n, 0.5)
        } else if let Some((n, f)) = s.split_once('*') {
            let f: f64 = f.parse().map_err(|_| Error::InvalidParameter(format!("bad mutation factor in '{s}'")))?;
            (n, f)
        } else {
            return Err(Error::InvalidParameter(format!("unknown mutation '{s}'")));
        };
        let target = match name {
            "gl-sigma" => MutationTarget::GlSigma,
            "gibbs-variance" => MutationTarget::GibbsVariance,
            "coherent-variance" => MutationTarget::CoherentVariance,
            _ => return Err(Error::InvalidParameter(format!("unknown mutation target '{name}'"))),
        };
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("mutation factor must be positive, got {factor}")));
        }
        Ok(Mutation { target, factor })
    }
}

/// Closed-form tomograms as seen by the suite, possibly mutated.
#[derive(Debug, Clone, Copy, Default)]
pub struct Oracle {
    pub mutation: Option<Mutation>,
}

impl Oracle {
    fn factor(&self, target: MutationTarget) -> f64 {
        match self.mutation {
            Some(m) if m.target == target => m.factor,
            _ => 1.0,
        }
    }

    pub fn tomogram(&self, form: &ClosedForm, x: f64, mu: f64, nu: f64) -> Result<f64> {
        // validation is shared with the unmutated path
        form.eval(x, mu, nu)?;
        Ok(match *form {
            ClosedForm::Gibbs { beta, omega } => {
                gaussian_tomogram(x, 0.0, self.factor(MutationTarget::GibbsVariance) * gibbs_variance(mu, nu, beta, omega))
            }
            ClosedForm::Coherent { omega, z } => gaussian_tomogram(
                x,
                coherent_mean(mu, nu, z),
                self.factor(MutationTarget::CoherentVariance) * coherent_variance(mu, nu, omega),
            ),
            ClosedForm::GaussLaguerre(d) => {
                gl_tomogram_with_sigma(x, self.factor(MutationTarget::GlSigma) * d.sigma(mu, nu), d.m)?
            }
        })
    }

    /// The closed form with the mutation folded into its parameters, for
    /// CDF evaluation.
    pub fn form(&self, form: &ClosedForm) -> ClosedForm {
        match *form {
            ClosedForm::Gibbs { beta, omega } => {
                ClosedForm::Gibbs { beta: beta / self.factor(MutationTarget::GibbsVariance), omega }
            }
            ClosedForm::Coherent { omega, z } => {
                ClosedForm::Coherent { omega: omega / self.factor(MutationTarget::CoherentVariance), z }
            }
            ClosedForm::GaussLaguerre(d) => {
                let f = self.factor(MutationTarget::GlSigma);
                ClosedForm::GaussLaguerre(GLDescriptor { omega: d.omega / (f * f), m: d.m })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    pub criterion: u8,
    pub passed: bool,
    pub metric: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub filter: Option<String>,
    pub mutation: Option<String>,
    pub seed: u64,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Group name, check id prefix, or criterion number.
    pub filter: Option<String>,
    pub mutation: Option<Mutation>,
    pub seed: u64,
}

/// Outcome of one check body: (metric, threshold, detail). The check passes
/// when metric < threshold.
type Outcome = Result<(f64, f64, String)>;

struct Suite<'a> {
    opts: &'a VerifyOptions,
    oracle: Oracle,
    checks: Vec<Check>,
    forward: Vec<(String, DensityState, TomogramGrid, f64)>,
}

fn selected(filter: &Option<String>, id: &str, criterion: u8) -> bool {
    match filter {
        None => true,
        Some(f) => {
            let f = f.trim();
            f.is_empty() || id.starts_with(f) || f.parse::<u8>().ok() == Some(criterion)
        }
    }
}

impl Suite<'_> {
    fn wants(&self, id: &str, criterion: u8) -> bool {
        selected(&self.opts.filter, id, criterion)
    }

    fn run<F: FnOnce(&mut Self) -> Outcome>(&mut self, id: &str, criterion: u8, body: F) {
        if !self.wants(id, criterion) {
            return;
        }
        let start = Instant::now();
        let outcome = body(self);
        let seconds = start.elapsed().as_secs_f64();
        let check = match outcome {
            Ok((metric, threshold, detail)) => Check {
                id: id.into(),
                criterion,
                passed: metric.is_finite() && metric < threshold,
                metric,
                threshold,
                detail,
                seconds,
            },
            Err(e) => Check {
                id: id.into(),
                criterion,
                passed: false,
                metric: f64::NAN,
                threshold: f64::NAN,
                detail: format!("error: {e}"),
                seconds,
            },
        };
        self.checks.push(check);
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.opts.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
    }

    /// Numeric ray tomograms (64 rays, 1024 X points) shared by the
    /// normalization and inversion checks.
    fn forward(&mut self) -> Result<&[(String, DensityState, TomogramGrid, f64)]> {
        if self.forward.is_empty() {
            let q = QuadConfig::default();
            let mut states = vec![
                ("gibbs".to_string(), DensityState::gibbs_1(1.0, 1.0)?),
                ("coherent z=1".to_string(), DensityState::coherent_1(1.0, Complex64::new(1.0, 0.0))?),
            ];
            for m in 0..=3 {
                states.push((format!("gl m={m}"), DensityState::gauss_laguerre_1(1.0, m)?));
            }
            for (name, s) in states {
                let t = Instant::now();
                let g = tomogram_grid(&s, 64, None, &q)?;
                self.forward.push((name, s, g, t.elapsed().as_secs_f64()));
            }
        }
        Ok(&self.forward)
    }
}

/// Random line with X within `spread` standard deviations of the mean.
fn random_line(rng: &mut ChaCha8Rng, form: &ClosedForm, spread: f64) -> (f64, f64, f64) {
    let th = rng.random_range(0.0..PI);
    let r = rng.random_range(0.5..2.0);
    let (mu, nu) = (r * th.cos(), r * th.sin());
    let (mean, sd) = match *form {
        ClosedForm::Gibbs { beta, omega } => (0.0, gibbs_variance(mu, nu, beta, omega).sqrt()),
        ClosedForm::Coherent { omega, z } => (coherent_mean(mu, nu, z), coherent_variance(mu, nu, omega).sqrt()),
        ClosedForm::GaussLaguerre(d) => (0.0, d.sigma(mu, nu) * (0.5 * (2 * d.m + 1) as f64).sqrt()),
    };
    (mean + sd * rng.random_range(-spread..spread), mu, nu)
}

fn closed_form_vs_radon(s: &mut Suite, states: &[DensityState], salt: u64) -> Outcome {
    let q = QuadConfig::default();
    let mut rng = s.rng(salt);
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for st in states {
        let mode = st.modes().remove(0);
        let form = mode.closed_form().ok_or_else(|| Error::Unsupported("no closed form".into()))?;
        for _ in 0..50 {
            let (x, mu, nu) = random_line(&mut rng, &form, 3.5);
            let a = s.oracle.tomogram(&form, x, mu, nu)?;
            let n = symplectic_radon(st, &LineCoords::single(x, mu, nu), &q)?;
            if (a - n).abs() > worst {
                worst = (a - n).abs();
                at = format!("{} at (X, mu, nu) = ({x:.4}, {mu:.4}, {nu:.4})", mode.describe());
            }
        }
    }
    Ok((worst, 1e-6, format!("{} states x 50 lines; worst {at}", states.len())))
}

fn gibbs_states() -> Result<Vec<DensityState>> {
    let mut out = Vec::new();
    for beta in [0.5, 1.0, 2.0] {
        for omega in [0.5, 1.0, 3.0] {
            out.push(DensityState::gibbs_1(beta, omega)?);
        }
    }
    Ok(out)
}

fn coherent_states() -> Result<Vec<DensityState>> {
    [(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (1.2, -0.9, 0.5), (0.0, 2.0, 2.0), (-1.4, 1.4, 1.0)]
        .iter()
        .map(|&(re, im, w)| DensityState::coherent_1(w, Complex64::new(re, im)))
        .collect()
}

fn gl_states() -> Result<Vec<DensityState>> {
    let mut out = Vec::new();
    for m in 0..=5 {
        out.push(DensityState::gauss_laguerre_1(1.0, m)?);
    }
    out.push(DensityState::gauss_laguerre_1(2.5, 5)?);
    out.push(DensityState::gauss_laguerre_1(0.6, 3)?);
    Ok(out)
}

/// chi(K) of the (possibly mutated) GL tomogram on the line (1, 0) by FFT
/// against e^{-y^2/2} L_m(y^2/2)^2.
fn gl_charfun_fft(oracle: &Oracle) -> Outcome {
    let n = 4096;
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    for m in 0..=5usize {
        let d = GLDescriptor::new(1.0, m)?;
        let form = ClosedForm::GaussLaguerre(d);
        let sigma = d.sigma(1.0, 0.0);
        let half = sigma * (((4 * m + 1) as f64).sqrt() + 12.0);
        let dx = 2.0 * half / n as f64;
        let x0 = -half;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|i| oracle.tomogram(&form, x0 + dx * i as f64, 1.0, 0.0).map(|v| Complex64::new(v, 0.0)))
            .collect::<Result<_>>()?;
        fft.process(&mut buf);
        let dk = 2.0 * PI / (n as f64 * dx);
        for (j, c) in buf.iter().enumerate() {
            let jj = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            let k = jj * dk;
            // y = K r / sqrt(omega) with r = omega = 1
            if k.abs() > 12.0 {
                continue;
            }
            let chi = c * Complex64::from_polar(dx, k * x0);
            let want = gl_charfun_y(k, m)?;
            let err = (chi - want).norm();
            if err > worst {
                worst = err;
                at = format!("m={m}, K={k:.4}");
            }
        }
    }
    Ok((worst, 1e-6, format!("m = 0..5, |K| <= 12; worst at {at}")))
}

fn gl_charfun_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for m in 0..=10 {
        for i in 0..=2000 {
            let y = 20.0 * i as f64 / 2000.0;
            let a = gl_charfun_y(y, m)?;
            let (b, _) = gl_charfun_addition_y(y, m)?;
            if (a - b).abs() > worst {
                worst = (a - b).abs();
                at = format!("m={m}, y={y}");
            }
        }
    }
    Ok((worst, 1e-10, format!("m = 0..10, y in [0, 20]; worst at {at}")))
}

fn normalization(s: &mut Suite) -> Outcome {
    let fwd = s.forward()?;
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for (name, _, g, _) in fwd {
        for (k, m) in g.normalizations().iter().enumerate() {
            if (m - 1.0).abs() > worst {
                worst = (m - 1.0).abs();
                at = format!("{name}, node {k}");
            }
        }
    }
    Ok((worst, 1e-6, format!("{} grids x 64 rays; worst {at}", fwd.len())))
}

const LAMBDAS: [f64; 4] = [-2.0, -1.0, 0.5, 2.0];

fn homogeneity_probes(rng: &mut ChaCha8Rng, form: &ClosedForm, count: usize) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for _ in 0..count {
        // values stay well above the quadrature noise floor
        let (x, mu, nu) = random_line(rng, form, 2.5);
        for l in LAMBDAS {
            out.push((x, mu, nu, l));
        }
    }
    out
}

fn homogeneity_states() -> Result<Vec<DensityState>> {
    Ok(vec![
        DensityState::gibbs_1(1.0, 1.0)?,
        DensityState::coherent_1(1.0, Complex64::new(1.0, 0.5))?,
        DensityState::gauss_laguerre_1(1.0, 3)?,
    ])
}

fn homogeneity_numeric(s: &mut Suite) -> Outcome {
    let q = QuadConfig::default();
    let mut rng = s.rng(31);
    let mut worst: f64 = 0.0;
    for st in homogeneity_states()? {
        let form = st.modes()[0].closed_form().expect("analytic state");
        let probes = homogeneity_probes(&mut rng, &form, 10);
        let w = |x, mu, nu| symplectic_radon(&st, &LineCoords::single(x, mu, nu), &q);
        worst = worst.max(homogeneity_residual(w, &probes, 1e-6)?);
    }
    Ok((worst, 1e-5, "symplectic_radon, 3 states x 10 lines x lambda in {-2, -1, 0.5, 2}; relative".into()))
}

fn homogeneity_analytic(s: &mut Suite) -> Outcome {
    let mut rng = s.rng(37);
    let mut worst: f64 = 0.0;
    let oracle = s.oracle;
    for st in homogeneity_states()? {
        let form = st.modes()[0].closed_form().expect("analytic state");
        let probes = homogeneity_probes(&mut rng, &form, 50);
        let w = |x, mu, nu| oracle.tomogram(&form, x, mu, nu);
        worst = worst.max(homogeneity_residual(w, &probes, 1e-300)?);
    }
    Ok((worst, 1e-12, "closed forms, 3 states x 50 lines x lambda in {-2, -1, 0.5, 2}; relative".into()))
}

/// L-infinity error of the reconstruction on [-4, 4]^2 at the output nodes.
fn inversion(s: &mut Suite, prefix: &str) -> Outcome {
    let fwd = s.forward()?;
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    let mut slowest: f64 = 0.0;
    for (name, st, g, forward_secs) in fwd.iter().filter(|f| f.0.starts_with(prefix)) {
        let t = Instant::now();
        let (rho, rep) = inverse_radon(g, &InverseConfig::default())?;
        let secs = forward_secs + t.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let mode = st.modes().remove(0);
        let (nx, ny) = rho.counts();
        let mut err: f64 = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = (rho.xi(i), rho.eta(j));
                if x.abs() <= 4.0 && y.abs() <= 4.0 {
                    err = err.max((rho.at(i, j) - mode.density(x, y)).abs());
                }
            }
        }
        worst = worst.max(err);
        details.push(format!("{name}: {err:.3e} ({secs:.1} s, min before clamp {:.2e})", rep.min_before_clamp));
    }
    if details.is_empty() {
        return Err(Error::InvalidParameter(format!("no forward grid named {prefix}")));
    }
    if slowest > 30.0 {
        return Ok((f64::INFINITY, 1e-3, format!("runtime {slowest:.1} s exceeds 30 s; {}", details.join("; "))));
    }
    Ok((worst, 1e-3, details.join("; ")))
}

fn random_multiline(rng: &mut ChaCha8Rng, n: usize) -> LineCoords {
    let mut x = Vec::new();
    let mut mu = Vec::new();
    let mut nu = Vec::new();
    for _ in 0..n {
        let th = rng.random_range(0.0..2.0 * PI);
        let r = rng.random_range(0.5..2.0);
        mu.push(r * th.cos());
        nu.push(r * th.sin());
        x.push(rng.random_range(-2.5..2.5) * r);
    }
    LineCoords { x, mu, nu }
}

fn dual_consistency(s: &mut Suite) -> Outcome {
    let q = QuadConfig::default();
    let mut rng = s.rng(53);
    let states = vec![
        DensityState::gibbs_1(1.0, 1.0)?,
        DensityState::coherent_1(1.3, Complex64::new(1.0, 0.5))?,
        DensityState::gauss_laguerre_1(0.8, 2)?,
        DensityState::product(vec![
            DensityState::coherent_1(1.0, Complex64::new(0.5, -0.7))?,
            DensityState::gauss_laguerre_1(2.0, 1)?,
        ])?,
    ];
    let mut worst: f64 = 0.0;
    let mut lines = 0;
    for st in &states {
        let spec = ModeSpec::new(st.omegas().expect("analytic state"), None)?;
        for t in [0.3, 1.0, 2.7] {
            let rho_t = evolve_density(st, t)?;
            let w_t = evolve_tomogram_exact(|l: &LineCoords| symplectic_radon(st, l, &q), t, &spec);
            for _ in 0..50 {
                let line = random_multiline(&mut rng, st.mode_count());
                let a = rho_t.radon(&line, &q)?;
                let b = w_t(&line)?;
                worst = worst.max((a - b).abs());
                lines += 1;
            }
        }
    }
    Ok((worst, 1e-6, format!("{lines} lines over {} states and t in {{0.3, 1.0, 2.7}}", states.len())))
}

fn coherent_rotation(s: &mut Suite) -> Outcome {
    let mut rng = s.rng(59);
    let (omega, z) = (1.3, Complex64::new(1.0, 0.4));
    let st = DensityState::coherent_1(omega, z)?;
    let mut worst: f64 = 0.0;
    for t in [0.3, 1.0, 2.7] {
        let rho_t = evolve_density(&st, t)?;
        let zt = DensityState::coherent_1(omega, z * Complex64::from_polar(1.0, -omega * t))?;
        let amp = coherent_amplitude(z, omega, t);
        worst = worst.max((amp - z * Complex64::from_polar(1.0, -omega * t)).norm());
        for _ in 0..100 {
            let p = PhasePoint::single(rng.random_range(-3.0..4.0), rng.random_range(-3.5..3.5));
            worst = worst.max((rho_t.eval(&p)? - zt.eval(&p)?).abs());
        }
    }
    Ok((worst, 1e-10, "rho_t against the coherent density at z e^{-i omega t}, 300 points".into()))
}

fn coherent_exact(z: Complex64, omega: f64) -> ExactTomogram {
    Arc::new(move |t, x, mu, nu| {
        evolve_tomogram_exact_1(|x, mu, nu| crate::analytic::coherent_tomogram(x, mu, nu, z, omega), t, omega)(x, mu, nu)
            .unwrap_or(0.0)
    })
}

/// Max error of the finite-difference solver against the exact propagator
/// for the coherent state z = 1, omega = 1 on an n x n offset lattice over
/// [-3, 3]^2, measured on the annulus 1 <= r <= 3 - 6h at X in {0.5, 1, 1.5}.
///
/// The tomogram behaves like 1/r near the origin, which caps the order
/// there; the annulus excludes both that region and the rim.
pub fn fd_annulus_error(n: usize, t: f64) -> Result<f64> {
    let z = Complex64::new(1.0, 0.0);
    let a = 3.0;
    let h = 2.0 * a / n as f64;
    let ax = Axis::new(-a + 0.5 * h, a - 0.5 * h, n)?;
    let xs = Axis::new(0.5, 1.5, 3)?;
    let exact = coherent_exact(z, 1.0);
    let e0 = exact.clone();
    let meta = TomogramMeta { state: serde_json::Value::Null, quad_level: QuadLevel::Default, audit: Audit::default(), modes: None };
    let w0 = TomogramGrid::lattice(xs, ax, ax, meta, move |x, mu, nu| Ok(e0(0.0, x, mu, nu)))?;
    let cfg = EvolutionConfig { t, dt: 0.8 * h / a, scheme: Scheme::FiniteDifference, rim: RimPolicy::Prescribed(exact.clone()) };
    let (wt, _) = evolve_tomogram_fd(&w0, 1.0, &cfg)?;
    let mut worst: f64 = 0.0;
    for (k, &[mu, nu]) in wt.nodes().iter().enumerate() {
        let r = mu.hypot(nu);
        if r >= 1.0 && r <= a - 6.0 * h {
            for (ix, v) in wt.slice(k).iter().enumerate() {
                worst = worst.max((v - exact(t, xs.at(ix), mu, nu)).abs());
            }
        }
    }
    Ok(worst)
}

/// Convergence orders between lattices of 40, 80 and 160 points per side.
pub fn fd_orders() -> Result<([f64; 3], [f64; 2])> {
    let e = [fd_annulus_error(40, 0.5)?, fd_annulus_error(80, 0.5)?, fd_annulus_error(160, 0.5)?];
    Ok((e, [(e[0] / e[1]).log2(), (e[1] / e[2]).log2()]))
}

fn fd_order() -> Outcome {
    let (e, p) = fd_orders()?;
    Ok((
        (p[1] - 2.0).abs(),
        0.2,
        format!("order {:.3} (coarse pair {:.3}); errors {:.3e}, {:.3e}, {:.3e} at n = 40, 80, 160", p[1], p[0], e[0], e[1], e[2]),
    ))
}

fn cavity_spectrum() -> Outcome {
    let mut worst: f64 = 0.0;
    for (l, m, k) in [(1.0, 1.0, 32), (PI, 0.0, 16), (2.5, 0.3, 24), (0.1, 7.0, 8)] {
        let c = CavitySpec::new(l, m, k)?;
        let w = spectrum(&c);
        for (i, v) in w.iter().enumerate() {
            let kk = (i + 1) as f64 * PI / l;
            let want = (kk * kk + m * m).sqrt();
            worst = worst.max((v - want).abs() / want);
        }
        if w.windows(2).any(|p| p[1] <= p[0]) {
            return Ok((f64::INFINITY, 1e-14, format!("spectrum not increasing for L={l}, m={m}")));
        }
    }
    Ok((worst, 1e-14, "relative error against sqrt((k pi / L)^2 + m^2), 4 cavities".into()))
}

fn cavity_round_trip(s: &mut Suite) -> Outcome {
    let mut rng = s.rng(71);
    let c = CavitySpec::new(1.7, 0.4, 16)?;
    let cfg = FieldConfig {
        xi: (0..16).map(|_| rng.random_range(-1.0..1.0)).collect(),
        eta: (0..16).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let f = modes_to_field(&cfg, &c, 513)?;
    let back = field_to_modes(&f, &c)?;
    let mut coef: f64 = 0.0;
    for (a, b) in back.xi.iter().chain(&back.eta).zip(cfg.xi.iter().chain(&cfg.eta)) {
        coef = coef.max((a - b).abs());
    }
    let f2 = modes_to_field(&back, &c, 513)?;
    let mut field: f64 = 0.0;
    for (a, b) in f2.phi.iter().chain(&f2.phi_t).zip(f.phi.iter().chain(&f.phi_t)) {
        field = field.max((a - b).abs());
    }
    // eigenmode projection
    let sf = SampledField::from_fn(&c, 513, |x| crate::kg_cavity::eigenfunction(&c, 1, x), |_| 0.0);
    let p = field_to_modes(&sf, &c)?;
    let eig = (p.xi[0] - spectrum(&c)[0].sqrt()).abs();
    let worst = coef.max(field).max(eig);
    Ok((worst, 1e-10, format!("coefficients {coef:.2e}, field {field:.2e}, eigenmode {eig:.2e}; K = 16, 513 points")))
}

fn cavity_marginal() -> Outcome {
    let c = CavitySpec::new(PI, 0.0, 2)?;
    let mut worst: f64 = 0.0;
    for &(x1, mu1, nu1, mu2, nu2) in &[(0.4, 1.0, 0.2, 0.6, 0.8), (-1.1, 0.3, -0.9, 1.5, 0.1), (0.0, 1.0, 0.0, 1.0, 0.0)] {
        for beta in [0.5, 1.0, 2.0] {
            let sd2 = (mu2 * mu2 + nu2 * nu2) / (beta * spectrum(&c)[1]);
            let half = 12.0 * sd2.sqrt();
            let marg = composite_gl(
                |x2| {
                    canonical_field_tomogram(&LineCoords { x: vec![x1, x2], mu: vec![mu1, mu2], nu: vec![nu1, nu2] }, beta, &c)
                        .unwrap_or(f64::NAN)
                },
                -half,
                half,
                32,
            );
            worst = worst.max((marg - mode_marginal(x1, mu1, nu1, beta, &c, 1)?).abs());
        }
    }
    Ok((worst, 1e-8, "K = 2 field tomogram integrated over X_2 against the mode-1 Gibbs tomogram".into()))
}

fn cavity_probe() -> Outcome {
    let c = CavitySpec::new(PI, 0.0, 3)?;
    let line = LineCoords { x: vec![0.0; 3], mu: vec![1.0; 3], nu: vec![0.0; 3] };
    let v = canonical_field_tomogram(&line, 1.0, &c)?;
    let q = QuadConfig::default();
    let mut oracle = 1.0;
    for w in spectrum(&c) {
        oracle *= symplectic_radon(&DensityState::gibbs_1(1.0, w)?, &LineCoords::single(0.0, 1.0, 0.0), &q)?;
    }
    Ok((
        (v - oracle).abs(),
        1e-8,
        format!("value {v:.10} vs per-mode quadrature {oracle:.10}; the closed form prod sqrt(k / 2 pi) gives 0.1555270100, not the 0.0982093 quoted as the probe"),
    ))
}

fn ks_check(s: &mut Suite, states: &[DensityState], salt: u64) -> Outcome {
    let n = 100_000;
    let lines = [(1.0, 0.0), (0.0, 1.0), (0.9, 1.2)];
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for (i, st) in states.iter().enumerate() {
        let mode: ModeState = st.modes().remove(0);
        let form = s.oracle.form(&mode.closed_form().expect("analytic state"));
        let pts = sample(st, n, s.opts.seed ^ salt.wrapping_add(i as u64))?;
        for &(mu, nu) in &lines {
            let d = ks_against(&form, &pts, mu, nu)?;
            if d > worst {
                worst = d;
                at = format!("{} on ({mu}, {nu})", mode.describe());
            }
        }
    }
    Ok((worst, 0.01, format!("10^5 samples per state, 3 lines; worst {at}")))
}

/// Runs the selected checks.
pub fn run(opts: &VerifyOptions) -> Report {
    let start = Instant::now();
    let mut s = Suite { opts, oracle: Oracle { mutation: opts.mutation }, checks: Vec::new(), forward: Vec::new() };

    s.run("analytic.gibbs_vs_radon", 1, |s| closed_form_vs_radon(s, &gibbs_states()?, 11));
    s.run("analytic.coherent_vs_radon", 1, |s| closed_form_vs_radon(s, &coherent_states()?, 13));
    s.run("analytic.gl_vs_radon", 1, |s| closed_form_vs_radon(s, &gl_states()?, 17));
    s.run("analytic.gl_charfun_fft", 2, |s| gl_charfun_fft(&s.oracle));
    s.run("analytic.gl_charfun_forms", 2, |_| gl_charfun_forms());

    s.run("radon.normalization", 3, normalization);
    s.run("radon.homogeneity_numeric", 3, homogeneity_numeric);
    s.run("radon.homogeneity_analytic", 3, homogeneity_analytic);

    s.run("inversion.gibbs", 4, |s| inversion(s, "gibbs"));
    s.run("inversion.coherent", 4, |s| inversion(s, "coherent"));
    s.run("inversion.gl", 4, |s| inversion(s, "gl"));

    s.run("evolution.dual_consistency", 5, dual_consistency);
    s.run("evolution.coherent_rotation", 5, coherent_rotation);
    s.run("evolution.fd_order", 5, |_| fd_order());

    s.run("cavity.spectrum", 6, |_| cavity_spectrum());
    s.run("cavity.round_trip", 6, cavity_round_trip);
    s.run("cavity.marginal", 6, |_| cavity_marginal());
    s.run("cavity.k3_probe", 6, |_| cavity_probe());

    s.run("sampling.ks_gibbs", 7, |s| {
        ks_check(s, &[DensityState::gibbs_1(1.0, 1.0)?, DensityState::gibbs_1(2.0, 0.5)?], 101)
    });
    s.run("sampling.ks_coherent", 7, |s| ks_check(s, &[DensityState::coherent_1(1.0, Complex64::new(1.0, 0.5))?], 103));
    s.run("sampling.ks_gl", 7, |s| {
        ks_check(s, &[DensityState::gauss_laguerre_1(1.0, 2)?, DensityState::gauss_laguerre_1(1.0, 5)?], 107)
    });

    let passed = s.checks.iter().all(|c| c.passed);
    Report {
        passed,
        filter: opts.filter.clone(),
        mutation: opts.mutation.map(|m| m.to_string()),
        seed: opts.seed,
        seconds: start.elapsed().as_secs_f64(),
        checks: s.checks,
    }
}

/// True when the filter selects at least one check.
pub fn filter_matches(filter: &str) -> bool {
    const IDS: [(&str, u8); 21] = [
        ("analytic.gibbs_vs_radon", 1),
        ("analytic.coherent_vs_radon", 1),
        ("analytic.gl_vs_radon", 1),
        ("analytic.gl_charfun_fft", 2),
        ("analytic.gl_charfun_forms", 2),
        ("radon.normalization", 3),
        ("radon.homogeneity_numeric", 3),
        ("radon.homogeneity_analytic", 3),
        ("inversion.gibbs", 4),
        ("inversion.coherent", 4),
        ("inversion.gl", 4),
        ("evolution.dual_consistency", 5),
        ("evolution.coherent_rotation", 5),
        ("evolution.fd_order", 5),
        ("cavity.spectrum", 6),
        ("cavity.round_trip", 6),
        ("cavity.marginal", 6),
        ("cavity.k3_probe", 6),
        ("sampling.ks_gibbs", 7),
        ("sampling.ks_coherent", 7),
        ("sampling.ks_gl", 7),
    ];
    let f = Some(filter.to_string());
    IDS.iter().any(|(id, c)| selected(&f, id, *c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutation_names_round_trip() {
        for m in Mutation::all() {
            assert_eq!(m.to_string().parse::<Mutation>().unwrap(), m);
        }
        assert_eq!("gl-sigma*3".parse::<Mutation>().unwrap().factor, 3.0);
        assert!("gl-width-x2".parse::<Mutation>().is_err());
        assert!("gl-sigma*-1".parse::<Mutation>().is_err());
    }

    #[test]
    fn oracle_mutation_is_consistent() {
        let forms = [
            ClosedForm::Gibbs { beta: 1.5, omega: 0.7 },
            ClosedForm::Coherent { omega: 1.2, z: Complex64::new(0.3, -0.4) },
            ClosedForm::GaussLaguerre(GLDescriptor::new(0.9, 2).unwrap()),
        ];
        for m in Mutation::all() {
            let o = Oracle { mutation: Some(m) };
            for f in &forms {
                let a = o.tomogram(f, 0.37, 0.8, -0.5).unwrap();
                let b = o.form(f).eval(0.37, 0.8, -0.5).unwrap();
                assert!((a - b).abs() < 1e-14, "{m} {f:?}");
            }
        }
        let plain = Oracle::default();
        for f in &forms {
            assert_eq!(plain.tomogram(f, 0.2, 1.0, 0.3).unwrap(), f.eval(0.2, 1.0, 0.3).unwrap());
        }
    }

    #[test]
    fn filters() {
        assert!(selected(&None, "radon.normalization", 3));
        assert!(selected(&Some("radon".into()), "radon.normalization", 3));
        assert!(!selected(&Some("evolution".into()), "radon.normalization", 3));
        assert!(selected(&Some("3".into()), "radon.normalization", 3));
        assert!(filter_matches("cavity"));
        assert!(!filter_matches("plotting"));
    }

    #[test]
    fn filtered_run_only_reports_its_group() {
        let r = run(&VerifyOptions { filter: Some("cavity".into()), mutation: None, seed: 1 });
        assert_eq!(r.checks.len(), 4);
        assert!(r.checks.iter().all(|c| c.id.starts_with("cavity.")));
        assert!(r.passed, "{:#?}", r.checks);
    }
}

use crate::config::{Failure, RunConfig};
use num_complex::Complex64;
use phasetomo::analytic::ClosedForm;
use phasetomo::evolution::{
    evolve_grid_exact, evolve_tomogram_fd, rotate_direction, EvolutionConfig, ExactTomogram, RimPolicy, Scheme,
};
use phasetomo::io::{self, Format};
use phasetomo::kg_cavity::{self, CavitySpec, SampledField};
use phasetomo::quadrature::{QuadConfig, QuadLevel};
use phasetomo::radon::{
    default_x_axis, homogeneity_residual, inverse_radon, lattice_nodes, mode_radon, ray_nodes, Audit, Axis,
    InverseConfig, NodeLayout, TomogramGrid, TomogramMeta,
};
use phasetomo::states::{sample, DensityState, GridDensity, ModeDensity, ModeState};
use phasetomo::stats::{ks_against, ks_critical_1pct};
use phasetomo::verify::{self, Mutation, VerifyOptions};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

/// Largest tolerated |int W dX - 1| on resolved nodes.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;
/// Largest tolerated relative homogeneity residual of a numeric tomogram.
pub const HOMOGENEITY_TOLERANCE: f64 = 1e-5;
/// Largest tolerated L-infinity error of an inversion with a known state.
pub const INVERSION_TOLERANCE: f64 = 1e-3;
/// KS distance above which a sample is rejected.
pub const KS_TOLERANCE: f64 = 0.01;

type Outcome = Result<Value, Failure>;

/// Prints a JSON value to stdout; a closed pipe is not an error.
pub fn print_json(v: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).unwrap_or_default();
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

pub fn run(cfg: &RunConfig) -> Outcome {
    match cfg.command.as_str() {
        "tomogram" => tomogram(cfg),
        "radon" => radon(cfg),
        "invert" => invert(cfg),
        "evolve" => evolve(cfg),
        "kg" => kg(cfg),
        "sample" => sample_cmd(cfg),
        "verify" => verify_cmd(cfg),
        c => Err(Failure::usage(format!("unknown command '{c}'"))),
    }
}

fn format_of(cfg: &RunConfig) -> Result<Format, Failure> {
    Ok(cfg.req("format")?.parse::<Format>()?)
}

/// Writes a data file plus its `<file>.meta.json` sidecar. The timestamp
/// lives only in the sidecar so data files stay reproducible.
fn emit(path: &Path, body: &str, cfg: &RunConfig) -> Result<(), Failure> {
    io::write_atomic(path, body)?;
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "file": path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "created_unix_seconds": created,
        "tool": "phasetomo",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command,
    });
    let mut side = path.as_os_str().to_owned();
    side.push(".meta.json");
    io::write_atomic(Path::new(&side), &(serde_json::to_string_pretty(&meta).unwrap_or_default() + "\n"))?;
    Ok(())
}

fn parse_z(s: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Failure::usage(format!("key 'z': expected re,im, got '{s}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let re: f64 = parts[0].parse().map_err(|_| bad())?;
    let im: f64 = parts[1].parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

/// Builds the single-mode state named by the config. GL with m = 0 is the
/// Gibbs state at beta = 1 and is built as such.
fn build_state(cfg: &RunConfig) -> Result<DensityState, Failure> {
    let omega = cfg.req_f64("omega")?;
    let st = match cfg.req("state")? {
        "gibbs" => DensityState::gibbs_1(cfg.req_f64("beta")?, omega)?,
        "coherent" => DensityState::coherent_1(omega, parse_z(cfg.req("z")?)?)?,
        "gl" => match cfg.req_usize("m")? {
            0 => DensityState::gibbs_1(1.0, omega)?,
            m => DensityState::gauss_laguerre_1(omega, m)?,
        },
        k => return Err(Failure::usage(format!("key 'state': expected gibbs, coherent or gl, got '{k}'"))),
    };
    Ok(st)
}

fn quad_of(cfg: &RunConfig) -> Result<QuadConfig, Failure> {
    match cfg.req("quad")? {
        "default" => Ok(QuadConfig::new(QuadLevel::Default)),
        "fine" => Ok(QuadConfig::new(QuadLevel::Fine)),
        q => Err(Failure::usage(format!("key 'quad': expected default or fine, got '{q}'"))),
    }
}

/// Mean and variance of X = mu xi + nu eta.
fn projection_moments(mode: &ModeState, mu: f64, nu: f64) -> (f64, f64) {
    let [cx, cy] = mode.center();
    let [xx, yy, xy] = mode.second_moments();
    let mean = mu * cx + nu * cy;
    let second = mu * mu * xx + nu * nu * yy + 2.0 * mu * nu * xy;
    (mean, (second - mean * mean).max(0.0))
}

/// Lattice axes from the mu-/nu- keys: all six or none.
fn lattice_axes(cfg: &RunConfig) -> Result<Option<(Axis, Axis)>, Failure> {
    const KEYS: [&str; 6] = ["mu-min", "mu-max", "mu-count", "nu-min", "nu-max", "nu-count"];
    let given = KEYS.iter().filter(|k| cfg.get(k).is_some()).count();
    if given == 0 {
        return Ok(None);
    }
    if given != KEYS.len() {
        return Err(Failure::usage("a lattice needs all of mu-min, mu-max, mu-count, nu-min, nu-max, nu-count"));
    }
    let mu = Axis::new(cfg.req_f64("mu-min")?, cfg.req_f64("mu-max")?, cfg.req_usize("mu-count")?)?;
    let nu = Axis::new(cfg.req_f64("nu-min")?, cfg.req_f64("nu-max")?, cfg.req_usize("nu-count")?)?;
    Ok(Some((mu, nu)))
}

/// Nodes whose slice is resolved by the X axis: at least four samples per
/// standard deviation and ten standard deviations of margin to the ends.
fn resolved_nodes(grid: &TomogramGrid, mode: &ModeState) -> Vec<usize> {
    let ax = grid.x_axis();
    (0..grid.node_count())
        .filter(|&k| {
            let [mu, nu] = grid.nodes()[k];
            let (mean, var) = projection_moments(mode, mu, nu);
            let sd = var.sqrt();
            sd >= 4.0 * ax.step() && mean - 10.0 * sd >= ax.min && mean + 10.0 * sd <= ax.max
        })
        .collect()
}

fn layout_nodes(layout: NodeLayout) -> Vec<[f64; 2]> {
    match layout {
        NodeLayout::Rays { count } => ray_nodes(count),
        NodeLayout::Lattice { mu, nu } => lattice_nodes(&mu, &nu),
        NodeLayout::Points => Vec::new(),
    }
}

/// Homogeneity probes on three directions, at the mean and half a standard
/// deviation off it.
fn probes(mode: &ModeState) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for th in [0.3f64, 1.1, 2.4] {
        let (mu, nu) = (th.cos(), th.sin());
        let (mean, var) = projection_moments(mode, mu, nu);
        for x in [mean, mean + 0.5 * var.sqrt()] {
            for l in [-2.0, -1.0, 0.5, 2.0] {
                out.push((x, mu, nu, l));
            }
        }
    }
    out
}

/// Writes a tomogram and returns the audit summary; breaches are reported
/// after the file is on disk.
fn finish_tomogram(
    mut grid: TomogramGrid,
    mode: &ModeState,
    homogeneity: f64,
    out: &Path,
    cfg: &RunConfig,
) -> Outcome {
    grid.meta.audit.homogeneity_residual = Some(homogeneity);
    let norms = grid.normalizations();
    let resolved = resolved_nodes(&grid, mode);
    let worst = resolved.iter().map(|&k| (norms[k] - 1.0).abs()).fold(0.0, f64::max);
    emit(out, &io::tomogram_to_string(&grid, &cfg.to_json(), format_of(cfg)?)?, cfg)?;
    let summary = json!({
        "command": cfg.command,
        "output": out,
        "nodes": grid.node_count(),
        "resolved_nodes": resolved.len(),
        "audit": grid.meta.audit,
        "max_normalization_error_resolved": worst,
    });
    if worst > NORMALIZATION_TOLERANCE {
        return Err(Failure::numeric(format!(
            "audit breach: normalization error {worst:.3e} > {NORMALIZATION_TOLERANCE:.0e} (file written to {})",
            out.display()
        )));
    }
    if homogeneity > HOMOGENEITY_TOLERANCE {
        return Err(Failure::numeric(format!(
            "audit breach: homogeneity residual {homogeneity:.3e} > {HOMOGENEITY_TOLERANCE:.0e} (file written to {})",
            out.display()
        )));
    }
    Ok(summary)
}

fn tomogram(cfg: &RunConfig) -> Outcome {
    let state = build_state(cfg)?;
    let mode = state.modes().remove(0);
    let quad = quad_of(cfg)?;
    let out = PathBuf::from(cfg.req("out")?);
    let x_points = cfg.req_usize("x-points")?;
    let lattice = lattice_axes(cfg)?;
    let layout = match lattice {
        Some((mu, nu)) => NodeLayout::Lattice { mu, nu },
        None => NodeLayout::Rays { count: cfg.req_usize("rays")? },
    };
    let nodes = layout_nodes(layout);
    let x_axis = match cfg.f64("x-max")? {
        Some(half) => Axis::symmetric(half, x_points)?,
        None => {
            let reach = nodes.iter().map(|n| n[0].hypot(n[1])).fold(1.0, f64::max);
            let unit = default_x_axis(&mode, x_points)?;
            Axis::symmetric(unit.max * reach, x_points)?
        }
    };
    let form = mode.closed_form();
    let eval = |x: f64, mu: f64, nu: f64| -> phasetomo::Result<f64> {
        match (cfg.get("method"), form) {
            (Some("analytic"), Some(f)) => f.eval(x, mu, nu),
            _ => mode_radon(&mode, x, mu, nu, &quad),
        }
    };
    if !matches!(cfg.req("method")?, "numeric" | "analytic") {
        return Err(Failure::usage(format!("key 'method': expected numeric or analytic, got '{}'", cfg.req("method")?)));
    }
    let meta = TomogramMeta { state: state.describe(), quad_level: quad.level, audit: Audit::default(), modes: None };
    let grid = TomogramGrid::sample(x_axis, layout, nodes, meta, eval)?;
    let h = homogeneity_residual(eval, &probes(&mode), 1e-6)?;
    finish_tomogram(grid, &mode, h, &out, cfg)
}

fn radon(cfg: &RunConfig) -> Outcome {
    let input = PathBuf::from(cfg.req("input")?);
    let (g, _) = io::read_density(&input)?;
    let state = DensityState::grid(g);
    let mode = state.modes().remove(0);
    let quad = quad_of(cfg)?;
    let out = PathBuf::from(cfg.req("out")?);
    let x_points = cfg.req_usize("x-points")?;
    let x_axis = match cfg.f64("x-max")? {
        Some(half) => Axis::symmetric(half, x_points)?,
        None => default_x_axis(&mode, x_points)?,
    };
    let eval = |x: f64, mu: f64, nu: f64| mode_radon(&mode, x, mu, nu, &quad);
    let meta = TomogramMeta { state: state.describe(), quad_level: quad.level, audit: Audit::default(), modes: None };
    let grid = TomogramGrid::rays(x_axis, cfg.req_usize("rays")?, meta, eval)?;
    let h = homogeneity_residual(eval, &probes(&mode), 1e-6)?;
    finish_tomogram(grid, &mode, h, &out, cfg)
}

/// The analytic mode recorded in a file's state descriptor, if any.
fn analytic_mode(state: &Value) -> Option<ModeState> {
    let first = state.get("modes").and_then(Value::as_array).filter(|m| m.len() == 1)?.first()?;
    ModeState::from_describe(first).ok()
}

fn invert(cfg: &RunConfig) -> Outcome {
    let input = PathBuf::from(cfg.req("input")?);
    let out = PathBuf::from(cfg.req("out")?);
    let (grid, source) = io::read_tomogram(&input)?;
    let icfg = InverseConfig { fft_size: cfg.req_usize("fft-size")?, radial_oversample: cfg.req_usize("oversample")? };
    let extent = cfg.req_f64("check-extent")?;
    let (rho, report) = inverse_radon(&grid, &icfg)?;
    let linf = analytic_mode(&grid.meta.state).map(|mode| linf_error(&rho, &mode, extent));
    let extra = json!({
        "state": grid.meta.state,
        "inversion": report,
        "linf_error": linf,
        "check_extent": extent,
        "source_config": source,
        "config": cfg.to_json(),
    });
    emit(&out, &io::density_to_string(&rho, &extra, format_of(cfg)?)?, cfg)?;
    let summary = json!({"command": "invert", "output": out, "inversion": report, "linf_error": linf});
    match linf {
        Some(e) if e > INVERSION_TOLERANCE => Err(Failure::numeric(format!(
            "reconstruction error {e:.3e} > {INVERSION_TOLERANCE:.0e} on [-{extent}, {extent}]^2"
        ))),
        _ => Ok(summary),
    }
}

fn linf_error(rho: &GridDensity, mode: &ModeState, extent: f64) -> f64 {
    let (nx, ny) = rho.counts();
    let mut err: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (rho.xi(i), rho.eta(j));
            if x.abs() <= extent && y.abs() <= extent {
                err = err.max((rho.at(i, j) - mode.density(x, y)).abs());
            }
        }
    }
    err
}

/// Nodes away from the origin and the rim: 1 <= r <= a - 6h on a lattice,
/// every node of a ray layout.
fn annulus(grid: &TomogramGrid) -> Vec<bool> {
    match grid.layout() {
        NodeLayout::Lattice { mu, nu } => {
            let a = mu.min.abs().min(mu.max.abs()).min(nu.min.abs()).min(nu.max.abs());
            let h = mu.step().max(nu.step());
            grid.nodes().iter().map(|n| (1.0..=a - 6.0 * h).contains(&n[0].hypot(n[1]))).collect()
        }
        _ => vec![true; grid.node_count()],
    }
}

/// Max |W - W_exact| over all nodes and over the annulus.
fn exact_on_grid(grid: &TomogramGrid, form: &ClosedForm, omega: f64, t: f64) -> Result<(f64, f64), Failure> {
    let xs = grid.x_axis().points();
    let inside = annulus(grid);
    let (mut all, mut ring): (f64, f64) = (0.0, 0.0);
    for (k, &[mu, nu]) in grid.nodes().iter().enumerate() {
        let (m, n) = rotate_direction(mu, nu, omega, t);
        for (v, &x) in grid.slice(k).iter().zip(&xs) {
            let e = (v - form.eval(x, m, n)?).abs();
            all = all.max(e);
            if inside[k] {
                ring = ring.max(e);
            }
        }
    }
    Ok((all, ring))
}

fn evolve(cfg: &RunConfig) -> Outcome {
    let input = PathBuf::from(cfg.req("input")?);
    let dir = PathBuf::from(cfg.req("out")?);
    let (w0, _) = io::read_tomogram(&input)?;
    let t_end = cfg.req_f64("t")?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Failure::usage(format!("key 't': expected a finite non-negative time, got {t_end}")));
    }
    let frames = cfg.req_usize("frames")?;
    if frames == 0 {
        return Err(Failure::usage("key 'frames' must be at least 1"));
    }
    let mode = analytic_mode(&w0.meta.state);
    let form = mode.as_ref().and_then(ModeState::closed_form);
    let omega = match (cfg.f64("omega")?, mode.as_ref().and_then(ModeState::omega)) {
        (Some(w), _) | (None, Some(w)) => w,
        (None, None) => return Err(Failure::usage("the input has no analytic state; set 'omega'")),
    };
    let scheme = match cfg.get("scheme") {
        None => match w0.layout() {
            NodeLayout::Rays { .. } => Scheme::Characteristics,
            _ => Scheme::FiniteDifference,
        },
        Some("characteristics") => Scheme::Characteristics,
        Some("fd") => Scheme::FiniteDifference,
        Some(s) => return Err(Failure::usage(format!("key 'scheme': expected characteristics or fd, got '{s}'"))),
    };
    let format = format_of(cfg)?;
    let rim_name = cfg.req("rim")?;
    if !matches!(rim_name, "frozen" | "negligible" | "exact") {
        return Err(Failure::usage(format!("key 'rim': expected frozen, negligible or exact, got '{rim_name}'")));
    }
    let dt = match (scheme, cfg.f64("dt")?, w0.layout()) {
        (_, Some(dt), _) => dt,
        (Scheme::FiniteDifference, None, NodeLayout::Lattice { mu, nu }) => {
            let reach = mu.min.abs().max(mu.max.abs()).max(nu.min.abs()).max(nu.max.abs());
            0.8 * mu.step().min(nu.step()) / (omega.abs() * reach).max(f64::MIN_POSITIVE)
        }
        _ => 0.0,
    };

    let norm0 = w0.normalizations();
    let mut current = w0.clone();
    let mut records = Vec::new();
    for f in 1..=frames {
        let t0 = t_end * (f - 1) as f64 / frames as f64;
        let t1 = t_end * f as f64 / frames as f64;
        let (next, fd) = match scheme {
            Scheme::Characteristics => (evolve_grid_exact(&w0, t1, omega)?, None),
            Scheme::FiniteDifference => {
                let rim = match rim_name {
                    "negligible" => RimPolicy::Negligible,
                    "exact" => {
                        let f = form.ok_or_else(|| Failure::usage("rim = exact needs an analytic state in the input"))?;
                        let exact: ExactTomogram = Arc::new(move |s, x, mu, nu| {
                            let (m, n) = rotate_direction(mu, nu, omega, t0 + s);
                            f.eval(x, m, n).unwrap_or(f64::NAN)
                        });
                        RimPolicy::Prescribed(exact)
                    }
                    _ => RimPolicy::Frozen,
                };
                let ecfg = EvolutionConfig { t: t1 - t0, dt, scheme, rim };
                let (g, rep) = evolve_tomogram_fd(&current, omega, &ecfg)?;
                (g, Some(rep))
            }
        };
        let drift = next.normalizations().iter().zip(&norm0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let (error, error_annulus) = match form {
            Some(f) => {
                let (a, r) = exact_on_grid(&next, &f, omega, t1)?;
                (Some(a), Some(r))
            }
            None => (None, None),
        };
        let name = format!("frame_{f:04}.{}", if format == Format::Json { "json" } else { "csv" });
        let frame_cfg = json!({"run": cfg.to_json(), "frame": f, "t": t1});
        emit(&dir.join(&name), &io::tomogram_to_string(&next, &frame_cfg, format)?, cfg)?;
        records.push(json!({
            "frame": f,
            "file": name,
            "t": t1,
            "max_normalization_error": next.meta.audit.max_normalization_error,
            "max_normalization_drift": drift,
            "min_value": next.meta.audit.min_value,
            "max_error_vs_exact": error,
            "max_error_vs_exact_annulus": error_annulus,
            "fd": fd,
        }));
        current = next;
    }
    let report = json!({
        "schema": "evolution-report",
        "version": io::FORMAT_VERSION,
        "input": input,
        "omega": omega,
        "scheme": scheme,
        "config": cfg.to_json(),
        "frames": records,
    });
    let path = dir.join("report.json");
    emit(&path, &(serde_json::to_string_pretty(&report).unwrap_or_default() + "\n"), cfg)?;
    Ok(json!({"command": "evolve", "output": dir, "report": path, "frames": frames}))
}

/// "1:1,3:0.3" -> amplitudes on the eigenfunctions, indexed from 1.
fn parse_amplitudes(s: &str, modes: usize, key: &str) -> Result<Vec<f64>, Failure> {
    let mut out = vec![0.0; modes];
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Failure::usage(format!("key '{key}': expected k:amplitude pairs, got '{part}'"));
        let (k, a) = part.split_once(':').ok_or_else(bad)?;
        let k: usize = k.trim().parse().map_err(|_| bad())?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        if k == 0 || k > modes {
            return Err(Failure::usage(format!("key '{key}': mode {k} outside 1..={modes}")));
        }
        out[k - 1] += a;
    }
    Ok(out)
}

fn kg(cfg: &RunConfig) -> Outcome {
    let cavity = CavitySpec::new(cfg.req_f64("length")?, cfg.req_f64("mass")?, cfg.req_usize("modes")?)?;
    let beta = cfg.req_f64("beta")?;
    let k = cfg.req_usize("mode")?;
    let dir = PathBuf::from(cfg.req("out")?);
    let format = format_of(cfg)?;
    let ext = if format == Format::Json { "json" } else { "csv" };
    let omegas = kg_cavity::spectrum(&cavity);
    if k == 0 || k > cavity.modes() {
        return Err(Failure::usage(format!("key 'mode': {k} outside 1..={}", cavity.modes())));
    }
    let mut outputs = Vec::new();

    let header = json!({"schema": "kg-spectrum", "version": io::FORMAT_VERSION, "cavity": cavity.describe(), "config": cfg.to_json()});
    let rows = omegas.iter().enumerate().map(|(i, &w)| vec![(i + 1) as f64, w]);
    let path = dir.join(format!("spectrum.{ext}"));
    emit(&path, &io::render_document(&header, &["k", "omega"], rows, format), cfg)?;
    outputs.push(path);

    let omega_k = omegas[k - 1];
    let mode = ModeState::Gibbs { beta, omega: omega_k };
    let x_axis = default_x_axis(&mode, cfg.req_usize("x-points")?)?;
    let mut modes_meta = json!({"cavity": cavity.describe(), "mode": k, "omega": omega_k, "optical": kg_cavity::optical_metadata(beta, &cavity)});
    modes_meta["marginal"] = json!("Gibbs tomogram of mode k in the canonical field state");
    let meta = TomogramMeta {
        state: json!({"modes": [mode.describe()]}),
        quad_level: QuadLevel::Default,
        audit: Audit::default(),
        modes: Some(modes_meta),
    };
    let eval = |x: f64, mu: f64, nu: f64| kg_cavity::mode_marginal(x, mu, nu, beta, &cavity, k);
    let grid = TomogramGrid::rays(x_axis, cfg.req_usize("rays")?, meta, eval)?;
    let h = homogeneity_residual(eval, &probes(&mode), 1e-300)?;
    let path = dir.join(format!("tomogram_mode{k}.{ext}"));
    let audit = finish_tomogram(grid, &mode, h, &path, cfg)?;
    outputs.push(path);

    let mut projection = Value::Null;
    if cfg.get("field").is_some() || cfg.get("field-t").is_some() {
        let phi = parse_amplitudes(cfg.get("field").unwrap_or(""), cavity.modes(), "field")?;
        let phi_t = parse_amplitudes(cfg.get("field-t").unwrap_or(""), cavity.modes(), "field-t")?;
        let points = cfg.req_usize("points")?;
        let combine = |a: &[f64], x: f64| -> f64 {
            a.iter().enumerate().map(|(i, c)| c * kg_cavity::eigenfunction(&cavity, i + 1, x)).sum()
        };
        let field = SampledField::from_fn(&cavity, points, |x| combine(&phi, x), |x| combine(&phi_t, x));
        let coords = kg_cavity::field_to_modes(&field, &cavity)?;
        let (energy, potential) = kg_cavity::field_hamiltonian(&coords, &cavity)?;
        let report = json!({
            "schema": "kg-projection",
            "version": io::FORMAT_VERSION,
            "cavity": cavity.describe(),
            "points": points,
            "phi_amplitudes": phi,
            "phi_t_amplitudes": phi_t,
            "xi": coords.xi,
            "eta": coords.eta,
            "hamiltonian_modes": energy,
            "potential_modes": potential,
            "potential_grid": kg_cavity::grid_potential(&field, &cavity),
            "hamiltonian_grid": kg_cavity::grid_hamiltonian(&field, &cavity),
            "config": cfg.to_json(),
        });
        let path = dir.join("projection.json");
        emit(&path, &(serde_json::to_string_pretty(&report).unwrap_or_default() + "\n"), cfg)?;
        outputs.push(path);
        projection = json!({"hamiltonian_modes": energy, "hamiltonian_grid": report["hamiltonian_grid"]});
    }
    Ok(json!({"command": "kg", "outputs": outputs, "omegas": omegas, "tomogram_audit": audit["audit"], "projection": projection}))
}

fn sample_cmd(cfg: &RunConfig) -> Outcome {
    let state = build_state(cfg)?;
    let count = cfg.req_usize("count")?;
    let seed = cfg.u64("seed")?.unwrap_or(42);
    let (mu, nu) = (cfg.req_f64("mu")?, cfg.req_f64("nu")?);
    let out = PathBuf::from(cfg.req("out")?);
    let form = state.modes()[0].closed_form().ok_or_else(|| Failure::usage("state has no closed form"))?;
    let points = sample(&state, count, seed)?;
    let ks = ks_against(&form, &points, mu, nu)?;
    let header = json!({"schema": "phase-samples", "version": io::FORMAT_VERSION, "state": state.describe(), "count": count, "seed": seed, "config": cfg.to_json()});
    let rows = points.iter().map(|p| vec![p.xi[0], p.eta[0]]);
    emit(&out, &io::render_document(&header, &["xi", "eta"], rows, format_of(cfg)?), cfg)?;
    let report = json!({
        "schema": "sample-report",
        "version": io::FORMAT_VERSION,
        "state": state.describe(),
        "count": count,
        "seed": seed,
        "line": [mu, nu],
        "ks_distance": ks,
        "ks_critical_1pct": ks_critical_1pct(count),
        "threshold": KS_TOLERANCE,
        "passed": ks < KS_TOLERANCE,
        "config": cfg.to_json(),
    });
    let mut rpath = out.as_os_str().to_owned();
    rpath.push(".report.json");
    let rpath = PathBuf::from(rpath);
    emit(&rpath, &(serde_json::to_string_pretty(&report).unwrap_or_default() + "\n"), cfg)?;
    if ks >= KS_TOLERANCE {
        return Err(Failure::numeric(format!("KS distance {ks:.4e} >= {KS_TOLERANCE} on ({mu}, {nu})")));
    }
    Ok(json!({"command": "sample", "output": out, "report": rpath, "ks_distance": ks}))
}

fn verify_cmd(cfg: &RunConfig) -> Outcome {
    let filter = cfg.get("filter").map(str::to_string);
    if let Some(f) = &filter {
        if !verify::filter_matches(f) {
            return Err(Failure::usage(format!("filter '{f}' selects no checks")));
        }
    }
    let mutation = match cfg.get("inject") {
        Some(s) => Some(s.parse::<Mutation>()?),
        None => None,
    };
    let opts = VerifyOptions { filter, mutation, seed: cfg.u64("seed")?.unwrap_or(42) };
    let report = verify::run(&opts);
    for c in &report.checks {
        eprintln!(
            "{} {:<30} {:.3e} (< {:.1e})  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.metric,
            c.threshold,
            c.detail
        );
    }
    let value = serde_json::to_value(&report).map_err(|e| Failure::usage(e.to_string()))?;
    let summary = match cfg.get("out") {
        Some(p) => {
            let path = PathBuf::from(p);
            emit(&path, &(serde_json::to_string_pretty(&value).unwrap_or_default() + "\n"), cfg)?;
            json!({"command": "verify", "passed": report.passed, "output": path, "checks": report.checks.len()})
        }
        None => value,
    };
    if !report.passed {
        let names: Vec<&str> = report.failures().map(|c| c.id.as_str()).collect();
        print_json(&summary);
        return Err(Failure::numeric(format!("failed checks: {}", names.join(", "))));
    }
    Ok(summary)
}

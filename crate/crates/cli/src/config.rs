//! Flat key = value run configuration. Every key is also a `--key` flag;
//! flags override the file, the file overrides defaults.

use clap::ArgMatches;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Exit status plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<phasetomo::Error> for Failure {
    fn from(e: phasetomo::Error) -> Self {
        use phasetomo::Error::*;
        match e {
            NonConvergent { .. } | TruncationLeakage { .. } | BoundaryLeakage { .. } | VanishingGradient(..)
            | InverseCdf(_) => Failure::numeric(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

pub struct KeySpec {
    pub name: &'static str,
    pub help: &'static str,
    pub default: Option<&'static str>,
    pub hidden: bool,
}

const fn key(name: &'static str, help: &'static str, default: Option<&'static str>) -> KeySpec {
    KeySpec { name, help, default, hidden: false }
}

const STATE: [KeySpec; 5] = [
    key("state", "state kind: gibbs, coherent or gl", None),
    key("beta", "inverse temperature of the Gibbs state", Some("1")),
    key("omega", "mode frequency", Some("1")),
    key("z", "coherent amplitude as re,im", Some("0,0")),
    key("m", "Gauss-Laguerre index", Some("0")),
];

pub const COMMANDS: [(&str, &str); 7] = [
    ("tomogram", "Sample the tomogram of a single-mode state on a grid"),
    ("radon", "Ray tomogram of a phase-space density file by line integrals"),
    ("invert", "Reconstruct a phase-space density from a ray tomogram file"),
    ("evolve", "Propagate a tomogram file under the harmonic Liouville dynamics"),
    ("kg", "Klein-Gordon cavity: spectrum, mode projection and field tomograms"),
    ("sample", "Draw seeded samples from a state and test them against its tomogram"),
    ("verify", "Run the self-verification suite"),
];

pub fn keys(command: &str) -> Vec<KeySpec> {
    let mut out = Vec::new();
    match command {
        "tomogram" => {
            out.extend(STATE);
            out.extend([
                key("method", "numeric (line integrals) or analytic (closed form)", Some("numeric")),
                key("quad", "quadrature level: default or fine", Some("default")),
                key("rays", "number of directions in [0, pi) when no lattice is given", Some("64")),
                key("x-points", "points on the X axis", Some("1024")),
                key("x-max", "half-width of the X axis (default: 12 standard deviations)", None),
                key("mu-min", "lattice: smallest mu", None),
                key("mu-max", "lattice: largest mu", None),
                key("mu-count", "lattice: number of mu values", None),
                key("nu-min", "lattice: smallest nu", None),
                key("nu-max", "lattice: largest nu", None),
                key("nu-count", "lattice: number of nu values", None),
                key("out", "output tomogram file", None),
                key("format", "csv or json", Some("csv")),
            ]);
        }
        "radon" => out.extend([
            key("input", "density file", None),
            key("quad", "quadrature level: default or fine", Some("default")),
            key("rays", "number of directions in [0, pi)", Some("64")),
            key("x-points", "points on the X axis", Some("1024")),
            key("x-max", "half-width of the X axis (default: 12 standard deviations)", None),
            key("out", "output tomogram file", None),
            key("format", "csv or json", Some("csv")),
        ]),
        "invert" => out.extend([
            key("input", "ray tomogram file", None),
            key("out", "output density file", None),
            key("fft-size", "side of the frequency grid (power of two)", Some("256")),
            key("oversample", "zero padding of the per-ray transforms", Some("4")),
            key("check-extent", "half-width of the square on which the error is reported", Some("4")),
            key("format", "csv or json", Some("csv")),
        ]),
        "evolve" => out.extend([
            key("input", "tomogram file", None),
            key("out", "output directory", None),
            key("t", "final time", None),
            key("frames", "number of snapshots written, evenly spaced in time", Some("1")),
            key("scheme", "characteristics (ray grids) or fd (lattice grids); default by layout", None),
            key("dt", "finite-difference time step (default: CFL number 0.8)", None),
            key("omega", "mode frequency (default: taken from the file's state)", None),
            key("rim", "finite-difference rim policy: frozen, negligible or exact", Some("frozen")),
            key("format", "csv or json", Some("csv")),
        ]),
        "kg" => out.extend([
            key("length", "cavity length", None),
            key("mass", "field mass", Some("0")),
            key("modes", "number of retained modes", Some("16")),
            key("beta", "inverse temperature of the canonical field state", Some("1")),
            key("mode", "mode whose marginal tomogram is written", Some("1")),
            key("rays", "directions of the marginal tomogram", Some("64")),
            key("x-points", "points on the X axis", Some("1024")),
            key("points", "field grid points, walls included", Some("1024")),
            key("field", "phi as k:amplitude pairs on the eigenfunctions, e.g. 1:1,3:0.3", None),
            key("field-t", "phi_t as k:amplitude pairs", None),
            key("out", "output directory", None),
            key("format", "csv or json", Some("csv")),
        ]),
        "sample" => {
            out.extend(STATE);
            out.extend([
                key("count", "number of samples", Some("100000")),
                key("seed", "random seed", Some("42")),
                key("mu", "line used for the KS test", Some("1")),
                key("nu", "line used for the KS test", Some("0")),
                key("out", "output sample file", None),
                key("format", "csv or json", Some("csv")),
            ]);
        }
        "verify" => out.extend([
            key("filter", "group, check id prefix or acceptance item number", None),
            key("seed", "random seed", Some("42")),
            key("out", "JSON report file", None),
            KeySpec { name: "inject", help: "perturb a closed-form constant, e.g. gl-sigma-x2", default: None, hidden: true },
        ]),
        _ => {}
    }
    out
}

/// Resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    values: BTreeMap<String, String>,
}

fn parse_file(path: &Path, command: &str, allowed: &[KeySpec]) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("{}:{}", path.display(), n + 1);
        let (k, v) = line.split_once('=').ok_or_else(|| Failure::usage(format!("{at}: expected key = value")))?;
        let k = k.trim();
        let v = v.trim().trim_matches('"');
        if k == "command" {
            if v != command {
                return Err(Failure::usage(format!("{at}: file is for command '{v}', running '{command}'")));
            }
            continue;
        }
        if !allowed.iter().any(|s| s.name == k) {
            return Err(Failure::usage(format!("{at}: unknown key '{k}' for command '{command}'")));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Failure::usage(format!("{at}: key '{k}' given twice")));
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(command: &str, file: Option<&Path>, matches: &ArgMatches) -> Result<Self, Failure> {
        let specs = keys(command);
        let mut values = BTreeMap::new();
        for s in &specs {
            if let Some(d) = s.default {
                values.insert(s.name.to_string(), d.to_string());
            }
        }
        if let Some(path) = file {
            values.extend(parse_file(path, command, &specs)?);
        }
        for s in &specs {
            if let Some(v) = matches.get_one::<String>(s.name) {
                values.insert(s.name.to_string(), v.clone());
            }
        }
        Ok(Self { command: command.to_string(), values })
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.values.get(k).map(String::as_str)
    }

    pub fn req(&self, k: &str) -> Result<&str, Failure> {
        self.get(k).ok_or_else(|| Failure::usage(format!("missing required key '{k}'")))
    }

    fn parse<T: std::str::FromStr>(&self, k: &str, what: &str) -> Result<Option<T>, Failure> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Failure::usage(format!("key '{k}': expected {what}, got '{v}'"))),
        }
    }

    pub fn f64(&self, k: &str) -> Result<Option<f64>, Failure> {
        self.parse::<f64>(k, "a number")
    }

    pub fn req_f64(&self, k: &str) -> Result<f64, Failure> {
        self.f64(k)?.ok_or_else(|| Failure::usage(format!("missing required key '{k}'")))
    }

    pub fn usize(&self, k: &str) -> Result<Option<usize>, Failure> {
        self.parse::<usize>(k, "a non-negative integer")
    }

    pub fn req_usize(&self, k: &str) -> Result<usize, Failure> {
        self.usize(k)?.ok_or_else(|| Failure::usage(format!("missing required key '{k}'")))
    }

    pub fn u64(&self, k: &str) -> Result<Option<u64>, Failure> {
        self.parse::<u64>(k, "a non-negative integer")
    }

    /// The full resolved configuration, embedded in every output file.
    pub fn to_json(&self) -> Value {
        let mut keys = Map::new();
        for (k, v) in &self.values {
            keys.insert(k.clone(), Value::String(v.clone()));
        }
        json!({"command": self.command, "tool_version": env!("CARGO_PKG_VERSION"), "keys": keys})
    }
}

//! Text file formats: a `# ` line holding a JSON header, a CSV header line,
//! then CSV rows. Numbers carry 17 significant digits so doubles round trip.

use crate::error::{Error, Result};
use crate::radon::{Axis, NodeLayout, TomogramGrid, TomogramMeta};
use crate::states::GridDensity;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};

pub const TOMOGRAM_SCHEMA: &str = "tomogram-grid";
pub const DENSITY_SCHEMA: &str = "grid-density";
pub const FORMAT_VERSION: u32 = 1;

/// Body encoding of data files. Readers accept either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    /// One JSON object with `header`, `columns` and `rows`.
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidParameter(format!("format must be csv or json, got '{s}'"))),
        }
    }
}

/// Formats a double with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

/// Splits a file into its JSON header, CSV column names and data rows.
pub fn split_document(text: &str) -> Result<(Value, Vec<String>, Vec<Vec<f64>>)> {
    if text.trim_start().starts_with('{') {
        return split_json(text);
    }
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| Error::Format("empty file".into()))?;
    let json = head
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("first line must be '# ' followed by a JSON header".into()))?;
    let header: Value = serde_json::from_str(json.trim()).map_err(|e| Error::Format(format!("header: {e}")))?;
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Format("missing CSV column line".into()))?
        .split(',')
        .map(|c| c.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))?;
        if row.len() != columns.len() {
            return Err(Error::Format(format!("row {} has {} fields, expected {}", i + 1, row.len(), columns.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("row {} has a non-finite value", i + 1)));
        }
        rows.push(row);
    }
    Ok((header, columns, rows))
}

fn split_json(text: &str) -> Result<(Value, Vec<String>, Vec<Vec<f64>>)> {
    #[derive(Deserialize)]
    struct Doc {
        header: Value,
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
    }
    let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Format(format!("json document: {e}")))?;
    for (i, r) in doc.rows.iter().enumerate() {
        if r.len() != doc.columns.len() {
            return Err(Error::Format(format!("row {} has {} fields, expected {}", i + 1, r.len(), doc.columns.len())));
        }
    }
    Ok((doc.header, doc.columns, doc.rows))
}

/// Renders a header plus rows in the chosen encoding.
pub fn render_document(header: &Value, columns: &[&str], rows: impl Iterator<Item = Vec<f64>>, format: Format) -> String {
    if format == Format::Json {
        let rows: Vec<Vec<f64>> = rows.collect();
        let doc = serde_json::json!({"header": header, "columns": columns, "rows": rows});
        return doc.to_string() + "\n";
    }
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(&header.to_string());
    out.push('\n');
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(num).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn expect_columns(columns: &[String], want: &[&str]) -> Result<()> {
    if columns.len() != want.len() || columns.iter().zip(want).any(|(a, b)| a != b) {
        return Err(Error::Format(format!("expected columns {}, found {}", want.join(","), columns.join(","))));
    }
    Ok(())
}

fn expect_schema(header: &Value, schema: &str) -> Result<()> {
    match header.get("schema").and_then(Value::as_str) {
        Some(s) if s == schema => Ok(()),
        Some(s) => Err(Error::Format(format!("schema '{s}', expected '{schema}'"))),
        None => Err(Error::Format(format!("header lacks schema (expected '{schema}')"))),
    }
}

#[derive(Serialize, Deserialize)]
struct TomogramHeader {
    schema: String,
    version: u32,
    x_axis: Axis,
    layout: NodeLayout,
    #[serde(flatten)]
    meta: TomogramMeta,
    #[serde(default)]
    config: Value,
}

/// Serializes a tomogram grid. `config` is embedded verbatim.
pub fn tomogram_to_string(grid: &TomogramGrid, config: &Value, format: Format) -> Result<String> {
    let header = TomogramHeader {
        schema: TOMOGRAM_SCHEMA.into(),
        version: FORMAT_VERSION,
        x_axis: grid.x_axis(),
        layout: grid.layout(),
        meta: grid.meta.clone(),
        config: config.clone(),
    };
    let header = serde_json::to_value(&header).map_err(|e| Error::Format(e.to_string()))?;
    let xs = grid.x_axis().points();
    let rows = grid.nodes().iter().enumerate().flat_map(|(k, n)| {
        let slice = grid.slice(k);
        xs.iter().zip(slice).map(move |(&x, &w)| vec![x, n[0], n[1], w]).collect::<Vec<_>>()
    });
    Ok(render_document(&header, &["X", "mu", "nu", "W"], rows, format))
}

/// Parses a tomogram grid and its embedded config.
pub fn tomogram_from_str(text: &str) -> Result<(TomogramGrid, Value)> {
    let (header, columns, rows) = split_document(text)?;
    expect_schema(&header, TOMOGRAM_SCHEMA)?;
    expect_columns(&columns, &["X", "mu", "nu", "W"])?;
    let h: TomogramHeader = serde_json::from_value(header).map_err(|e| Error::Format(format!("header: {e}")))?;
    let n = h.x_axis.count;
    if rows.is_empty() || rows.len() % n != 0 {
        return Err(Error::Format(format!("{} rows is not a multiple of the X-axis length {n}", rows.len())));
    }
    let xs = h.x_axis.points();
    let tol = 1e-12 * h.x_axis.min.abs().max(h.x_axis.max.abs()).max(1.0);
    let mut nodes = Vec::with_capacity(rows.len() / n);
    let mut values = Vec::with_capacity(rows.len());
    for (k, chunk) in rows.chunks(n).enumerate() {
        let node = [chunk[0][1], chunk[0][2]];
        for (i, row) in chunk.iter().enumerate() {
            if (row[0] - xs[i]).abs() > tol {
                return Err(Error::Format(format!("node {k}: X = {} does not match the axis value {}", row[0], xs[i])));
            }
            if row[1] != node[0] || row[2] != node[1] {
                return Err(Error::Format(format!("node {k}: (mu, nu) changes inside an X slice")));
            }
            values.push(row[3]);
        }
        nodes.push(node);
    }
    let expected = match h.layout {
        NodeLayout::Rays { count } => Some(crate::radon::ray_nodes(count)),
        NodeLayout::Lattice { mu, nu } => Some(crate::radon::lattice_nodes(&mu, &nu)),
        NodeLayout::Points => None,
    };
    if let Some(exp) = expected {
        if exp.len() != nodes.len() {
            return Err(Error::Format(format!("layout needs {} nodes, file has {}", exp.len(), nodes.len())));
        }
        for (k, (a, b)) in exp.iter().zip(&nodes).enumerate() {
            if (a[0] - b[0]).abs() > 1e-12 || (a[1] - b[1]).abs() > 1e-12 {
                return Err(Error::Format(format!("node {k} ({}, {}) does not match the layout", b[0], b[1])));
            }
        }
    }
    for (k, n) in nodes.iter().enumerate() {
        if n[0] == 0.0 && n[1] == 0.0 {
            return Err(Error::Format(format!("degenerate node {k} at (mu, nu) = (0, 0)")));
        }
    }
    let grid = TomogramGrid::from_values(h.x_axis, h.layout, nodes, values, h.meta).map_err(|e| Error::Format(e.to_string()))?;
    Ok((grid, h.config))
}

pub fn write_tomogram(path: &Path, grid: &TomogramGrid, config: &Value, format: Format) -> Result<()> {
    write_atomic(path, &tomogram_to_string(grid, config, format)?)
}

pub fn read_tomogram(path: &Path) -> Result<(TomogramGrid, Value)> {
    tomogram_from_str(&fs::read_to_string(path)?)
}

/// Serializes a grid density. `extra` fields are merged into the header.
pub fn density_to_string(g: &GridDensity, extra: &Value, format: Format) -> Result<String> {
    let (nx, ny) = g.counts();
    let mut header = serde_json::json!({
        "schema": DENSITY_SCHEMA,
        "version": FORMAT_VERSION,
        "extents": {"xi": [g.xi_range().0, g.xi_range().1], "eta": [g.eta_range().0, g.eta_range().1]},
        "counts": {"xi": nx, "eta": ny},
        "units": {"xi": "symmetric coordinate sqrt(omega) q", "eta": "symmetric coordinate p / sqrt(omega)", "rho": "probability per unit phase-space area"},
    });
    if let (Some(h), Some(e)) = (header.as_object_mut(), extra.as_object()) {
        for (k, v) in e {
            h.insert(k.clone(), v.clone());
        }
    }
    let rows = (0..ny).flat_map(|j| (0..nx).map(move |i| vec![g.xi(i), g.eta(j), g.at(i, j)]));
    Ok(render_document(&header, &["xi", "eta", "rho"], rows, format))
}

fn pair(v: &Value, what: &str) -> Result<(f64, f64)> {
    let a = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Format(format!("{what} must be [min, max]")))?;
    match (a[0].as_f64(), a[1].as_f64()) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(Error::Format(format!("{what} must hold numbers"))),
    }
}

fn count(v: &Value, what: &str) -> Result<usize> {
    v.as_u64().map(|n| n as usize).ok_or_else(|| Error::Format(format!("{what} must be a count")))
}

/// Parses a grid density, rejecting raw data whose mass is off by more
/// than one percent. Returns the density and the full header.
pub fn density_from_str(text: &str) -> Result<(GridDensity, Value)> {
    let (header, columns, rows) = split_document(text)?;
    expect_schema(&header, DENSITY_SCHEMA)?;
    expect_columns(&columns, &["xi", "eta", "rho"])?;
    let xr = pair(&header["extents"]["xi"], "extents.xi")?;
    let yr = pair(&header["extents"]["eta"], "extents.eta")?;
    let nx = count(&header["counts"]["xi"], "counts.xi")?;
    let ny = count(&header["counts"]["eta"], "counts.eta")?;
    if rows.len() != nx * ny {
        return Err(Error::Format(format!("expected {} rows, found {}", nx * ny, rows.len())));
    }
    let hx = (xr.1 - xr.0) / (nx.max(2) - 1) as f64;
    let hy = (yr.1 - yr.0) / (ny.max(2) - 1) as f64;
    let tol = 1e-9 * (xr.0.abs() + xr.1.abs() + yr.0.abs() + yr.1.abs()).max(1.0);
    for (r, row) in rows.iter().enumerate() {
        let (i, j) = (r % nx, r / nx);
        if (row[0] - (xr.0 + hx * i as f64)).abs() > tol || (row[1] - (yr.0 + hy * j as f64)).abs() > tol {
            return Err(Error::Format(format!("row {} is off the grid (xi varies fastest)", r + 1)));
        }
    }
    let values = rows.iter().map(|r| r[2]).collect();
    let g = GridDensity::from_raw_checked(xr, yr, nx, ny, values)?;
    Ok((g, header))
}

pub fn write_density(path: &Path, g: &GridDensity, extra: &Value, format: Format) -> Result<()> {
    write_atomic(path, &density_to_string(g, extra, format)?)
}

pub fn read_density(path: &Path) -> Result<(GridDensity, Value)> {
    density_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::gibbs_tomogram;
    use crate::quadrature::QuadLevel;
    use crate::radon::Audit;
    use serde_json::json;

    fn meta() -> TomogramMeta {
        TomogramMeta { state: json!({"kind": "gibbs"}), quad_level: QuadLevel::Default, audit: Audit::default(), modes: None }
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn tomogram_round_trip() {
        let ax = Axis::symmetric(8.0, 65).unwrap();
        let g = TomogramGrid::rays(ax, 8, meta(), |x, mu, nu| gibbs_tomogram(x, mu, nu, 1.0, 1.0)).unwrap();
        let text = tomogram_to_string(&g, &json!({"beta": 1.0}), Format::Csv).unwrap();
        let (back, cfg) = tomogram_from_str(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(cfg["beta"], 1.0);
        assert_eq!(tomogram_to_string(&back, &cfg, Format::Csv).unwrap(), text);
    }

    #[test]
    fn lattice_and_points_round_trip() {
        let ax = Axis::symmetric(6.0, 33).unwrap();
        let (mu, nu) = (Axis::new(0.5, 1.5, 3).unwrap(), Axis::new(-1.0, 1.0, 2).unwrap());
        let g = TomogramGrid::lattice(ax, mu, nu, meta(), |x, m, n| gibbs_tomogram(x, m, n, 1.0, 1.0)).unwrap();
        let (back, _) = tomogram_from_str(&tomogram_to_string(&g, &Value::Null, Format::Csv).unwrap()).unwrap();
        assert_eq!(back, g);
        let nodes = vec![[1.0, 0.0], [0.3, 2.0]];
        let g = TomogramGrid::sample(ax, NodeLayout::Points, nodes, meta(), |x, m, n| gibbs_tomogram(x, m, n, 1.0, 1.0)).unwrap();
        let (back, _) = tomogram_from_str(&tomogram_to_string(&g, &Value::Null, Format::Csv).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_bodies_round_trip() {
        let ax = Axis::symmetric(8.0, 33).unwrap();
        let g = TomogramGrid::rays(ax, 4, meta(), |x, mu, nu| gibbs_tomogram(x, mu, nu, 1.0, 1.0)).unwrap();
        let text = tomogram_to_string(&g, &json!({"k": 1}), Format::Json).unwrap();
        let (back, cfg) = tomogram_from_str(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(cfg["k"], 1);
        let d = GridDensity::from_fn((-6.0, 6.0), (-6.0, 6.0), 21, 21, |x, y| (-(x * x + y * y) / 2.0).exp()).unwrap();
        let (back, _) = density_from_str(&density_to_string(&d, &Value::Null, Format::Json).unwrap()).unwrap();
        assert!(back.values().iter().zip(d.values()).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn schema_violations() {
        assert!(tomogram_from_str("").is_err());
        assert!(tomogram_from_str("X,mu,nu,W\n").is_err());
        let ax = Axis::symmetric(6.0, 5).unwrap();
        let g = TomogramGrid::rays(ax, 2, meta(), |x, mu, nu| gibbs_tomogram(x, mu, nu, 1.0, 1.0)).unwrap();
        let text = tomogram_to_string(&g, &Value::Null, Format::Csv).unwrap();
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(tomogram_from_str(&truncated), Err(Error::Format(_))));
        let wrong = text.replace("tomogram-grid", "grid-density");
        assert!(matches!(tomogram_from_str(&wrong), Err(Error::Format(_))));
        let bad = text.replacen("X,mu,nu,W", "X,mu,W,nu", 1);
        assert!(tomogram_from_str(&bad).is_err());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = "oops,1,0,0".into();
        assert!(tomogram_from_str(&lines.join("\n")).is_err());
    }

    #[test]
    fn zero_node_is_named() {
        let ax = Axis::symmetric(6.0, 5).unwrap();
        let nodes = vec![[1.0, 0.0], [0.5, 0.5]];
        let g = TomogramGrid::sample(ax, NodeLayout::Points, nodes, meta(), |x, m, n| gibbs_tomogram(x, m, n, 1.0, 1.0)).unwrap();
        let text = tomogram_to_string(&g, &Value::Null, Format::Csv).unwrap().replace(&format!("{},{}", num(0.5), num(0.5)), &format!("{},{}", num(0.0), num(0.0)));
        let err = tomogram_from_str(&text).unwrap_err().to_string();
        assert!(err.contains("degenerate node 1"), "{err}");
    }

    #[test]
    fn density_round_trip() {
        let g = GridDensity::from_fn((-6.0, 6.0), (-5.0, 5.0), 41, 31, |x, y| (-(x * x + y * y) / 2.0).exp()).unwrap();
        let text = density_to_string(&g, &json!({"note": "x"}), Format::Csv).unwrap();
        let (back, header) = density_from_str(&text).unwrap();
        assert_eq!(header["note"], "x");
        for (a, b) in back.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        // raw data scaled by two is rejected
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        for l in lines.iter_mut().skip(2) {
            let mut parts: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            parts[2] *= 2.0;
            *l = parts.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",");
        }
        assert!(matches!(density_from_str(&lines.join("\n")), Err(Error::Format(_))));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("phasetomo-io-{}", std::process::id()));
        let p = dir.join("a.csv");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers = fs::read_dir(&dir).unwrap().count();
        assert_eq!(leftovers, 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}

//! Sampled single-mode tomograms.

use crate::error::{Error, Result};
use crate::interp::{cubic_weights, uniform_cubic};
use crate::quadrature::{trapezoid, QuadLevel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform axis with `count` points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter(format!("bad axis [{min}, {max}] with {count} points")));
        }
        Ok(Self { min, max, count })
    }

    pub fn symmetric(half: f64, count: usize) -> Result<Self> {
        Self::new(-half, half, count)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn at(&self, i: usize) -> f64 {
        self.min + self.step() * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.at(i)).collect()
    }
}

/// How the (mu, nu) nodes of a tomogram grid are arranged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeLayout {
    /// Unit directions at angles j pi / count, j = 0..count. Other radii
    /// follow from homogeneity.
    Rays { count: usize },
    /// Cartesian lattice, node index = j * mu.count + i.
    Lattice { mu: Axis, nu: Axis },
    /// Free list of nodes.
    Points,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Audit {
    /// Largest |int W dX - 1| over nodes.
    pub max_normalization_error: f64,
    /// Smallest sampled value.
    pub min_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homogeneity_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomogramMeta {
    pub state: serde_json::Value,
    pub quad_level: QuadLevel,
    pub audit: Audit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<serde_json::Value>,
}

/// W(X, mu, nu) of one mode sampled on an X axis times a set of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TomogramGrid {
    x_axis: Axis,
    layout: NodeLayout,
    nodes: Vec<[f64; 2]>,
    values: Vec<f64>,
    pub meta: TomogramMeta,
}

/// Unit directions of a ray layout.
pub fn ray_nodes(count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|j| {
            let th = PI * j as f64 / count as f64;
            [th.cos(), th.sin()]
        })
        .collect()
}

pub fn lattice_nodes(mu: &Axis, nu: &Axis) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(mu.count * nu.count);
    for j in 0..nu.count {
        for i in 0..mu.count {
            out.push([mu.at(i), nu.at(j)]);
        }
    }
    out
}

impl TomogramGrid {
    /// Assembles a grid from values laid out node-major.
    pub fn from_values(
        x_axis: Axis,
        layout: NodeLayout,
        nodes: Vec<[f64; 2]>,
        values: Vec<f64>,
        meta: TomogramMeta,
    ) -> Result<Self> {
        let expected_nodes = match layout {
            NodeLayout::Rays { count } => Some(count),
            NodeLayout::Lattice { mu, nu } => Some(mu.count * nu.count),
            NodeLayout::Points => None,
        };
        if let Some(n) = expected_nodes {
            if nodes.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: nodes.len() });
            }
        }
        if values.len() != nodes.len() * x_axis.count {
            return Err(Error::DimensionMismatch { expected: nodes.len() * x_axis.count, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tomogram value"));
        }
        let mut g = Self { x_axis, layout, nodes, values, meta };
        g.refresh_audit();
        Ok(g)
    }

    /// Samples `f(X, mu, nu)` at every node and X point in parallel.
    /// Degenerate nodes are rejected before any evaluation.
    pub fn sample<F>(x_axis: Axis, layout: NodeLayout, nodes: Vec<[f64; 2]>, meta: TomogramMeta, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> Result<f64> + Sync,
    {
        if let Some(k) = nodes.iter().position(|n| n[0] == 0.0 && n[1] == 0.0) {
            return Err(Error::InvalidParameter(format!("degenerate node {k} at (mu, nu) = (0, 0)")));
        }
        let xs = x_axis.points();
        let values: Vec<f64> = nodes
            .par_iter()
            .map(|&[mu, nu]| xs.iter().map(|&x| f(x, mu, nu)).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<Vec<f64>>>>()?
            .concat();
        Self::from_values(x_axis, layout, nodes, values, meta)
    }

    pub fn rays<F>(x_axis: Axis, count: usize, meta: TomogramMeta, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> Result<f64> + Sync,
    {
        Self::sample(x_axis, NodeLayout::Rays { count }, ray_nodes(count), meta, f)
    }

    pub fn lattice<F>(x_axis: Axis, mu: Axis, nu: Axis, meta: TomogramMeta, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> Result<f64> + Sync,
    {
        Self::sample(x_axis, NodeLayout::Lattice { mu, nu }, lattice_nodes(&mu, &nu), meta, f)
    }

    pub fn x_axis(&self) -> Axis {
        self.x_axis
    }
    pub fn layout(&self) -> NodeLayout {
        self.layout
    }
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn slice(&self, node: usize) -> &[f64] {
        let n = self.x_axis.count;
        &self.values[node * n..(node + 1) * n]
    }

    /// int W dX at each node (trapezoid rule).
    pub fn normalizations(&self) -> Vec<f64> {
        let h = self.x_axis.step();
        (0..self.nodes.len()).map(|k| trapezoid(self.slice(k), h)).collect()
    }

    pub fn refresh_audit(&mut self) {
        let norm = self
            .normalizations()
            .iter()
            .map(|m| (m - 1.0).abs())
            .fold(0.0, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        self.meta.audit.max_normalization_error = norm;
        self.meta.audit.min_value = min;
    }

    /// Value at an arbitrary (X, mu, nu). Ray layouts interpolate in angle
    /// and X and extend to other radii by homogeneity.
    pub fn evaluate(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        let r = (mu * mu + nu * nu).sqrt();
        if r == 0.0 {
            return Err(Error::DegenerateLine { mode: 0 });
        }
        let (x0, h) = (self.x_axis.min, self.x_axis.step());
        match self.layout {
            NodeLayout::Rays { count } => {
                let mut th = nu.atan2(mu);
                let mut xs = x / r;
                if th < 0.0 {
                    th += PI;
                    xs = -xs;
                }
                if th >= PI {
                    th -= PI;
                    xs = -xs;
                }
                let step = PI / count as f64;
                let s = th / step;
                let j0 = s.floor() as i64;
                let w = cubic_weights(s - j0 as f64);
                let mut acc = 0.0;
                for (o, wo) in w.iter().enumerate() {
                    let j = j0 - 1 + o as i64;
                    // ray j + count is ray j with X reflected
                    let (jj, sign) = wrap_ray(j, count as i64);
                    acc += wo * uniform_cubic(self.slice(jj), x0, h, sign * xs);
                }
                Ok(acc / r)
            }
            NodeLayout::Lattice { .. } | NodeLayout::Points => {
                let k = self
                    .nodes
                    .iter()
                    .position(|n| (n[0] - mu).abs() < 1e-12 && (n[1] - nu).abs() < 1e-12)
                    .ok_or_else(|| Error::GridMisalignment(format!("({mu}, {nu}) is not a grid node")))?;
                Ok(uniform_cubic(self.slice(k), x0, h, x))
            }
        }
    }

    /// Index of the ray through direction (mu, nu) and whether the slice must
    /// be reflected (direction in the lower half plane).
    pub fn ray_index(&self, mu: f64, nu: f64) -> Result<(usize, bool)> {
        let NodeLayout::Rays { count } = self.layout else {
            return Err(Error::GridMisalignment("grid has no ray layout".into()));
        };
        let r = (mu * mu + nu * nu).sqrt();
        if r == 0.0 {
            return Err(Error::DegenerateLine { mode: 0 });
        }
        let mut th = nu.atan2(mu);
        let mut flip = false;
        if th < 0.0 {
            th += PI;
            flip = true;
        }
        let s = th / (PI / count as f64);
        let j = s.round();
        if (s - j).abs() > 1e-9 {
            return Err(Error::GridMisalignment(format!("direction ({mu}, {nu}) is not on a grid ray")));
        }
        let j = j as usize;
        if j == count {
            Ok((0, !flip))
        } else {
            Ok((j, flip))
        }
    }
}

fn wrap_ray(j: i64, count: i64) -> (usize, f64) {
    let period = 2 * count;
    let m = j.rem_euclid(period);
    if m >= count {
        ((m - count) as usize, -1.0)
    } else {
        (m as usize, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{coherent_tomogram, gibbs_tomogram};
    use num_complex::Complex64;

    fn meta() -> TomogramMeta {
        TomogramMeta { state: serde_json::Value::Null, quad_level: QuadLevel::Default, audit: Audit::default(), modes: None }
    }

    #[test]
    fn ray_grid_audit_and_evaluation() {
        let ax = Axis::symmetric(12.0, 1024).unwrap();
        let z = Complex64::new(0.8, 0.5);
        let g = TomogramGrid::rays(ax, 64, meta(), |x, mu, nu| coherent_tomogram(x, mu, nu, z, 1.0)).unwrap();
        assert!(g.meta.audit.max_normalization_error < 1e-10);
        assert!(g.meta.audit.min_value >= 0.0);
        for &(x, mu, nu) in &[(0.3, 1.0, 0.0), (1.1, 0.4, -0.9), (-2.0, -1.5, 0.2), (0.7, 0.0, 2.0)] {
            let want = coherent_tomogram(x, mu, nu, z, 1.0).unwrap();
            let got = g.evaluate(x, mu, nu).unwrap();
            assert!((got - want).abs() < 2e-4, "{x} {mu} {nu}: {got} vs {want}");
        }
        // on-ray values need no angular interpolation
        let on = g.evaluate(0.5, 0.0, 2.0).unwrap();
        assert!((on - coherent_tomogram(0.5, 0.0, 2.0, z, 1.0).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn ray_lookup() {
        let ax = Axis::symmetric(6.0, 65).unwrap();
        let g = TomogramGrid::rays(ax, 8, meta(), |x, mu, nu| gibbs_tomogram(x, mu, nu, 1.0, 1.0)).unwrap();
        assert_eq!(g.ray_index(1.0, 0.0).unwrap(), (0, false));
        assert_eq!(g.ray_index(0.0, 3.0).unwrap(), (4, false));
        assert_eq!(g.ray_index(-1.0, 0.0).unwrap(), (0, true));
        assert_eq!(g.ray_index(0.0, -1.0).unwrap(), (4, true));
        assert!(matches!(g.ray_index(1.0, 0.1), Err(Error::GridMisalignment(_))));
    }

    #[test]
    fn degenerate_node_is_named() {
        let ax = Axis::symmetric(6.0, 65).unwrap();
        let mu = Axis::new(-1.0, 1.0, 3).unwrap();
        let err = TomogramGrid::lattice(ax, mu, mu, meta(), |x, mu, nu| gibbs_tomogram(x, mu, nu, 1.0, 1.0)).unwrap_err();
        assert!(err.to_string().contains("node 4"), "{err}");
    }
}

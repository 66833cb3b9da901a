//! Radon transform over level sets Phi(xi, eta) = X0.

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{gauss_legendre, QuadConfig, QuadLevel};
use crate::states::ModeDensity;

/// A scalar function on the phase plane of one mode.
pub trait LevelFunction: Sync {
    fn value(&self, xi: f64, eta: f64) -> f64;

    /// Gradient; central differences unless overridden.
    fn gradient(&self, xi: f64, eta: f64) -> [f64; 2] {
        let hx = 1e-6 * xi.abs().max(1.0);
        let hy = 1e-6 * eta.abs().max(1.0);
        [
            (self.value(xi + hx, eta) - self.value(xi - hx, eta)) / (2.0 * hx),
            (self.value(xi, eta + hy) - self.value(xi, eta - hy)) / (2.0 * hy),
        ]
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> LevelFunction for F {
    fn value(&self, xi: f64, eta: f64) -> f64 {
        self(xi, eta)
    }
}

/// A level function with an analytic gradient.
pub struct LevelWithGradient<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> LevelFunction for LevelWithGradient<F, G>
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> [f64; 2] + Sync,
{
    fn value(&self, xi: f64, eta: f64) -> f64 {
        (self.value)(xi, eta)
    }
    fn gradient(&self, xi: f64, eta: f64) -> [f64; 2] {
        (self.gradient)(xi, eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedValue {
    pub value: f64,
    /// The level set does not meet the quadrature window.
    pub empty_level_set: bool,
}

fn bisect_edge<L: LevelFunction + ?Sized>(phi: &L, x0: f64, a: [f64; 2], b: [f64; 2], fa: f64) -> [f64; 2] {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut flo = fa;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = [a[0] + mid * (b[0] - a[0]), a[1] + mid * (b[1] - a[1])];
        let fm = phi.value(p[0], p[1]) - x0;
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Newton projection of a point onto the level set along the gradient.
fn project<L: LevelFunction + ?Sized>(phi: &L, x0: f64, mut p: [f64; 2], scale: f64) -> Result<[f64; 2]> {
    for _ in 0..50 {
        let f = phi.value(p[0], p[1]) - x0;
        let g = phi.gradient(p[0], p[1]);
        let g2 = g[0] * g[0] + g[1] * g[1];
        if g2.sqrt() < 1e-12 * scale {
            return Err(Error::VanishingGradient(p[0], p[1]));
        }
        let step = [f * g[0] / g2, f * g[1] / g2];
        p = [p[0] - step[0], p[1] - step[1]];
        if step[0].hypot(step[1]) < 1e-15 * (1.0 + p[0].hypot(p[1])) {
            break;
        }
    }
    Ok(p)
}

/// int rho delta(X0 - Phi) over the phase plane of one mode, as the line
/// integral of rho / |grad Phi| along the level set Phi = X0. The level set
/// is traced by marching squares over the density's support window.
pub fn generalized_radon<L: LevelFunction + ?Sized>(
    mode: &dyn ModeDensity,
    phi: &L,
    x0: f64,
    quad: &QuadConfig,
) -> Result<GeneralizedValue> {
    ensure_finite(x0, "X0")?;
    let cells = match quad.level {
        QuadLevel::Default => 128,
        QuadLevel::Fine => 256,
    };
    let ((ax, bx), (ay, by)) = mode.support().bbox();
    let hx = (bx - ax) / cells as f64;
    let hy = (by - ay) / cells as f64;
    let n = cells + 1;
    let mut f = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let v = phi.value(ax + hx * i as f64, ay + hy * j as f64) - x0;
            ensure_finite(v, "level function")?;
            // nudge exact zeros so every crossing is a strict sign change
            f[j * n + i] = if v == 0.0 { f64::MIN_POSITIVE } else { v };
        }
    }
    let (gx, gw) = gauss_legendre(8);
    let scale = {
        let g = phi.gradient(0.5 * (ax + bx), 0.5 * (ay + by));
        g[0].hypot(g[1]).max(1.0)
    };
    let mut total = 0.0;
    let mut found = false;
    for j in 0..cells {
        for i in 0..cells {
            let corners = [
                [ax + hx * i as f64, ay + hy * j as f64],
                [ax + hx * (i + 1) as f64, ay + hy * j as f64],
                [ax + hx * (i + 1) as f64, ay + hy * (j + 1) as f64],
                [ax + hx * i as f64, ay + hy * (j + 1) as f64],
            ];
            let v = [f[j * n + i], f[j * n + i + 1], f[(j + 1) * n + i + 1], f[(j + 1) * n + i]];
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (v[a] > 0.0) != (v[b] > 0.0) {
                    pts.push(bisect_edge(phi, x0, corners[a], corners[b], v[a]));
                }
            }
            if pts.is_empty() {
                continue;
            }
            found = true;
            let segments: Vec<([f64; 2], [f64; 2])> = if pts.len() == 2 {
                vec![(pts[0], pts[1])]
            } else {
                // saddle cell: pair crossings according to the sign at the center
                let c = phi.value(corners[0][0] + 0.5 * hx, corners[0][1] + 0.5 * hy) - x0;
                if (c > 0.0) == (v[0] > 0.0) {
                    vec![(pts[0], pts[1]), (pts[2], pts[3])]
                } else {
                    vec![(pts[0], pts[3]), (pts[1], pts[2])]
                }
            };
            for (p0, p1) in segments {
                let chord = [p1[0] - p0[0], p1[1] - p0[1]];
                if chord[0].hypot(chord[1]) == 0.0 {
                    continue;
                }
                let on_curve = |tau: f64| project(phi, x0, [p0[0] + tau * chord[0], p0[1] + tau * chord[1]], scale);
                let mut acc = 0.0;
                for (xq, wq) in gx.iter().zip(&gw) {
                    let tau = 0.5 * (1.0 + xq);
                    let p = on_curve(tau)?;
                    let dt = 1e-5;
                    let pa = on_curve(tau - dt)?;
                    let pb = on_curve(tau + dt)?;
                    let speed = (pb[0] - pa[0]).hypot(pb[1] - pa[1]) / (2.0 * dt);
                    let g = phi.gradient(p[0], p[1]);
                    let gn = g[0].hypot(g[1]);
                    if gn < 1e-12 * scale {
                        return Err(Error::VanishingGradient(p[0], p[1]));
                    }
                    acc += 0.5 * wq * mode.density(p[0], p[1]) / gn * speed;
                }
                total += acc;
            }
        }
    }
    Ok(GeneralizedValue { value: total, empty_level_set: !found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radon::mode_radon;
    use crate::states::{DensityState, ModeState};

    fn gibbs() -> ModeState {
        DensityState::gibbs_1(1.0, 1.0).unwrap().modes().remove(0)
    }

    #[test]
    fn radial_level_set_gives_exponential_law() {
        let q = QuadConfig::default();
        let phi = |x: f64, y: f64| 0.5 * (x * x + y * y);
        let v = generalized_radon(&gibbs(), &phi, 1.0, &q).unwrap();
        assert!(!v.empty_level_set);
        assert!((v.value - (-1.0f64).exp()).abs() < 1e-8, "{}", v.value);
        let empty = generalized_radon(&gibbs(), &phi, -1.0, &q).unwrap();
        assert!(empty.empty_level_set);
        assert_eq!(empty.value, 0.0);
    }

    #[test]
    fn hyperplane_matches_line_integral() {
        let q = QuadConfig::default();
        let st = DensityState::gauss_laguerre_1(1.0, 2).unwrap().modes().remove(0);
        let (mu, nu) = (0.6, -0.8);
        let phi = LevelWithGradient { value: move |x: f64, y: f64| mu * x + nu * y, gradient: move |_, _| [mu, nu] };
        for x0 in [0.0, 0.9, -2.1] {
            let a = generalized_radon(&st, &phi, x0, &q).unwrap().value;
            let b = mode_radon(&st, x0, mu, nu, &q).unwrap();
            assert!((a - b).abs() < 1e-8, "{x0}: {a} {b}");
        }
    }

    #[test]
    fn vanishing_gradient_is_reported() {
        let q = QuadConfig::default();
        let phi = LevelWithGradient { value: |x: f64, _y: f64| x, gradient: |_, _| [0.0, 0.0] };
        assert!(matches!(generalized_radon(&gibbs(), &phi, 0.3, &q), Err(Error::VanishingGradient(..))));
    }
}

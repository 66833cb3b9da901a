//! Interpolation on uniform grids.

/// Cubic Lagrange weights for nodes at -1, 0, 1, 2 evaluated at t.
pub(crate) fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Cubic interpolation of uniformly spaced samples starting at `x0` with
/// step `h`. Zero outside the sampled range; the stencil shifts inward at
/// the ends.
pub(crate) fn uniform_cubic(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let last = (n - 1) as f64;
    let s = (x - x0) / h;
    if !(s >= -1e-9 && s <= last + 1e-9) {
        return 0.0;
    }
    let s = s.clamp(0.0, last);
    if n < 4 {
        let i = (s.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return values[0];
        }
        let t = s - i as f64;
        return values[i] * (1.0 - t) + values[i + 1] * t;
    }
    let i = (s.floor() as usize).clamp(1, n - 3);
    let t = s - i as f64;
    let w = cubic_weights(t);
    w[0] * values[i - 1] + w[1] * values[i] + w[2] * values[i + 1] + w[3] * values[i + 2]
}

/// Lagrange interpolation through `xs`/`ys` (small stencils only).
pub(crate) fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                w *= (x - xj) / (xi - xj);
            }
        }
        acc += w * yi;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_exact_for_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let vals: Vec<f64> = (0..10).map(|i| f(0.3 * i as f64)).collect();
        for &x in &[0.0, 0.1, 1.37, 2.69, 2.7] {
            assert!((uniform_cubic(&vals, 0.0, 0.3, x) - f(x)).abs() < 1e-12);
        }
        assert_eq!(uniform_cubic(&vals, 0.0, 0.3, -0.01), 0.0);
        assert_eq!(uniform_cubic(&vals, 0.0, 0.3, 2.71), 0.0);
    }

    #[test]
    fn lagrange_reproduces_quintic() {
        let f = |x: f64| x.powi(5) - x;
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        assert!((lagrange(&xs, &ys, 1.23) - f(1.23)).abs() < 1e-12);
    }
}

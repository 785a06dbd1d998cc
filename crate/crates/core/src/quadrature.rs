//! One-dimensional rules: composite Simpson on vertex grids, Gauss-Legendre
//! panels, and adaptive Simpson for the few integrals with a closed-form oracle.

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// `m + 1` equally spaced vertices on `[a, b]`.
pub fn vertices(a: f64, b: f64, m: usize) -> Vec<f64> {
    let h = (b - a) / m as f64;
    (0..=m).map(|i| if i == m { b } else { a + i as f64 * h }).collect()
}

/// Weights of a composite Newton-Cotes rule on `m` equal intervals of width `h`.
///
/// Simpson for even `m`; odd `m ≥ 3` puts a 3/8 panel on the last three
/// intervals; `m = 1` is the trapezoid rule.
pub fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; m + 1];
    match m {
        0 => {}
        1 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
        }
        _ => {
            let simpson_end = if m % 2 == 0 { m } else { m - 3 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
            }
            if m % 2 == 1 {
                let s = m - 3;
                w[s] += 3.0 * h / 8.0;
                w[s + 1] += 9.0 * h / 8.0;
                w[s + 2] += 9.0 * h / 8.0;
                w[s + 3] += 3.0 * h / 8.0;
            }
        }
    }
    w
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64, degree: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = GaussLegendre::new(degree.max(2))
        .map_err(|e| Error::Config(format!("Gauss-Legendre rule of degree {degree}: {e}")))?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(rule
        .as_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .unzip())
}

/// Composite Gauss-Legendre: `panels` equal panels of `degree` nodes each.
pub fn composite_gauss(a: f64, b: f64, panels: usize, degree: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (xs, ws) = gauss_legendre(-1.0, 1.0, degree)?;
    let h = (b - a) / panels.max(1) as f64;
    let mut nodes = Vec::with_capacity(panels * xs.len());
    let mut weights = Vec::with_capacity(panels * xs.len());
    for p in 0..panels.max(1) {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in xs.iter().zip(&ws) {
            nodes.push(mid + 0.5 * h * x);
            weights.push(0.5 * h * w);
        }
    }
    Ok((nodes, weights))
}

/// Adaptive Simpson with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

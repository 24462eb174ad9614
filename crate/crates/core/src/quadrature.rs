//! Deterministic quadrature on boxes in one or two dimensions.

use rayon::prelude::*;

use crate::error::{AmisError, Result};

/// Stop refining once successive trapezoid levels agree to this (relative to
/// `max(1, |I|)`).
pub const REFINE_TOL: f64 = 1e-8;
const START_INTERVALS: usize = 64;
const MAX_INTERVALS: usize = 4096;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pm) = (p1, p0);
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Quadrature nodes along one axis for a sequence of consecutive intervals
/// `[breaks[k], breaks[k+1]]`. Each interval is cut into pieces no wider than
/// `max_width`, and each piece gets a Gauss-Legendre rule of `order` nodes.
/// Returns `(node, weight, interval index)` triples in increasing order.
pub fn axis_rule(breaks: &[f64], max_width: f64, order: usize) -> Vec<(f64, f64, usize)> {
    let (gx, gw) = gauss_legendre(order);
    let mut out = Vec::new();
    for k in 0..breaks.len().saturating_sub(1) {
        let (a, b) = (breaks[k], breaks[k + 1]);
        if !(b > a) {
            continue;
        }
        let pieces = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for p in 0..pieces {
            let lo = a + p as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w, k));
            }
        }
    }
    out
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == 0 || i == n { 0.5 * h } else { h })
        .collect()
}

/// Tensor-product sum `sum_i sum_j w_i w_j f(x_i, y_j)` over per-axis rules
/// from [`axis_rule`]. Rows along axis 0 run in parallel and are added in
/// order.
pub fn integrate_rule<F>(rules: &[Vec<(f64, f64, usize)>], out_len: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let d = rules.len();
    if d == 0 || d > 2 {
        return Err(AmisError::Unsupported(format!(
            "quadrature is available in 1 or 2 dimensions, not {d}"
        )));
    }
    let rows: Vec<Vec<f64>> = rules[0]
        .par_iter()
        .map(|&(x0, w0, _)| {
            let mut acc = vec![0.0; out_len];
            let mut val = vec![0.0; out_len];
            if d == 1 {
                f(&[x0], &mut val);
                for (a, v) in acc.iter_mut().zip(&val) {
                    *a += w0 * v;
                }
            } else {
                for &(x1, w1, _) in &rules[1] {
                    f(&[x0, x1], &mut val);
                    for (a, v) in acc.iter_mut().zip(&val) {
                        *a += w0 * w1 * v;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; out_len];
    for r in rows {
        for (t, v) in total.iter_mut().zip(r) {
            *t += v;
        }
    }
    Ok(total)
}

/// Tensor trapezoid integral of a vector-valued `f` over `[lo, hi]`, doubling
/// the resolution until two levels agree to [`REFINE_TOL`].
pub fn integrate_box<F>(lo: &[f64], hi: &[f64], out_len: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let d = lo.len();
    if d == 0 || d > 2 || hi.len() != d {
        return Err(AmisError::Unsupported(format!(
            "quadrature is available in 1 or 2 dimensions, not {d}"
        )));
    }
    let mut prev: Option<Vec<f64>> = None;
    let mut n = START_INTERVALS;
    loop {
        let cur = trapezoid_level(lo, hi, n, out_len, &f);
        if let Some(p) = &prev {
            let scale = cur.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let diff = cur.iter().zip(p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if diff <= REFINE_TOL * scale {
                return Ok(cur);
            }
            if n >= MAX_INTERVALS {
                log::warn!("quadrature stopped at {n} intervals with change {diff:e}");
                return Ok(cur);
            }
        }
        prev = Some(cur);
        n *= 2;
    }
}

fn trapezoid_level<F>(lo: &[f64], hi: &[f64], n: usize, out_len: usize, f: &F) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let d = lo.len();
    let h: Vec<f64> = (0..d).map(|a| (hi[a] - lo[a]) / n as f64).collect();
    let w: Vec<Vec<f64>> = h.iter().map(|&ha| trapezoid_weights(n, ha)).collect();
    let rows: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; out_len];
            let mut val = vec![0.0; out_len];
            let x0 = lo[0] + i as f64 * h[0];
            if d == 1 {
                f(&[x0], &mut val);
                for (a, v) in acc.iter_mut().zip(&val) {
                    *a += w[0][i] * v;
                }
            } else {
                let mut x = [x0, 0.0];
                for j in 0..=n {
                    x[1] = lo[1] + j as f64 * h[1];
                    f(&x, &mut val);
                    let wij = w[0][i] * w[1][j];
                    for (a, v) in acc.iter_mut().zip(&val) {
                        *a += wij * v;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; out_len];
    for r in rows {
        for (t, v) in total.iter_mut().zip(r) {
            *t += v;
        }
    }
    total
}

//! Log-domain weight arithmetic.
//!
//! Every importance weight in the crate is carried as a natural logarithm and
//! only exponentiated inside a normalised reduction. Sums over particles use
//! [`pairwise_sum`] so that the reduction tree depends on the input length
//! alone, never on how work was split across threads.

use crate::error::{AmisError, Result};

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation with a fixed reduction tree.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n`, same tree as [`pairwise_sum`].
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, f) + go(mid, hi, f)
    }
    go(0, n, &f)
}

/// `log(sum(exp(values)))`, stable for large and `-inf` entries.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(AmisError::Contract("log_sum_exp of an empty list".into()));
    }
    Ok(log_sum_exp_unchecked(values))
}

pub(crate) fn log_sum_exp_unchecked(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // all -inf, or a +inf present
        return max;
    }
    let total = pairwise_sum_by(values.len(), |i| (values[i] - max).exp());
    max + total.ln()
}

/// Importance weight `pi(x) / q(x)` in log form.
///
/// A zero target density gives a zero weight. A zero proposal density under a
/// positive target density means the proposal does not dominate the target.
pub fn simple_log_weight(log_pi: f64, log_q: f64) -> Result<f64> {
    if log_pi == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if log_q == f64::NEG_INFINITY {
        return Err(AmisError::AbsoluteContinuity { log_pi });
    }
    if !log_q.is_finite() || log_pi.is_nan() {
        return Err(AmisError::Contract(format!(
            "non-finite log density (log_pi = {log_pi}, log_q = {log_q})"
        )));
    }
    Ok(log_pi - log_q)
}

/// Self-normalised linear-domain weights, `exp(lw - logsumexp(lw))`.
pub fn normalized_weights(log_w: &[f64]) -> Result<Vec<f64>> {
    if log_w.is_empty() {
        return Err(AmisError::Contract("no weights to normalise".into()));
    }
    let lse = log_sum_exp_unchecked(log_w);
    if lse == f64::NEG_INFINITY {
        return Err(AmisError::DegenerateWeights);
    }
    Ok(log_w.iter().map(|lw| (lw - lse).exp()).collect())
}

//! The Gaussian proposal family, optionally truncated to an axis-aligned box.
//!
//! Learning uses `h(x) = (x, x x^T)`: the parameter of the Kullback-Leibler
//! optimal Gaussian is the pair of raw moments of the target, so a new
//! parameter is literally a weighted average of `h` over the current sample.
//! The same map is used for truncated families, where the fit is only
//! approximate.

use std::sync::Once;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{AmisError, Result};
use crate::params::ProposalParams;
use crate::rng::StreamFactory;

/// Per-particle cap on rejection draws, and the budget over which the
/// acceptance rate is judged.
pub const REJECTION_BUDGET: u64 = 1_000_000;
/// Minimum acceptable acceptance rate of the truncated sampler.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

static CORRELATED_BOX_WARNING: Once = Once::new();

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(AmisError::Contract("box bounds have mismatched lengths".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(AmisError::Contract(format!(
                "box lower bound {} is not below upper bound {} on axis {i}",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }
}

/// Dimension and optional truncation box of the proposal family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    dim: usize,
    truncation: Option<BoxBounds>,
}

impl FamilySpec {
    pub fn gaussian(dim: usize) -> Self {
        assert!(dim > 0, "family dimension must be positive");
        Self { dim, truncation: None }
    }

    pub fn truncated(bounds: BoxBounds) -> Self {
        Self {
            dim: bounds.dim(),
            truncation: Some(bounds),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> Option<&BoxBounds> {
        self.truncation.as_ref()
    }
}

/// A proposal ready for repeated density evaluation: parameters plus the
/// log of the Gaussian mass inside the truncation box.
#[derive(Debug, Clone)]
pub struct Component {
    params: ProposalParams,
    bounds: Option<BoxBounds>,
    log_mass: f64,
}

impl Component {
    pub fn new(params: &ProposalParams, family: &FamilySpec) -> Result<Self> {
        if params.dim() != family.dim() {
            return Err(AmisError::Contract(format!(
                "proposal dimension {} does not match family dimension {}",
                params.dim(),
                family.dim()
            )));
        }
        let log_mass = match family.truncation() {
            None => 0.0,
            Some(b) => log_box_mass(params, b),
        };
        if log_mass == f64::NEG_INFINITY || log_mass.is_nan() {
            return Err(AmisError::SupportEscape { accepted: 0, draws: 0 });
        }
        Ok(Self {
            params: params.clone(),
            bounds: family.truncation().cloned(),
            log_mass,
        })
    }

    pub fn params(&self) -> &ProposalParams {
        &self.params
    }

    /// Log of the Gaussian mass inside the box (0 when untruncated, or when
    /// the covariance is correlated and the mass is taken as 1).
    pub fn log_mass(&self) -> f64 {
        self.log_mass
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        if let Some(b) = &self.bounds {
            if !b.contains(x) {
                return f64::NEG_INFINITY;
            }
        }
        self.params.gaussian_log_density(x) - self.log_mass
    }
}

fn log_box_mass(params: &ProposalParams, bounds: &BoxBounds) -> f64 {
    if !params.is_diagonal() {
        CORRELATED_BOX_WARNING.call_once(|| {
            log::warn!(
                "truncated proposal with correlated covariance: box mass taken as 1 \
                 (use boxes of at least 8 standard deviations)"
            )
        });
        return 0.0;
    }
    let std = Normal::standard();
    let mut total = 0.0;
    for i in 0..params.dim() {
        let mu = params.mean()[i];
        let sd = params.cov()[(i, i)].sqrt();
        let a = (bounds.lower()[i] - mu) / sd;
        let b = (bounds.upper()[i] - mu) / sd;
        // work in the tail that keeps the difference well conditioned
        let mass = if a > 0.0 {
            std.cdf(-a) - std.cdf(-b)
        } else {
            std.cdf(b) - std.cdf(a)
        };
        total += mass.max(0.0).ln();
    }
    total
}

/// Log-density of the (possibly truncated) proposal at `x`; `-inf` outside
/// the truncation box.
pub fn log_density(x: &[f64], params: &ProposalParams, family: &FamilySpec) -> Result<f64> {
    Ok(Component::new(params, family)?.log_density(x))
}

/// Draws `n` points from the proposal as a flat row-major array.
///
/// Particle `i` uses the substream `(iteration, i)` of `streams`; truncation
/// is handled by rejection.
pub fn sample(
    params: &ProposalParams,
    family: &FamilySpec,
    n: usize,
    streams: &StreamFactory,
    iteration: u64,
) -> Result<Vec<f64>> {
    let d = params.dim();
    if d != family.dim() {
        return Err(AmisError::Contract("proposal/family dimension mismatch".into()));
    }
    if n == 0 {
        return Err(AmisError::Contract("sample size must be positive".into()));
    }
    if let Some(b) = family.truncation() {
        if params.is_diagonal() && log_box_mass(params, b) < MIN_ACCEPTANCE.ln() {
            return Err(AmisError::SupportEscape { accepted: 0, draws: 0 });
        }
    }
    let bounds = family.truncation();
    let draws: Vec<(Vec<f64>, u64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.particle(iteration, i as u64);
            let mut z = vec![0.0; d];
            let mut x = vec![0.0; d];
            let mut tries = 0u64;
            loop {
                tries += 1;
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                params.transform_standard(&z, &mut x);
                match bounds {
                    Some(b) if !b.contains(&x) => {
                        if tries >= REJECTION_BUDGET {
                            return Err(AmisError::SupportEscape {
                                accepted: 0,
                                draws: tries,
                            });
                        }
                    }
                    _ => return Ok((x, tries)),
                }
            }
        })
        .collect::<Result<_>>()?;
    let total: u64 = draws.iter().map(|(_, t)| t).sum();
    if total >= REJECTION_BUDGET && (n as f64) / (total as f64) < MIN_ACCEPTANCE {
        return Err(AmisError::SupportEscape {
            accepted: n as u64,
            draws: total,
        });
    }
    Ok(draws.into_iter().flat_map(|(x, _)| x).collect())
}

/// Weighted accumulator of `h(x) = (x, x x^T)`.
///
/// Weights arrive as logarithms and are held relative to a running
/// `log_scale`, so neither huge nor tiny weights overflow. Moments are
/// accumulated about a shift point (the first point with positive weight)
/// to limit cancellation in the second moment.
#[derive(Debug, Clone, PartialEq)]
pub struct HStat {
    dim: usize,
    shift: Option<Vec<f64>>,
    log_scale: f64,
    // all three are scaled by exp(-log_scale)
    sum_w: f64,
    m1: Vec<f64>,
    m2: Vec<f64>,
    points: usize,
    total_logw: Option<f64>,
}

impl HStat {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            shift: None,
            log_scale: f64::NEG_INFINITY,
            sum_w: 0.0,
            m1: vec![0.0; dim],
            m2: vec![0.0; dim * dim],
            points: 0,
            total_logw: None,
        }
    }

    /// Starts with an explicit shift point.
    pub fn with_shift(shift: Vec<f64>) -> Self {
        let mut s = Self::new(shift.len());
        s.shift = Some(shift);
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points accumulated with positive weight.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Self-normalised weighted mean, if any weight is positive.
    pub fn mean(&self) -> Option<Vec<f64>> {
        if self.sum_w == 0.0 || !self.sum_w.is_finite() {
            return None;
        }
        let s = self.shift.as_ref()?;
        Some(s.iter().zip(&self.m1).map(|(s, m)| s + m / self.sum_w).collect())
    }

    /// `log(sum w)` over everything accumulated so far.
    pub fn log_sum_weights(&self) -> f64 {
        if self.sum_w == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.log_scale + self.sum_w.ln()
        }
    }

    /// The log of the divisor used by [`moments_to_params`]: `log(sum w)`
    /// unless overridden (e.g. with `log N` for the unnormalised average).
    pub fn total_logw(&self) -> f64 {
        self.total_logw.unwrap_or_else(|| self.log_sum_weights())
    }

    pub fn set_total_logw(&mut self, total_logw: f64) {
        self.total_logw = Some(total_logw);
    }

    /// Weighted sums `(sum w, sum w x, sum w x x^T)` in linear scale.
    pub fn raw_sums(&self) -> (f64, Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let scale = self.log_scale.exp();
        let w = self.sum_w * scale;
        let zero = vec![0.0; d];
        let s = self.shift.as_deref().unwrap_or(&zero);
        let c: Vec<f64> = self.m1.iter().map(|v| v * scale).collect();
        let mut m1 = vec![0.0; d];
        let mut m2 = vec![0.0; d * d];
        for i in 0..d {
            m1[i] = c[i] + w * s[i];
            for j in 0..d {
                m2[i * d + j] =
                    self.m2[i * d + j] * scale + s[i] * c[j] + c[i] * s[j] + w * s[i] * s[j];
            }
        }
        (w, m1, m2)
    }

    fn rescale_to(&mut self, log_scale: f64) {
        if self.log_scale == log_scale {
            return;
        }
        let f = if self.log_scale == f64::NEG_INFINITY {
            0.0
        } else {
            (self.log_scale - log_scale).exp()
        };
        self.sum_w *= f;
        self.m1.iter_mut().for_each(|v| *v *= f);
        self.m2.iter_mut().for_each(|v| *v *= f);
        self.log_scale = log_scale;
    }

    /// Adds `exp(log_w) * h(x)`.
    pub fn accumulate(&mut self, x: &[f64], log_w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        if log_w == f64::NEG_INFINITY {
            return;
        }
        if self.shift.is_none() {
            self.shift = Some(x.to_vec());
        }
        if log_w > self.log_scale {
            self.rescale_to(log_w);
        }
        let w = (log_w - self.log_scale).exp();
        let d = self.dim;
        let s = self.shift.as_ref().unwrap();
        let mut dx = [0.0f64; 8];
        let mut heap;
        let dx: &mut [f64] = if d <= 8 {
            &mut dx[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        for i in 0..d {
            dx[i] = x[i] - s[i];
        }
        self.sum_w += w;
        for i in 0..d {
            self.m1[i] += w * dx[i];
            for j in 0..d {
                // dx[i]*dx[j] == dx[j]*dx[i] exactly, so m2 stays symmetric
                self.m2[i * d + j] += w * (dx[i] * dx[j]);
            }
        }
        self.points += 1;
    }

    /// Folds `other` into `self`. Merging partial accumulators in a fixed
    /// order gives a reproducible total.
    pub fn merge(&mut self, other: &HStat) {
        assert_eq!(self.dim, other.dim, "merging HStats of different dimension");
        if other.sum_w == 0.0 {
            return;
        }
        let d = self.dim;
        if self.shift.is_none() {
            self.shift = other.shift.clone();
        }
        let target = self.log_scale.max(other.log_scale);
        self.rescale_to(target);
        let f = (other.log_scale - target).exp();
        let s = self.shift.as_ref().unwrap();
        let so = other.shift.as_ref().unwrap();
        // re-centre other's sums from its shift to ours: delta = so - s
        let delta: Vec<f64> = (0..d).map(|i| so[i] - s[i]).collect();
        let w = other.sum_w * f;
        let c: Vec<f64> = other.m1.iter().map(|v| v * f).collect();
        self.sum_w += w;
        for i in 0..d {
            self.m1[i] += c[i] + w * delta[i];
            for j in 0..d {
                let extra = delta[i] * c[j] + c[i] * delta[j] + w * (delta[i] * delta[j]);
                self.m2[i * d + j] += other.m2[i * d + j] * f + extra;
            }
        }
        // the extra term is symmetric in exact arithmetic; enforce it bitwise
        for i in 0..d {
            for j in 0..i {
                self.m2[j * d + i] = self.m2[i * d + j];
            }
        }
        self.points += other.points;
    }
}

/// Functional form of [`HStat::accumulate`].
pub fn accumulate_h(mut stat: HStat, x: &[f64], log_w: f64) -> HStat {
    stat.accumulate(x, log_w);
    stat
}

/// Maps the accumulated raw moments to Gaussian parameters:
/// `mean = m1 / W`, `cov = m2 / W - mean mean^T`, with `W = exp(total_logw)`.
pub fn moments_to_params(stat: &HStat, family: &FamilySpec) -> Result<ProposalParams> {
    let d = stat.dim;
    if d != family.dim() {
        return Err(AmisError::Contract("statistic/family dimension mismatch".into()));
    }
    if stat.sum_w == 0.0 || !stat.sum_w.is_finite() {
        return Err(AmisError::DegenerateSample("total weight is zero".into()));
    }
    // a = (sum w) / divisor; exactly 1 in the self-normalised case
    let a = match stat.total_logw {
        None => 1.0,
        Some(t) => (stat.log_sum_weights() - t).exp(),
    };
    let s = stat.shift.as_ref().unwrap();
    let c: Vec<f64> = stat.m1.iter().map(|v| a * v / stat.sum_w).collect();
    let mut mean = DVector::zeros(d);
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..d {
        mean[i] = c[i] + a * s[i];
    }
    for i in 0..d {
        for j in 0..d {
            let mut v = a * stat.m2[i * d + j] / stat.sum_w - c[i] * c[j];
            if a != 1.0 {
                v += (1.0 - a) * (s[i] * c[j] + c[i] * s[j]) + (a - a * a) * s[i] * s[j];
            }
            cov[(i, j)] = v;
        }
    }
    ProposalParams::from_mean_cov_repaired(mean, cov)
}

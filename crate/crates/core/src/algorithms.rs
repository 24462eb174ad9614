//! The three adaptive schemes and their estimators.
//!
//! All three share one learning loop: draw `N_t` points from the current
//! proposal, weight them by `pi / q`, and fit the next proposal by a
//! weighted average of `h(x) = (x, x x^T)`. They differ only in which
//! weights the fit sees and in how the final sample is weighted:
//!
//! | scheme            | learning weights                         | final weights          |
//! |-------------------|------------------------------------------|------------------------|
//! | modified AMIS (c) | current sample, `pi / q_t`               | deterministic mixture  |
//! | original AMIS (b) | every past sample, deterministic mixture | deterministic mixture  |
//! | naive (a)         | current sample, `pi / q_t`               | `pi / q_t`, unchanged  |
//!
//! The deterministic-mixture weight of a particle is
//! `pi(x) / (Omega^-1 sum_k N_k q(x, theta_k))`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::diagnostics::ess;
use crate::error::{AmisError, Result};
use crate::integrand::{Integrand, NamedIntegrand};
use crate::mixture::Mixture;
use crate::params::ProposalParams;
use crate::particles::{Algorithm, Normalization, ParticleSystem, RunOutput};
use crate::proposals::{moments_to_params, sample, Component, FamilySpec, HStat};
use crate::rng::StreamFactory;
use crate::schedule::Schedule;
use crate::targets::TargetModel;
use crate::weights::{pairwise_sum_by, simple_log_weight};

/// Particles per partial accumulator in [`learn_step`]. Fixed, so the
/// reduction tree does not depend on the thread count.
const LEARN_CHUNK: usize = 512;

/// How the next proposal is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adaptation {
    /// Weighted moment matching.
    #[default]
    MomentMatching,
    /// Keep `theta_1` for every iteration.
    Frozen,
}

/// Everything needed for one seeded run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub target: TargetModel,
    pub family: FamilySpec,
    pub theta1: ProposalParams,
    pub schedule: Schedule,
    pub seed: u64,
    pub normalization: Normalization,
    pub algorithm: Algorithm,
    pub adaptation: Adaptation,
    /// Integrands estimated from the final weighted sample.
    pub integrands: Vec<NamedIntegrand>,
}

impl RunConfig {
    /// Modified AMIS, self-normalised, moment matching, no integrands.
    pub fn new(
        target: TargetModel,
        family: FamilySpec,
        theta1: ProposalParams,
        schedule: Schedule,
        seed: u64,
    ) -> Self {
        Self {
            target,
            family,
            theta1,
            schedule,
            seed,
            normalization: Normalization::default(),
            algorithm: Algorithm::ModifiedAmis,
            adaptation: Adaptation::default(),
            integrands: Vec::new(),
        }
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_adaptation(mut self, adaptation: Adaptation) -> Self {
        self.adaptation = adaptation;
        self
    }

    pub fn with_integrands(mut self, integrands: Vec<NamedIntegrand>) -> Self {
        self.integrands = integrands;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.family.dim();
        if self.theta1.dim() != d || self.target.dim() != d {
            return Err(AmisError::Contract(format!(
                "dimensions disagree: family {d}, theta_1 {}, target {}",
                self.theta1.dim(),
                self.target.dim()
            )));
        }
        Ok(())
    }
}

/// Fits the next proposal from one weighted sample.
///
/// `Normalized` divides the weighted sum of `h` by the sample size,
/// `SelfNormalized` by the sum of the weights.
pub fn learn_step(
    points: &[f64],
    log_w: &[f64],
    family: &FamilySpec,
    mode: Normalization,
) -> Result<ProposalParams> {
    let d = family.dim();
    let n = log_w.len();
    if points.len() != n * d {
        return Err(AmisError::Contract(format!(
            "{} coordinates for {n} weights in dimension {d}",
            points.len()
        )));
    }
    if n < d + 1 {
        return Err(AmisError::DegenerateSample(format!(
            "{n} points cannot fit a {d}-dimensional covariance"
        )));
    }
    // second pass about the weighted mean of the first
    let top = (0..n).fold(0, |b, i| if log_w[i] > log_w[b] { i } else { b });
    let rough = accumulate_about(points, log_w, &points[top * d..(top + 1) * d]);
    let mut stat = match rough.mean() {
        Some(centre) => accumulate_about(points, log_w, &centre),
        None => rough,
    };
    if mode == Normalization::Normalized {
        stat.set_total_logw((n as f64).ln());
    }
    moments_to_params(&stat, family)
}

fn accumulate_about(points: &[f64], log_w: &[f64], shift: &[f64]) -> HStat {
    let d = shift.len();
    let partials: Vec<HStat> = log_w
        .par_chunks(LEARN_CHUNK)
        .enumerate()
        .map(|(c, ws)| {
            let mut s = HStat::with_shift(shift.to_vec());
            let base = c * LEARN_CHUNK;
            for (k, w) in ws.iter().enumerate() {
                let p = base + k;
                s.accumulate(&points[p * d..(p + 1) * d], *w);
            }
            s
        })
        .collect();
    let mut stat = HStat::with_shift(shift.to_vec());
    for s in &partials {
        stat.merge(s);
    }
    stat
}

/// Runs whichever scheme `config.algorithm` names.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let streams = StreamFactory::new(config.seed);
    let d = config.family.dim();
    let sizes = config.schedule.sizes();
    let big_t = sizes.len();
    let mut thetas = Vec::with_capacity(big_t + 1);
    thetas.push(config.theta1.clone());
    let mut system = ParticleSystem::new(d);
    let mut ess_per_iter = Vec::with_capacity(big_t);

    for t in 0..big_t {
        let at = |e: AmisError| e.at_iteration(t + 1);
        let theta = &thetas[t];
        let comp = Component::new(theta, &config.family).map_err(at)?;
        let points = sample(theta, &config.family, sizes[t], &streams, t as u64).map_err(at)?;
        let (log_target, simple): (Vec<f64>, Vec<f64>) = points
            .par_chunks(d)
            .map(|x| {
                let lp = config.target.log_density(x);
                simple_log_weight(lp, comp.log_density(x)).map(|w| (lp, w))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(at)?
            .into_iter()
            .unzip();
        ess_per_iter.push(ess(&simple).map_err(at)?);
        system.push_iteration(points, log_target, simple).map_err(at)?;

        let next = match config.adaptation {
            Adaptation::Frozen => theta.clone(),
            Adaptation::MomentMatching => match config.algorithm {
                Algorithm::ModifiedAmis | Algorithm::NaiveRecycling => {
                    let r = system.iteration_range(t);
                    learn_step(
                        &system.points()[r.start * d..r.end * d],
                        &system.simple_log_w()[r],
                        &config.family,
                        config.normalization,
                    )
                }
                Algorithm::OriginalAmis => {
                    recycled_log_weights(&system, &thetas, &sizes[..=t], &config.family).and_then(
                        |w| learn_step(system.points(), &w, &config.family, config.normalization),
                    )
                }
            }
            .map_err(at)?,
        };
        thetas.push(next);
    }

    let final_w = match config.algorithm {
        Algorithm::NaiveRecycling => system.simple_log_w().to_vec(),
        Algorithm::ModifiedAmis | Algorithm::OriginalAmis => {
            recycled_log_weights(&system, &thetas[..big_t], sizes, &config.family)?
        }
    };
    system.set_recycled(final_w);

    let mut estimates = BTreeMap::new();
    for psi in &config.integrands {
        estimates.insert(
            psi.name.clone(),
            estimate(&system, &psi.integrand, config.normalization)?,
        );
    }
    Ok(RunOutput {
        thetas,
        system,
        ess_per_iter,
        estimates,
        seed: config.seed,
        algorithm: config.algorithm,
        normalization: config.normalization,
    })
}

fn require(config: &RunConfig, algorithm: Algorithm) -> Result<()> {
    if config.algorithm != algorithm {
        return Err(AmisError::Contract(format!(
            "config requests {} but {algorithm} was called",
            config.algorithm
        )));
    }
    Ok(())
}

/// Modified AMIS: learn from the current sample only, recycle once at the end.
pub fn run_modified_amis(config: &RunConfig) -> Result<RunOutput> {
    require(config, Algorithm::ModifiedAmis)?;
    run(config)
}

/// Original AMIS: reweight every past particle by the mixture at every
/// iteration and learn from all of them.
pub fn run_original_amis(config: &RunConfig) -> Result<RunOutput> {
    require(config, Algorithm::OriginalAmis)?;
    run(config)
}

/// Naive recycling: modified-AMIS learning, final sample keeps the simple
/// weights.
pub fn run_naive(config: &RunConfig) -> Result<RunOutput> {
    require(config, Algorithm::NaiveRecycling)?;
    run(config)
}

/// Deterministic-mixture log-weights of every particle in `system` under the
/// proposals `thetas[..counts.len()]` with sizes `counts`.
pub fn recycled_log_weights(
    system: &ParticleSystem,
    thetas: &[ProposalParams],
    counts: &[usize],
    family: &FamilySpec,
) -> Result<Vec<f64>> {
    let k = counts.len();
    if thetas.len() < k {
        return Err(AmisError::Contract(format!(
            "{} proposals for {k} iterations",
            thetas.len()
        )));
    }
    if counts.iter().sum::<usize>() != system.len() {
        return Err(AmisError::Contract(format!(
            "counts cover {} particles, system has {}",
            counts.iter().sum::<usize>(),
            system.len()
        )));
    }
    let mixture = Mixture::new(&thetas[..k], counts, family)?;
    let lt = system.log_target();
    (0..system.len())
        .into_par_iter()
        .map(|p| simple_log_weight(lt[p], mixture.log_density(system.point(p))))
        .collect()
}

/// Returns a copy of `system` whose recycled weights are the deterministic
/// mixture weights over `thetas` (one per iteration). Points and target
/// values are untouched.
pub fn recycle(
    system: &ParticleSystem,
    thetas: &[ProposalParams],
    schedule: &Schedule,
    family: &FamilySpec,
) -> Result<ParticleSystem> {
    if thetas.len() != schedule.iterations() || schedule.sizes() != system.sizes() {
        return Err(AmisError::Contract(
            "recycling needs one proposal per iteration and a matching schedule".into(),
        ));
    }
    let w = recycled_log_weights(system, thetas, schedule.sizes(), family)?;
    let mut out = system.clone();
    out.set_recycled(w);
    Ok(out)
}

/// Final estimate of `E_pi[psi]` from the recycled weights.
///
/// `Normalized`: `Omega^-1 sum_p w_p psi(x_p)`. `SelfNormalized`:
/// `sum_p w_p psi(x_p) / sum_p w_p`, computed as
/// `psi_ref + sum_p w_p (psi(x_p) - psi_ref) / sum_p w_p` so that constants
/// are reproduced exactly.
pub fn estimate(system: &ParticleSystem, psi: &Integrand, mode: Normalization) -> Result<f64> {
    let log_w = system
        .recycled_log_w()
        .ok_or_else(|| AmisError::Contract("estimate needs recycled weights".into()))?;
    weighted_mean(system, log_w, psi, mode)
}

pub(crate) fn weighted_mean(
    system: &ParticleSystem,
    log_w: &[f64],
    psi: &Integrand,
    mode: Normalization,
) -> Result<f64> {
    let n = log_w.len();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match mode {
        Normalization::Normalized => {
            if max == f64::NEG_INFINITY {
                return Ok(0.0);
            }
            let s = pairwise_sum_by(n, |p| {
                if log_w[p] == f64::NEG_INFINITY {
                    0.0
                } else {
                    (log_w[p] - max).exp() * psi.eval(system.point(p))
                }
            });
            Ok(s / n as f64 * max.exp())
        }
        Normalization::SelfNormalized => {
            if max == f64::NEG_INFINITY {
                return Err(AmisError::DegenerateWeights);
            }
            let first = log_w.iter().position(|w| *w > f64::NEG_INFINITY).unwrap();
            let reference = psi.eval(system.point(first));
            let w = |p: usize| {
                if log_w[p] == f64::NEG_INFINITY {
                    0.0
                } else {
                    (log_w[p] - max).exp()
                }
            };
            let num = pairwise_sum_by(n, |p| {
                let wp = w(p);
                if wp == 0.0 {
                    0.0
                } else {
                    wp * (psi.eval(system.point(p)) - reference)
                }
            });
            let den = pairwise_sum_by(n, w);
            Ok(reference + num / den)
        }
    }
}

/// The infeasible estimator that weights every particle by
/// `pi(x) / q(x, theta*)`: `Omega^-1 sum_p pi(x_p) / q(x_p, theta*) psi(x_p)`.
pub fn oracle_estimate(
    system: &ParticleSystem,
    theta_star: &ProposalParams,
    family: &FamilySpec,
    psi: &Integrand,
) -> Result<f64> {
    let comp = Component::new(theta_star, family)?;
    let lt = system.log_target();
    let log_w: Vec<f64> = (0..system.len())
        .into_par_iter()
        .map(|p| simple_log_weight(lt[p], comp.log_density(system.point(p))))
        .collect::<Result<_>>()?;
    weighted_mean(system, &log_w, psi, Normalization::Normalized)
}

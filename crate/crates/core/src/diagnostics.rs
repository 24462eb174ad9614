//! Run diagnostics: effective sample size, distribution-function distances,
//! the `m_eps` lower envelope, and an empirical weak-law check.

use rayon::prelude::*;

use crate::error::{AmisError, Result};
use crate::grid::{CdfGrid, GridSpec};
use crate::params::ProposalParams;
use crate::particles::ParticleSystem;
use crate::proposals::{sample, Component, FamilySpec};
use crate::algorithms::RunConfig;
use crate::rng::{derive_seed, StreamFactory};
use crate::targets::TargetModel;
use crate::weights::{normalized_weights, pairwise_sum_by};

/// Effective sample size `(sum w)^2 / sum w^2`, clamped to `[1, n]`.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    let n = log_weights.len();
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 || max == f64::NEG_INFINITY {
        return Err(AmisError::DegenerateWeights);
    }
    let w = |i: usize| (log_weights[i] - max).exp();
    let s1 = pairwise_sum_by(n, w);
    let s2 = pairwise_sum_by(n, |i| {
        let v = w(i);
        v * v
    });
    Ok((s1 * s1 / s2).clamp(1.0, n as f64))
}

/// Weighted empirical distribution function of the particles on `grid`,
/// with self-normalised weights (recycled or simple).
pub fn empirical_cdf(system: &ParticleSystem, grid: &GridSpec, use_recycled: bool) -> Result<CdfGrid> {
    let log_w = if use_recycled {
        system
            .recycled_log_w()
            .ok_or_else(|| AmisError::Contract("system has no recycled weights".into()))?
    } else {
        system.simple_log_w()
    };
    weighted_cdf(system.points(), system.dim(), log_w, grid)
}

/// `F(g) = sum_p wbar_p 1{x_p <= g}` for flat `points`.
pub fn weighted_cdf(points: &[f64], dim: usize, log_w: &[f64], grid: &GridSpec) -> Result<CdfGrid> {
    if grid.dim() != dim {
        return Err(AmisError::Unsupported(format!(
            "distribution grid of dimension {} for {dim}-dimensional particles",
            grid.dim()
        )));
    }
    let w = normalized_weights(log_w)?;
    let corners: Vec<Vec<f64>> = (0..dim).map(|a| grid.corners(a)).collect();
    let cells = grid.cells();
    // first corner index with x <= corner, or None when above every corner
    let bin = |a: usize, v: f64| -> Option<usize> {
        let c = &corners[a];
        let k = c.partition_point(|&g| g < v);
        (k < c.len()).then_some(k)
    };
    let n1 = if dim == 2 { cells[1] } else { 1 };
    let mut hist = vec![0.0; cells[0] * n1];
    for (p, wp) in w.iter().enumerate() {
        if *wp == 0.0 {
            continue;
        }
        let x = &points[p * dim..(p + 1) * dim];
        let Some(i) = bin(0, x[0]) else { continue };
        let j = if dim == 2 {
            match bin(1, x[1]) {
                Some(j) => j,
                None => continue,
            }
        } else {
            0
        };
        hist[i * n1 + j] += wp;
    }
    // cumulative sums along axis 1, then axis 0: both only add non-negatives
    for i in 0..cells[0] {
        for j in 1..n1 {
            hist[i * n1 + j] += hist[i * n1 + j - 1];
        }
    }
    for i in 1..cells[0] {
        for j in 0..n1 {
            hist[i * n1 + j] += hist[(i - 1) * n1 + j];
        }
    }
    hist.iter_mut().for_each(|v| *v = v.min(1.0));
    CdfGrid::new(grid.clone(), hist)
}

/// Distances between an estimated and a true distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    /// `sum_g (Fhat - F)^2 dF`, integrating against the true increments.
    pub cvm: f64,
    /// `sqrt(sum_g (Fhat - F)^2 * cell area)`.
    pub l2: f64,
    /// `max_g |Fhat - F|`.
    pub linf: f64,
    pub grid: GridSpec,
}

/// Cramer-von Mises, L2 and sup distances on a common grid.
///
/// `dF(g)` is the true mass of the cell whose upper corner is `g`, taking
/// the value outside the grid as 0 below the lower edges, so the increments
/// sum to `F` at the top corner.
pub fn distances(f_hat: &CdfGrid, f_true: &CdfGrid) -> Result<DistanceReport> {
    if f_hat.grid != f_true.grid {
        return Err(AmisError::Contract("distribution grids differ".into()));
    }
    let grid = &f_true.grid;
    let c = grid.cells();
    let (n0, n1) = (c[0], if grid.dim() == 2 { c[1] } else { 1 });
    let at = |f: &CdfGrid, i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 {
            0.0
        } else {
            f.values[i as usize * n1 + j as usize]
        }
    };
    let mut cvm = 0.0;
    let mut sq = 0.0;
    let mut linf = 0.0f64;
    for i in 0..n0 as isize {
        for j in 0..n1 as isize {
            let diff = at(f_hat, i, j) - at(f_true, i, j);
            let d2 = diff * diff;
            let inc = if grid.dim() == 2 {
                at(f_true, i, j) - at(f_true, i - 1, j) - at(f_true, i, j - 1)
                    + at(f_true, i - 1, j - 1)
            } else {
                at(f_true, i, 0) - at(f_true, i - 1, 0)
            };
            cvm += d2 * inc;
            sq += d2;
            linf = linf.max(diff.abs());
        }
    }
    Ok(DistanceReport {
        cvm,
        l2: (sq * grid.cell_area()).sqrt(),
        linf,
        grid: grid.clone(),
    })
}

/// `||theta - theta*||` on the stacked `(mean, vec(cov))` vector.
pub fn theta_error(theta: &ProposalParams, theta_star: &ProposalParams) -> f64 {
    theta.theta_distance(theta_star)
}

/// Which parameter coordinates the `eps`-ball moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMode {
    /// Perturb the mean, keep the covariance of `theta*`.
    MeanOnly,
    /// Perturb the mean and every covariance entry.
    Full,
}

/// A closed ball `B(theta*, radius)` in parameter space, explored by a
/// lattice with `levels` points per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    pub radius: f64,
    pub mode: BallMode,
    pub levels: usize,
}

impl BallSpec {
    pub fn new(radius: f64, mode: BallMode, levels: usize) -> Self {
        Self { radius, mode, levels }
    }
}

/// Enumerates the lattice of parameters inside the ball: every lattice point
/// within the radius plus its radial projection onto the boundary sphere.
/// Parameters whose covariance is not positive definite are skipped.
pub fn ball_lattice(center: &ProposalParams, ball: &BallSpec) -> Result<Vec<ProposalParams>> {
    if !(ball.radius >= 0.0) {
        return Err(AmisError::Contract("ball radius must be non-negative".into()));
    }
    if ball.radius == 0.0 {
        return Ok(vec![center.clone()]);
    }
    let d = center.dim();
    // coordinate k -> (index into theta offsets, norm weight)
    let mut coords: Vec<(usize, usize, f64)> = (0..d).map(|a| (a, a, 1.0)).collect();
    if ball.mode == BallMode::Full {
        for i in 0..d {
            for j in i..d {
                // an off-diagonal entry appears twice in vec(cov)
                let w = if i == j { 1.0 } else { 2.0 };
                coords.push((d + i * d + j, d + j * d + i, w));
            }
        }
    }
    let m = coords.len();
    let levels = ball.levels.max(2) | 1; // odd, so the centre is on the lattice
    let half = (levels / 2) as isize;
    let base = center.theta_vector();
    let mut out = Vec::new();
    let mut idx = vec![-half; m];
    let total = levels.pow(m as u32);
    for _ in 0..total {
        let u: Vec<f64> = idx
            .iter()
            .zip(&coords)
            .map(|(&k, &(_, _, w))| k as f64 / half as f64 * ball.radius / w.sqrt())
            .collect();
        let norm = u
            .iter()
            .zip(&coords)
            .map(|(v, &(_, _, w))| w * v * v)
            .sum::<f64>()
            .sqrt();
        let mut candidates = Vec::with_capacity(2);
        if norm <= ball.radius * (1.0 + 1e-12) {
            candidates.push(u.clone());
        }
        if norm > 0.0 {
            candidates.push(u.iter().map(|v| v * ball.radius / norm).collect());
        }
        for cand in candidates {
            let mut theta = base.clone();
            for (v, &(a, b, _)) in cand.iter().zip(&coords) {
                theta[a] += v;
                if b != a {
                    theta[b] += v;
                }
            }
            let cov = &theta[d..];
            if let Ok(p) = ProposalParams::from_slices(&theta[..d], cov) {
                out.push(p);
            }
        }
        // odometer increment
        for k in 0..m {
            idx[k] += 1;
            if idx[k] <= half {
                break;
            }
            idx[k] = -half;
        }
    }
    Ok(out)
}

/// `log m_eps(x) = min over the ball lattice of log q(x, theta)` at each
/// point of a flat array.
pub fn log_m_eps_at(
    points: &[f64],
    center: &ProposalParams,
    ball: &BallSpec,
    family: &FamilySpec,
) -> Result<Vec<f64>> {
    let d = center.dim();
    let comps = ball_lattice(center, ball)?
        .iter()
        .map(|p| Component::new(p, family))
        .collect::<Result<Vec<_>>>()?;
    Ok(points
        .par_chunks(d)
        .map(|x| {
            comps
                .iter()
                .map(|c| c.log_density(x))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// `m_eps` on a grid, as log-values in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct MEpsGrid {
    pub grid: GridSpec,
    pub log_values: Vec<f64>,
}

/// Lattice approximation of `m_eps(x) = inf { q(x, theta) : theta in
/// B(theta*, eps) }` at the grid points, centred on the target's `theta*`.
pub fn m_eps_bound(
    target: &TargetModel,
    ball: &BallSpec,
    grid: &GridSpec,
    family: &FamilySpec,
) -> Result<MEpsGrid> {
    let center = target
        .theta_star()
        .ok_or_else(|| AmisError::Unsupported("target has no theta*".into()))?;
    if grid.dim() != target.dim() {
        return Err(AmisError::Contract("grid/target dimension mismatch".into()));
    }
    let points: Vec<f64> = (0..grid.len()).flat_map(|k| grid.point(k)).collect();
    Ok(MEpsGrid {
        grid: grid.clone(),
        log_values: log_m_eps_at(&points, center, ball, family)?,
    })
}

/// What the weak-law check averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WllnStatistic {
    /// `h(x) = x`.
    FirstMoment,
    /// `h(x) = (x, vec(x x^T))`.
    FullMoments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WllnSettings {
    pub replicates: usize,
    /// Truncation level of the Lindeberg-type term.
    pub eta: f64,
    /// Deviation threshold.
    pub delta: f64,
    pub statistic: WllnStatistic,
}

/// One row `t` of the triangular array, across replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct WllnRow {
    pub size: usize,
    /// `||sum_i V_{t,i} - E||` per replicate.
    pub deviations: Vec<f64>,
    /// Replicate mean of `sum_i ||V_{t,i}|| 1{||V_{t,i}|| > eta}`.
    pub lindeberg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WllnReport {
    pub rows: Vec<WllnRow>,
    pub delta: f64,
    pub eta: f64,
}

impl WllnReport {
    /// Fraction of replicates of `row` whose deviation exceeds `delta`.
    pub fn fraction_above(&self, row: usize, delta: f64) -> f64 {
        let d = &self.rows[row].deviations;
        d.iter().filter(|v| **v > delta).count() as f64 / d.len() as f64
    }

    pub fn fractions(&self) -> Vec<f64> {
        (0..self.rows.len())
            .map(|r| self.fraction_above(r, self.delta))
            .collect()
    }

    /// Whether the deviation fraction of the last row is strictly below
    /// that of the first.
    pub fn decreases(&self) -> bool {
        let f = self.fractions();
        f.last() < f.first()
    }
}

/// Empirical weak law of large numbers on the triangular array
/// `V_{t,i} = pi(X_i) h(X_i) / (N_t q(X_i, theta_1))`, one row per schedule
/// size, with the proposal fixed at `config.theta1`. Each row sum is compared
/// with `E[h] = integral h dPi` from the target's `theta*`.
pub fn wlln_check(config: &RunConfig, settings: &WllnSettings) -> Result<WllnReport> {
    config.validate()?;
    if !config.target.is_normalized() {
        return Err(AmisError::Contract(
            "the weak-law array needs a normalised target density".into(),
        ));
    }
    if settings.replicates == 0 {
        return Err(AmisError::Contract("need at least one replicate".into()));
    }
    let theta_star = config
        .target
        .theta_star()
        .ok_or_else(|| AmisError::Unsupported("target has no theta*".into()))?;
    let d = config.family.dim();
    let h = |x: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend_from_slice(x);
        if settings.statistic == WllnStatistic::FullMoments {
            for i in 0..d {
                for j in 0..d {
                    out.push(x[i] * x[j]);
                }
            }
        }
    };
    let mut expected: Vec<f64> = theta_star.raw_m1().iter().copied().collect();
    if settings.statistic == WllnStatistic::FullMoments {
        for i in 0..d {
            for j in 0..d {
                expected.push(theta_star.raw_m2()[(i, j)]);
            }
        }
    }
    let comp = Component::new(&config.theta1, &config.family)?;
    let mut rows = Vec::new();
    for (t, &n) in config.schedule.sizes().iter().enumerate() {
        let per_rep: Vec<(f64, f64)> = (0..settings.replicates)
            .into_par_iter()
            .map(|r| {
                let streams = StreamFactory::new(derive_seed(config.seed, r as u64));
                let pts = sample(&config.theta1, &config.family, n, &streams, t as u64)?;
                let mut sum = vec![0.0; expected.len()];
                let mut lindeberg = 0.0;
                let mut hx = Vec::with_capacity(expected.len());
                for x in pts.chunks(d) {
                    let lw = config.target.log_density(x) - comp.log_density(x);
                    let w = lw.exp() / n as f64;
                    h(x, &mut hx);
                    let mut norm2 = 0.0;
                    for (s, v) in sum.iter_mut().zip(&hx) {
                        *s += w * v;
                        norm2 += (w * v) * (w * v);
                    }
                    let norm = norm2.sqrt();
                    if norm > settings.eta {
                        lindeberg += norm;
                    }
                }
                let dev = sum
                    .iter()
                    .zip(&expected)
                    .map(|(s, e)| (s - e) * (s - e))
                    .sum::<f64>()
                    .sqrt();
                Ok((dev, lindeberg))
            })
            .collect::<Result<_>>()?;
        rows.push(WllnRow {
            size: n,
            deviations: per_rep.iter().map(|p| p.0).collect(),
            lindeberg: per_rep.iter().map(|p| p.1).sum::<f64>() / settings.replicates as f64,
        });
    }
    Ok(WllnReport {
        rows,
        delta: settings.delta,
        eta: settings.eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ess_cases() {
        assert!((ess(&[0.3; 7]).unwrap() - 7.0).abs() < 1e-12);
        let one = [f64::NEG_INFINITY, 2.0, f64::NEG_INFINITY];
        assert_eq!(ess(&one).unwrap(), 1.0);
        let v = ess(&[0.0, 0.0, 2f64.ln()]).unwrap();
        assert!((v - 16.0 / 6.0).abs() < 1e-12);
        assert!(matches!(ess(&[f64::NEG_INFINITY; 3]), Err(AmisError::DegenerateWeights)));
    }

    #[test]
    fn ess_shift_is_exact_for_representable_shifts() {
        let lw = [0.5, -1.25, 3.0, 2.75];
        let shifted: Vec<f64> = lw.iter().map(|v| v + 64.0).collect();
        assert_eq!(ess(&lw).unwrap(), ess(&shifted).unwrap());
    }

    fn single_system(points: Vec<f64>, log_w: Vec<f64>) -> ParticleSystem {
        let n = log_w.len();
        let mut s = ParticleSystem::new(2);
        s.push_iteration(points, vec![0.0; n], log_w).unwrap();
        s
    }

    #[test]
    fn empirical_cdf_single_particle() {
        let s = single_system(vec![0.0, 0.0], vec![0.0]);
        let g = GridSpec::uniform(vec![-1.0, -1.0], vec![1.0, 1.0], 2).unwrap();
        let f = empirical_cdf(&s, &g, false).unwrap();
        // corners are 0 and 1 on each axis; x <= 0 counts at the first corner
        assert_eq!(f.at(1, 1), 1.0);
        assert_eq!(f.at(0, 0), 1.0);
        let g2 = GridSpec::uniform(vec![-3.0, -3.0], vec![-1.0, -1.0], 4).unwrap();
        let f2 = empirical_cdf(&s, &g2, false).unwrap();
        assert!(f2.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empirical_cdf_requires_recycled_when_asked() {
        let s = single_system(vec![0.0, 0.0], vec![0.0]);
        let g = GridSpec::uniform(vec![-1.0, -1.0], vec![1.0, 1.0], 2).unwrap();
        assert!(empirical_cdf(&s, &g, true).is_err());
    }

    #[test]
    fn distances_of_identical_grids_are_zero() {
        let g = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 10).unwrap();
        let vals: Vec<f64> = (0..100).map(|k| ((k / 10) * (k % 10)) as f64 / 81.0).collect();
        let f = CdfGrid::new(g, vals).unwrap();
        let r = distances(&f, &f).unwrap();
        assert_eq!((r.cvm, r.l2, r.linf), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_offset_distances() {
        let g = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 20).unwrap();
        let vals: Vec<f64> = (0..400).map(|k| ((k / 20 + 1) * (k % 20 + 1)) as f64 / 400.0).collect();
        let f = CdfGrid::new(g.clone(), vals.clone()).unwrap();
        let fh = CdfGrid::new(g, vals.iter().map(|v| v + 0.1).collect()).unwrap();
        let r = distances(&fh, &f).unwrap();
        assert!((r.linf - 0.1).abs() < 1e-12);
        assert!((r.l2 - 0.1).abs() < 1e-12);
        // increments sum to F(top corner) = 1
        assert!((r.cvm - 0.01).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g1 = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 2).unwrap();
        let g2 = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 3).unwrap();
        let a = CdfGrid::new(g1, vec![0.0; 4]).unwrap();
        let b = CdfGrid::new(g2, vec![0.0; 9]).unwrap();
        assert!(distances(&a, &b).is_err());
    }

    #[test]
    fn zero_radius_ball_is_the_centre() {
        let c = ProposalParams::isotropic(&[0.5], 2.0).unwrap();
        let l = ball_lattice(&c, &BallSpec::new(0.0, BallMode::Full, 9)).unwrap();
        assert_eq!(l, vec![c.clone()]);
        let xs = [-1.0, 0.0, 3.0];
        let m = log_m_eps_at(&xs, &c, &BallSpec::new(0.0, BallMode::Full, 9), &FamilySpec::gaussian(1)).unwrap();
        for (x, v) in xs.iter().zip(m) {
            assert_eq!(v, c.gaussian_log_density(&[*x]));
        }
    }

    #[test]
    fn mean_ball_infimum_far_right_is_leftmost_mean() {
        let c = ProposalParams::isotropic(&[0.0], 1.0).unwrap();
        let ball = BallSpec::new(0.5, BallMode::MeanOnly, 11);
        let m = log_m_eps_at(&[6.0], &c, &ball, &FamilySpec::gaussian(1)).unwrap();
        let left = ProposalParams::isotropic(&[-0.5], 1.0).unwrap();
        assert_eq!(m[0], left.gaussian_log_density(&[6.0]));
    }

    #[test]
    fn full_ball_lattice_stays_in_ball() {
        let c = ProposalParams::from_slices(&[0.0, 1.0], &[1.0, 0.2, 0.2, 0.5]).unwrap();
        let ball = BallSpec::new(0.3, BallMode::Full, 3);
        let l = ball_lattice(&c, &ball).unwrap();
        assert!(l.len() > 1);
        assert!(l.iter().all(|p| p.theta_distance(&c) <= 0.3 * (1.0 + 1e-9)));
        assert!(l.iter().any(|p| p.cov()[(0, 1)] != 0.2));
    }
}

//! Synthetic targets with known ground truth.
//!
//! Every target carries the quantities adaptive runs are scored against:
//! the moment parameter `theta* = (E[x], Cov[x])`, and on request the joint
//! distribution function on a grid. Truth is computed in closed form where
//! it exists and by deterministic quadrature otherwise.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{AmisError, Result};
use crate::grid::{CdfGrid, GridSpec};
use crate::integrand::Integrand;
use crate::params::ProposalParams;
use crate::proposals::BoxBounds;
use crate::quadrature::{axis_rule, integrate_box, integrate_rule};
use crate::weights::log_sum_exp_unchecked;

pub type LogDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Half-width, in standard deviations, of the box used for quadrature.
const QUAD_HALF_WIDTH: f64 = 10.0;
/// Half-width, in standard deviations, of the default diagnostic grid.
const GRID_HALF_WIDTH: f64 = 5.0;
const CDF_RULE_ORDER: usize = 6;
const EXPECTATION_WIDTH: f64 = 0.25;
const EXPECTATION_ORDER: usize = 8;

/// A target density together with its ground truth.
#[derive(Clone)]
pub struct TargetModel {
    name: String,
    dim: usize,
    log_density: LogDensityFn,
    normalized: bool,
    theta_star: Option<ProposalParams>,
    log_norm_const: Option<f64>,
    support: Option<BoxBounds>,
    quadrature_box: BoxBounds,
}

impl fmt::Debug for TargetModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("normalized", &self.normalized)
            .field("theta_star", &self.theta_star)
            .finish_non_exhaustive()
    }
}

impl TargetModel {
    /// A target from an arbitrary log-density. `quadrature_box` must hold
    /// essentially all of its mass.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        log_density: LogDensityFn,
        normalized: bool,
        theta_star: Option<ProposalParams>,
        support: Option<BoxBounds>,
        quadrature_box: BoxBounds,
    ) -> Result<Self> {
        if quadrature_box.dim() != dim || support.as_ref().is_some_and(|s| s.dim() != dim) {
            return Err(AmisError::Contract("target box dimension mismatch".into()));
        }
        if theta_star.as_ref().is_some_and(|t| t.dim() != dim) {
            return Err(AmisError::Contract("theta* dimension mismatch".into()));
        }
        Ok(Self {
            name: name.into(),
            dim,
            log_density,
            normalized,
            theta_star,
            log_norm_const: None,
            support,
            quadrature_box,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        (self.log_density)(x)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// True moment parameter `(E[x], Cov[x])`.
    pub fn theta_star(&self) -> Option<&ProposalParams> {
        self.theta_star.as_ref()
    }

    /// Log of the constant hidden by [`TargetModel::with_hidden_constant`].
    pub fn log_norm_const(&self) -> Option<f64> {
        self.log_norm_const
    }

    /// Region where the density may be positive, if bounded.
    pub fn support(&self) -> Option<&BoxBounds> {
        self.support.as_ref()
    }

    pub fn quadrature_box(&self) -> &BoxBounds {
        &self.quadrature_box
    }

    /// The same distribution with `log pi(x) + log_const` as its log-density,
    /// flagged unnormalised.
    pub fn with_hidden_constant(&self, log_const: f64) -> Self {
        let inner = self.log_density.clone();
        let mut t = self.clone();
        t.log_density = Arc::new(move |x: &[f64]| inner(x) + log_const);
        t.normalized = false;
        t.log_norm_const = Some(self.log_norm_const.unwrap_or(0.0) + log_const);
        t.name = format!("{}-unnormalized", self.name);
        t
    }

    /// Default diagnostic grid: `cells` per axis over `mean +- 5 sd` of the
    /// target (clipped to a bounded support).
    pub fn default_grid(&self, cells: usize) -> Result<GridSpec> {
        let ts = self
            .theta_star
            .as_ref()
            .ok_or_else(|| AmisError::Unsupported("target has no theta*".into()))?;
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for a in 0..self.dim {
            let sd = ts.cov()[(a, a)].sqrt();
            let (mut l, mut h) = (
                ts.mean()[a] - GRID_HALF_WIDTH * sd,
                ts.mean()[a] + GRID_HALF_WIDTH * sd,
            );
            if let Some(s) = &self.support {
                l = l.max(s.lower()[a]);
                h = h.min(s.upper()[a]);
            }
            lo.push(l);
            hi.push(h);
        }
        GridSpec::uniform(lo, hi, cells)
    }
}

fn gaussian_box(mean: &DVector<f64>, cov: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let d = mean.len();
    let lo = (0..d)
        .map(|a| mean[a] - QUAD_HALF_WIDTH * cov[(a, a)].sqrt())
        .collect();
    let hi = (0..d)
        .map(|a| mean[a] + QUAD_HALF_WIDTH * cov[(a, a)].sqrt())
        .collect();
    (lo, hi)
}

/// Normalised Gaussian target `N(mean, cov)`; `cov` is row-major.
pub fn make_gaussian_target(mean: &[f64], cov: &[f64]) -> Result<TargetModel> {
    let params = ProposalParams::from_slices(mean, cov)?;
    let (lo, hi) = gaussian_box(params.mean(), params.cov());
    let p = params.clone();
    TargetModel::custom(
        "gaussian",
        mean.len(),
        Arc::new(move |x: &[f64]| p.gaussian_log_density(x)),
        true,
        Some(params),
        None,
        BoxBounds::new(lo, hi)?,
    )
}

/// Normalised Gaussian mixture `sum_i w_i N(mu_i, Sigma_i)`.
///
/// `theta*` is exact: `E[x] = sum w_i mu_i`, `E[x x^T] = sum w_i (Sigma_i +
/// mu_i mu_i^T)`.
pub fn make_mixture_target(weights: &[f64], components: &[ProposalParams]) -> Result<TargetModel> {
    if weights.is_empty() || weights.len() != components.len() {
        return Err(AmisError::Contract("mixture weights/components mismatch".into()));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(AmisError::Contract("mixture weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(AmisError::Contract(format!(
            "mixture weights sum to {total}, not 1"
        )));
    }
    let d = components[0].dim();
    if components.iter().any(|c| c.dim() != d) {
        return Err(AmisError::Contract("mixture components differ in dimension".into()));
    }
    let mut m1 = DVector::zeros(d);
    let mut m2 = DMatrix::zeros(d, d);
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (w, c) in weights.iter().zip(components) {
        m1 += c.mean() * *w;
        m2 += c.raw_m2() * *w;
        let (l, h) = gaussian_box(c.mean(), c.cov());
        for a in 0..d {
            lo[a] = lo[a].min(l[a]);
            hi[a] = hi[a].max(h[a]);
        }
    }
    let cov = &m2 - &m1 * m1.transpose();
    let theta_star = ProposalParams::new(m1, symmetrize(cov))?;
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let comps = components.to_vec();
    let density = move |x: &[f64]| {
        let mut terms = [0.0f64; 16];
        if comps.len() <= terms.len() {
            for (k, c) in comps.iter().enumerate() {
                terms[k] = log_w[k] + c.gaussian_log_density(x);
            }
            log_sum_exp_unchecked(&terms[..comps.len()])
        } else {
            let t: Vec<f64> = comps
                .iter()
                .zip(&log_w)
                .map(|(c, lw)| lw + c.gaussian_log_density(x))
                .collect();
            log_sum_exp_unchecked(&t)
        }
    };
    TargetModel::custom(
        if components.len() == 1 { "gaussian" } else { "mixture" },
        d,
        Arc::new(density),
        true,
        Some(theta_star),
        None,
        BoxBounds::new(lo, hi)?,
    )
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Twisted Gaussian: the law of `(y1, y2 + b (y1^2 - sigma1_sq))` for
/// `y ~ N(0, diag(sigma1_sq, 1))`. The map has unit Jacobian, so the density
/// is `phi(x1; sigma1_sq) phi(x2 - b (x1^2 - sigma1_sq); 1)`.
pub fn make_banana_target(b: f64, sigma1_sq: f64) -> Result<TargetModel> {
    if !(sigma1_sq > 0.0) || !b.is_finite() {
        return Err(AmisError::Contract("banana needs sigma1_sq > 0 and finite b".into()));
    }
    let base = ProposalParams::diagonal(&[0.0, 0.0], &[sigma1_sq, 1.0])?;
    let untwist = move |x: &[f64]| [x[0], x[1] - b * (x[0] * x[0] - sigma1_sq)];
    let base_d = base.clone();
    let density = move |x: &[f64]| base_d.gaussian_log_density(&untwist(x));

    // theta* by quadrature over the base Gaussian pushed through the twist
    let s1 = sigma1_sq.sqrt();
    let ylo = [-QUAD_HALF_WIDTH * s1, -QUAD_HALF_WIDTH];
    let yhi = [QUAD_HALF_WIDTH * s1, QUAD_HALF_WIDTH];
    let sums = integrate_box(&ylo, &yhi, 6, |y, out| {
        let p = base.gaussian_log_density(y).exp();
        let x = [y[0], y[1] + b * (y[0] * y[0] - sigma1_sq)];
        out[0] = p;
        out[1] = p * x[0];
        out[2] = p * x[1];
        out[3] = p * x[0] * x[0];
        out[4] = p * x[0] * x[1];
        out[5] = p * x[1] * x[1];
    })?;
    let z = sums[0];
    let mean = DVector::from_column_slice(&[sums[1] / z, sums[2] / z]);
    let m2 = DMatrix::from_row_slice(2, 2, &[sums[3] / z, sums[4] / z, sums[4] / z, sums[5] / z]);
    let theta_star = ProposalParams::new(mean.clone(), symmetrize(m2 - &mean * mean.transpose()))?;

    let twist_range = [b * -sigma1_sq, b * (QUAD_HALF_WIDTH * QUAD_HALF_WIDTH - 1.0) * sigma1_sq];
    let lo = vec![-QUAD_HALF_WIDTH * s1, -QUAD_HALF_WIDTH + twist_range[0].min(twist_range[1])];
    let hi = vec![QUAD_HALF_WIDTH * s1, QUAD_HALF_WIDTH + twist_range[0].max(twist_range[1])];
    TargetModel::custom(
        "banana",
        2,
        Arc::new(density),
        true,
        Some(theta_star),
        None,
        BoxBounds::new(lo, hi)?,
    )
}

/// Uniform density on a box.
pub fn make_uniform_target(lower: Vec<f64>, upper: Vec<f64>) -> Result<TargetModel> {
    let bounds = BoxBounds::new(lower, upper)?;
    let log_p = -bounds.volume().ln();
    let d = bounds.dim();
    let mean: Vec<f64> = (0..d)
        .map(|a| 0.5 * (bounds.lower()[a] + bounds.upper()[a]))
        .collect();
    let var: Vec<f64> = (0..d)
        .map(|a| (bounds.upper()[a] - bounds.lower()[a]).powi(2) / 12.0)
        .collect();
    let b = bounds.clone();
    TargetModel::custom(
        "uniform",
        d,
        Arc::new(move |x: &[f64]| if b.contains(x) { log_p } else { f64::NEG_INFINITY }),
        true,
        Some(ProposalParams::diagonal(&mean, &var)?),
        Some(bounds.clone()),
        bounds,
    )
}

/// `integral pi` over the quadrature box (1 for a normalised target).
pub fn normalization_integral(target: &TargetModel) -> Result<f64> {
    let qb = target.quadrature_box();
    Ok(integrate_box(qb.lower(), qb.upper(), 1, |x, out| {
        out[0] = target.log_density(x).exp();
    })?[0])
}

/// `E_pi[psi]` by quadrature, splitting the domain at jumps of `psi`.
/// Unnormalised targets are handled by dividing by the integral of `pi`.
pub fn expectation(target: &TargetModel, psi: &Integrand) -> Result<f64> {
    let qb = target.quadrature_box();
    let mut breaks: Vec<Vec<f64>> = (0..target.dim())
        .map(|a| vec![qb.lower()[a], qb.upper()[a]])
        .collect();
    for (axis, t) in psi.discontinuities() {
        if t > qb.lower()[axis] && t < qb.upper()[axis] {
            breaks[axis].insert(1, t);
        }
    }
    if target.dim() > 2 {
        return Err(AmisError::Unsupported(format!("quadrature in dimension {}", target.dim())));
    }
    let rules: Vec<_> = breaks
        .iter_mut()
        .map(|b| {
            b.sort_by(f64::total_cmp);
            axis_rule(b, EXPECTATION_WIDTH, EXPECTATION_ORDER)
        })
        .collect();
    let v = integrate_rule(&rules, 2, |x, out| {
        let p = target.log_density(x).exp();
        out[0] = if p > 0.0 { p * psi.eval(x) } else { 0.0 };
        out[1] = p;
    })?;
    let (num, den) = (v[0], v[1]);
    Ok(num / den)
}

/// Joint distribution function of the target at the grid's evaluation
/// points, by cumulative Gauss-Legendre quadrature of the density.
///
/// Mass below the grid's lower edges is integrated from the quadrature box,
/// so the values are the true `F(g)`, not a grid-restricted one.
pub fn true_cdf_grid(target: &TargetModel, grid: &GridSpec) -> Result<CdfGrid> {
    let d = target.dim();
    if d > 2 {
        return Err(AmisError::Unsupported(format!(
            "distribution grids need dimension <= 2, target has {d}"
        )));
    }
    if grid.dim() != d {
        return Err(AmisError::Contract("grid/target dimension mismatch".into()));
    }
    let qb = target.quadrature_box();
    // per axis: interval 0 is the strip below the grid, interval k >= 1 is cell k-1
    let rules: Vec<Vec<(f64, f64, usize)>> = (0..d)
        .map(|a| {
            let mut breaks = vec![qb.lower()[a].min(grid.lower()[a]), grid.lower()[a]];
            breaks.extend(grid.corners(a));
            axis_rule(&breaks, grid.spacing(a), CDF_RULE_ORDER)
        })
        .collect();
    let n0 = grid.cells()[0] + 1;
    if d == 1 {
        let mut mass = vec![0.0; n0];
        for &(x, w, k) in &rules[0] {
            mass[k] += w * target.log_density(&[x]).exp();
        }
        let mut acc = 0.0;
        let mut values = Vec::with_capacity(n0 - 1);
        for (k, m) in mass.iter().enumerate() {
            acc += m;
            if k > 0 {
                values.push(acc);
            }
        }
        return CdfGrid::new(grid.clone(), values);
    }
    let n1 = grid.cells()[1] + 1;
    let rule1 = &rules[1];
    // cell masses, one row of axis-1 bins per axis-0 node, summed in node order
    let rows: Vec<(usize, Vec<f64>)> = rules[0]
        .par_iter()
        .map(|&(x0, w0, k0)| {
            let mut row = vec![0.0; n1];
            for &(x1, w1, k1) in rule1 {
                row[k1] += w1 * target.log_density(&[x0, x1]).exp();
            }
            row.iter_mut().for_each(|v| *v *= w0);
            (k0, row)
        })
        .collect();
    let mut mass = vec![0.0; n0 * n1];
    for (k0, row) in rows {
        for (k1, v) in row.into_iter().enumerate() {
            mass[k0 * n1 + k1] += v;
        }
    }
    // 2-D cumulative sums
    for i in 0..n0 {
        for j in 0..n1 {
            let mut v = mass[i * n1 + j];
            if i > 0 {
                v += mass[(i - 1) * n1 + j];
            }
            if j > 0 {
                v += mass[i * n1 + j - 1];
            }
            if i > 0 && j > 0 {
                v -= mass[(i - 1) * n1 + j - 1];
            }
            mass[i * n1 + j] = v;
        }
    }
    let (c0, c1) = (grid.cells()[0], grid.cells()[1]);
    let mut values = Vec::with_capacity(c0 * c1);
    for i in 1..n0 {
        for j in 1..n1 {
            values.push(mass[i * n1 + j]);
        }
    }
    // inclusion-exclusion can leave rounding-level dips; restore monotonicity
    for i in 0..c0 {
        for j in 0..c1 {
            let mut v = values[i * c1 + j];
            if i > 0 {
                v = v.max(values[(i - 1) * c1 + j]);
            }
            if j > 0 {
                v = v.max(values[i * c1 + j - 1]);
            }
            values[i * c1 + j] = v;
        }
    }
    CdfGrid::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_target_basics() {
        let t = make_gaussian_target(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let ts = t.theta_star().unwrap();
        assert_eq!(ts.mean().as_slice(), &[0.0, 0.0]);
        assert_eq!(ts.cov(), &DMatrix::identity(2, 2));
        assert!((normalization_integral(&t).unwrap() - 1.0).abs() < 1e-3);
        let g = t.default_grid(100).unwrap();
        let f = true_cdf_grid(&t, &g).unwrap();
        assert!((f.at(49, 49) - 0.25).abs() < 1e-6, "{}", f.at(49, 49));
        assert!(f.is_monotone());
        assert!((f.max() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn non_pd_gaussian_is_rejected() {
        assert!(make_gaussian_target(&[0.0, 0.0], &[1.0, 2.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn single_component_mixture_is_the_gaussian() {
        let c = ProposalParams::from_slices(&[1.0, 2.0], &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let m = make_mixture_target(&[1.0], std::slice::from_ref(&c)).unwrap();
        let g = make_gaussian_target(&[1.0, 2.0], &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let (a, b) = (m.theta_star().unwrap(), g.theta_star().unwrap());
        assert!(a.theta_distance(b) < 1e-12);
        let x = [0.3, 1.7];
        assert!((m.log_density(&x) - g.log_density(&x)).abs() < 1e-14);
    }

    #[test]
    fn symmetric_bimodal_moments() {
        let comps = [
            ProposalParams::isotropic(&[-2.0], 1.0).unwrap(),
            ProposalParams::isotropic(&[2.0], 1.0).unwrap(),
        ];
        let t = make_mixture_target(&[0.5, 0.5], &comps).unwrap();
        let ts = t.theta_star().unwrap();
        assert!(ts.mean()[0].abs() < 1e-15);
        assert!((ts.cov()[(0, 0)] - 5.0).abs() < 1e-14);
        assert!((expectation(&t, &Integrand::Monomial(vec![2])).unwrap() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let c = ProposalParams::isotropic(&[0.0], 1.0).unwrap();
        assert!(make_mixture_target(&[0.5, 0.5 + 1e-10], &[c.clone(), c.clone()]).is_err());
        assert!(make_mixture_target(&[1.5, -0.5], &[c.clone(), c]).is_err());
    }

    #[test]
    fn untwisted_banana_is_gaussian() {
        let t = make_banana_target(0.0, 10.0).unwrap();
        let ts = t.theta_star().unwrap();
        assert!(ts.mean().norm() < 1e-9);
        assert!((ts.cov()[(0, 0)] - 10.0).abs() < 1e-6);
        assert!((ts.cov()[(1, 1)] - 1.0).abs() < 1e-6);
        let g = ProposalParams::diagonal(&[0.0, 0.0], &[10.0, 1.0]).unwrap();
        let x = [1.3, -0.4];
        assert!((t.log_density(&x) - g.gaussian_log_density(&x)).abs() < 1e-14);
    }

    #[test]
    fn banana_moments() {
        let t = make_banana_target(0.1, 10.0).unwrap();
        let ts = t.theta_star().unwrap();
        assert!(ts.mean()[1].abs() < 1e-6);
        // 1 + b^2 * 2 sigma1^4 = 3
        assert!((ts.cov()[(1, 1)] - 3.0).abs() < 1e-6, "{}", ts.cov()[(1, 1)]);
        assert!((ts.cov()[(0, 0)] - 10.0).abs() < 1e-6);
        assert!(ts.cov()[(0, 1)].abs() < 1e-6);
        // direct x-space quadrature agrees with the push-forward
        assert!((normalization_integral(&t).unwrap() - 1.0).abs() < 1e-3);
        let var2 = expectation(&t, &Integrand::Monomial(vec![0, 2])).unwrap();
        assert!((var2 - 3.0).abs() < 1e-4, "{var2}");
    }

    #[test]
    fn uniform_square_cdf_corner() {
        let t = make_uniform_target(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 10).unwrap();
        let f = true_cdf_grid(&t, &g).unwrap();
        assert!((f.at(9, 9) - 1.0).abs() < 1e-12);
        assert!((f.at(4, 9) - 0.5).abs() < 1e-12);
        assert!((f.at(1, 2) - 0.06).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_cdf() {
        let t = make_gaussian_target(&[0.0], &[1.0]).unwrap();
        let g = GridSpec::uniform(vec![-3.0], vec![3.0], 6).unwrap();
        let f = true_cdf_grid(&t, &g).unwrap();
        // Phi(0) and Phi(1)
        assert!((f.at(2, 0) - 0.5).abs() < 1e-9);
        assert!((f.at(3, 0) - 0.841_344_746_068_542_9).abs() < 1e-9);
    }

    #[test]
    fn hidden_constant_keeps_shape() {
        let t = make_gaussian_target(&[0.0], &[1.0]).unwrap();
        let u = t.with_hidden_constant(3.5);
        assert!(!u.is_normalized());
        assert_eq!(u.log_norm_const(), Some(3.5));
        assert!((u.log_density(&[0.2]) - t.log_density(&[0.2]) - 3.5).abs() < 1e-14);
        let e = expectation(&u, &Integrand::Monomial(vec![2])).unwrap();
        assert!((e - 1.0).abs() < 1e-8);
    }

    #[test]
    fn indicator_expectation_splits_domain() {
        let t = make_gaussian_target(&[1.0, -1.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = expectation(&t, &Integrand::Indicator { axis: 0, threshold: 1.0, above: true }).unwrap();
        assert!((p - 0.5).abs() < 1e-8, "{p}");
    }

    #[test]
    fn three_dimensional_grid_unsupported() {
        let t = make_gaussian_target(&[0.0; 3], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let g = GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], 2).unwrap();
        assert!(matches!(true_cdf_grid(&t, &g), Err(AmisError::Unsupported(_))));
    }
}

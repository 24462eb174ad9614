//! Gaussian proposal parameters.

use nalgebra::{DMatrix, DVector};

use crate::error::{AmisError, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const JITTER_SCALE: f64 = 1e-9;
const JITTER_RETRIES: usize = 3;

/// Parameters of one Gaussian proposal.
///
/// The (mean, covariance) pair is what sampling and density evaluation use.
/// The raw moments `E[x]` and `E[x x^T]` are kept next to it because that is
/// the representation in which learning is a plain weighted average.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalParams {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    raw_m1: DVector<f64>,
    raw_m2: DMatrix<f64>,
    // row-major lower Cholesky factor, used on the hot path
    chol: Vec<f64>,
    log_det: f64,
}

impl ProposalParams {
    /// Builds parameters from a mean and a covariance. The covariance must be
    /// symmetric (to 1e-10 per entry) and positive definite; no repair is
    /// attempted here.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(AmisError::Contract("zero-dimensional proposal".into()));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(AmisError::Contract(format!(
                "covariance is {}x{}, expected {d}x{d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(AmisError::Contract("non-finite proposal parameter".into()));
        }
        check_symmetric(&cov)?;
        let chol = cholesky(&cov).ok_or_else(|| {
            AmisError::NotPositiveDefinite("covariance has a non-positive pivot".into())
        })?;
        Ok(Self::assemble(mean, cov, chol))
    }

    /// Convenience constructor from slices; `cov` is row-major.
    pub fn from_slices(mean: &[f64], cov: &[f64]) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d * d {
            return Err(AmisError::Contract(format!(
                "covariance has {} entries, expected {}",
                cov.len(),
                d * d
            )));
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(d, d, cov),
        )
    }

    /// `N(mean, variance * I)`.
    pub fn isotropic(mean: &[f64], variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal_element(d, d, variance),
        )
    }

    /// `N(mean, diag(variances))`.
    pub fn diagonal(mean: &[f64], variances: &[f64]) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(AmisError::Contract("mean/variance length mismatch".into()));
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
        )
    }

    /// Maps first and second raw moments to Gaussian parameters, repairing
    /// the covariance with diagonal jitter when it is not numerically
    /// positive definite.
    pub fn from_raw_moments(m1: DVector<f64>, m2: DMatrix<f64>) -> Result<Self> {
        let cov = &m2 - &m1 * m1.transpose();
        Self::from_mean_cov_repaired(m1, cov)
    }

    pub(crate) fn from_mean_cov_repaired(mean: DVector<f64>, mut cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(AmisError::AdaptationFailure(
                "non-finite moments".into(),
            ));
        }
        // exact symmetrisation; accumulation already keeps it symmetric
        for i in 0..d {
            for j in 0..i {
                let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        if let Some(chol) = cholesky(&cov) {
            return Ok(Self::assemble(mean, cov, chol));
        }
        let jitter = JITTER_SCALE * cov.trace() / d as f64;
        for attempt in 1..=JITTER_RETRIES {
            let mut trial = cov.clone();
            if jitter.is_finite() && jitter > 0.0 {
                for i in 0..d {
                    trial[(i, i)] += attempt as f64 * jitter;
                }
            }
            if let Some(chol) = cholesky(&trial) {
                log::debug!("covariance repaired with jitter {jitter:e} x {attempt}");
                return Ok(Self::assemble(mean, trial, chol));
            }
        }
        Err(AmisError::AdaptationFailure(format!(
            "covariance not positive definite after {JITTER_RETRIES} jitter retries (trace {:e})",
            cov.trace()
        )))
    }

    fn assemble(mean: DVector<f64>, cov: DMatrix<f64>, chol: Vec<f64>) -> Self {
        let d = mean.len();
        let log_det = 2.0 * (0..d).map(|i| chol[i * d + i].ln()).sum::<f64>();
        let raw_m2 = &cov + &mean * mean.transpose();
        Self {
            raw_m1: mean.clone(),
            mean,
            cov,
            raw_m2,
            chol,
            log_det,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn raw_m1(&self) -> &DVector<f64> {
        &self.raw_m1
    }

    pub fn raw_m2(&self) -> &DMatrix<f64> {
        &self.raw_m2
    }

    /// Row-major lower Cholesky factor of the covariance.
    pub fn chol_lower(&self) -> &[f64] {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.cov[(i, j)] == 0.0))
    }

    /// Untruncated Gaussian log-density at `x`.
    pub fn gaussian_log_density(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        let mut z = [0.0f64; 8];
        let mut heap;
        let z: &mut [f64] = if d <= 8 {
            &mut z[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        // forward substitution L z = x - mean
        let mut quad = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= self.chol[i * d + j] * z[j];
            }
            z[i] = s / self.chol[i * d + i];
            quad += z[i] * z[i];
        }
        -0.5 * (d as f64 * LN_2PI + self.log_det + quad)
    }

    /// Writes `mean + L * z` into `out`.
    pub fn transform_standard(&self, z: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let mut s = self.mean[i];
            for j in 0..=i {
                s += self.chol[i * d + j] * z[j];
            }
            out[i] = s;
        }
    }

    /// Parameter vector `(mean, vec(cov))`.
    pub fn theta_vector(&self) -> Vec<f64> {
        self.mean.iter().chain(self.cov.iter()).copied().collect()
    }

    /// Euclidean distance between parameter vectors, i.e. the Frobenius norm
    /// of the stacked mean and covariance differences.
    pub fn theta_distance(&self, other: &ProposalParams) -> f64 {
        self.theta_vector()
            .iter()
            .zip(other.theta_vector())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance between means only.
    pub fn mean_distance(&self, other: &ProposalParams) -> f64 {
        (&self.mean - &other.mean).norm()
    }
}

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn check_symmetric(cov: &DMatrix<f64>) -> Result<()> {
    let d = cov.nrows();
    for i in 0..d {
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(AmisError::NotPositiveDefinite(format!(
                    "covariance not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Row-major lower Cholesky factor, or `None` when a pivot is not strictly
/// positive.
pub(crate) fn cholesky(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    let d = a.nrows();
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_density_at_zero() {
        let p = ProposalParams::isotropic(&[0.0], 1.0).unwrap();
        assert!((p.gaussian_log_density(&[0.0]) - (-0.918_938_533_204_672_7)).abs() < 1e-15);
    }

    #[test]
    fn diagonal_density_matches_formula() {
        let p = ProposalParams::diagonal(&[0.0, 0.0], &[1.0, 4.0]).unwrap();
        let expected = -(LN_2PI + 0.5 * 4f64.ln() + 0.5 * (1.0 + 1.0));
        assert!((p.gaussian_log_density(&[1.0, 2.0]) - expected).abs() < 1e-14);
        assert!((expected + 3.531).abs() < 1e-3);
    }

    #[test]
    fn raw_moments_consistent_with_cov() {
        let p = ProposalParams::from_slices(&[1.5, -2.0], &[2.0, 0.3, 0.3, 0.5]).unwrap();
        let back = p.raw_m2() - p.raw_m1() * p.raw_m1().transpose();
        for (a, b) in back.iter().zip(p.cov().iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        assert!(matches!(
            ProposalParams::from_slices(&[0.0, 0.0], &[1.0, 0.5, 0.4, 1.0]),
            Err(AmisError::NotPositiveDefinite(_))
        ));
        assert!(matches!(
            ProposalParams::from_slices(&[0.0, 0.0], &[1.0, 2.0, 2.0, 1.0]),
            Err(AmisError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn zero_covariance_exhausts_repair() {
        let m1 = DVector::from_column_slice(&[1.0, 2.0]);
        let m2 = &m1 * m1.transpose();
        assert!(matches!(
            ProposalParams::from_raw_moments(m1, m2),
            Err(AmisError::AdaptationFailure(_))
        ));
    }

    #[test]
    fn tiny_negative_pivot_is_repaired() {
        // rank-one plus a rounding-sized deficit
        let mean = DVector::from_column_slice(&[0.0, 0.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 - 1e-13]);
        let p = ProposalParams::from_mean_cov_repaired(mean, cov).unwrap();
        assert!(p.cov()[(0, 0)] > 1.0);
    }

    #[test]
    fn theta_distance_is_frobenius() {
        let a = ProposalParams::isotropic(&[0.0, 0.0], 1.0).unwrap();
        let b = ProposalParams::isotropic(&[3.0, 0.0], 1.0).unwrap();
        assert!((a.theta_distance(&b) - 3.0).abs() < 1e-15);
        let c = ProposalParams::isotropic(&[0.0, 0.0], 2.0).unwrap();
        assert!((a.theta_distance(&c) - 2f64.sqrt()).abs() < 1e-15);
    }
}

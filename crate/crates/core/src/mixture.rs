//! The deterministic mixture `Omega^-1 sum_k N_k q(x, theta_k)` that forms
//! the denominator of recycled weights.

use crate::error::{AmisError, Result};
use crate::params::ProposalParams;
use crate::proposals::{Component, FamilySpec};
use crate::weights::log_sum_exp_unchecked;

/// Size-weighted mixture of proposals.
///
/// Bitwise-identical components are merged (their counts added) before any
/// floating-point work, so a mixture of copies of one proposal evaluates to
/// exactly that proposal's log-density.
#[derive(Debug, Clone)]
pub struct Mixture {
    components: Vec<Component>,
    log_coef: Vec<f64>,
}

impl Mixture {
    pub fn new(params: &[ProposalParams], counts: &[usize], family: &FamilySpec) -> Result<Self> {
        if params.len() != counts.len() {
            return Err(AmisError::Contract(format!(
                "{} mixture components but {} counts",
                params.len(),
                counts.len()
            )));
        }
        if params.is_empty() {
            return Err(AmisError::Contract("mixture needs at least one component".into()));
        }
        if counts.contains(&0) {
            return Err(AmisError::Contract("mixture counts must be positive".into()));
        }
        let mut unique: Vec<(&ProposalParams, usize)> = Vec::new();
        for (p, &n) in params.iter().zip(counts) {
            match unique.iter_mut().find(|(q, _)| same_params(q, p)) {
                Some(entry) => entry.1 += n,
                None => unique.push((p, n)),
            }
        }
        let omega: usize = counts.iter().sum();
        let components = unique
            .iter()
            .map(|(p, _)| Component::new(p, family))
            .collect::<Result<Vec<_>>>()?;
        let log_coef = unique
            .iter()
            .map(|(_, n)| (*n as f64 / omega as f64).ln())
            .collect();
        Ok(Self { components, log_coef })
    }

    /// Number of distinct components after merging.
    pub fn distinct(&self) -> usize {
        self.components.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut buf = [0.0f64; 64];
        let k = self.components.len();
        if k <= buf.len() {
            for (slot, (c, lc)) in buf.iter_mut().zip(self.components.iter().zip(&self.log_coef)) {
                *slot = lc + c.log_density(x);
            }
            log_sum_exp_unchecked(&buf[..k])
        } else {
            let terms: Vec<f64> = self
                .components
                .iter()
                .zip(&self.log_coef)
                .map(|(c, lc)| lc + c.log_density(x))
                .collect();
            log_sum_exp_unchecked(&terms)
        }
    }
}

fn same_params(a: &ProposalParams, b: &ProposalParams) -> bool {
    a.mean() == b.mean() && a.cov() == b.cov()
}

/// `log D(x)` for untruncated Gaussian components.
pub fn mixture_log_density(x: &[f64], params: &[ProposalParams], counts: &[usize]) -> Result<f64> {
    let dim = params
        .first()
        .ok_or_else(|| AmisError::Contract("mixture needs at least one component".into()))?
        .dim();
    if x.len() != dim {
        return Err(AmisError::Contract("point dimension mismatch".into()));
    }
    Ok(Mixture::new(params, counts, &FamilySpec::gaussian(dim))?.log_density(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n1(mean: f64, var: f64) -> ProposalParams {
        ProposalParams::isotropic(&[mean], var).unwrap()
    }

    fn phi(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn standard_normal_at_zero() {
        let v = mixture_log_density(&[0.0], &[n1(0.0, 1.0)], &[7]).unwrap();
        assert!((v - 0.398_942_280_4f64.ln()).abs() < 1e-10);
        assert!((v + 0.918_939).abs() < 1e-6);
    }

    #[test]
    fn two_components_match_direct_evaluation() {
        let v = mixture_log_density(&[1.0], &[n1(0.0, 1.0), n1(2.0, 1.0)], &[1, 3]).unwrap();
        let direct = (0.25 * phi(1.0) + 0.75 * phi(-1.0)).ln();
        assert!((v - direct).abs() < 1e-14);
    }

    #[test]
    fn identical_components_collapse_exactly() {
        let p = ProposalParams::from_slices(&[0.3, -1.2], &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let x = [1.1, 0.4];
        let single = p.gaussian_log_density(&x);
        for counts in [vec![1, 1, 1], vec![3, 17, 101], vec![50, 200, 450]] {
            let ps = vec![p.clone(); counts.len()];
            assert_eq!(mixture_log_density(&x, &ps, &counts).unwrap(), single);
        }
        assert_eq!(mixture_log_density(&x, std::slice::from_ref(&p), &[9]).unwrap(), single);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            mixture_log_density(&[0.0], &[n1(0.0, 1.0)], &[1, 2]),
            Err(AmisError::Contract(_))
        ));
    }

    #[test]
    fn mixture_integrates_to_one() {
        let ps = [
            ProposalParams::from_slices(&[0.0, 0.0], &[1.0, 0.3, 0.3, 0.5]).unwrap(),
            ProposalParams::from_slices(&[1.5, -1.0], &[0.4, 0.0, 0.0, 2.0]).unwrap(),
        ];
        let m = Mixture::new(&ps, &[3, 5], &FamilySpec::gaussian(2)).unwrap();
        // +-8 sd box around both components, trapezoid rule
        let (lo, hi) = ([-8.0, -12.5], [8.0 + 1.5, 11.5]);
        let n = 600;
        let hx = (hi[0] - lo[0]) / n as f64;
        let hy = (hi[1] - lo[1]) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let wx = if i == 0 || i == n { 0.5 } else { 1.0 };
                let wy = if j == 0 || j == n { 0.5 } else { 1.0 };
                let x = [lo[0] + i as f64 * hx, lo[1] + j as f64 * hy];
                total += wx * wy * m.log_density(&x).exp();
            }
        }
        total *= hx * hy;
        assert!((total - 1.0).abs() < 1e-3, "total {total}");
    }
}

//! Particle storage and run traces.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{AmisError, Result};
use crate::params::ProposalParams;

/// Which scheme produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    /// Learns from every past particle under mixture weights, every iteration.
    OriginalAmis,
    /// Learns from the current sample only; mixture weights once at the end.
    ModifiedAmis,
    /// Learns like the modified scheme but keeps the per-iteration weights.
    NaiveRecycling,
}

impl Algorithm {
    /// Short label used by the benchmark: `a` naive, `b` original, `c` modified.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::NaiveRecycling => "a",
            Algorithm::OriginalAmis => "b",
            Algorithm::ModifiedAmis => "c",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "a" => Some(Algorithm::NaiveRecycling),
            "b" => Some(Algorithm::OriginalAmis),
            "c" => Some(Algorithm::ModifiedAmis),
            _ => None,
        }
    }

    pub fn all() -> [Algorithm; 3] {
        [
            Algorithm::NaiveRecycling,
            Algorithm::OriginalAmis,
            Algorithm::ModifiedAmis,
        ]
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::NaiveRecycling => "naive-recycling",
            Algorithm::OriginalAmis => "original-amis",
            Algorithm::ModifiedAmis => "modified-amis",
        };
        f.write_str(name)
    }
}

/// How weighted sums are normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by the particle count; requires a normalised target.
    Normalized,
    /// Divide by the sum of weights; works for unnormalised targets.
    #[default]
    SelfNormalized,
}

/// Every particle of a run, in `(iteration, index)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    dim: usize,
    points: Vec<f64>,
    iter_of: Vec<usize>,
    sizes: Vec<usize>,
    log_target: Vec<f64>,
    simple_log_w: Vec<f64>,
    recycled_log_w: Option<Vec<f64>>,
}

impl ParticleSystem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            iter_of: Vec::new(),
            sizes: Vec::new(),
            log_target: Vec::new(),
            simple_log_w: Vec::new(),
            recycled_log_w: None,
        }
    }

    /// Appends the sample of the next iteration.
    pub fn push_iteration(
        &mut self,
        points: Vec<f64>,
        log_target: Vec<f64>,
        simple_log_w: Vec<f64>,
    ) -> Result<()> {
        let n = log_target.len();
        if n == 0 || points.len() != n * self.dim || simple_log_w.len() != n {
            return Err(AmisError::Contract(format!(
                "iteration arrays disagree: {} coordinates, {} targets, {} weights in dimension {}",
                points.len(),
                n,
                simple_log_w.len(),
                self.dim
            )));
        }
        if let Some(p) = simple_log_w
            .iter()
            .zip(&log_target)
            .position(|(w, lt)| w.is_nan() || *w == f64::INFINITY || (*w == f64::NEG_INFINITY) != (*lt == f64::NEG_INFINITY))
        {
            return Err(AmisError::Contract(format!(
                "particle {p}: weight must be finite unless the target density is zero"
            )));
        }
        let t = self.sizes.len();
        self.sizes.push(n);
        self.iter_of.extend(std::iter::repeat_n(t, n));
        self.points.extend(points);
        self.log_target.extend(log_target);
        self.simple_log_w.extend(simple_log_w);
        self.recycled_log_w = None;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total number of particles, `Omega`.
    pub fn len(&self) -> usize {
        self.log_target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_target.is_empty()
    }

    pub fn iterations(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.points[p * self.dim..(p + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn iter_of(&self) -> &[usize] {
        &self.iter_of
    }

    pub fn log_target(&self) -> &[f64] {
        &self.log_target
    }

    pub fn simple_log_w(&self) -> &[f64] {
        &self.simple_log_w
    }

    pub fn recycled_log_w(&self) -> Option<&[f64]> {
        self.recycled_log_w.as_deref()
    }

    /// Recycled weights when present, otherwise the simple ones.
    pub fn final_log_w(&self) -> &[f64] {
        self.recycled_log_w.as_deref().unwrap_or(&self.simple_log_w)
    }

    /// Flat index range of iteration `t` (0-based).
    pub fn iteration_range(&self, t: usize) -> std::ops::Range<usize> {
        let start: usize = self.sizes[..t].iter().sum();
        start..start + self.sizes[t]
    }

    /// The first `t` iterations as a system of their own.
    pub fn truncated(&self, t: usize) -> ParticleSystem {
        let n: usize = self.sizes[..t].iter().sum();
        ParticleSystem {
            dim: self.dim,
            points: self.points[..n * self.dim].to_vec(),
            iter_of: self.iter_of[..n].to_vec(),
            sizes: self.sizes[..t].to_vec(),
            log_target: self.log_target[..n].to_vec(),
            simple_log_w: self.simple_log_w[..n].to_vec(),
            recycled_log_w: None,
        }
    }

    pub(crate) fn set_recycled(&mut self, w: Vec<f64>) {
        debug_assert_eq!(w.len(), self.len());
        self.recycled_log_w = Some(w);
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// `theta_1 .. theta_{T+1}`.
    pub thetas: Vec<ProposalParams>,
    pub system: ParticleSystem,
    /// ESS of each iteration's own sample under its simple weights.
    pub ess_per_iter: Vec<f64>,
    pub estimates: BTreeMap<String, f64>,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub normalization: Normalization,
}

impl RunOutput {
    pub fn iterations(&self) -> usize {
        self.system.iterations()
    }

    /// The last learned parameter, `theta_{T+1}`.
    pub fn final_theta(&self) -> &ProposalParams {
        self.thetas.last().expect("a run has at least two thetas")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for a in Algorithm::all() {
            assert_eq!(Algorithm::from_label(a.label()), Some(a));
        }
        assert_eq!(Algorithm::from_label("d"), None);
    }

    #[test]
    fn push_tracks_provenance() {
        let mut s = ParticleSystem::new(1);
        s.push_iteration(vec![0.0, 1.0], vec![-1.0, -2.0], vec![0.1, 0.2]).unwrap();
        s.push_iteration(vec![2.0, 3.0, 4.0], vec![-1.0, f64::NEG_INFINITY, -2.0], vec![0.0, f64::NEG_INFINITY, 0.5])
            .unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.iter_of(), &[0, 0, 1, 1, 1]);
        assert_eq!(s.iteration_range(1), 2..5);
        assert_eq!(s.point(3), &[3.0]);
        let head = s.truncated(1);
        assert_eq!(head.len(), 2);
        assert_eq!(head.sizes(), &[2]);
    }

    #[test]
    fn push_rejects_inconsistent_weights() {
        let mut s = ParticleSystem::new(1);
        assert!(s.push_iteration(vec![0.0], vec![-1.0], vec![f64::NEG_INFINITY]).is_err());
        assert!(s.push_iteration(vec![0.0], vec![-1.0], vec![f64::NAN]).is_err());
        assert!(s.push_iteration(vec![0.0, 1.0], vec![-1.0], vec![0.0]).is_err());
    }
}

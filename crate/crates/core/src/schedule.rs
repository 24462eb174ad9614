//! Per-iteration sample sizes.

use crate::error::{AmisError, Result};

/// How a schedule was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// `N_t = n * t`
    Linear(usize),
    /// `N_t = n * t^2`
    Quadratic(usize),
    Explicit,
}

/// Non-decreasing sample sizes `N_1..N_T` with their running totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    sizes: Vec<usize>,
    kind: ScheduleKind,
    // prefix[t] = N_1 + ... + N_t, prefix[0] = 0
    prefix: Vec<usize>,
}

impl Schedule {
    pub fn linear(n: usize, iterations: usize) -> Result<Self> {
        let sizes = (1..=iterations).map(|t| n * t).collect();
        Self::build(sizes, ScheduleKind::Linear(n))
    }

    pub fn quadratic(n: usize, iterations: usize) -> Result<Self> {
        let sizes = (1..=iterations).map(|t| n * t * t).collect();
        Self::build(sizes, ScheduleKind::Quadratic(n))
    }

    pub fn explicit(sizes: Vec<usize>) -> Result<Self> {
        Self::build(sizes, ScheduleKind::Explicit)
    }

    /// `T = 45`, `N_t = 100 t`.
    pub fn preset() -> Self {
        Self::linear(100, 45).expect("valid preset")
    }

    fn build(sizes: Vec<usize>, kind: ScheduleKind) -> Result<Self> {
        if sizes.is_empty() {
            return Err(AmisError::Contract("schedule has no iterations".into()));
        }
        if let Some(t) = sizes.iter().position(|&n| n == 0) {
            return Err(AmisError::Contract(format!("N_{} is zero", t + 1)));
        }
        if let Some(t) = sizes.windows(2).position(|w| w[1] < w[0]) {
            return Err(AmisError::Contract(format!(
                "sample sizes must not decrease: N_{} = {} > N_{} = {}",
                t + 1,
                sizes[t],
                t + 2,
                sizes[t + 1]
            )));
        }
        let mut prefix = Vec::with_capacity(sizes.len() + 1);
        prefix.push(0);
        for n in &sizes {
            prefix.push(prefix.last().unwrap() + n);
        }
        Ok(Self { sizes, kind, prefix })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Number of iterations `T`.
    pub fn iterations(&self) -> usize {
        self.sizes.len()
    }

    /// Total particle count `Omega_T`.
    pub fn omega(&self) -> usize {
        *self.prefix.last().unwrap()
    }

    /// `Omega_t` for `t` in `0..=T`.
    pub fn omega_at(&self, t: usize) -> usize {
        self.prefix[t]
    }

    /// Flat particle range of iteration `t` (0-based).
    pub fn range(&self, t: usize) -> std::ops::Range<usize> {
        self.prefix[t]..self.prefix[t + 1]
    }

    /// The first `t` iterations as a schedule of their own.
    pub fn prefix(&self, t: usize) -> Result<Self> {
        Self::build(self.sizes[..t].to_vec(), self.kind)
    }

    /// Whether `sum 1/N_t` converges for the unbounded version of this
    /// family: true for quadratic growth, false for linear, unknown for an
    /// explicit list.
    pub fn summable_class(&self) -> Option<bool> {
        match self.kind {
            ScheduleKind::Linear(_) => Some(false),
            ScheduleKind::Quadratic(_) => Some(true),
            ScheduleKind::Explicit => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let p = Schedule::preset();
        assert_eq!(p.iterations(), 45);
        assert_eq!(p.sizes()[0], 100);
        assert_eq!(p.sizes()[44], 4500);
        assert_eq!(p.omega(), 100 * 45 * 46 / 2);
        let q = Schedule::quadratic(50, 10).unwrap();
        assert_eq!(q.sizes(), &[50, 200, 450, 800, 1250, 1800, 2450, 3200, 4050, 5000]);
        assert_eq!(q.omega(), 50 * 385);
        assert_eq!(q.summable_class(), Some(true));
        assert_eq!(p.summable_class(), Some(false));
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Schedule::explicit(vec![]).is_err());
        assert!(Schedule::explicit(vec![3, 2]).is_err());
        assert!(Schedule::explicit(vec![0, 2]).is_err());
        assert!(Schedule::linear(0, 3).is_err());
        assert!(Schedule::explicit(vec![2, 2, 5]).is_ok());
    }

    #[test]
    fn ranges_tile_the_particles() {
        let s = Schedule::explicit(vec![2, 3, 3]).unwrap();
        assert_eq!(s.range(0), 0..2);
        assert_eq!(s.range(1), 2..5);
        assert_eq!(s.range(2), 5..8);
        assert_eq!(s.omega_at(2), 5);
    }
}

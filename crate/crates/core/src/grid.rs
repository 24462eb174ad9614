//! Rectangular evaluation grids for distribution functions.

use crate::error::{AmisError, Result};

/// A grid of `cells[a]` equal cells per axis over `[lower, upper]`.
///
/// Distribution functions are evaluated at the upper corner of every cell,
/// so the evaluation points along axis `a` are
/// `lower[a] + (upper[a] - lower[a]) * (i + 1) / cells[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cells: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        let d = lower.len();
        if d == 0 || d > 2 || upper.len() != d || cells.len() != d {
            return Err(AmisError::Unsupported(format!(
                "grids need 1 or 2 consistent axes (got {} / {} / {})",
                lower.len(),
                upper.len(),
                cells.len()
            )));
        }
        for a in 0..d {
            if !(lower[a] < upper[a]) || cells[a] == 0 {
                return Err(AmisError::Contract(format!("degenerate grid axis {a}")));
            }
        }
        Ok(Self { lower, upper, cells })
    }

    /// Square `cells x cells` grid (or `cells` in 1-D).
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, cells: usize) -> Result<Self> {
        let d = lower.len();
        Self::new(lower, upper, vec![cells; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Total number of evaluation points.
    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Evaluation coordinates along `axis`.
    pub fn corners(&self, axis: usize) -> Vec<f64> {
        let (lo, hi, n) = (self.lower[axis], self.upper[axis], self.cells[axis]);
        (0..n)
            .map(|i| lo + (hi - lo) * (i + 1) as f64 / n as f64)
            .collect()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.cells[axis] as f64
    }

    /// Area (length in 1-D) of one cell.
    pub fn cell_area(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Evaluation point with flat index `k` (row-major, axis 0 slowest).
    pub fn point(&self, k: usize) -> Vec<f64> {
        match self.dim() {
            1 => vec![self.corner(0, k)],
            _ => {
                let n1 = self.cells[1];
                vec![self.corner(0, k / n1), self.corner(1, k % n1)]
            }
        }
    }

    fn corner(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi, n) = (self.lower[axis], self.upper[axis], self.cells[axis]);
        lo + (hi - lo) * (i + 1) as f64 / n as f64
    }
}

/// Values of a distribution function on a [`GridSpec`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfGrid {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl CdfGrid {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(AmisError::Contract(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Value at `(i, j)`; use `j = 0` in 1-D.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        if self.grid.dim() == 1 {
            self.values[i]
        } else {
            self.values[i * self.grid.cells()[1] + j]
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when values never decrease along any axis.
    pub fn is_monotone(&self) -> bool {
        let c = self.grid.cells();
        if self.grid.dim() == 1 {
            return self.values.windows(2).all(|w| w[0] <= w[1]);
        }
        for i in 0..c[0] {
            for j in 0..c[1] {
                let v = self.at(i, j);
                if (i + 1 < c[0] && self.at(i + 1, j) < v) || (j + 1 < c[1] && self.at(i, j + 1) < v) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_hit_the_upper_edge_exactly() {
        let g = GridSpec::uniform(vec![-5.0, -5.0], vec![5.0, 5.0], 100).unwrap();
        let c = g.corners(0);
        assert_eq!(c.len(), 100);
        assert_eq!(c[49], 0.0);
        assert_eq!(c[99], 5.0);
        assert!((g.cell_area() - 0.01).abs() < 1e-15);
        assert_eq!(g.point(49 * 100 + 99), vec![0.0, 5.0]);
    }

    #[test]
    fn rejects_three_axes() {
        assert!(GridSpec::uniform(vec![0.0; 3], vec![1.0; 3], 4).is_err());
        assert!(GridSpec::uniform(vec![1.0], vec![0.0], 4).is_err());
    }
}

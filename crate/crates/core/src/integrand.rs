//! Test functions `psi` whose target expectations are estimated.

use std::fmt;
use std::sync::Arc;

/// A real-valued function of a point.
#[derive(Clone)]
pub enum Integrand {
    Constant(f64),
    /// `prod_i x_i^{e_i}`.
    Monomial(Vec<u32>),
    /// `1{x_axis > threshold}` when `above`, else `1{x_axis <= threshold}`.
    Indicator {
        axis: usize,
        threshold: f64,
        above: bool,
    },
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Integrand {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Integrand::Constant(c) => *c,
            Integrand::Monomial(e) => e
                .iter()
                .zip(x)
                .map(|(&k, &v)| v.powi(k as i32))
                .product(),
            Integrand::Indicator {
                axis,
                threshold,
                above,
            } => {
                if (x[*axis] > *threshold) == *above {
                    1.0
                } else {
                    0.0
                }
            }
            Integrand::Custom(f) => f(x),
        }
    }

    /// `x_axis` in dimension `dim`.
    pub fn coordinate(axis: usize, dim: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        Integrand::Monomial(e)
    }

    /// Axis/threshold pairs where the function jumps, used to split
    /// quadrature domains.
    pub fn discontinuities(&self) -> Vec<(usize, f64)> {
        match self {
            Integrand::Indicator { axis, threshold, .. } => vec![(*axis, *threshold)],
            _ => Vec::new(),
        }
    }
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrand::Constant(c) => write!(f, "Constant({c})"),
            Integrand::Monomial(e) => write!(f, "Monomial({e:?})"),
            Integrand::Indicator {
                axis,
                threshold,
                above,
            } => write!(
                f,
                "Indicator(x{axis} {} {threshold})",
                if *above { ">" } else { "<=" }
            ),
            Integrand::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// An integrand with the label its estimate is reported under.
#[derive(Debug, Clone)]
pub struct NamedIntegrand {
    pub name: String,
    pub integrand: Integrand,
}

impl NamedIntegrand {
    pub fn new(name: impl Into<String>, integrand: Integrand) -> Self {
        Self {
            name: name.into(),
            integrand,
        }
    }
}

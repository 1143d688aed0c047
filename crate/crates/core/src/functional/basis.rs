//! Concrete one-dimensional bases, evaluated at points.
//!
//! The estimator itself only ever sees evaluation matrices; these generators
//! exist to build them from a compact description.

use serde::{Deserialize, Serialize};

use crate::error::{OrexError, Result};
use crate::numerics::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Basis {
    /// `1, x, ..., x^degree`.
    Monomial { degree: usize },
    /// Nodal hat functions on sorted knots, constant beyond the end knots.
    PiecewiseLinear { knots: Vec<f64> },
    /// The trivial subspace `{0}`.
    Zero,
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Monomial { degree } => degree + 1,
            Basis::PiecewiseLinear { knots } => knots.len(),
            Basis::Zero => 0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if let Basis::PiecewiseLinear { knots } = self {
            if knots.is_empty() || knots.iter().any(|k| !k.is_finite()) {
                return Err(OrexError::InvalidInput("knots must be finite and nonempty".into()));
            }
            if knots.windows(2).any(|w| w[1] <= w[0]) {
                return Err(OrexError::InvalidInput("knots must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    /// Values of basis function `j` at `x`, for all `j`.
    pub fn values_at(&self, x: f64) -> Vector {
        match self {
            Basis::Monomial { degree } => Vector::from_fn(degree + 1, |j, _| x.powi(j as i32)),
            Basis::PiecewiseLinear { knots } => hat_values(knots, x),
            Basis::Zero => Vector::zeros(0),
        }
    }

    /// `dim x points.len()` matrix of evaluations.
    pub fn evaluate(&self, points: &[f64]) -> Result<Matrix> {
        self.check()?;
        if points.iter().any(|p| !p.is_finite()) {
            return Err(OrexError::InvalidInput("evaluation points must be finite".into()));
        }
        let mut m = Matrix::zeros(self.dim(), points.len());
        for (c, &x) in points.iter().enumerate() {
            m.set_column(c, &self.values_at(x));
        }
        Ok(m)
    }

    /// Exact mean of each basis function over `[lo, hi]`.
    pub fn mean(&self, lo: f64, hi: f64) -> Result<Vector> {
        self.check()?;
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(OrexError::InvalidInput(format!("invalid averaging interval [{lo}, {hi}]")));
        }
        let width = hi - lo;
        Ok(match self {
            Basis::Monomial { degree } => Vector::from_fn(degree + 1, |j, _| {
                let p = (j + 1) as i32;
                (hi.powi(p) - lo.powi(p)) / (p as f64 * width)
            }),
            Basis::PiecewiseLinear { knots } => {
                // Trapezoid rule is exact between consecutive breakpoints.
                let mut nodes: Vec<f64> =
                    knots.iter().copied().filter(|&k| k > lo && k < hi).collect();
                nodes.insert(0, lo);
                nodes.push(hi);
                let mut acc = Vector::zeros(knots.len());
                for w in nodes.windows(2) {
                    acc += (hat_values(knots, w[0]) + hat_values(knots, w[1])) * (0.5 * (w[1] - w[0]));
                }
                acc / width
            }
            Basis::Zero => Vector::zeros(0),
        })
    }
}

fn hat_values(knots: &[f64], x: f64) -> Vector {
    let k = knots.len();
    let mut v = Vector::zeros(k);
    if x <= knots[0] {
        v[0] = 1.0;
    } else if x >= knots[k - 1] {
        v[k - 1] = 1.0;
    } else {
        let i = knots.partition_point(|&t| t <= x) - 1;
        let t = (x - knots[i]) / (knots[i + 1] - knots[i]);
        v[i] = 1.0 - t;
        v[i + 1] = t;
    }
    v
}

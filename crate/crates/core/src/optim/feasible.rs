use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned feasible set `{x : lower <= x <= upper}`; bounds may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FeasibleBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        let b = FeasibleBox { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn unbounded(dim: usize) -> Self {
        FeasibleBox { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        match self.lower.iter().zip(&self.upper).position(|(l, u)| !(l <= u)) {
            Some(index) => Err(Error::EmptyBox { index }),
            None => Ok(()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|b| b.is_finite())
    }

    /// `D_inf = max_i (upper_i - lower_i)`; infinite for an unbounded box.
    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// Weighted projection `argmin_{x in box} ||diag(w)^{1/2} (x - y)||`.
///
/// For a box the objective separates per coordinate, so the minimizer is the
/// elementwise clamp regardless of the (positive) weights.
pub fn project_box(y: &[f64], weights: &[f64], feasible: &FeasibleBox) -> Result<Vec<f64>> {
    if y.len() != feasible.dim() {
        return Err(Error::DimensionMismatch { expected: feasible.dim(), found: y.len() });
    }
    if weights.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), found: weights.len() });
    }
    feasible.validate()?;
    if let Some(index) = weights.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::NonPositiveWeight { index });
    }
    Ok(clamp_into(y, feasible))
}

pub(crate) fn clamp_into(y: &[f64], feasible: &FeasibleBox) -> Vec<f64> {
    y.iter()
        .zip(feasible.lower.iter().zip(&feasible.upper))
        .map(|(v, (l, u))| v.max(*l).min(*u))
        .collect()
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters plus every accumulator any of the step rules needs.
///
/// `t` is the 1-based index of the iteration the next step will execute, so a
/// fresh state has `t = 1` with `m = m_tilde = v = 0` and `v_hat = epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub x: Vec<f64>,
    /// First moment `m_t` (normalized momentum).
    pub m: Vec<f64>,
    /// Unnormalized momentum of the practical RSG form, `(1 - beta) * m_tilde = m`.
    pub m_tilde: Vec<f64>,
    /// Second moment.
    pub v: Vec<f64>,
    /// Running max of `v`, floored at `epsilon`.
    pub v_hat: Vec<f64>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(x0: Vec<f64>, epsilon: f64) -> Self {
        let d = x0.len();
        OptimizerState {
            x: x0,
            m: vec![0.0; d],
            m_tilde: vec![0.0; d],
            v: vec![0.0; d],
            v_hat: vec![epsilon; d],
            t: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Checks that `g` matches the state dimension and is finite.
    pub fn check_gradient(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: g.len() });
        }
        if let Some((index, &value)) = g.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { index, value });
        }
        if self.t == 0 {
            return Err(Error::ZeroIteration);
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use crate::error::{Error, Result};

/// Step-size, momentum, observation-factor and preconditioner constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub alpha: Schedule,
    #[serde(default = "default_beta1")]
    pub beta1: Schedule,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_mu")]
    pub mu: Schedule,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_beta1() -> Schedule {
    Schedule::constant(0.999)
}
fn default_beta2() -> f64 {
    0.99
}
fn default_mu() -> Schedule {
    Schedule::constant(0.1)
}
fn default_epsilon() -> f64 {
    1e-8
}

/// Coefficients resolved for one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCoefficients {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub mu: f64,
    pub epsilon: f64,
}

impl HyperParams {
    pub fn constant(alpha: f64, beta1: f64, beta2: f64, mu: f64, epsilon: f64) -> Self {
        HyperParams {
            alpha: Schedule::constant(alpha),
            beta1: Schedule::constant(beta1),
            beta2,
            mu: Schedule::constant(mu),
            epsilon,
        }
    }

    /// Evaluates every schedule at `t` and checks the ranges
    /// `alpha >= 0`, `beta1, beta2, mu in [0, 1)`, `epsilon > 0`.
    pub fn at(&self, t: u64) -> Result<StepCoefficients> {
        let c = StepCoefficients {
            alpha: self.alpha.at(t)?,
            beta1: self.beta1.at(t)?,
            beta2: self.beta2,
            mu: self.mu.at(t)?,
            epsilon: self.epsilon,
        };
        c.validate(t)?;
        Ok(c)
    }

    /// Range checks at t = 1 for the constant parts.
    pub fn validate(&self) -> Result<()> {
        self.at(1).map(|_| ())
    }
}

impl StepCoefficients {
    pub fn validate(&self, t: u64) -> Result<()> {
        let unit = |name, value: f64| {
            if (0.0..1.0).contains(&value) {
                Ok(())
            } else {
                Err(Error::InvalidHyperParameter { name, value, t })
            }
        };
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidHyperParameter { name: "alpha", value: self.alpha, t });
        }
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        unit("mu", self.mu)?;
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidHyperParameter { name: "epsilon", value: self.epsilon, t });
        }
        Ok(())
    }
}

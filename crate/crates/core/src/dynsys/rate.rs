use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyper-parameter scaling with the condition number:
/// `alpha = c_alpha sqrt(kappa) / lambda_max`, `beta = 1 - c_beta / sqrt(kappa)`,
/// `mu = c_mu / sqrt(kappa)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateAssumption {
    pub kappa: f64,
    pub c_alpha: f64,
    pub c_beta: f64,
    pub c_mu: f64,
}

/// Hyper-parameters implied by a [`RateAssumption`] for a given `lambda_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledHyper {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

impl RateAssumption {
    pub fn validate(&self) -> Result<()> {
        let mut failures = Vec::new();
        if !(self.kappa > 1.0) {
            failures.push(format!("kappa = {} must exceed 1", self.kappa));
        }
        for (name, v) in [("c_alpha", self.c_alpha), ("c_beta", self.c_beta), ("c_mu", self.c_mu)] {
            if !(v > 0.0 && v.is_finite()) {
                failures.push(format!("{name} = {v} must be positive"));
            }
        }
        if self.c_alpha > 2.0 / (self.c_beta + self.c_mu) {
            failures.push(format!(
                "c_alpha = {} exceeds 2 / (c_beta + c_mu) = {}",
                self.c_alpha,
                2.0 / (self.c_beta + self.c_mu)
            ));
        }
        let sk = self.kappa.sqrt();
        if self.c_beta >= sk || self.c_mu >= sk {
            failures.push("c_beta and c_mu must be below sqrt(kappa)".to_string());
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(Error::PreconditionViolated { what: "rate assumption", failures })
        }
    }

    pub fn hyper(&self, lambda_max: f64) -> ScaledHyper {
        let sk = self.kappa.sqrt();
        ScaledHyper {
            alpha: self.c_alpha * sk / lambda_max,
            beta: 1.0 - self.c_beta / sk,
            mu: self.c_mu / sk,
        }
    }
}

/// Approximate worst-case convergence rate `r_c` of RSG with exact gradients:
///
/// ```text
/// 1 - (c_beta - sqrt(c_beta (c_beta - 4 c_alpha))) / (2 sqrt(kappa))   if 4 c_alpha < c_beta
/// 1 - c_beta / (2 sqrt(kappa))                                          otherwise
/// ```
pub fn theorem1_rate(assume: &RateAssumption) -> Result<f64> {
    assume.validate()?;
    let RateAssumption { kappa, c_alpha, c_beta, .. } = *assume;
    let sk = kappa.sqrt();
    Ok(if 4.0 * c_alpha < c_beta {
        1.0 - (c_beta - (c_beta * (c_beta - 4.0 * c_alpha)).sqrt()) / (2.0 * sk)
    } else {
        1.0 - c_beta / (2.0 * sk)
    })
}

/// The `c_alpha << c_beta` limit, `1 - c_alpha / sqrt(kappa)`.
pub fn theorem1_rate_small_alpha(assume: &RateAssumption) -> Result<f64> {
    assume.validate()?;
    Ok(1.0 - assume.c_alpha / assume.kappa.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_branches() {
        let a = RateAssumption { kappa: 1e4, c_alpha: 0.1, c_beta: 1.0, c_mu: 1.0 };
        let r = theorem1_rate(&a).unwrap();
        assert!((r - (1.0 - (1.0 - 0.6f64.sqrt()) / 200.0)).abs() < 1e-15);
        assert!((r - 0.998873).abs() < 1e-6);
        let b = RateAssumption { c_alpha: 0.5, ..a };
        assert!((theorem1_rate(&b).unwrap() - 0.995).abs() < 1e-15);
        assert!((theorem1_rate_small_alpha(&a).unwrap() - 0.999).abs() < 1e-15);
    }

    #[test]
    fn scaling_structure() {
        let mut prev = None;
        for kappa in [1e4, 1e6, 1e8] {
            let a = RateAssumption { kappa, c_alpha: 0.1, c_beta: 1.0, c_mu: 1.0 };
            let scaled = (1.0 - theorem1_rate(&a).unwrap()) * kappa.sqrt();
            if let Some(p) = prev {
                assert!((scaled - p) / p < 1e-6f64);
            }
            prev = Some(scaled);
        }
    }

    #[test]
    fn precondition() {
        let a = RateAssumption { kappa: 1e4, c_alpha: 1.5, c_beta: 1.0, c_mu: 1.0 };
        assert!(matches!(theorem1_rate(&a), Err(Error::PreconditionViolated { .. })));
    }
}

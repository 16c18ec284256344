//! Adaptive remote-observation stochastic gradient methods (ARSG family) and
//! the linear-dynamics analysis used to tune them.
//!
//! - [`optim`]: step rules (HB, NAG, RSG, AMSGRAD, ARSG), schedules, projection.
//! - [`dynsys`]: per-eigen-direction gain matrix, gain factor, stationary variance, rate.
//! - [`obsb`]: the observation-boost schedule for `mu` and `alpha`.
//! - [`problems`]: quadratic, logistic and MLP objectives with seeded oracles.
//! - [`regret`]: online regret tracking and the closed-form bounds.
//! - [`harness`]: run configs, training loops, grid search and comparisons.

pub mod dynsys;
pub mod error;
pub mod harness;
pub mod obsb;
pub mod optim;
pub mod problems;
pub mod regret;
pub mod rng;

pub use error::{Error, Result};

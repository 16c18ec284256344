//! Convergence analysis of RSG on a quadratic, one Hessian eigen-direction at a
//! time: the 2x2 gain matrix, its eigen-structure, noise-free state decay,
//! stationary error variance, the condition-number rate approximation, and
//! gain-factor sweeps over `tau = alpha * lambda`.

mod point;
mod rate;
mod sweep;

pub use point::{
    build_dynsys, eigenvalues, explicit_state, gain_at, gain_factor, gain_matrix, noise_input, rho, simulate,
    state_expectation, stationary_variance, DynSysPoint, NoiseModel, DEFECT_PERTURBATION,
};
pub use rate::{theorem1_rate, theorem1_rate_small_alpha, RateAssumption, ScaledHyper};
pub use sweep::{argmin_gain, argmin_gain_with_grid, linspace, sweep_gain, write_sweep_csv, SweepRow};

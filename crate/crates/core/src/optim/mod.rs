//! Optimizer step rules: SGD0, heavy ball, RSG (concise and practical forms),
//! AMSGRAD and ARSG, together with coefficient schedules and box projection.

mod feasible;
mod hyper;
mod schedule;
mod state;
mod step;

pub(crate) use feasible::clamp_into;
pub use feasible::{project_box, FeasibleBox};
pub use hyper::{HyperParams, StepCoefficients};
pub use schedule::{evaluate_schedule, Piece, Schedule};
pub use state::OptimizerState;
pub use step::{
    amsgrad_step, arsg_step, hb_step, rsg_step_concise, rsg_step_practical, Optimizer, OptimizerKind,
};

//! Step rules. Every rule is a pure function `(state, gradient, coefficients) -> state`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::feasible::{clamp_into, FeasibleBox};
use super::hyper::{HyperParams, StepCoefficients};
use super::state::OptimizerState;
use crate::error::{Error, Result};

/// Heavy ball: `m = b m + (1-b) g; x -= a m`.
pub fn hb_step(state: &OptimizerState, g: &[f64], hp: &HyperParams) -> Result<OptimizerState> {
    state.check_gradient(g)?;
    let c = hp.at(state.t)?;
    Ok(heavy_ball(state, g, c.alpha, c.beta1))
}

/// Concise RSG: `m = b m + (1-b) g; x -= a ((1-mu) m + mu g)`.
pub fn rsg_step_concise(state: &OptimizerState, g: &[f64], hp: &HyperParams) -> Result<OptimizerState> {
    state.check_gradient(g)?;
    let c = hp.at(state.t)?;
    Ok(rsg_concise(state, g, c.alpha, c.beta1, c.mu))
}

/// Practical RSG: `m~ = b m~ + g; x -= a (1-b)(1-mu) m~ + a mu g`.
pub fn rsg_step_practical(state: &OptimizerState, g: &[f64], hp: &HyperParams) -> Result<OptimizerState> {
    state.check_gradient(g)?;
    let c = hp.at(state.t)?;
    Ok(rsg_practical(state, g, c.alpha, c.beta1, c.mu))
}

pub fn amsgrad_step(
    state: &OptimizerState,
    g: &[f64],
    hp: &HyperParams,
    feasible: &FeasibleBox,
) -> Result<OptimizerState> {
    state.check_gradient(g)?;
    check_box(state, feasible)?;
    let c = hp.at(state.t)?;
    Ok(amsgrad(state, g, &c, feasible))
}

/// One iteration of the adaptive remote stochastic gradient method.
pub fn arsg_step(
    state: &OptimizerState,
    g: &[f64],
    hp: &HyperParams,
    feasible: &FeasibleBox,
) -> Result<OptimizerState> {
    state.check_gradient(g)?;
    check_box(state, feasible)?;
    let c = hp.at(state.t)?;
    Ok(arsg(state, g, &c, feasible))
}

fn check_box(state: &OptimizerState, feasible: &FeasibleBox) -> Result<()> {
    if feasible.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: feasible.dim() });
    }
    feasible.validate()
}

pub(crate) fn heavy_ball(s: &OptimizerState, g: &[f64], alpha: f64, beta: f64) -> OptimizerState {
    let mut next = s.clone();
    for i in 0..g.len() {
        next.m[i] = beta * s.m[i] + (1.0 - beta) * g[i];
        next.x[i] = s.x[i] - alpha * next.m[i];
    }
    next.t += 1;
    next
}

pub(crate) fn rsg_concise(s: &OptimizerState, g: &[f64], alpha: f64, beta: f64, mu: f64) -> OptimizerState {
    let mut next = s.clone();
    for i in 0..g.len() {
        next.m[i] = beta * s.m[i] + (1.0 - beta) * g[i];
        next.x[i] = s.x[i] - alpha * ((1.0 - mu) * next.m[i] + mu * g[i]);
    }
    next.t += 1;
    next
}

pub(crate) fn rsg_practical(s: &OptimizerState, g: &[f64], alpha: f64, beta: f64, mu: f64) -> OptimizerState {
    let mut next = s.clone();
    let scale = alpha * (1.0 - beta) * (1.0 - mu);
    let direct = alpha * mu;
    for i in 0..g.len() {
        next.m_tilde[i] = beta * s.m_tilde[i] + g[i];
        next.x[i] = s.x[i] - scale * next.m_tilde[i] - direct * g[i];
    }
    next.t += 1;
    next
}

fn update_moments(next: &mut OptimizerState, s: &OptimizerState, g: &[f64], c: &StepCoefficients) {
    for i in 0..g.len() {
        next.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * g[i];
        next.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * g[i] * g[i];
        next.v_hat[i] = s.v_hat[i].max(next.v[i]);
    }
}

pub(crate) fn amsgrad(s: &OptimizerState, g: &[f64], c: &StepCoefficients, feasible: &FeasibleBox) -> OptimizerState {
    let mut next = s.clone();
    update_moments(&mut next, s, g, c);
    let y: Vec<f64> = (0..g.len())
        .map(|i| s.x[i] - c.alpha * next.m[i] / next.v_hat[i].sqrt())
        .collect();
    next.x = clamp_into(&y, feasible);
    next.t += 1;
    next
}

pub(crate) fn arsg(s: &OptimizerState, g: &[f64], c: &StepCoefficients, feasible: &FeasibleBox) -> OptimizerState {
    let mut next = s.clone();
    update_moments(&mut next, s, g, c);
    let y: Vec<f64> = (0..g.len())
        .map(|i| {
            let m_hat = (1.0 - c.mu) * next.m[i] + c.mu * g[i];
            s.x[i] - c.alpha * m_hat / next.v_hat[i].sqrt()
        })
        .collect();
    next.x = clamp_into(&y, feasible);
    next.t += 1;
    next
}

/// The step rules selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain SGD without momentum (heavy ball with `beta = 0`).
    Sgd0,
    Hb,
    /// Momentum NAG, run as concise RSG with `mu_t = 1 - beta_t`.
    Nag,
    Rsg,
    RsgPractical,
    Amsgrad,
    Arsg,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 7] = [
        OptimizerKind::Sgd0,
        OptimizerKind::Hb,
        OptimizerKind::Nag,
        OptimizerKind::Rsg,
        OptimizerKind::RsgPractical,
        OptimizerKind::Amsgrad,
        OptimizerKind::Arsg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd0 => "sgd0",
            OptimizerKind::Hb => "hb",
            OptimizerKind::Nag => "nag",
            OptimizerKind::Rsg => "rsg",
            OptimizerKind::RsgPractical => "rsg_practical",
            OptimizerKind::Amsgrad => "amsgrad",
            OptimizerKind::Arsg => "arsg",
        }
    }

    /// Whether the rule reads the observation factor from the hyper-parameters.
    pub fn uses_mu(self) -> bool {
        matches!(self, OptimizerKind::Rsg | OptimizerKind::RsgPractical | OptimizerKind::Arsg)
    }

    /// Whether the rule uses the second-moment preconditioner and projection.
    pub fn is_adaptive(self) -> bool {
        matches!(self, OptimizerKind::Amsgrad | OptimizerKind::Arsg)
    }

    /// The `mu` actually applied at a step with resolved coefficients `c`.
    pub fn effective_mu(self, c: &StepCoefficients) -> f64 {
        match self {
            OptimizerKind::Nag => 1.0 - c.beta1,
            k if k.uses_mu() => c.mu,
            _ => 0.0,
        }
    }

    /// Advances `state` with already-resolved coefficients.
    pub fn apply(
        self,
        state: &OptimizerState,
        g: &[f64],
        c: &StepCoefficients,
        feasible: &FeasibleBox,
    ) -> Result<OptimizerState> {
        state.check_gradient(g)?;
        Ok(match self {
            OptimizerKind::Sgd0 => heavy_ball(state, g, c.alpha, 0.0),
            OptimizerKind::Hb => heavy_ball(state, g, c.alpha, c.beta1),
            OptimizerKind::Nag => rsg_concise(state, g, c.alpha, c.beta1, 1.0 - c.beta1),
            OptimizerKind::Rsg => rsg_concise(state, g, c.alpha, c.beta1, c.mu),
            OptimizerKind::RsgPractical => rsg_practical(state, g, c.alpha, c.beta1, c.mu),
            OptimizerKind::Amsgrad => {
                check_box(state, feasible)?;
                amsgrad(state, g, c, feasible)
            }
            OptimizerKind::Arsg => {
                check_box(state, feasible)?;
                arsg(state, g, c, feasible)
            }
        })
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown optimizer `{s}`")))
    }
}

/// An optimizer instance: step rule, hyper-parameters, feasible set and state.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub hp: HyperParams,
    pub feasible: FeasibleBox,
    pub state: OptimizerState,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, hp: HyperParams, x0: Vec<f64>) -> Result<Self> {
        hp.validate()?;
        let feasible = FeasibleBox::unbounded(x0.len());
        let state = OptimizerState::new(x0, hp.epsilon);
        Ok(Optimizer { kind, hp, feasible, state })
    }

    pub fn with_box(mut self, feasible: FeasibleBox) -> Result<Self> {
        check_box(&self.state, &feasible)?;
        if feasible.is_bounded() && !self.kind.is_adaptive() {
            return Err(Error::Config(format!("{} does not project onto a feasible set", self.kind)));
        }
        self.state.x = clamp_into(&self.state.x, &feasible);
        self.feasible = feasible;
        Ok(self)
    }

    pub fn coefficients(&self) -> Result<StepCoefficients> {
        self.hp.at(self.state.t)
    }

    pub fn step(&mut self, g: &[f64]) -> Result<()> {
        let c = self.coefficients()?;
        self.state = self.kind.apply(&self.state, g, &c, &self.feasible)?;
        Ok(())
    }

    pub fn params(&self) -> &[f64] {
        &self.state.x
    }
}

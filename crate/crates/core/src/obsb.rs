//! Observation boost: when the training loss flattens, double the observation
//! factor and rescale the step size so the curvature with the smallest gain
//! factor stays where it was.

use serde::{Deserialize, Serialize};

use crate::dynsys::argmin_gain;
use crate::error::{Error, Result};
use crate::optim::{HyperParams, Schedule};

/// How the step size follows a doubling of `mu`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaScaling {
    /// `alpha' = alpha * tau*(mu') / tau*(mu)`, which keeps the minimizing curvature fixed.
    #[default]
    TauRatio,
    /// `alpha' = alpha * r_g*(mu') / r_g*(mu)`, scaling by the minimal gain values instead.
    GainValueRatio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObsbConfig {
    pub enabled: bool,
    pub initial_mu: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub plateau_window: usize,
    pub plateau_rel_threshold: f64,
    pub max_boosts: u32,
    pub tau_range: (f64, f64),
    pub alpha_scaling: AlphaScaling,
    /// Also boost when a scheduled step-size drop fires.
    pub boost_on_decay: bool,
}

impl Default for ObsbConfig {
    fn default() -> Self {
        ObsbConfig {
            enabled: false,
            initial_mu: 0.05,
            beta1: 0.999,
            beta2: 0.99,
            epsilon: 1e-8,
            plateau_window: 200,
            plateau_rel_threshold: 0.01,
            max_boosts: 2,
            tau_range: (0.0, 20.0),
            alpha_scaling: AlphaScaling::TauRatio,
            boost_on_decay: false,
        }
    }
}

impl ObsbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.plateau_window < 2 {
            return Err(Error::Config("obsb plateau_window must be >= 2".into()));
        }
        if !(self.plateau_rel_threshold >= 0.0) {
            return Err(Error::Config("obsb plateau_rel_threshold must be >= 0".into()));
        }
        if !(self.initial_mu > 0.0 && self.initial_mu < 1.0) {
            return Err(Error::Config("obsb initial_mu must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Hyper-parameters the policy starts from, with the given step size.
    pub fn hyper_params(&self, alpha: Schedule) -> HyperParams {
        HyperParams {
            alpha,
            beta1: Schedule::constant(self.beta1),
            beta2: self.beta2,
            mu: Schedule::constant(self.initial_mu),
            epsilon: self.epsilon,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostEvent {
    pub t: u64,
    pub old_mu: f64,
    pub new_mu: f64,
    pub alpha_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyState {
    pub hp: HyperParams,
    pub boost_count: u32,
    pub max_boosts: u32,
    /// `(t, loss)` observations since the last boost.
    pub loss_history: Vec<(u64, f64)>,
}

impl PolicyState {
    pub fn new(hp: HyperParams, max_boosts: u32) -> Self {
        PolicyState { hp, boost_count: 0, max_boosts, loss_history: Vec::new() }
    }

    pub fn mu(&self) -> Result<f64> {
        match self.hp.mu {
            Schedule::Constant { base } => Ok(base),
            ref other => Err(Error::Config(format!(
                "observation boost needs a constant mu, found `{}`",
                other.kind_name()
            ))),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-window relative-improvement test on the last `2 * window` losses:
/// true iff `(mean(previous) - mean(latest)) / |mean(previous)| < rel_threshold`.
pub fn detect_plateau(history: &[f64], window: usize, rel_threshold: f64) -> Result<bool> {
    let needed = 2 * window;
    if window == 0 || history.len() < needed {
        return Err(Error::InsufficientHistory { needed: needed.max(2), found: history.len() });
    }
    let tail = &history[history.len() - needed..];
    let previous = mean(&tail[..window]);
    let latest = mean(&tail[window..]);
    let improvement = if previous == 0.0 { 0.0 } else { (previous - latest) / previous.abs() };
    Ok(improvement < rel_threshold)
}

/// Doubles `mu` and rescales the step size. The input policy is left untouched;
/// on error nothing changes.
pub fn boost(
    policy: &PolicyState,
    beta1: f64,
    tau_range: (f64, f64),
    scaling: AlphaScaling,
) -> Result<(PolicyState, f64)> {
    if policy.boost_count >= policy.max_boosts {
        return Err(Error::BoostRejected(format!(
            "boost limit reached ({} of {})",
            policy.boost_count, policy.max_boosts
        )));
    }
    let mu = policy.mu()?;
    let new_mu = 2.0 * mu;
    if new_mu >= 1.0 {
        return Err(Error::BoostRejected(format!("doubling mu = {mu} leaves [0, 1)")));
    }
    let (tau_old, g_old) = argmin_gain(beta1, mu, tau_range)?;
    let (tau_new, g_new) = argmin_gain(beta1, new_mu, tau_range)?;
    let factor = match scaling {
        AlphaScaling::TauRatio => tau_new / tau_old,
        AlphaScaling::GainValueRatio => g_new / g_old,
    };
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::BoostRejected(format!("degenerate alpha factor {factor}")));
    }
    let mut next = policy.clone();
    next.hp.mu = Schedule::constant(new_mu);
    next.hp.alpha = policy.hp.alpha.scaled(factor);
    next.boost_count += 1;
    next.loss_history.clear();
    Ok((next, factor))
}

/// Step-size scale factor applied when `mu` doubles from `mu` to `2 mu`.
pub fn alpha_factor(beta1: f64, mu: f64, tau_range: (f64, f64)) -> Result<f64> {
    let (a, _) = argmin_gain(beta1, mu, tau_range)?;
    let (b, _) = argmin_gain(beta1, 2.0 * mu, tau_range)?;
    Ok(b / a)
}

/// Named presets for everything except the step size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `mu = 0.1`
    Fast,
    /// `mu = 0.2`
    Generalization,
    /// `mu = 0.05`, the starting point of the boost policy.
    Obsb,
}

/// Recommended constants; the step size is left to grid search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefaultHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub mu: f64,
}

impl DefaultHyper {
    pub fn with_alpha(self, alpha: Schedule) -> HyperParams {
        HyperParams {
            alpha,
            beta1: Schedule::constant(self.beta1),
            beta2: self.beta2,
            mu: Schedule::constant(self.mu),
            epsilon: self.epsilon,
        }
    }
}

pub fn recommend_defaults(profile: Profile) -> DefaultHyper {
    let mu = match profile {
        Profile::Fast => 0.1,
        Profile::Generalization => 0.2,
        Profile::Obsb => 0.05,
    };
    DefaultHyper { beta1: 0.999, beta2: 0.99, epsilon: 1e-8, mu }
}

/// Boost policy driven by per-iteration training losses.
#[derive(Clone, Debug)]
pub struct ObsbPolicy {
    pub config: ObsbConfig,
    pub state: PolicyState,
    pub events: Vec<BoostEvent>,
    exhausted: bool,
}

impl ObsbPolicy {
    pub fn new(config: ObsbConfig, alpha: Schedule) -> Result<Self> {
        config.validate()?;
        let hp = config.hyper_params(alpha);
        let state = PolicyState::new(hp, config.max_boosts);
        Ok(ObsbPolicy { config, state, events: Vec::new(), exhausted: false })
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.state.hp
    }

    /// Records the loss of iteration `t`; boosts when a plateau is detected.
    pub fn observe(&mut self, t: u64, loss: f64) -> Result<Option<BoostEvent>> {
        if self.exhausted {
            return Ok(None);
        }
        self.state.loss_history.push((t, loss));
        let window = self.config.plateau_window;
        if self.state.loss_history.len() < 2 * window {
            return Ok(None);
        }
        let tail: Vec<f64> =
            self.state.loss_history[self.state.loss_history.len() - 2 * window..].iter().map(|p| p.1).collect();
        if !detect_plateau(&tail, window, self.config.plateau_rel_threshold)? {
            return Ok(None);
        }
        self.force_boost(t)
    }

    /// Boosts immediately (used for step-size drop events when configured).
    pub fn force_boost(&mut self, t: u64) -> Result<Option<BoostEvent>> {
        let old_mu = self.state.mu()?;
        match boost(&self.state, self.config.beta1, self.config.tau_range, self.config.alpha_scaling) {
            Ok((next, alpha_factor)) => {
                let event = BoostEvent { t, old_mu, new_mu: next.mu()?, alpha_factor };
                self.state = next;
                self.events.push(event.clone());
                Ok(Some(event))
            }
            Err(Error::BoostRejected(reason)) => {
                log::info!("observation boost stopped at t = {t}: {reason}");
                self.exhausted = true;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

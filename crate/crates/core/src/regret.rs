//! Online regret `R_T = sum_t f_t(x_t) - f_t(x*)` and the closed-form bounds
//! for ARSG (convex, `beta_1t = beta_1 / t`, strongly convex) and AMSGRAD.
//!
//! Bounds are evaluated from accumulators collected along a run. Each bound
//! checks its own hypotheses on the schedules and reports every failing one.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::clamp_into;
use crate::optim::{FeasibleBox, HyperParams, Schedule, StepCoefficients};
use crate::problems::Problem;

/// Everything the bounds need, accumulated one iteration at a time.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RegretRecord {
    pub t: u64,
    pub f_xt: Vec<f64>,
    pub f_xstar: Vec<f64>,
    /// Running `R_T`.
    pub regret: f64,
    /// `sum_i vhat_{T,i}^{1/2}`.
    pub sum_vhat_sqrt: f64,
    /// `sum_t sum_i beta_1t vhat_{t,i}^{1/2} / alpha_t`.
    pub weighted_vhat: f64,
    /// `sum_t g_{t,i}^2` per coordinate.
    pub grad_sq: Vec<f64>,
    /// `max_t |g_t|_inf` and `max_t |g_t|_1`.
    pub max_grad_inf: f64,
    pub max_grad_l1: f64,
    /// Coordinate-wise range of the iterates and the comparator.
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    /// `max_{t,i} t vhat_{t,i}^{1/2} - (t-1) vhat_{t-1,i}^{1/2}`.
    pub max_vhat_increment: f64,
    prev_vhat_sqrt: Vec<f64>,
}

impl RegretRecord {
    pub fn new(x_star: &[f64]) -> Self {
        RegretRecord {
            grad_sq: vec![0.0; x_star.len()],
            x_min: x_star.to_vec(),
            x_max: x_star.to_vec(),
            max_vhat_increment: f64::NEG_INFINITY,
            prev_vhat_sqrt: vec![0.0; x_star.len()],
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.grad_sq.len()
    }

    /// `sum_i |g_{1:T,i}|_2`.
    pub fn sum_grad_norms(&self) -> f64 {
        self.grad_sq.iter().map(|s| s.sqrt()).sum()
    }

    /// `max_i (max_t x_{t,i} - min_t x_{t,i})`, the comparator included.
    pub fn observed_diameter(&self) -> f64 {
        self.x_min.iter().zip(&self.x_max).map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
    }

    pub fn log_ratio(&self) -> f64 {
        self.regret / (1.0 + (self.t as f64).ln())
    }

    /// Adds iteration `t`: the iterate `x_t` the gradient was taken at, the
    /// two losses on the same online function, the gradient, the
    /// preconditioner `vhat_t` used by the step, and the step's coefficients.
    pub fn observe(
        &mut self,
        x_t: &[f64],
        f_xt: f64,
        f_xstar: f64,
        g: &[f64],
        vhat: &[f64],
        c: &StepCoefficients,
    ) -> Result<()> {
        let d = self.dim();
        for len in [x_t.len(), g.len(), vhat.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, found: len });
            }
        }
        self.t += 1;
        let t = self.t as f64;
        self.f_xt.push(f_xt);
        self.f_xstar.push(f_xstar);
        self.regret += f_xt - f_xstar;
        let mut sum_sqrt = 0.0;
        let mut inf = 0.0f64;
        let mut l1 = 0.0;
        for i in 0..d {
            let s = vhat[i].sqrt();
            sum_sqrt += s;
            let inc = t * s - (t - 1.0) * self.prev_vhat_sqrt[i];
            self.max_vhat_increment = self.max_vhat_increment.max(inc);
            self.prev_vhat_sqrt[i] = s;
            self.grad_sq[i] += g[i] * g[i];
            inf = inf.max(g[i].abs());
            l1 += g[i].abs();
            self.x_min[i] = self.x_min[i].min(x_t[i]);
            self.x_max[i] = self.x_max[i].max(x_t[i]);
        }
        self.sum_vhat_sqrt = sum_sqrt;
        if c.alpha > 0.0 {
            self.weighted_vhat += c.beta1 * sum_sqrt / c.alpha;
        } else if c.beta1 > 0.0 {
            self.weighted_vhat = f64::INFINITY;
        }
        self.max_grad_inf = self.max_grad_inf.max(inf);
        self.max_grad_l1 = self.max_grad_l1.max(l1);
        Ok(())
    }
}

/// Constants of the bounds. The `*_observed` flags mark values measured along
/// the run rather than guaranteed a priori by the feasible set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundContext {
    pub d_inf: f64,
    pub g_inf: f64,
    pub g_1: f64,
    pub lambda: f64,
    pub d_inf_observed: bool,
    pub g_observed: bool,
}

impl BoundContext {
    /// `D_inf` from a bounded box, otherwise the observed iterate spread;
    /// gradient norms are always the observed maxima.
    pub fn from_record(rec: &RegretRecord, feasible: &FeasibleBox, lambda: f64) -> Self {
        let (d_inf, d_inf_observed) = if feasible.is_bounded() {
            (feasible.diameter(), false)
        } else {
            (rec.observed_diameter(), true)
        };
        BoundContext { d_inf, g_inf: rec.max_grad_inf, g_1: rec.max_grad_l1, lambda, d_inf_observed, g_observed: true }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [("D_inf", self.d_inf), ("G_inf", self.g_inf), ("G_1", self.g_1), ("lambda", self.lambda)] {
            if !v.is_finite() || v < 0.0 {
                bad.push(format!("{name} = {v} must be finite and >= 0"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::PreconditionViolated { what: "bound context", failures: bad })
        }
    }
}

/// `beta_1 / sqrt(beta_2)` with `beta_1 = beta_11`.
pub fn gamma(hp: &HyperParams) -> Result<f64> {
    Ok(hp.beta1.at(1)? / hp.beta2.sqrt())
}

fn constant_mu(hp: &HyperParams, failures: &mut Vec<String>) -> f64 {
    match hp.mu {
        Schedule::Constant { base } => base,
        ref other => {
            failures.push(format!("mu must be constant, got a {} schedule", other.kind_name()));
            other.initial()
        }
    }
}

/// Checks shared by the ARSG bounds; returns `(beta_1, mu, gamma)`.
fn common_checks(hp: &HyperParams, failures: &mut Vec<String>) -> Result<(f64, f64, f64)> {
    let beta1 = hp.beta1.at(1)?;
    let mu = constant_mu(hp, failures);
    let g = gamma(hp)?;
    if !(g < 1.0) {
        failures.push(format!("gamma = beta1/sqrt(beta2) = {g} must be < 1"));
    }
    if !(beta1 < 1.0) {
        failures.push(format!("beta1 = {beta1} must be < 1"));
    }
    if !(1.0 - beta1 <= mu && mu < 1.0) {
        failures.push(format!("mu = {mu} must lie in [1 - beta1, 1) = [{}, 1)", 1.0 - beta1));
    }
    if !hp.beta1.is_nonincreasing() {
        failures.push("beta1 schedule must be nonincreasing".into());
    }
    Ok((beta1, mu, g))
}

fn require(what: &'static str, failures: Vec<String>) -> Result<()> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::PreconditionViolated { what, failures })
    }
}

/// Convex bound with `alpha_t = alpha / sqrt(t)` and nonincreasing `beta_1t`.
pub fn bound_theorem2(rec: &RegretRecord, ctx: &BoundContext, hp: &HyperParams) -> Result<f64> {
    ctx.validate()?;
    let mut failures = Vec::new();
    let (beta1, mu, g) = common_checks(hp, &mut failures)?;
    let alpha = inv_sqrt_alpha(hp, &mut failures);
    require("convex regret bound", failures)?;
    Ok(bound_terms(rec, ctx, hp.beta2, arsg_coefficients(alpha, beta1, mu, g)))
}

fn inv_sqrt_alpha(hp: &HyperParams, failures: &mut Vec<String>) -> f64 {
    match hp.alpha {
        Schedule::InvSqrt { base } => base,
        ref other => {
            failures.push(format!("alpha must follow alpha/sqrt(t), got {}", other.kind_name()));
            0.0
        }
    }
}

/// Convex bound specialised to `beta_1t = beta_1 / t`.
pub fn bound_corollary1(rec: &RegretRecord, ctx: &BoundContext, hp: &HyperParams) -> Result<f64> {
    ctx.validate()?;
    let mut failures = Vec::new();
    let (beta1, mu, g) = common_checks(hp, &mut failures)?;
    if !matches!(hp.beta1, Schedule::Inv { .. }) {
        failures.push(format!("beta1 must follow beta1/t, got {}", hp.beta1.kind_name()));
    }
    let alpha = inv_sqrt_alpha(hp, &mut failures);
    require("convex regret bound with beta1/t", failures)?;
    let t = rec.t.max(1) as f64;
    let damp = 1.0 - beta1 * (1.0 - mu);
    let grad_term = (3.0 * beta1 * beta1 + 2.0 * (1.0 - beta1) * (1.0 - g) * mu * mu) * alpha * (1.0 + t.ln()).sqrt()
        / (2.0 * (1.0 - beta1) * damp * (1.0 - g) * (1.0 - hp.beta2).sqrt())
        * rec.sum_grad_norms();
    let d_term = ctx.d_inf * ctx.d_inf * t.sqrt() * (1.0 + 2.0 * (1.0 - mu) * beta1) / (2.0 * alpha * damp) * rec.sum_vhat_sqrt;
    Ok(grad_term + d_term)
}

/// Strongly convex bound with `alpha_t = alpha / t`, `beta_1t = beta_1 / t^2`,
/// and the initial step large enough relative to the observed growth of `vhat`.
pub fn bound_theorem3(rec: &RegretRecord, ctx: &BoundContext, hp: &HyperParams) -> Result<f64> {
    ctx.validate()?;
    let mut failures = Vec::new();
    let (beta1, mu, g) = common_checks(hp, &mut failures)?;
    if !matches!(hp.beta1, Schedule::InvSquare { .. }) {
        failures.push(format!("beta1 must follow beta1/t^2, got {}", hp.beta1.kind_name()));
    }
    let alpha = match hp.alpha {
        Schedule::Inv { base } => base,
        ref other => {
            failures.push(format!("alpha must follow alpha/t, got {}", other.kind_name()));
            0.0
        }
    };
    let damp = 1.0 - beta1 * (1.0 - mu);
    if !(ctx.lambda > 0.0) {
        failures.push("strong convexity modulus lambda must be > 0".into());
    } else {
        let needed = theorem3_min_alpha(rec, beta1, mu, ctx.lambda);
        if alpha < needed {
            failures.push(format!("alpha = {alpha} below the required initial step {needed}"));
        }
    }
    require("strongly convex regret bound", failures)?;
    let t = rec.t.max(1) as f64;
    let grad_term = alpha * ctx.g_1 / (1.0 - hp.beta2).sqrt() * (1.5 * beta1 * beta1 / ((1.0 - beta1) * (1.0 - g)) + mu * mu);
    let d_term = (1.0 - mu) * beta1 * ctx.d_inf * ctx.d_inf / (2.0 * alpha) * rec.sum_vhat_sqrt;
    Ok((grad_term + d_term) * (1.0 + t.ln()) / damp)
}

/// Smallest initial step satisfying the strongly convex bound's hypothesis on
/// the run recorded so far.
pub fn theorem3_min_alpha(rec: &RegretRecord, beta1: f64, mu: f64, lambda: f64) -> f64 {
    rec.max_vhat_increment.max(0.0) / ((1.0 - beta1 * (1.0 - mu)) * lambda)
}

/// AMSGRAD's convex bound with `alpha_t = alpha / sqrt(t)`.
pub fn bound_amsgrad(rec: &RegretRecord, ctx: &BoundContext, hp: &HyperParams) -> Result<f64> {
    ctx.validate()?;
    let beta1 = hp.beta1.at(1)?;
    let g = gamma(hp)?;
    let mut failures = Vec::new();
    if !(g < 1.0) {
        failures.push(format!("gamma = beta1/sqrt(beta2) = {g} must be < 1"));
    }
    let alpha = inv_sqrt_alpha(hp, &mut failures);
    require("AMSGRAD regret bound", failures)?;
    let c = amsgrad_coefficients(alpha, beta1, g);
    Ok(bound_terms(rec, ctx, hp.beta2, c))
}

/// Multipliers of `D^2 sqrt(T) sum vhat_T^{1/2}`, `D^2 sum_t sum_i beta_1t vhat^{1/2}/alpha_t`
/// and `sqrt(1 + log T) / sqrt(1 - beta_2) sum_i |g_{1:T,i}|`.
pub fn arsg_coefficients(alpha: f64, beta1: f64, mu: f64, gamma: f64) -> [f64; 3] {
    let damp = 1.0 - beta1 * (1.0 - mu);
    [
        1.0 / (2.0 * alpha * damp),
        (1.0 - mu) / (2.0 * damp),
        alpha * (3.0 * beta1 * beta1 / (2.0 * (1.0 - beta1) * (1.0 - gamma)) + mu * mu) / damp,
    ]
}

pub fn amsgrad_coefficients(alpha: f64, beta1: f64, gamma: f64) -> [f64; 3] {
    [
        1.0 / (alpha * (1.0 - beta1)),
        1.0 / (2.0 * (1.0 - beta1)),
        alpha / ((1.0 - beta1) * (1.0 - beta1) * (1.0 - gamma)),
    ]
}

fn bound_terms(rec: &RegretRecord, ctx: &BoundContext, beta2: f64, c: [f64; 3]) -> f64 {
    let t = rec.t.max(1) as f64;
    let d2 = ctx.d_inf * ctx.d_inf;
    c[0] * d2 * t.sqrt() * rec.sum_vhat_sqrt
        + c[1] * d2 * rec.weighted_vhat
        + c[2] * (1.0 + t.ln()).sqrt() / (1.0 - beta2).sqrt() * rec.sum_grad_norms()
}

/// The three bound columns of `regret.csv`; `None` where preconditions fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BoundRow {
    pub thm2: Option<f64>,
    pub cor1: Option<f64>,
    pub thm3: Option<f64>,
}

impl BoundRow {
    pub fn evaluate(rec: &RegretRecord, ctx: &BoundContext, hp: &HyperParams) -> Self {
        BoundRow {
            thm2: bound_theorem2(rec, ctx, hp).ok(),
            cor1: bound_corollary1(rec, ctx, hp).ok(),
            thm3: bound_theorem3(rec, ctx, hp).ok(),
        }
    }
}

/// Streams `t,f_xt,f_xstar,R_T,bound_thm2,bound_cor1,bound_thm3` rows.
pub struct RegretCsv<W: Write> {
    out: csv::Writer<W>,
}

impl RegretCsv<std::fs::File> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(std::fs::File::create(path)?)
    }
}

impl<W: Write> RegretCsv<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "f_xt", "f_xstar", "R_T", "bound_thm2", "bound_cor1", "bound_thm3"])?;
        Ok(RegretCsv { out })
    }

    /// Appends the latest iteration of `rec`.
    pub fn write(&mut self, rec: &RegretRecord, bounds: BoundRow) -> Result<()> {
        let last = |v: &Vec<f64>| v.last().copied().unwrap_or(f64::NAN);
        let opt = |b: Option<f64>| b.map(|v| format!("{v:?}")).unwrap_or_default();
        self.out.write_record([
            rec.t.to_string(),
            format!("{:?}", last(&rec.f_xt)),
            format!("{:?}", last(&rec.f_xstar)),
            format!("{:?}", rec.regret),
            opt(bounds.thm2),
            opt(bounds.cor1),
            opt(bounds.thm3),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Minimizer of the deterministic objective over `feasible` by projected
/// gradient descent with Nesterov momentum, adaptive restart and backtracking,
/// stopped when the projected-gradient mapping has norm `<= tol`.
pub fn reference_minimizer(problem: &Problem, feasible: &FeasibleBox, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if let Problem::Quad(q) = problem {
        return Ok(clamp_into(&q.x_star, feasible));
    }
    let mut x = clamp_into(&problem.initial_point(), feasible);
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut lip = 1.0f64;
    let (mut fx, _) = problem.full_eval(&x)?;
    let mut restarted = false;
    for _ in 0..max_iter {
        let (fy, gy) = problem.full_eval(&y)?;
        let mut next;
        let mut fnext;
        loop {
            let trial: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - g / lip).collect();
            next = clamp_into(&trial, feasible);
            fnext = problem.full_eval(&next)?.0;
            let diff: Vec<f64> = next.iter().zip(&y).map(|(a, b)| a - b).collect();
            let model = fy + diff.iter().zip(&gy).map(|(d, g)| d * g).sum::<f64>()
                + 0.5 * lip * diff.iter().map(|d| d * d).sum::<f64>();
            if fnext <= model + 1e-12 * fy.abs().max(1.0) || lip > 1e16 {
                break;
            }
            lip *= 2.0;
        }
        let mapping = y.iter().zip(&next).map(|(a, b)| (lip * (a - b)).powi(2)).sum::<f64>().sqrt();
        if mapping <= tol && fnext <= fx {
            return Ok(next);
        }
        if fnext > fx {
            if restarted {
                // A plain gradient step from x no longer decreases f: x is at rounding level.
                return Ok(x);
            }
            // Restart the momentum whenever it stops decreasing the objective.
            restarted = true;
            theta = 1.0;
            y = x.clone();
            continue;
        }
        restarted = false;
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let w = (theta - 1.0) / theta_next;
        y = next.iter().zip(&x).map(|(n, o)| n + w * (n - o)).collect();
        x = next;
        fx = fnext;
        theta = theta_next;
        lip *= 0.9;
    }
    let (_, g) = problem.full_eval(&x)?;
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    log::warn!("reference solver stopped after {max_iter} iterations, gradient norm {norm:e}");
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(alpha: f64, beta1: f64) -> StepCoefficients {
        StepCoefficients { alpha, beta1, beta2: 0.99, mu: 0.1, epsilon: 1e-8 }
    }

    #[test]
    fn single_step_regret() {
        let mut rec = RegretRecord::new(&[0.0]);
        rec.observe(&[1.0], 2.5, 0.5, &[1.0], &[0.01], &coeffs(0.1, 0.9)).unwrap();
        assert_eq!(rec.regret, 2.0);
        assert!((rec.sum_vhat_sqrt - 0.1).abs() < 1e-15);
        assert!((rec.weighted_vhat - 0.9).abs() < 1e-12);
        assert_eq!(rec.observed_diameter(), 1.0);
    }

    #[test]
    fn zero_gradients_zero_third_term() {
        let hp = HyperParams {
            alpha: Schedule::InvSqrt { base: 0.1 },
            ..HyperParams::constant(0.1, 0.9, 0.99, 0.2, 1e-8)
        };
        let mut rec = RegretRecord::new(&[0.0, 0.0]);
        for _ in 0..5 {
            rec.observe(&[0.0, 0.0], 0.0, 0.0, &[0.0, 0.0], &[0.0, 0.0], &hp.at(1).unwrap()).unwrap();
        }
        let ctx = BoundContext::from_record(&rec, &FeasibleBox::cube(2, -1.0, 1.0).unwrap(), 0.0);
        assert_eq!(bound_theorem2(&rec, &ctx, &hp).unwrap(), 0.0);
        assert_eq!(rec.regret, 0.0);
    }

    #[test]
    fn violations_listed() {
        let hp = HyperParams::constant(0.1, 0.9, 0.5, 0.05, 1e-8);
        let rec = RegretRecord::new(&[0.0]);
        let ctx = BoundContext::from_record(&rec, &FeasibleBox::unbounded(1), 0.0);
        match bound_theorem2(&rec, &ctx, &hp) {
            Err(Error::PreconditionViolated { failures, .. }) => assert_eq!(failures.len(), 3, "{failures:?}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(bound_theorem3(&rec, &ctx, &hp), Err(Error::PreconditionViolated { .. })));
    }
}

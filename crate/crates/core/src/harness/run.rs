use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ResolvedRun, RunConfig};
use crate::error::{Error, Result};
use crate::obsb::{BoostEvent, ObsbPolicy};
use crate::optim::{HyperParams, OptimizerState, StepCoefficients};
use crate::problems::{Batch, Problem};

pub const METRICS_FILE: &str = "metrics.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// One line of `metrics.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub t: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub mu: f64,
    pub wall_ns: u128,
    pub test_acc: Option<f64>,
}

/// Everything a step observer may look at.
pub struct StepView<'a> {
    pub t: u64,
    /// The iterate the gradient was taken at.
    pub x: &'a [f64],
    pub batch: &'a Batch,
    pub loss: f64,
    pub grad: &'a [f64],
    pub coefficients: &'a StepCoefficients,
    /// State after the step (`v_hat` is the preconditioner the step used).
    pub next: &'a OptimizerState,
    pub problem: &'a Problem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub t: u64,
    pub reason: String,
}

/// In-memory result of a run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub losses: Vec<f64>,
    pub final_x: Vec<f64>,
    pub events: Vec<BoostEvent>,
    pub abort: Option<AbortRecord>,
    pub final_test_acc: Option<f64>,
    /// Test accuracies at the evaluation points, `(t, acc)`.
    pub test_acc: Vec<(u64, f64)>,
    /// Full-data training objective at the evaluation points, `(t, loss)`.
    pub train_loss: Vec<(u64, f64)>,
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        self.abort.is_some()
    }

    /// Full-data training objective after the last iteration; infinite for aborted runs.
    pub fn final_train_loss(&self) -> f64 {
        match self.train_loss.last() {
            Some(&(_, l)) if !self.diverged() => l,
            _ => f64::INFINITY,
        }
    }

    /// Mean of the last `window` minibatch losses; infinite for aborted runs.
    pub fn final_loss(&self, window: usize) -> f64 {
        if self.diverged() || self.losses.is_empty() {
            return f64::INFINITY;
        }
        let k = window.clamp(1, self.losses.len());
        self.losses[self.losses.len() - k..].iter().sum::<f64>() / k as f64
    }
}

/// Trailing means of `losses` over `window` iterations (shorter at the start).
pub fn smoothed(losses: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(losses.len());
    let mut sum = 0.0;
    for (i, l) in losses.iter().enumerate() {
        sum += l;
        if i >= window {
            sum -= losses[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Runs the seeded training loop, calling `observe` after each step and
/// `record` with each metrics row.
pub fn train_loop(
    run: &ResolvedRun,
    mut record: impl FnMut(&MetricsRow) -> Result<()>,
    mut observe: impl FnMut(&StepView) -> Result<()>,
) -> Result<RunOutcome> {
    let cfg = &run.config;
    let kind = cfg.optimizer;
    let mut policy = if cfg.obsb.enabled {
        Some(ObsbPolicy::new(cfg.obsb.clone(), cfg.hyper.alpha.clone())?)
    } else {
        None
    };
    let static_hp: HyperParams = cfg.initial_hyper();
    let mut state = OptimizerState::new(run.x0.clone(), static_hp.epsilon);
    let mut batches = run.problem.batches(cfg.seed)?;
    let has_test = run.problem.has_test_set();
    let start = Instant::now();
    let mut out = RunOutcome {
        losses: Vec::with_capacity(cfg.iterations.min(1 << 24) as usize),
        final_x: Vec::new(),
        events: Vec::new(),
        abort: None,
        final_test_acc: None,
        test_acc: Vec::new(),
        train_loss: Vec::new(),
    };
    for t in 1..=cfg.iterations {
        let batch = batches.next_batch();
        let (loss, grad) = run.problem.eval(&state.x, &batch)?;
        if let Some(reason) = non_finite(loss, &grad) {
            log::warn!("run diverged at t = {t}: {reason}");
            out.abort = Some(AbortRecord { t, reason });
            break;
        }
        let hp = policy.as_ref().map_or(&static_hp, |p| p.hyper_params());
        let mut c = hp.at(t)?;
        c.alpha *= cfg.drop_factor(t);
        let next = kind.apply(&state, &grad, &c, &run.feasible)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        observe(&StepView {
            t,
            x: &state.x,
            batch: &batch,
            loss,
            grad: &grad,
            coefficients: &c,
            next: &next,
            problem: &run.problem,
        })?;
        state = next;
        let eval_point = t % cfg.eval_every == 0 || t == cfg.iterations;
        if eval_point {
            out.train_loss.push((t, run.problem.full_eval(&state.x)?.0));
        }
        let test_acc = if has_test && eval_point {
            let acc = run.problem.test_accuracy(&state.x);
            if let Some(a) = acc {
                out.test_acc.push((t, a));
            }
            acc
        } else {
            None
        };
        record(&MetricsRow {
            t,
            loss,
            grad_norm,
            alpha: c.alpha,
            mu: kind.effective_mu(&c),
            wall_ns: start.elapsed().as_nanos(),
            test_acc,
        })?;
        out.losses.push(loss);
        if let Some(p) = policy.as_mut() {
            let dropped = cfg.obsb.boost_on_decay && cfg.step_drops.iter().any(|d| d.at == t + 1);
            let event = if dropped { p.force_boost(t)? } else { p.observe(t, loss)? };
            if let Some(e) = event {
                log::info!("observation boost at t = {}: mu {} -> {}, alpha x{:.4}", e.t, e.old_mu, e.new_mu, e.alpha_factor);
            }
        }
    }
    out.events = policy.map(|p| p.events).unwrap_or_default();
    out.final_test_acc = out.test_acc.last().map(|p| p.1);
    out.final_x = state.x;
    Ok(out)
}

fn non_finite(loss: f64, grad: &[f64]) -> Option<String> {
    if !loss.is_finite() {
        return Some(format!("loss is {loss}"));
    }
    grad.iter()
        .position(|g| !g.is_finite())
        .map(|i| format!("gradient component {i} is {}", grad[i]))
}

/// Incremental `metrics.csv` writer; every row is flushed so a partial file
/// always holds the header and complete rows only.
pub struct MetricsWriter {
    out: BufWriter<File>,
    with_test: bool,
}

impl MetricsWriter {
    pub fn create(path: &Path, with_test: bool) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = if with_test { "t,loss,grad_norm,alpha,mu,wall_ns,test_acc" } else { "t,loss,grad_norm,alpha,mu,wall_ns" };
        writeln!(out, "{header}")?;
        out.flush()?;
        Ok(MetricsWriter { out, with_test })
    }

    pub fn write(&mut self, r: &MetricsRow) -> Result<()> {
        write!(self.out, "{},{:?},{:?},{:?},{:?},{}", r.t, r.loss, r.grad_norm, r.alpha, r.mu, r.wall_ns)?;
        if self.with_test {
            match r.test_acc {
                Some(a) => write!(self.out, ",{a:?}")?,
                None => write!(self.out, ",")?,
            }
        }
        writeln!(self.out)?;
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: RunConfig,
    pub version: String,
    pub problem: ProblemSummary,
    pub obsb_events: Vec<BoostEvent>,
    pub abort: Option<AbortRecord>,
    pub iterations_completed: u64,
    pub final_loss: Option<f64>,
    pub final_test_acc: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub kind: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub examples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl ProblemSummary {
    pub fn of(p: &Problem) -> Self {
        let (examples, classes, kappa) = match p {
            Problem::Quad(q) => (None, None, q.kappa()),
            Problem::Logreg(l) => (Some(l.data.n), Some(l.data.classes), None),
            Problem::Mlp(m) => (Some(m.data.n), Some(m.data.classes), None),
        };
        ProblemSummary { kind: p.name().into(), dim: p.dim(), examples, classes, kappa }
    }
}

/// Files written by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub outcome: RunOutcome,
    pub metadata: RunMetadata,
}

/// Runs `cfg` and writes `metrics.csv` and `metadata.json` into `cfg.out_dir`.
/// A divergent run still writes both files; its metadata carries the abort record.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunArtifacts> {
    let run = cfg.resolve()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut writer = MetricsWriter::create(&cfg.out_dir.join(METRICS_FILE), run.problem.has_test_set())?;
    let outcome = train_loop(&run, |row| writer.write(row), |_| Ok(()))?;
    let metadata = RunMetadata {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        problem: ProblemSummary::of(&run.problem),
        obsb_events: outcome.events.clone(),
        abort: outcome.abort.clone(),
        iterations_completed: outcome.losses.len() as u64,
        final_loss: outcome.losses.last().copied(),
        final_test_acc: outcome.final_test_acc,
    };
    write_json(&cfg.out_dir.join(METADATA_FILE), &metadata)?;
    Ok(RunArtifacts { dir: cfg.out_dir.clone(), outcome, metadata })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

/// Runs `cfg` in memory, without touching the file system.
pub fn run_in_memory(cfg: &RunConfig) -> Result<RunOutcome> {
    let run = cfg.resolve()?;
    train_loop(&run, |_| Ok(()), |_| Ok(()))
}

/// Converts an aborted outcome into the divergence error.
pub fn require_converged(outcome: &RunOutcome) -> Result<()> {
    match &outcome.abort {
        Some(a) => Err(Error::Diverged { t: a.t, reason: a.reason.clone() }),
        None => Ok(()),
    }
}

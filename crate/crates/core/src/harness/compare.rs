use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::run::{run_in_memory, RunOutcome};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct CompareSummary {
    pub label: String,
    /// Full-data training loss at the end of the run.
    pub final_loss: f64,
    /// First evaluation point whose full-data training loss is at or below the target.
    pub iterations_to_target: Option<u64>,
    pub diverged: bool,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub outcomes: Vec<RunOutcome>,
    pub target: f64,
    pub summary: Vec<CompareSummary>,
}

/// First evaluation point `t` of `(t, loss)` pairs with `loss <= target`.
pub fn iterations_to_target(curve: &[(u64, f64)], target: f64) -> Option<u64> {
    curve.iter().find(|p| p.1 <= target).map(|p| p.0)
}

/// Runs every config (same problem and seed required) and summarizes how soon
/// each reaches `target` in full-data training loss; by default the target is
/// the largest final loss among the converged runs, so every converged run
/// has a hitting time.
pub fn compare_optimizers(cfgs: &[RunConfig], target: Option<f64>) -> Result<Comparison> {
    let Some(first) = cfgs.first() else {
        return Err(Error::Config("nothing to compare".into()));
    };
    for c in cfgs {
        if c.problem != first.problem || c.seed != first.seed || c.iterations != first.iterations {
            return Err(Error::Config(format!(
                "mismatched problems: `{}` differs from `{}` in problem, seed or iterations",
                c.label(),
                first.label()
            )));
        }
    }
    let outcomes: Vec<RunOutcome> = cfgs.par_iter().map(run_in_memory).collect::<Result<_>>()?;
    let target = match target {
        Some(t) => t,
        None => outcomes
            .iter()
            .filter(|o| !o.diverged())
            .map(RunOutcome::final_train_loss)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    let labels: Vec<String> = cfgs.iter().map(RunConfig::label).collect();
    let summary = labels
        .iter()
        .zip(&outcomes)
        .map(|(label, o)| CompareSummary {
            label: label.clone(),
            final_loss: o.final_train_loss(),
            iterations_to_target: if o.diverged() { None } else { iterations_to_target(&o.train_loss, target) },
            diverged: o.diverged(),
        })
        .collect();
    Ok(Comparison { labels, outcomes, target, summary })
}

impl Comparison {
    /// `t,<label 1>,<label 2>,...` with per-iteration training losses; runs that
    /// stopped early leave their cells empty.
    pub fn write_merged(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        let rows = self.outcomes.iter().map(|o| o.losses.len()).max().unwrap_or(0);
        for t in 0..rows {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(self.outcomes.iter().map(|o| o.losses.get(t).map(|l| format!("{l:?}")).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["label", "final_loss", "iterations_to_target", "target", "diverged"])?;
        for s in &self.summary {
            w.write_record([
                s.label.clone(),
                format!("{:?}", s.final_loss),
                s.iterations_to_target.map(|t| t.to_string()).unwrap_or_default(),
                format!("{:?}", self.target),
                s.diverged.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

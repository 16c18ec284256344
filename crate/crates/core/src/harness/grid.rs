use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::run::{run_experiment, run_in_memory, RunOutcome};
use crate::error::{Error, Result};

/// How the best grid entry is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Selection {
    /// Smallest full-data training loss at the end of the run.
    FinalLoss,
    /// Largest mean test accuracy over the last `last_k` evaluations.
    TestAccuracy { last_k: usize },
}

impl Default for Selection {
    fn default() -> Self {
        Selection::FinalLoss
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridEntry {
    pub alpha: f64,
    pub final_loss: f64,
    pub test_acc: Option<f64>,
    pub diverged: bool,
    #[serde(skip)]
    pub outcome: RunOutcome,
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub entries: Vec<GridEntry>,
    pub best: usize,
    pub best_config: RunConfig,
}

impl GridResult {
    pub fn best_alpha(&self) -> f64 {
        self.entries[self.best].alpha
    }

    pub fn write_table(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["alpha", "final_loss", "test_acc", "diverged", "selected"])?;
        for (i, e) in self.entries.iter().enumerate() {
            w.write_record([
                format!("{:?}", e.alpha),
                format!("{:?}", e.final_loss),
                e.test_acc.map(|a| format!("{a:?}")).unwrap_or_default(),
                e.diverged.to_string(),
                (i == self.best).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `template` once per step size (same seed), in parallel. With
/// `write_runs`, each run writes its files under `out_dir/alpha_<index>`.
pub fn grid_search(template: &RunConfig, alphas: &[f64], selection: Selection, write_runs: bool) -> Result<GridResult> {
    if alphas.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    let configs = alphas
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let mut cfg = template.with_alpha(a)?;
            cfg.out_dir = template.out_dir.join(format!("alpha_{i:02}"));
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<RunOutcome> = configs
        .par_iter()
        .map(|cfg| if write_runs { run_experiment(cfg).map(|a| a.outcome) } else { run_in_memory(cfg) })
        .collect::<Result<_>>()?;
    let entries: Vec<GridEntry> = alphas
        .iter()
        .zip(outcomes)
        .map(|(&alpha, outcome)| GridEntry {
            alpha,
            final_loss: outcome.final_train_loss(),
            test_acc: mean_last_accuracy(&outcome, selection),
            diverged: outcome.diverged(),
            outcome,
        })
        .collect();
    let score = |e: &GridEntry| match selection {
        Selection::FinalLoss => e.final_loss,
        Selection::TestAccuracy { .. } => -e.test_acc.unwrap_or(f64::NEG_INFINITY),
    };
    let best = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.diverged && score(e).is_finite())
        .min_by(|a, b| score(a.1).total_cmp(&score(b.1)))
        .map(|(i, _)| i)
        .ok_or(Error::AllDiverged)?;
    let best_config = configs[best].clone();
    Ok(GridResult { entries, best, best_config })
}

fn mean_last_accuracy(outcome: &RunOutcome, selection: Selection) -> Option<f64> {
    let k = match selection {
        Selection::TestAccuracy { last_k } => last_k.max(1),
        Selection::FinalLoss => 1,
    };
    if outcome.test_acc.is_empty() || outcome.diverged() {
        return None;
    }
    let tail = &outcome.test_acc[outcome.test_acc.len().saturating_sub(k)..];
    Some(tail.iter().map(|p| p.1).sum::<f64>() / tail.len() as f64)
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obsb::ObsbConfig;
use crate::optim::{FeasibleBox, HyperParams, OptimizerKind, Schedule};
use crate::problems::{
    read_csv_dataset, synthetic_split, Dataset, LogRegProblem, MlpProblem, Problem, QuadProblem, Standardization,
};
use crate::rng::{stream, Stream};

/// One training run, as read from a JSON file. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub problem: ProblemSpec,
    pub optimizer: OptimizerKind,
    pub hyper: HyperParams,
    /// Step-size drops: from iteration `at` on, `alpha` is multiplied by `factor`.
    #[serde(default)]
    pub step_drops: Vec<StepDrop>,
    #[serde(default)]
    pub obsb: ObsbConfig,
    pub iterations: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Box constraint `[lower, upper]` on every coordinate (adaptive methods only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible_box: Option<BoxSpec>,
    /// Test-accuracy cadence, in iterations.
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_eval_every() -> u64 {
    200
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDrop {
    pub at: u64,
    pub factor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Quad(QuadSpec),
    Logreg(SyntheticSpec),
    Mlp(SyntheticSpec),
    Csv(CsvSpec),
}

/// Diagonal quadratic. Give `eigenvalues` explicitly or `dim` + `kappa`
/// (linearly spaced from `lambda_min` to `kappa * lambda_min`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default = "one")]
    pub lambda_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub sigma: f64,
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    /// Defaults to `x* + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

/// Gaussian-cluster classification data (see [`crate::problems::synthetic_dataset`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub separation: f64,
    #[serde(default)]
    pub test_n: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub l2_weight: f64,
    /// Hidden width; used by the `mlp` kind only.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
}

fn default_batch() -> usize {
    crate::problems::logreg::DEFAULT_BATCH
}

fn default_hidden() -> usize {
    32
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[default]
    Logreg,
    Mlp,
}

/// Labelled CSV data (`label,f1,...,fd`, no header), standardized per column.
/// A test file, if given, is standardized with the training statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSpec {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_path: Option<PathBuf>,
    #[serde(default)]
    pub model: Model,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub l2_weight: f64,
}

/// A config with its problem materialized.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub problem: Problem,
    pub x0: Vec<f64>,
    pub feasible: FeasibleBox,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        // Relative data paths are taken relative to the config file.
        if let (ProblemSpec::Csv(spec), Some(dir)) = (&mut cfg.problem, path.parent()) {
            for p in std::iter::once(&mut spec.path).chain(spec.test_path.as_mut()) {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.optimizer.to_string())
    }

    /// Replaces the initial step size, keeping the schedule's shape.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.hyper.alpha = cfg.hyper.alpha.with_base(alpha)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        self.hyper.validate()?;
        for d in &self.step_drops {
            if d.at == 0 || !(d.factor > 0.0 && d.factor.is_finite()) {
                return Err(Error::Config(format!("invalid step drop {d:?}")));
            }
        }
        if self.obsb.enabled {
            self.obsb.validate()?;
            if self.optimizer != OptimizerKind::Arsg {
                return Err(Error::Config("the observation boost applies to arsg only".into()));
            }
        }
        if let Some(b) = &self.feasible_box {
            if !self.optimizer.is_adaptive() {
                return Err(Error::Config(format!("{} does not project onto a feasible set", self.optimizer)));
            }
            if !(b.lower <= b.upper) {
                return Err(Error::EmptyBox { index: 0 });
            }
        }
        if let ProblemSpec::Csv(spec) = &self.problem {
            for p in std::iter::once(&spec.path).chain(spec.test_path.as_ref()) {
                if !p.exists() {
                    return Err(Error::Io(std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        format!("dataset {} not found", p.display()),
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validates and builds the problem, initial point and feasible set.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        self.validate()?;
        let problem = self.problem.build(self.seed)?;
        let mut x0 = match &self.problem {
            ProblemSpec::Quad(QuadSpec { x0: Some(x0), .. }) => x0.clone(),
            _ => problem.initial_point(),
        };
        if x0.len() != problem.dim() {
            return Err(Error::DimensionMismatch { expected: problem.dim(), found: x0.len() });
        }
        let feasible = match self.feasible_box {
            Some(b) => FeasibleBox::cube(problem.dim(), b.lower, b.upper)?,
            None => FeasibleBox::unbounded(problem.dim()),
        };
        x0 = crate::optim::clamp_into(&x0, &feasible);
        Ok(ResolvedRun { config: self.clone(), problem, x0, feasible })
    }

    /// Hyper-parameters in force at the start: the observation boost, when
    /// enabled, supplies `beta1`, `beta2`, `epsilon` and the initial `mu`.
    pub fn initial_hyper(&self) -> HyperParams {
        if self.obsb.enabled {
            self.obsb.hyper_params(self.hyper.alpha.clone())
        } else {
            self.hyper.clone()
        }
    }

    /// Product of the drop factors in force at iteration `t`.
    pub fn drop_factor(&self, t: u64) -> f64 {
        self.step_drops.iter().filter(|d| d.at <= t).map(|d| d.factor).product()
    }
}

impl ProblemSpec {
    pub fn build(&self, seed: u64) -> Result<Problem> {
        match self {
            ProblemSpec::Quad(q) => {
                let eigenvalues = match (&q.eigenvalues, q.dim, q.kappa) {
                    (Some(e), None, None) => e.clone(),
                    (None, Some(dim), Some(kappa)) if dim >= 1 && kappa >= 1.0 => {
                        QuadProblem::linear_spectrum(dim, q.lambda_min, kappa)
                    }
                    _ => {
                        return Err(Error::Config(
                            "quad problem needs either `eigenvalues` or both `dim` and `kappa` >= 1".into(),
                        ))
                    }
                };
                let x_star = q.x_star.clone().unwrap_or_else(|| vec![0.0; eigenvalues.len()]);
                Ok(Problem::Quad(QuadProblem::new(eigenvalues, x_star, q.sigma)?))
            }
            ProblemSpec::Logreg(s) | ProblemSpec::Mlp(s) => {
                let (train, test) =
                    synthetic_split(s.n, s.test_n, s.d, s.classes, s.separation, &mut stream(seed, Stream::Data))?;
                let mut base = LogRegProblem::new(train, s.batch_size, s.l2_weight, seed)?;
                base.test = test;
                if matches!(self, ProblemSpec::Mlp(_)) {
                    Ok(Problem::Mlp(MlpProblem::new(base, s.hidden)?))
                } else {
                    Ok(Problem::Logreg(base))
                }
            }
            ProblemSpec::Csv(c) => {
                let mut train = read_csv_dataset(&c.path, None)?;
                let scaler = Standardization::fit(&train);
                let test = c
                    .test_path
                    .as_ref()
                    .map(|p| -> Result<Dataset> {
                        let mut t = read_csv_dataset(p, Some(train.classes))?;
                        if t.d != train.d {
                            return Err(Error::DimensionMismatch { expected: train.d, found: t.d });
                        }
                        scaler.apply(&mut t);
                        Ok(t)
                    })
                    .transpose()?;
                scaler.apply(&mut train);
                let mut base = LogRegProblem::new(train, c.batch_size, c.l2_weight, seed)?;
                base.test = test;
                match c.model {
                    Model::Logreg => Ok(Problem::Logreg(base)),
                    Model::Mlp => Ok(Problem::Mlp(MlpProblem::new(base, c.hidden)?)),
                }
            }
        }
    }
}

/// Starting point for hand-written configs.
pub fn example_config() -> RunConfig {
    RunConfig {
        name: None,
        problem: ProblemSpec::Logreg(SyntheticSpec {
            n: 2000,
            d: 50,
            classes: 10,
            separation: 0.3,
            test_n: 500,
            batch_size: 32,
            l2_weight: 1e-3,
            hidden: default_hidden(),
        }),
        optimizer: OptimizerKind::Arsg,
        hyper: HyperParams {
            alpha: Schedule::constant(0.01),
            ..HyperParams::constant(0.01, 0.999, 0.99, 0.1, 1e-8)
        },
        step_drops: Vec::new(),
        obsb: ObsbConfig::default(),
        iterations: 10_000,
        seed: 0,
        out_dir: default_out_dir(),
        feasible_box: None,
        eval_every: default_eval_every(),
    }
}

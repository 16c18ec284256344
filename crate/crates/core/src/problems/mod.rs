//! Objectives and stochastic gradient oracles.
//!
//! Each training step draws a [`Batch`] (gradient noise for quadratics, example
//! indices otherwise) and evaluates the online loss `f_t` at any point on it, so
//! `f_t(x_t)` and `f_t(x*)` can be compared on the same draw.

pub mod data;
pub mod logreg;
pub mod mlp;
pub mod quad;

use serde::{Deserialize, Serialize};

pub use data::{read_csv_dataset, synthetic_dataset, synthetic_split, Dataset, MinibatchSampler, Standardization};
pub use logreg::{
    gen_synthetic_classification, load_csv_dataset, logreg_accuracy, logreg_batch_grad, logreg_loss,
    logreg_minibatch_grad, LogRegProblem,
};
pub use mlp::{mlp_accuracy, mlp_batch_grad, mlp_loss, mlp_minibatch_grad, MlpLayout, MlpProblem};
pub use quad::{quad_grad, quad_loss, QuadProblem};

use crate::error::Result;
use crate::rng::{stream, Rng, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    Quad(QuadProblem),
    Logreg(LogRegProblem),
    Mlp(MlpProblem),
}

/// The randomness behind one online loss `f_t`.
#[derive(Clone, Debug, PartialEq)]
pub enum Batch {
    Noise(Vec<f64>),
    Indices(Vec<usize>),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Quad(p) => p.dim(),
            Problem::Logreg(p) => p.dim(),
            Problem::Mlp(p) => p.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Quad(_) => "quad",
            Problem::Logreg(_) => "logreg",
            Problem::Mlp(_) => "mlp",
        }
    }

    /// `x* + 1` for quadratics (unit error in every eigen-direction), zeros for
    /// logistic regression, He-initialized weights for the MLP.
    pub fn initial_point(&self) -> Vec<f64> {
        match self {
            Problem::Quad(p) => p.x_star.iter().map(|v| v + 1.0).collect(),
            Problem::Logreg(p) => p.initial_point(),
            Problem::Mlp(p) => p.initial_point(),
        }
    }

    /// `(f_t(x), grad f_t(x))` for the online loss selected by `batch`.
    pub fn eval(&self, x: &[f64], batch: &Batch) -> Result<(f64, Vec<f64>)> {
        match (self, batch) {
            (Problem::Quad(p), Batch::Noise(n)) => {
                check_len(p.dim(), x.len())?;
                check_len(p.dim(), n.len())?;
                Ok((p.loss_with_noise(x, n), p.grad_with_noise(x, n)))
            }
            (Problem::Logreg(p), Batch::Indices(b)) => logreg_batch_grad(p, x, b),
            (Problem::Mlp(p), Batch::Indices(b)) => mlp_batch_grad(p, x, b),
            _ => Err(crate::error::Error::Config(format!("batch kind does not match {} problem", self.name()))),
        }
    }

    /// Deterministic objective: the noise-free quadratic or the full-data empirical risk.
    pub fn full_eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            Problem::Quad(p) => {
                check_len(p.dim(), x.len())?;
                Ok((quad_loss(p, x), p.exact_grad(x)))
            }
            Problem::Logreg(p) => logreg_batch_grad(p, x, &p.full_batch()),
            Problem::Mlp(p) => mlp_batch_grad(p, x, &p.full_batch()),
        }
    }

    pub fn test_accuracy(&self, x: &[f64]) -> Option<f64> {
        match self {
            Problem::Quad(_) => None,
            Problem::Logreg(p) => p.test.as_ref().map(|t| logreg_accuracy(x, t)),
            Problem::Mlp(p) => p.test.as_ref().map(|t| mlp_accuracy(p, x, t)),
        }
    }

    pub fn has_test_set(&self) -> bool {
        match self {
            Problem::Quad(_) => false,
            Problem::Logreg(p) => p.test.is_some(),
            Problem::Mlp(p) => p.test.is_some(),
        }
    }

    /// Strong convexity modulus when one is known.
    pub fn strong_convexity(&self) -> Option<f64> {
        match self {
            Problem::Quad(p) => p.eigenvalues.iter().copied().reduce(f64::min).filter(|l| *l > 0.0),
            Problem::Logreg(p) => p.strong_convexity(),
            Problem::Mlp(_) => None,
        }
    }

    pub fn batches(&self, seed: u64) -> Result<BatchStream> {
        let inner = match self {
            Problem::Quad(p) => BatchSource::Noise { sigma: p.sigma, dim: p.dim(), rng: stream(seed, Stream::GradientNoise) },
            Problem::Logreg(LogRegProblem { data, batch_size, .. }) | Problem::Mlp(MlpProblem { data, batch_size, .. }) => {
                BatchSource::Sampler(MinibatchSampler::new(data.n, *batch_size, stream(seed, Stream::Minibatch))?)
            }
        };
        Ok(BatchStream { inner })
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(crate::error::Error::DimensionMismatch { expected, found })
    }
}

/// Seeded sequence of batches; the same seed replays the same online losses.
#[derive(Clone, Debug)]
pub struct BatchStream {
    inner: BatchSource,
}

#[derive(Clone, Debug)]
enum BatchSource {
    Noise { sigma: f64, dim: usize, rng: Rng },
    Sampler(MinibatchSampler),
}

impl BatchStream {
    pub fn next_batch(&mut self) -> Batch {
        match &mut self.inner {
            BatchSource::Noise { sigma, dim, rng } => Batch::Noise(quad::gaussian_noise(*sigma, *dim, rng)),
            BatchSource::Sampler(s) => Batch::Indices(s.next_batch()),
        }
    }
}

impl Iterator for BatchStream {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        Some(self.next_batch())
    }
}

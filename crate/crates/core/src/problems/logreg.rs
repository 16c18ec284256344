use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::{read_csv_dataset, synthetic_dataset, Dataset, Standardization};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

pub const DEFAULT_BATCH: usize = 32;

/// Multinomial logistic regression with an l2 penalty `l2_weight * |x|^2 / 2`
/// over every parameter (bias included). Parameters are the `C x d` weight
/// matrix row-major followed by the `C` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegProblem {
    pub data: Dataset,
    pub batch_size: usize,
    pub l2_weight: f64,
    pub seed: u64,
    #[serde(default)]
    pub test: Option<Dataset>,
}

impl LogRegProblem {
    pub fn new(data: Dataset, batch_size: usize, l2_weight: f64, seed: u64) -> Result<Self> {
        if batch_size == 0 || batch_size > data.n {
            return Err(Error::Config(format!("minibatch size {batch_size} must lie in [1, {}]", data.n)));
        }
        if !(l2_weight >= 0.0 && l2_weight.is_finite()) {
            return Err(Error::Config(format!("l2 weight {l2_weight} must be finite and >= 0")));
        }
        Ok(LogRegProblem { data, batch_size, l2_weight, seed, test: None })
    }

    pub fn dim(&self) -> usize {
        self.data.classes * (self.data.d + 1)
    }

    /// Strong convexity modulus, when the penalty supplies one.
    pub fn strong_convexity(&self) -> Option<f64> {
        (self.l2_weight > 0.0).then_some(self.l2_weight)
    }

    pub fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    pub fn full_batch(&self) -> Vec<usize> {
        (0..self.data.n).collect()
    }
}

/// Loss and gradient on an exact minibatch of `p.batch_size` examples.
pub fn logreg_minibatch_grad(p: &LogRegProblem, x: &[f64], batch: &[usize]) -> Result<(f64, Vec<f64>)> {
    if batch.len() != p.batch_size {
        return Err(Error::DimensionMismatch { expected: p.batch_size, found: batch.len() });
    }
    logreg_batch_grad(p, x, batch)
}

/// Mean softmax cross-entropy over `batch` plus the l2 term, with its gradient.
/// Any nonempty batch is accepted; the full index set gives the empirical risk.
pub fn logreg_batch_grad(p: &LogRegProblem, x: &[f64], batch: &[usize]) -> Result<(f64, Vec<f64>)> {
    let (d, c) = (p.data.d, p.data.classes);
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: x.len() });
    }
    p.data.check_indices(batch)?;
    let (w, bias) = x.split_at(c * d);
    let mut grad = vec![0.0; x.len()];
    let mut loss = 0.0;
    let mut probs = vec![0.0; c];
    let scale = 1.0 / batch.len() as f64;
    for &i in batch {
        let row = p.data.row(i);
        let y = p.data.labels[i];
        logits(w, bias, row, &mut probs);
        loss += cross_entropy_in_place(&mut probs, y);
        probs[y] -= 1.0;
        let (gw, gb) = grad.split_at_mut(c * d);
        for k in 0..c {
            let r = probs[k] * scale;
            gb[k] += r;
            for (g, f) in gw[k * d..(k + 1) * d].iter_mut().zip(row) {
                *g += r * f;
            }
        }
    }
    loss *= scale;
    add_l2(p.l2_weight, x, &mut loss, &mut grad);
    Ok((loss, grad))
}

pub fn logreg_loss(p: &LogRegProblem, x: &[f64]) -> Result<f64> {
    Ok(logreg_batch_grad(p, x, &p.full_batch())?.0)
}

/// Fraction of `data` whose arg-max logit equals the label.
pub fn logreg_accuracy(x: &[f64], data: &Dataset) -> f64 {
    let (d, c) = (data.d, data.classes);
    let (w, bias) = x.split_at(c * d);
    let mut z = vec![0.0; c];
    let correct = (0..data.n)
        .filter(|&i| {
            logits(w, bias, data.row(i), &mut z);
            argmax(&z) == data.labels[i]
        })
        .count();
    correct as f64 / data.n.max(1) as f64
}

/// Synthetic Gaussian-cluster classification problem with default minibatch
/// size (capped at `n`) and no penalty; callers adjust the public fields.
pub fn gen_synthetic_classification(n: usize, d: usize, classes: usize, separation: f64, seed: u64) -> Result<LogRegProblem> {
    let data = synthetic_dataset(n, d, classes, separation, &mut stream(seed, Stream::Data))?;
    LogRegProblem::new(data, DEFAULT_BATCH.min(n), 0.0, seed)
}

/// Standardized CSV dataset (see [`read_csv_dataset`]) as a logistic problem.
pub fn load_csv_dataset(path: &Path) -> Result<LogRegProblem> {
    let mut data = read_csv_dataset(path, None)?;
    Standardization::fit(&data).apply(&mut data);
    let n = data.n;
    LogRegProblem::new(data, DEFAULT_BATCH.min(n), 0.0, 0)
}

pub(crate) fn logits(w: &[f64], bias: &[f64], row: &[f64], out: &mut [f64]) {
    let d = row.len();
    for (k, z) in out.iter_mut().enumerate() {
        *z = bias[k] + w[k * d..(k + 1) * d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Cross-entropy `lse(z) - z_y`; `z` is overwritten with the softmax probabilities.
pub(crate) fn cross_entropy_in_place(z: &mut [f64], y: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
    let lse = max + sum.ln();
    let loss = lse - z[y];
    for v in z.iter_mut() {
        *v = (*v - lse).exp();
    }
    loss
}

pub(crate) fn add_l2(l2: f64, x: &[f64], loss: &mut f64, grad: &mut [f64]) {
    if l2 > 0.0 {
        *loss += 0.5 * l2 * x.iter().map(|v| v * v).sum::<f64>();
        for (g, v) in grad.iter_mut().zip(x) {
            *g += l2 * v;
        }
    }
}

pub(crate) fn argmax(z: &[f64]) -> usize {
    z.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

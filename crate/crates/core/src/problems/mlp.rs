use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::logreg::{add_l2, argmax, cross_entropy_in_place, LogRegProblem};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// One hidden ReLU layer `d -> hidden -> C` with softmax cross-entropy.
/// Parameters: `W1` (`hidden x d`), `b1`, `W2` (`C x hidden`), `b2`, each
/// matrix row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpProblem {
    pub data: Dataset,
    pub hidden: usize,
    pub batch_size: usize,
    pub l2_weight: f64,
    pub seed: u64,
    #[serde(default)]
    pub test: Option<Dataset>,
}

/// Offsets of the four parameter blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpLayout {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub len: usize,
}

impl MlpProblem {
    pub fn new(base: LogRegProblem, hidden: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Config("hidden layer needs at least one unit".into()));
        }
        Ok(MlpProblem {
            data: base.data,
            hidden,
            batch_size: base.batch_size,
            l2_weight: base.l2_weight,
            seed: base.seed,
            test: base.test,
        })
    }

    pub fn layout(&self) -> MlpLayout {
        let (d, h, c) = (self.data.d, self.hidden, self.data.classes);
        let b1 = h * d;
        let w2 = b1 + h;
        let b2 = w2 + c * h;
        MlpLayout { w1: 0, b1, w2, b2, len: b2 + c }
    }

    pub fn dim(&self) -> usize {
        self.layout().len
    }

    /// He-normal weights from the run's init stream, zero biases.
    pub fn initial_point(&self) -> Vec<f64> {
        let l = self.layout();
        let mut rng = stream(self.seed, Stream::Init);
        let mut x = vec![0.0; l.len];
        let s1 = (2.0 / self.data.d as f64).sqrt();
        let s2 = (2.0 / self.hidden as f64).sqrt();
        for v in &mut x[l.w1..l.b1] {
            *v = s1 * rng.sample::<f64, _>(StandardNormal);
        }
        for v in &mut x[l.w2..l.b2] {
            *v = s2 * rng.sample::<f64, _>(StandardNormal);
        }
        x
    }

    pub fn full_batch(&self) -> Vec<usize> {
        (0..self.data.n).collect()
    }

    fn forward(&self, x: &[f64], row: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        let l = self.layout();
        let d = self.data.d;
        for (j, a) in hidden.iter_mut().enumerate() {
            let pre = x[l.b1 + j] + x[l.w1 + j * d..l.w1 + (j + 1) * d].iter().zip(row).map(|(w, f)| w * f).sum::<f64>();
            *a = pre.max(0.0);
        }
        let h = self.hidden;
        for (k, z) in out.iter_mut().enumerate() {
            *z = x[l.b2 + k] + x[l.w2 + k * h..l.w2 + (k + 1) * h].iter().zip(hidden.iter()).map(|(w, a)| w * a).sum::<f64>();
        }
    }
}

/// Loss and gradient on an exact minibatch of `p.batch_size` examples.
pub fn mlp_minibatch_grad(p: &MlpProblem, x: &[f64], batch: &[usize]) -> Result<(f64, Vec<f64>)> {
    if batch.len() != p.batch_size {
        return Err(Error::DimensionMismatch { expected: p.batch_size, found: batch.len() });
    }
    mlp_batch_grad(p, x, batch)
}

/// Backpropagation through the hidden layer; the ReLU derivative at exactly 0 is taken as 0.
pub fn mlp_batch_grad(p: &MlpProblem, x: &[f64], batch: &[usize]) -> Result<(f64, Vec<f64>)> {
    let l = p.layout();
    if x.len() != l.len {
        return Err(Error::DimensionMismatch { expected: l.len, found: x.len() });
    }
    p.data.check_indices(batch)?;
    let (d, h, c) = (p.data.d, p.hidden, p.data.classes);
    let mut grad = vec![0.0; l.len];
    let mut act = vec![0.0; h];
    let mut z = vec![0.0; c];
    let mut delta_h = vec![0.0; h];
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for &i in batch {
        let row = p.data.row(i);
        p.forward(x, row, &mut act, &mut z);
        loss += cross_entropy_in_place(&mut z, p.data.labels[i]);
        z[p.data.labels[i]] -= 1.0;
        delta_h.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..c {
            let r = z[k] * scale;
            grad[l.b2 + k] += r;
            for j in 0..h {
                grad[l.w2 + k * h + j] += r * act[j];
                delta_h[j] += r * x[l.w2 + k * h + j];
            }
        }
        for j in 0..h {
            if act[j] <= 0.0 {
                continue;
            }
            grad[l.b1 + j] += delta_h[j];
            for (g, f) in grad[l.w1 + j * d..l.w1 + (j + 1) * d].iter_mut().zip(row) {
                *g += delta_h[j] * f;
            }
        }
    }
    loss *= scale;
    add_l2(p.l2_weight, x, &mut loss, &mut grad);
    Ok((loss, grad))
}

pub fn mlp_loss(p: &MlpProblem, x: &[f64]) -> Result<f64> {
    Ok(mlp_batch_grad(p, x, &p.full_batch())?.0)
}

pub fn mlp_accuracy(p: &MlpProblem, x: &[f64], data: &Dataset) -> f64 {
    let mut act = vec![0.0; p.hidden];
    let mut z = vec![0.0; data.classes];
    let correct = (0..data.n)
        .filter(|&i| {
            p.forward(x, data.row(i), &mut act, &mut z);
            argmax(&z) == data.labels[i]
        })
        .count();
    correct as f64 / data.n.max(1) as f64
}

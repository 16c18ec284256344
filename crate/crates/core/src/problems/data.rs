use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Labelled examples, features stored row-major (`n x d`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub n: usize,
    pub d: usize,
    pub classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, d: usize, classes: usize) -> Result<Self> {
        let n = labels.len();
        if features.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, found: features.len() });
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(Error::InvalidLabel { label: l as i64, line: i + 1 });
        }
        Ok(Dataset { features, labels, n, d, classes })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for i in 0..self.n {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.n as f64);
        mean
    }

    pub(crate) fn check_indices(&self, batch: &[usize]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Config("empty minibatch".into()));
        }
        match batch.iter().find(|&&i| i >= self.n) {
            Some(&index) => Err(Error::InvalidIndex { index, n: self.n }),
            None => Ok(()),
        }
    }
}

/// Per-column affine map to zero mean and unit (population) standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn fit(data: &Dataset) -> Self {
        let mean = data.column_means();
        let mut var = vec![0.0; data.d];
        for i in 0..data.n {
            for ((v, x), m) in var.iter_mut().zip(data.row(i)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / data.n as f64).sqrt()).collect();
        Standardization { mean, std }
    }

    /// Constant columns (zero std) map to 0.
    pub fn apply(&self, data: &mut Dataset) {
        for row in data.features.chunks_mut(data.d.max(1)) {
            for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *x = if *s > 0.0 { (*x - m) / s } else { 0.0 };
            }
        }
    }
}

/// Reads `label,feature_1,...,feature_d` rows (no header). Labels must be
/// non-negative integers below `classes` when given; otherwise the class count
/// is `max label + 1`.
pub fn read_csv_dataset(path: &Path, classes: Option<usize>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    let mut width: Option<usize> = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow { line, expected, found: record.len() });
        }
        if expected < 2 {
            return Err(Error::Parse { line, message: "need a label and at least one feature".into() });
        }
        let label: i64 = record[0]
            .parse()
            .map_err(|e| Error::Parse { line, message: format!("label `{}`: {e}", &record[0]) })?;
        if label < 0 || classes.is_some_and(|c| label as usize >= c) {
            return Err(Error::InvalidLabel { label, line });
        }
        raw_labels.push(label as usize);
        for field in record.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|e| Error::Parse { line, message: format!("feature `{field}`: {e}") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line, message: format!("non-finite feature `{field}`") });
            }
            features.push(v);
        }
    }
    let Some(width) = width else {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    };
    let classes = classes.unwrap_or_else(|| raw_labels.iter().max().map_or(1, |m| m + 1));
    Dataset::new(features, raw_labels, width - 1, classes)
}

/// [`synthetic_dataset`] with `n + test_n` examples split into a training
/// set (the first `n`) and a held-out set from the same clusters.
pub fn synthetic_split(n: usize, test_n: usize, d: usize, classes: usize, separation: f64, rng: &mut Rng) -> Result<(Dataset, Option<Dataset>)> {
    let all = synthetic_dataset(n + test_n, d, classes, separation, rng)?;
    if test_n == 0 {
        return Ok((all, None));
    }
    let (train_x, test_x) = all.features.split_at(n * d);
    let (train_y, test_y) = all.labels.split_at(n);
    let train = Dataset::new(train_x.to_vec(), train_y.to_vec(), d, classes)?;
    let test = Dataset::new(test_x.to_vec(), test_y.to_vec(), d, classes)?;
    Ok((train, Some(test)))
}

/// Gaussian class clusters: class means `separation * N(0, I)`, examples
/// `mean_label + N(0, I)`, labels uniform over classes.
pub fn synthetic_dataset(n: usize, d: usize, classes: usize, separation: f64, rng: &mut Rng) -> Result<Dataset> {
    if n == 0 || d == 0 || classes == 0 {
        return Err(Error::Config("synthetic data needs n, d, classes >= 1".into()));
    }
    let means: Vec<f64> = (0..classes * d).map(|_| separation * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random_range(0..classes);
        labels.push(y);
        for j in 0..d {
            features.push(means[y * d + j] + rng.sample::<f64, _>(StandardNormal));
        }
    }
    Dataset::new(features, labels, d, classes)
}

/// Draws minibatches without replacement inside an epoch and reshuffles at
/// each epoch boundary; a trailing partial batch is dropped.
#[derive(Clone, Debug)]
pub struct MinibatchSampler {
    order: Vec<usize>,
    batch: usize,
    pos: usize,
    rng: Rng,
}

impl MinibatchSampler {
    pub fn new(n: usize, batch: usize, rng: Rng) -> Result<Self> {
        if batch == 0 || batch > n {
            return Err(Error::Config(format!("minibatch size {batch} must lie in [1, {n}]")));
        }
        let mut s = MinibatchSampler { order: (0..n).collect(), batch, pos: 0, rng };
        s.order.shuffle(&mut s.rng);
        Ok(s)
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.pos + self.batch > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let out = self.order[self.pos..self.pos + self.batch].to_vec();
        self.pos += self.batch;
        out
    }
}

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// `Phi(x) = 1/2 (x - x*)^T diag(lambda) (x - x*)`, observed through gradients
/// corrupted by i.i.d. Gaussian noise of standard deviation `sigma` per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadProblem {
    pub eigenvalues: Vec<f64>,
    pub x_star: Vec<f64>,
    pub sigma: f64,
}

impl QuadProblem {
    pub fn new(eigenvalues: Vec<f64>, x_star: Vec<f64>, sigma: f64) -> Result<Self> {
        if eigenvalues.len() != x_star.len() {
            return Err(Error::DimensionMismatch { expected: eigenvalues.len(), found: x_star.len() });
        }
        if eigenvalues.is_empty() {
            return Err(Error::Config("quadratic needs at least one eigenvalue".into()));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) || eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::Config("quadratic parameters must be finite, sigma >= 0".into()));
        }
        Ok(QuadProblem { eigenvalues, x_star, sigma })
    }

    /// `dim` eigenvalues spaced linearly from `lambda_min` to `kappa * lambda_min`.
    pub fn linear_spectrum(dim: usize, lambda_min: f64, kappa: f64) -> Vec<f64> {
        crate::dynsys::linspace(lambda_min, lambda_min * kappa, dim)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `lambda_max / lambda_min`, when every eigenvalue is positive.
    pub fn kappa(&self) -> Option<f64> {
        let min = self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min > 0.0).then(|| max / min)
    }

    pub fn draw_noise(&self, rng: &mut Rng) -> Vec<f64> {
        gaussian_noise(self.sigma, self.dim(), rng)
    }

    pub fn exact_grad(&self, x: &[f64]) -> Vec<f64> {
        self.eigenvalues.iter().zip(x.iter().zip(&self.x_star)).map(|(l, (xi, si))| l * (xi - si)).collect()
    }

    /// Online loss `Phi(x) + noise . (x - x*)`, whose gradient is the noisy observation.
    pub fn loss_with_noise(&self, x: &[f64], noise: &[f64]) -> f64 {
        quad_loss(self, x) + noise.iter().zip(x.iter().zip(&self.x_star)).map(|(n, (xi, si))| n * (xi - si)).sum::<f64>()
    }

    pub fn grad_with_noise(&self, x: &[f64], noise: &[f64]) -> Vec<f64> {
        let mut g = self.exact_grad(x);
        for (gi, n) in g.iter_mut().zip(noise) {
            *gi += n;
        }
        g
    }
}

pub(crate) fn gaussian_noise(sigma: f64, dim: usize, rng: &mut Rng) -> Vec<f64> {
    (0..dim).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn quad_loss(p: &QuadProblem, x: &[f64]) -> f64 {
    0.5 * p
        .eigenvalues
        .iter()
        .zip(x.iter().zip(&p.x_star))
        .map(|(l, (xi, si))| l * (xi - si) * (xi - si))
        .sum::<f64>()
}

/// `diag(lambda) (x - x*) + sigma z`, `z ~ N(0, I)` drawn from `rng`.
pub fn quad_grad(p: &QuadProblem, x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: x.len() });
    }
    let noise = p.draw_noise(rng);
    Ok(p.grad_with_noise(x, &noise))
}

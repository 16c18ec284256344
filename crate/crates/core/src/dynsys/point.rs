use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviation of the per-direction gradient error coefficient;
/// the error itself is `sigma * N(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("noise sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(NoiseModel { sigma })
    }
}

/// Shift applied to `tau` when the gain matrix is defective (double root).
pub const DEFECT_PERTURBATION: f64 = 1e-12;

const IMAG_TOLERANCE: f64 = 1e-9;

/// The linear system propagating `[alpha * momentum, error]` along one
/// Hessian eigen-direction with `tau = alpha * lambda`:
///
/// ```text
/// s_{t+1} = A s_t + b alpha delta_t
/// A = [[beta, (1-beta) tau], [-beta (1-mu), 1 - (1 - beta (1-mu)) tau]]
/// b = [1 - beta, -(1 - beta (1-mu))]
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct DynSysPoint {
    pub beta: f64,
    pub mu: f64,
    /// Curvature-step product; may differ from the requested value by
    /// [`DEFECT_PERTURBATION`] at a defective point.
    pub tau: f64,
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub rho: f64,
    pub r1: Complex64,
    pub r2: Complex64,
    /// Unit eigenvectors, phase-fixed so the first non-negligible component is real positive.
    pub w1: [Complex64; 2],
    pub w2: [Complex64; 2],
    /// Coordinates of `b` in the eigenbasis.
    pub c1: Complex64,
    pub c2: Complex64,
    /// Coordinates of the initial state in the eigenbasis.
    pub d1: Complex64,
    pub d2: Complex64,
    pub initial: [f64; 2],
}

pub fn gain_matrix(beta: f64, mu: f64, tau: f64) -> [[f64; 2]; 2] {
    let k = 1.0 - beta * (1.0 - mu);
    [[beta, (1.0 - beta) * tau], [-beta * (1.0 - mu), 1.0 - k * tau]]
}

pub fn noise_input(beta: f64, mu: f64) -> [f64; 2] {
    [1.0 - beta, -(1.0 - beta * (1.0 - mu))]
}

/// `rho = 1 + beta - tau (1 - beta (1 - mu))`, the trace of the gain matrix.
pub fn rho(beta: f64, mu: f64, tau: f64) -> f64 {
    1.0 + beta - tau * (1.0 - beta * (1.0 - mu))
}

fn discriminant(beta: f64, mu: f64, tau: f64) -> f64 {
    let r = rho(beta, mu, tau);
    r * r - 4.0 * beta * (1.0 - mu * tau)
}

/// Closed-form eigenvalues `(rho -/+ sqrt(rho^2 - 4 beta (1 - mu tau))) / 2`,
/// using the complex root when the discriminant is negative.
pub fn eigenvalues(beta: f64, mu: f64, tau: f64) -> (Complex64, Complex64) {
    let r = rho(beta, mu, tau);
    let sq = Complex64::new(discriminant(beta, mu, tau), 0.0).sqrt();
    let half = Complex64::new(0.5, 0.0);
    ((Complex64::new(r, 0.0) - sq) * half, (Complex64::new(r, 0.0) + sq) * half)
}

/// `max(|r1|, |r2|)` straight from the closed form, without eigenvectors.
pub fn gain_at(beta: f64, mu: f64, tau: f64) -> f64 {
    let (r1, r2) = eigenvalues(beta, mu, tau);
    r1.norm().max(r2.norm())
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidHyperParameter { name, value, t: 0 })
    }
}

/// Unit null vector of `A - r I`, taken from the row with the larger pivot.
fn eigenvector(a: &[[f64; 2]; 2], r: Complex64) -> [Complex64; 2] {
    let m00 = Complex64::new(a[0][0], 0.0) - r;
    let m01 = Complex64::new(a[0][1], 0.0);
    let m10 = Complex64::new(a[1][0], 0.0);
    let m11 = Complex64::new(a[1][1], 0.0) - r;
    let top = m00.norm_sqr() + m01.norm_sqr();
    let bottom = m10.norm_sqr() + m11.norm_sqr();
    let mut w = if top >= bottom { [m01, -m00] } else { [m11, -m10] };
    let norm = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    for c in &mut w {
        *c /= norm;
    }
    let lead = if w[0].norm() > 1e-14 { w[0] } else { w[1] };
    let phase = lead.conj() / lead.norm();
    [w[0] * phase, w[1] * phase]
}

/// Solves `x1 w1 + x2 w2 = rhs` by Cramer's rule.
fn eigen_coordinates(w1: &[Complex64; 2], w2: &[Complex64; 2], rhs: [f64; 2]) -> Option<(Complex64, Complex64)> {
    let det = w1[0] * w2[1] - w2[0] * w1[1];
    if det.norm() < 1e-14 {
        return None;
    }
    let b0 = Complex64::new(rhs[0], 0.0);
    let b1 = Complex64::new(rhs[1], 0.0);
    Some(((b0 * w2[1] - w2[0] * b1) / det, (w1[0] * b1 - b0 * w1[1]) / det))
}

/// Builds the gain matrix at `(beta, mu, tau)` with its eigen-structure and the
/// coordinates of `b` and `initial = [v~_1, s_1]` in the eigenbasis.
pub fn build_dynsys(beta: f64, mu: f64, tau: f64, initial: [f64; 2]) -> Result<DynSysPoint> {
    check_unit("beta", beta)?;
    check_unit("mu", mu)?;
    if !tau.is_finite() {
        return Err(Error::InvalidHyperParameter { name: "tau", value: tau, t: 0 });
    }
    let mut tau_used = tau;
    if discriminant(beta, mu, tau) == 0.0 {
        log::warn!("defective gain matrix at beta={beta}, mu={mu}, tau={tau}; perturbing tau");
        tau_used = tau + DEFECT_PERTURBATION;
    }
    let a = gain_matrix(beta, mu, tau_used);
    let (r1, r2) = eigenvalues(beta, mu, tau_used);
    let w1 = eigenvector(&a, r1);
    let w2 = eigenvector(&a, r2);
    let degenerate = || Error::DegeneratePoint { beta, mu, tau };
    let b = noise_input(beta, mu);
    let (c1, c2) = eigen_coordinates(&w1, &w2, b).ok_or_else(degenerate)?;
    let (d1, d2) = eigen_coordinates(&w1, &w2, initial).ok_or_else(degenerate)?;
    Ok(DynSysPoint {
        beta,
        mu,
        tau: tau_used,
        a,
        b,
        rho: rho(beta, mu, tau_used),
        r1,
        r2,
        w1,
        w2,
        c1,
        c2,
        d1,
        d2,
        initial,
    })
}

/// Gain factor `r_g = max(|r1|, |r2|)`.
pub fn gain_factor(point: &DynSysPoint) -> f64 {
    point.r1.norm().max(point.r2.norm())
}

fn real_part(z: Complex64, scale: f64) -> Result<f64> {
    if z.im.abs() > IMAG_TOLERANCE * scale.max(1.0) {
        return Err(Error::ImaginaryResidue { residue: z.im.abs() });
    }
    Ok(z.re)
}

fn pow(z: Complex64, t: u64) -> Complex64 {
    match u32::try_from(t) {
        Ok(n) => z.powu(n),
        Err(_) => z.powf(t as f64),
    }
}

/// Noise-free state after `t` applications of the gain matrix:
/// `r1^t d1 w1 + r2^t d2 w2`, returned as `[v~_{t+1}, s_{t+1}]`.
pub fn state_expectation(point: &DynSysPoint, t: u64) -> Result<[f64; 2]> {
    let p1 = pow(point.r1, t) * point.d1;
    let p2 = pow(point.r2, t) * point.d2;
    let z = [p1 * point.w1[0] + p2 * point.w2[0], p1 * point.w1[1] + p2 * point.w2[1]];
    let scale = z[0].norm().max(z[1].norm());
    Ok([real_part(z[0], scale)?, real_part(z[1], scale)?])
}

/// Explicit solution of the noisy recurrence after consuming `deltas`
/// (`delta_1 .. delta_t`), expressed through the eigen-decomposition.
pub fn explicit_state(point: &DynSysPoint, alpha: f64, deltas: &[f64]) -> Result<[f64; 2]> {
    let t = deltas.len() as u64;
    let mut z1 = pow(point.r1, t) * point.d1;
    let mut z2 = pow(point.r2, t) * point.d2;
    // Horner-style accumulation of sum_l alpha delta_l r^(t-l) c.
    let mut n1 = Complex64::new(0.0, 0.0);
    let mut n2 = Complex64::new(0.0, 0.0);
    for &delta in deltas {
        n1 = n1 * point.r1 + point.c1 * (alpha * delta);
        n2 = n2 * point.r2 + point.c2 * (alpha * delta);
    }
    z1 += n1;
    z2 += n2;
    let z = [z1 * point.w1[0] + z2 * point.w2[0], z1 * point.w1[1] + z2 * point.w2[1]];
    let scale = z[0].norm().max(z[1].norm());
    Ok([real_part(z[0], scale)?, real_part(z[1], scale)?])
}

/// Direct iteration of `s_{t+1} = A s_t + b alpha delta_t`, returning every state
/// from `s_1` (the initial state) to `s_{t+1}`.
pub fn simulate(point: &DynSysPoint, alpha: f64, deltas: &[f64]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(deltas.len() + 1);
    let mut s = point.initial;
    out.push(s);
    for &delta in deltas {
        s = step_state(&point.a, &point.b, s, alpha * delta);
        out.push(s);
    }
    out
}

#[inline]
pub(crate) fn step_state(a: &[[f64; 2]; 2], b: &[f64; 2], s: [f64; 2], forcing: f64) -> [f64; 2] {
    [
        a[0][0] * s[0] + a[0][1] * s[1] + b[0] * forcing,
        a[1][0] * s[0] + a[1][1] * s[1] + b[1] * forcing,
    ]
}

/// Limit of `Var(s_t)` as `t -> inf` under i.i.d. noise `sigma * N(0, 1)`.
pub fn stationary_variance(point: &DynSysPoint, alpha: f64, noise: NoiseModel) -> Result<f64> {
    let gain = gain_factor(point);
    if gain >= 1.0 {
        return Err(Error::DivergentVariance { gain });
    }
    if noise.sigma == 0.0 {
        return Ok(0.0);
    }
    let (c1, c2) = (point.c1, point.c2);
    let (w12, w22) = (point.w1[1], point.w2[1]);
    let (r1, r2) = (point.r1, point.r2);
    let one = Complex64::new(1.0, 0.0);
    let direct = c1.norm_sqr() * w12.norm_sqr() / (1.0 - r1.norm_sqr())
        + c2.norm_sqr() * w22.norm_sqr() / (1.0 - r2.norm_sqr());
    let cross = (c1.conj() * c2 * w12.conj() * w22 / (one - r1.conj() * r2)).re;
    let var = (direct + 2.0 * cross) * alpha * alpha * noise.sigma * noise.sigma;
    Ok(var.max(0.0))
}

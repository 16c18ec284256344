use std::io::Write;

use super::point::{build_dynsys, gain_at, gain_factor, stationary_variance, NoiseModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub r_gain: f64,
    /// `None` when the point diverges (`r_gain >= 1`).
    pub std_limit: Option<f64>,
}

impl SweepRow {
    pub fn divergent(&self) -> bool {
        self.std_limit.is_none()
    }
}

/// `n` uniformly spaced points with both endpoints exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(Error::EmptyRange { lo, hi })
    }
}

/// Gain factor and stationary standard deviation on a uniform `tau` grid.
pub fn sweep_gain(
    beta: f64,
    mu: f64,
    tau_range: (f64, f64),
    n_points: usize,
    alpha: f64,
    noise: NoiseModel,
) -> Result<Vec<SweepRow>> {
    check_range(tau_range.0, tau_range.1)?;
    if n_points < 2 {
        return Err(Error::Config(format!("sweep needs at least 2 points, got {n_points}")));
    }
    linspace(tau_range.0, tau_range.1, n_points)
        .into_iter()
        .map(|tau| {
            let point = build_dynsys(beta, mu, tau, [0.0, 1.0])?;
            let r_gain = gain_factor(&point);
            let std_limit = if r_gain < 1.0 {
                Some(stationary_variance(&point, alpha, noise)?.sqrt())
            } else {
                None
            };
            Ok(SweepRow { tau, r_gain, std_limit })
        })
        .collect()
}

/// Writes `tau,r_gain,std_limit,divergent`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "tau,r_gain,std_limit,divergent")?;
    for row in rows {
        match row.std_limit {
            Some(s) => writeln!(out, "{:?},{:?},{:?},0", row.tau, row.r_gain, s)?,
            None => writeln!(out, "{:?},{:?},,1", row.tau, row.r_gain)?,
        }
    }
    Ok(())
}

const ARGMIN_GRID: usize = 4001;
const ARGMIN_REL_TOL: f64 = 1e-6;

/// Location and value of the minimum of `r_g(tau)` over `tau_range`:
/// a uniform grid search refined by golden-section search in the bracketing cells.
pub fn argmin_gain(beta: f64, mu: f64, tau_range: (f64, f64)) -> Result<(f64, f64)> {
    argmin_gain_with_grid(beta, mu, tau_range, ARGMIN_GRID)
}

pub fn argmin_gain_with_grid(beta: f64, mu: f64, tau_range: (f64, f64), grid: usize) -> Result<(f64, f64)> {
    let (lo, hi) = tau_range;
    check_range(lo, hi)?;
    if !(0.0..1.0).contains(&beta) || !(0.0..1.0).contains(&mu) {
        return Err(Error::Config(format!("beta = {beta}, mu = {mu} must lie in [0, 1)")));
    }
    let taus = linspace(lo, hi, grid.max(3));
    let (k, best) = taus
        .iter()
        .map(|&t| gain_at(beta, mu, t))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, g)| if g < acc.1 { (i, g) } else { acc });
    if !(best < 1.0) {
        return Err(Error::NoConvergentTau { lo, hi });
    }
    let a = taus[k.saturating_sub(1)];
    let b = taus[(k + 1).min(taus.len() - 1)];
    let f = |t: f64| gain_at(beta, mu, t);
    let (tau, value) = golden_section(f, a, b);
    Ok(if value <= best { (tau, value) } else { (taus[k], best) })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= ARGMIN_REL_TOL * mid.abs().max(1e-12) * 0.5 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

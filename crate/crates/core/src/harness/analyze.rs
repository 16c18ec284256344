use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::dynsys::{sweep_gain, write_sweep_csv, NoiseModel};
use crate::error::Result;

/// Writes one `gain_mu_<mu>.csv` sweep per observation factor into `out_dir`
/// and returns the paths in the order of `mus`.
pub fn analyze_cmd(
    beta: f64,
    mus: &[f64],
    tau_range: (f64, f64),
    n_points: usize,
    alpha: f64,
    sigma: f64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let noise = NoiseModel::new(sigma)?;
    let sweeps = mus
        .iter()
        .map(|&mu| sweep_gain(beta, mu, tau_range, n_points, alpha, noise))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out_dir)?;
    mus.iter()
        .zip(sweeps)
        .map(|(mu, rows)| {
            let path = out_dir.join(format!("gain_mu_{mu}.csv"));
            write_sweep_csv(&rows, BufWriter::new(File::create(&path)?))?;
            Ok(path)
        })
        .collect()
}

use arsg_core::dynsys::*;
use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use proptest::prelude::*;

/// The gain matrix written out independently of the library.
fn matrix(beta: f64, mu: f64, tau: f64) -> Matrix2<f64> {
    let k = 1.0 - beta * (1.0 - mu);
    Matrix2::new(beta, (1.0 - beta) * tau, -beta * (1.0 - mu), 1.0 - k * tau)
}

fn numeric_roots(beta: f64, mu: f64, tau: f64) -> Vec<Complex64> {
    matrix(beta, mu, tau).complex_eigenvalues().iter().copied().collect()
}

fn set_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let direct = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
    let swapped = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
    direct.min(swapped)
}

/// Stationary covariance from the discrete Lyapunov equation
/// `S = A S A^T + alpha^2 sigma^2 b b^T`, solved through the Kronecker form.
fn lyapunov_variance(beta: f64, mu: f64, tau: f64, alpha: f64, sigma: f64) -> f64 {
    let a = matrix(beta, mu, tau);
    let b = [1.0 - beta, -(1.0 - beta * (1.0 - mu))];
    let mut kron = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    kron[(2 * i + k, 2 * j + l)] = a[(i, j)] * a[(k, l)];
                }
            }
        }
    }
    let q = alpha * alpha * sigma * sigma;
    let rhs = Vector4::new(q * b[0] * b[0], q * b[0] * b[1], q * b[1] * b[0], q * b[1] * b[1]);
    let s = (Matrix4::identity() - kron).lu().solve(&rhs).unwrap();
    s[3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_roots_match_numeric(beta in 0.0..1.0f64, mu in 0.0..1.0f64, tau in -1.0..20.0f64) {
        let (r1, r2) = eigenvalues(beta, mu, tau);
        let num = numeric_roots(beta, mu, tau);
        let scale = num.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(set_distance(&[r1, r2], &num) <= 1e-10 * scale);
    }

    #[test]
    fn gain_is_spectral_radius(beta in 0.0..0.99f64, mu in 0.0..0.99f64, tau in 0.0..4.0f64) {
        let point = build_dynsys(beta, mu, tau, [0.0, 1.0]).unwrap();
        let rho = numeric_roots(beta, mu, point.tau).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((gain_factor(&point) - rho).abs() <= 1e-10);
        prop_assert!((gain_at(beta, mu, tau) - rho).abs() <= 1e-9);
    }

    #[test]
    fn variance_matches_lyapunov(beta in 0.0..0.99f64, mu in 0.0..0.99f64, tau in 0.01..1.5f64, alpha in 0.001..1.0f64) {
        let point = build_dynsys(beta, mu, tau, [0.0, 1.0]).unwrap();
        prop_assume!(gain_factor(&point) < 0.999);
        let v = stationary_variance(&point, alpha, NoiseModel::new(1.0).unwrap()).unwrap();
        let oracle = lyapunov_variance(beta, mu, point.tau, alpha, 1.0);
        prop_assert!((v - oracle).abs() <= 1e-7 * oracle.abs().max(1e-300), "{} vs {}", v, oracle);
    }

    #[test]
    fn explicit_solution_matches_recurrence(beta in 0.5..0.999f64, mu in 0.0..0.5f64, tau in 0.001..0.5f64, seed in any::<u64>()) {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let deltas: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let point = build_dynsys(beta, mu, tau, [0.3, 1.0]).unwrap();
        let sim = simulate(&point, 0.01, &deltas);
        let exp = explicit_state(&point, 0.01, &deltas).unwrap();
        let last = sim.last().unwrap();
        for i in 0..2 {
            prop_assert!((exp[i] - last[i]).abs() <= 1e-8 * last[i].abs().max(1.0));
        }
    }
}

#[test]
fn gelfand_oracle_on_curve() {
    // |A^k|^(1/k) tends to the spectral radius; at k = 4000 the defect factor is within a few 1e-3.
    for &(beta, mu) in &[(0.999, 0.05), (0.9, 0.1), (0.5, 0.0)] {
        for tau in linspace(0.0, 3.0, 13) {
            let a = matrix(beta, mu, tau);
            let k = 4000;
            let mut p = Matrix2::identity();
            let mut log_scale = 0.0;
            for _ in 0..k {
                p = a * p;
                let n = p.norm();
                log_scale += n.ln();
                p /= n;
            }
            let estimate = (log_scale / k as f64).exp();
            let g = gain_at(beta, mu, tau);
            assert!((estimate - g).abs() <= 5e-3 * g.max(1.0), "beta {beta} mu {mu} tau {tau}: {estimate} vs {g}");
        }
    }
}

#[test]
fn scalar_ar1_variance() {
    // beta = 0, mu = 0: s_{t+1} = (1 - tau) s_t - alpha delta, variance alpha^2 / (1 - (1-tau)^2).
    let point = build_dynsys(0.0, 0.0, 0.5, [0.0, 1.0]).unwrap();
    let v = stationary_variance(&point, 0.1, NoiseModel::new(1.0).unwrap()).unwrap();
    assert!((v - 0.01 / 0.75).abs() < 1e-15);
}

#[test]
fn negative_curvature_diverges() {
    for mu in [0.0, 0.1, 0.5, 0.9] {
        for tau in [-1.0, -0.1, -1e-3] {
            assert!(gain_at(0.999, mu, tau) > 1.0);
        }
    }
    let point = build_dynsys(0.9, 0.1, -0.5, [0.0, 1.0]).unwrap();
    assert!(stationary_variance(&point, 0.1, NoiseModel::new(1.0).unwrap()).is_err());
}

#[test]
fn argmin_against_dense_grid() {
    for &(beta, mu) in &[(0.999, 0.05), (0.999, 0.1), (0.9, 0.2)] {
        let (tau, g) = argmin_gain(beta, mu, (0.0, 20.0)).unwrap();
        let dense = linspace(0.0, 20.0, 200_001)
            .into_iter()
            .map(|t| gain_at(beta, mu, t))
            .fold(f64::INFINITY, f64::min);
        assert!(g <= dense + 1e-12, "{g} vs {dense}");
        assert!((gain_at(beta, mu, tau) - g).abs() < 1e-15);
    }
}

#[test]
fn sweep_rows_and_csv() {
    let rows = sweep_gain(0.9, 0.1, (-0.5, 3.0), 8, 0.1, NoiseModel::new(1.0).unwrap()).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].divergent() && rows[0].std_limit.is_none());
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("tau,r_gain,std_limit,divergent\n"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn rate_assumption_checks() {
    let ok = RateAssumption { kappa: 1e4, c_alpha: 0.2, c_beta: 1.0, c_mu: 1.0 };
    // 4 c_alpha < c_beta branch.
    let r = theorem1_rate(&ok).unwrap();
    let expected = 1.0 - (1.0 - (1.0f64 * (1.0 - 0.8)).sqrt()) / 200.0;
    assert!((r - expected).abs() < 1e-15);
    let big = RateAssumption { c_alpha: 0.5, ..ok };
    assert!((theorem1_rate(&big).unwrap() - (1.0 - 1.0 / 200.0)).abs() < 1e-15);
    assert!(theorem1_rate(&RateAssumption { c_alpha: 1.5, ..ok }).is_err());
    assert!(theorem1_rate(&RateAssumption { kappa: 0.5, ..ok }).is_err());
}

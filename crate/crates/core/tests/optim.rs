use arsg_core::optim::*;
use proptest::prelude::*;

fn gradients(seed: u64, steps: usize, dim: usize) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..steps).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect()
}

fn run(kind: OptimizerKind, hp: &HyperParams, feasible: &FeasibleBox, x0: &[f64], gs: &[Vec<f64>]) -> Vec<OptimizerState> {
    let mut s = OptimizerState::new(x0.to_vec(), hp.epsilon);
    let mut out = Vec::new();
    for g in gs {
        let c = hp.at(s.t).unwrap();
        s = kind.apply(&s, g, &c, feasible).unwrap();
        out.push(s.clone());
    }
    out
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..0.99f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arsg_without_observation_is_amsgrad(seed in any::<u64>(), alpha in 1e-4..1.0f64, b1 in unit(), b2 in unit(), dim in 1usize..6) {
        let hp = HyperParams { mu: Schedule::constant(0.0), ..HyperParams::constant(alpha, b1, b2, 0.0, 1e-8) };
        let hp = HyperParams { alpha: Schedule::InvSqrt { base: alpha }, ..hp };
        let gs = gradients(seed, 200, dim);
        let feasible = FeasibleBox::cube(dim, -1.0, 1.0).unwrap();
        let x0 = vec![0.3; dim];
        let a = run(OptimizerKind::Arsg, &hp, &feasible, &x0, &gs);
        let b = run(OptimizerKind::Amsgrad, &hp, &feasible, &x0, &gs);
        for (sa, sb) in a.iter().zip(&b) {
            prop_assert_eq!(&sa.x, &sb.x);
            prop_assert_eq!(&sa.v_hat, &sb.v_hat);
        }
    }

    #[test]
    fn concise_and_practical_rsg_agree(seed in any::<u64>(), alpha in 1e-3..0.5f64, beta in unit(), mu in unit()) {
        let hp = HyperParams::constant(alpha, beta, 0.99, mu, 1e-8);
        let dim = 4;
        // Gradients of a fixed quadratic plus a bounded perturbation, so the iterates stay bounded.
        let pert = gradients(seed, 1000, dim);
        let mut a = OptimizerState::new(vec![1.0; dim], 1e-8);
        let mut b = a.clone();
        for p in &pert {
            let ga: Vec<f64> = a.x.iter().zip(p).map(|(x, e)| 0.5 * x + 0.1 * e).collect();
            let gb: Vec<f64> = b.x.iter().zip(p).map(|(x, e)| 0.5 * x + 0.1 * e).collect();
            a = rsg_step_concise(&a, &ga, &hp).unwrap();
            b = rsg_step_practical(&b, &gb, &hp).unwrap();
            for (u, v) in a.x.iter().zip(&b.x) {
                prop_assert!((u - v).abs() <= 1e-10 * u.abs().max(v.abs()).max(1.0), "{} vs {}", u, v);
            }
        }
    }

    #[test]
    fn reduction_chain(seed in any::<u64>(), alpha in 1e-3..0.5f64, beta in unit()) {
        let gs = gradients(seed, 100, 3);
        let free = FeasibleBox::unbounded(3);
        let x0 = [0.5, -0.5, 2.0];
        // rsg with mu = 0 is heavy ball, heavy ball with beta = 0 is sgd0, nag is rsg with mu = 1 - beta.
        let hb = run(OptimizerKind::Hb, &HyperParams::constant(alpha, beta, 0.99, 0.0, 1e-8), &free, &x0, &gs);
        let rsg0 = run(OptimizerKind::Rsg, &HyperParams::constant(alpha, beta, 0.99, 0.0, 1e-8), &free, &x0, &gs);
        prop_assert_eq!(hb.iter().map(|s| &s.x).collect::<Vec<_>>(), rsg0.iter().map(|s| &s.x).collect::<Vec<_>>());
        let sgd = run(OptimizerKind::Sgd0, &HyperParams::constant(alpha, beta, 0.99, 0.0, 1e-8), &free, &x0, &gs);
        let hb0 = run(OptimizerKind::Hb, &HyperParams::constant(alpha, 0.0, 0.99, 0.0, 1e-8), &free, &x0, &gs);
        prop_assert_eq!(sgd.iter().map(|s| &s.x).collect::<Vec<_>>(), hb0.iter().map(|s| &s.x).collect::<Vec<_>>());
        let nag = run(OptimizerKind::Nag, &HyperParams::constant(alpha, beta, 0.99, 0.3, 1e-8), &free, &x0, &gs);
        let rsg = run(OptimizerKind::Rsg, &HyperParams::constant(alpha, beta, 0.99, 1.0 - beta, 1e-8), &free, &x0, &gs);
        prop_assert_eq!(nag.iter().map(|s| &s.x).collect::<Vec<_>>(), rsg.iter().map(|s| &s.x).collect::<Vec<_>>());
    }

    #[test]
    fn nag_matches_lookahead_momentum(alpha in 1e-3..0.3f64, beta in 0.0..0.95f64, seed in any::<u64>()) {
        // Momentum NAG in its lookahead form: v <- beta v - eps grad(theta + beta v); theta <- theta + v,
        // with eps = alpha (1 - beta). The lookahead point theta + beta v is the NAG iterate.
        let h = [1.0, 0.3, 2.0];
        let grad = |x: &[f64]| -> Vec<f64> { x.iter().zip(&h).map(|(a, b)| a * b).collect() };
        let x0: Vec<f64> = gradients(seed, 1, 3)[0].clone();
        let eps = alpha * (1.0 - beta);
        let mut theta = x0.clone();
        let mut v = vec![0.0; 3];
        let hp = HyperParams::constant(alpha, beta, 0.99, 0.0, 1e-8);
        let mut s = OptimizerState::new(x0, 1e-8);
        for _ in 0..300 {
            let look: Vec<f64> = theta.iter().zip(&v).map(|(t, v)| t + beta * v).collect();
            let g = grad(&look);
            for i in 0..3 {
                v[i] = beta * v[i] - eps * g[i];
                theta[i] += v[i];
            }
            let c = hp.at(s.t).unwrap();
            s = OptimizerKind::Nag.apply(&s, &grad(&s.x), &c, &FeasibleBox::unbounded(3)).unwrap();
            for i in 0..3 {
                let oracle = theta[i] + beta * v[i];
                prop_assert!((s.x[i] - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{} vs {}", s.x[i], oracle);
            }
        }
    }

    #[test]
    fn vhat_monotone_and_gamma_psd(seed in any::<u64>(), alpha in 1e-3..1.0f64, b1 in unit(), b2 in unit(), mu in unit()) {
        let hp = HyperParams {
            alpha: Schedule::InvSqrt { base: alpha },
            beta1: Schedule::Inv { base: b1 },
            beta2: b2,
            mu: Schedule::constant(mu),
            epsilon: 1e-8,
        };
        let gs = gradients(seed, 300, 3);
        let feasible = FeasibleBox::cube(3, -2.0, 2.0).unwrap();
        let states = run(OptimizerKind::Arsg, &hp, &feasible, &[0.0; 3], &gs);
        for w in states.windows(2) {
            // w[0] holds vhat_t (used at step t), w[1] holds vhat_{t+1}.
            let t = w[0].t - 1;
            let (a0, a1) = (hp.alpha.at(t).unwrap(), hp.alpha.at(t + 1).unwrap());
            for i in 0..3 {
                prop_assert!(w[1].v_hat[i] >= w[0].v_hat[i]);
                prop_assert!(w[1].v_hat[i].sqrt() / a1 - w[0].v_hat[i].sqrt() / a0 >= 0.0);
            }
            prop_assert!(feasible.contains(&w[1].x));
        }
    }

    #[test]
    fn projection_is_idempotent_and_weight_free(
        y in prop::collection::vec(-5.0..5.0f64, 1..6),
        w_seed in any::<u64>(),
    ) {
        let d = y.len();
        let feasible = FeasibleBox::new(vec![-1.0; d], (0..d).map(|i| 0.5 + i as f64).collect()).unwrap();
        let weights: Vec<f64> = gradients(w_seed, 1, d)[0].iter().map(|v| v.abs() + 0.01).collect();
        let p = project_box(&y, &weights, &feasible).unwrap();
        prop_assert!(feasible.contains(&p));
        prop_assert_eq!(&project_box(&p, &weights, &feasible).unwrap(), &p);
        prop_assert_eq!(&project_box(&y, &vec![1.0; d], &feasible).unwrap(), &p);
        // No feasible sample is closer in the weighted norm.
        let dist = |x: &[f64]| -> f64 { x.iter().zip(&y).zip(&weights).map(|((a, b), w)| w * (a - b) * (a - b)).sum() };
        for s in gradients(w_seed ^ 1, 50, d) {
            let z: Vec<f64> = s.iter().zip(feasible.lower.iter().zip(&feasible.upper)).map(|(v, (l, u))| l + (u - l) * (v + 3.0) / 6.0).collect();
            prop_assert!(dist(&p) <= dist(&z) + 1e-12);
        }
    }
}

#[test]
fn projection_errors() {
    let b = FeasibleBox::cube(2, 0.0, 1.0).unwrap();
    assert!(project_box(&[0.5], &[1.0], &b).is_err());
    assert!(project_box(&[0.5, 0.5], &[1.0, 0.0], &b).is_err());
    assert!(FeasibleBox::new(vec![1.0], vec![0.0]).is_err());
}

#[test]
fn step_errors_leave_no_partial_state() {
    let hp = HyperParams::constant(0.1, 0.9, 0.99, 0.1, 1e-8);
    let mut opt = Optimizer::new(OptimizerKind::Arsg, hp, vec![1.0, 2.0]).unwrap();
    assert!(opt.step(&[1.0]).is_err());
    assert!(opt.step(&[f64::INFINITY, 0.0]).is_err());
    assert_eq!(opt.params(), &[1.0, 2.0]);
    assert_eq!(opt.state.t, 1);
    let bad = HyperParams::constant(0.1, 1.0, 0.99, 0.1, 1e-8);
    assert!(Optimizer::new(OptimizerKind::Arsg, bad, vec![0.0]).is_err());
}

#[test]
fn arsg_first_step_by_hand() {
    // t = 1: m = (1-b1) g, v = (1-b2) g^2, vhat = max(eps, v), x -= a ((1-mu) m + mu g) / sqrt(vhat).
    let (a, b1, b2, mu) = (0.1, 0.9, 0.99, 0.2);
    let hp = HyperParams::constant(a, b1, b2, mu, 1e-8);
    let s = arsg_step(&OptimizerState::new(vec![1.0], 1e-8), &[2.0], &hp, &FeasibleBox::unbounded(1)).unwrap();
    let m = (1.0 - b1) * 2.0;
    let v: f64 = (1.0 - b2) * 4.0;
    let expected = 1.0 - a * ((1.0 - mu) * m + mu * 2.0) / v.sqrt();
    assert!((s.x[0] - expected).abs() < 1e-15);
}

use arsg_core::harness::regret_run::REGRET_FILE;
use arsg_core::harness::{example_config, run_regret, BoxSpec, ProblemSpec, SyntheticSpec};
use arsg_core::optim::*;
use arsg_core::problems::{Problem, QuadProblem};
use arsg_core::regret::*;
use proptest::prelude::*;

struct Trace {
    record: RegretRecord,
    vhat_sqrt_sums: Vec<f64>,
    grads: Vec<Vec<f64>>,
    regret_terms: Vec<f64>,
}

/// Runs ARSG on a noisy quadratic inside `[-1, 1]^d`, recording everything the
/// bounds need both through `RegretRecord` and by hand.
fn trace(hp: &HyperParams, steps: usize, seed: u64, scale: f64) -> Trace {
    let q = QuadProblem::new(vec![0.5, 1.0, 2.0], vec![0.2, -0.3, 0.1], 0.5).unwrap();
    let problem = Problem::Quad(q.clone());
    let feasible = FeasibleBox::cube(3, -1.0, 1.0).unwrap();
    let mut batches = problem.batches(seed).unwrap();
    let mut s = OptimizerState::new(vec![0.9, 0.9, -0.9], hp.epsilon);
    let mut record = RegretRecord::new(&q.x_star);
    let (mut vhat_sqrt_sums, mut grads, mut regret_terms) = (vec![], vec![], vec![]);
    for _ in 0..steps {
        let batch = batches.next_batch();
        let (f, g) = problem.eval(&s.x, &batch).unwrap();
        let g: Vec<f64> = g.iter().map(|v| v * scale).collect();
        let fstar = problem.eval(&q.x_star, &batch).unwrap().0;
        let c = hp.at(s.t).unwrap();
        let next = OptimizerKind::Arsg.apply(&s, &g, &c, &feasible).unwrap();
        record.observe(&s.x, f, fstar, &g, &next.v_hat, &c).unwrap();
        vhat_sqrt_sums.push(next.v_hat.iter().map(|v| v.sqrt()).sum());
        grads.push(g);
        regret_terms.push(f - fstar);
        s = next;
    }
    Trace { record, vhat_sqrt_sums, grads, regret_terms }
}

fn ctx(rec: &RegretRecord, d: f64) -> BoundContext {
    BoundContext { d_inf: d, g_inf: rec.max_grad_inf, g_1: rec.max_grad_l1, lambda: 0.5, d_inf_observed: false, g_observed: true }
}

fn hyper(beta1: Schedule, mu: f64) -> HyperParams {
    HyperParams { alpha: Schedule::InvSqrt { base: 0.1 }, beta1, beta2: 0.99, mu: Schedule::constant(mu), epsilon: 1e-8 }
}

/// The convex bound written out from its definition over the stored sequences.
fn theorem2_oracle(tr: &Trace, hp: &HyperParams, d: f64) -> f64 {
    let t_max = tr.grads.len();
    let (alpha, beta1, mu) = (0.1, hp.beta1.at(1).unwrap(), hp.mu.at(1).unwrap());
    let gamma = beta1 / hp.beta2.sqrt();
    let damp = 1.0 - beta1 * (1.0 - mu);
    let weighted: f64 = (1..=t_max)
        .map(|t| hp.beta1.at(t as u64).unwrap() * tr.vhat_sqrt_sums[t - 1] / (alpha / (t as f64).sqrt()))
        .sum();
    let col_norms: f64 = (0..3).map(|i| tr.grads.iter().map(|g| g[i] * g[i]).sum::<f64>().sqrt()).sum();
    let tf = t_max as f64;
    (d * d * tf.sqrt() / (2.0 * alpha) * tr.vhat_sqrt_sums[t_max - 1]
        + (1.0 - mu) * d * d / 2.0 * weighted
        + alpha * (3.0 * beta1 * beta1 / (2.0 * (1.0 - beta1) * (1.0 - gamma)) + mu * mu) * (1.0 + tf.ln()).sqrt()
            / (1.0 - hp.beta2).sqrt()
            * col_norms)
        / damp
}

#[test]
fn convex_bound_matches_definition() {
    for (beta1, mu) in [(Schedule::constant(0.9), 0.1), (Schedule::Inv { base: 0.9 }, 0.5), (Schedule::constant(0.5), 0.6)] {
        let hp = hyper(beta1, mu);
        let tr = trace(&hp, 500, 1, 1.0);
        let b = bound_theorem2(&tr.record, &ctx(&tr.record, 2.0), &hp).unwrap();
        let oracle = theorem2_oracle(&tr, &hp, 2.0);
        assert!((b - oracle).abs() <= 1e-12 * oracle, "{b} vs {oracle}");
        assert!(tr.record.regret <= b);
    }
}

#[test]
fn regret_is_the_sum_of_online_gaps() {
    let hp = hyper(Schedule::constant(0.9), 0.1);
    let tr = trace(&hp, 300, 2, 1.0);
    let sum: f64 = tr.regret_terms.iter().sum();
    assert!((tr.record.regret - sum).abs() <= 1e-12 * sum.abs().max(1.0));
    let split: f64 = tr.regret_terms[..100].iter().sum::<f64>() + tr.regret_terms[100..].iter().sum::<f64>();
    assert!((tr.record.regret - split).abs() <= 1e-12 * sum.abs().max(1.0));
    assert_eq!(tr.record.t, 300);
    assert_eq!(tr.record.f_xt.len(), 300);
}

#[test]
fn inverse_momentum_bound_dominates_convex_bound() {
    for mu in [0.1, 0.3, 0.9] {
        let hp = hyper(Schedule::Inv { base: 0.9 }, mu);
        let tr = trace(&hp, 1000, 3, 1.0);
        let c = ctx(&tr.record, 2.0);
        let t2 = bound_theorem2(&tr.record, &c, &hp).unwrap();
        let c1 = bound_corollary1(&tr.record, &c, &hp).unwrap();
        assert!(t2 <= c1 * (1.0 + 1e-12), "{t2} > {c1}");
        assert!(tr.record.regret <= t2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounds_grow_with_diameter_and_gradients(seed in any::<u64>(), d in 0.5..5.0f64, mu in 0.1..0.9f64) {
        let hp = hyper(Schedule::Inv { base: 0.9 }, mu);
        let tr = trace(&hp, 100, seed, 1.0);
        let small = ctx(&tr.record, d);
        let large = ctx(&tr.record, 1.5 * d);
        prop_assert!(bound_theorem2(&tr.record, &large, &hp).unwrap() > bound_theorem2(&tr.record, &small, &hp).unwrap());
        prop_assert!(bound_corollary1(&tr.record, &large, &hp).unwrap() > bound_corollary1(&tr.record, &small, &hp).unwrap());
        // Scaling every gradient raises sum_i |g_{1:T,i}|, which enters with a positive coefficient.
        let mut bigger = tr.record.clone();
        bigger.grad_sq.iter_mut().for_each(|v| *v *= 4.0);
        prop_assert!(bigger.sum_grad_norms() > tr.record.sum_grad_norms());
        prop_assert!(bound_theorem2(&bigger, &small, &hp).unwrap() > bound_theorem2(&tr.record, &small, &hp).unwrap());
    }

    #[test]
    fn arsg_coefficients_below_amsgrad(alpha in 1e-3..1.0f64, beta1 in 0.8..0.9999f64, mu_frac in 0.0..0.99f64, beta2 in 0.9..0.99999f64) {
        let mu = (1.0 - beta1) + mu_frac * beta1;
        let gamma = beta1 / beta2.sqrt();
        prop_assume!(gamma < 1.0);
        let a = arsg_coefficients(alpha, beta1, mu, gamma);
        let b = amsgrad_coefficients(alpha, beta1, gamma);
        for i in 0..3 {
            prop_assert!(a[i] < b[i], "term {}: {} vs {}", i, a[i], b[i]);
        }
    }
}

#[test]
fn preconditions_are_reported() {
    let rec = trace(&hyper(Schedule::constant(0.9), 0.1), 50, 4, 1.0).record;
    let c = ctx(&rec, 2.0);
    let low_mu = hyper(Schedule::constant(0.9), 0.05);
    assert!(matches!(bound_theorem2(&rec, &c, &low_mu), Err(arsg_core::Error::PreconditionViolated { .. })));
    let bad_gamma = HyperParams { beta2: 0.5, ..hyper(Schedule::constant(0.9), 0.1) };
    assert!(bound_theorem2(&rec, &c, &bad_gamma).is_err());
    let const_alpha = HyperParams { alpha: Schedule::constant(0.1), ..hyper(Schedule::constant(0.9), 0.1) };
    assert!(bound_theorem2(&rec, &c, &const_alpha).is_err());
    assert!(bound_corollary1(&rec, &c, &hyper(Schedule::constant(0.9), 0.1)).is_err());
    let inv = HyperParams { alpha: Schedule::Inv { base: 1e-6 }, ..hyper(Schedule::InvSquare { base: 0.9 }, 0.1) };
    match bound_theorem3(&rec, &c, &inv) {
        Err(arsg_core::Error::PreconditionViolated { failures, .. }) => {
            assert_eq!(failures.len(), 1);
            assert!(failures[0].contains("required initial step"));
        }
        other => panic!("expected a precondition failure, got {other:?}"),
    }
    let ok = HyperParams { alpha: Schedule::Inv { base: 1e6 }, ..inv };
    assert!(bound_theorem3(&rec, &c, &ok).is_ok());
    let no_lambda = BoundContext { lambda: 0.0, ..c };
    assert!(bound_theorem3(&rec, &no_lambda, &ok).is_err());
}

#[test]
fn strongly_convex_bound_matches_definition() {
    let hp = HyperParams {
        alpha: Schedule::Inv { base: 50.0 },
        beta1: Schedule::InvSquare { base: 0.9 },
        beta2: 0.99,
        mu: Schedule::constant(0.2),
        epsilon: 1e-8,
    };
    let tr = trace(&hp, 400, 6, 1.0);
    let c = ctx(&tr.record, 2.0);
    let needed = theorem3_min_alpha(&tr.record, 0.9, 0.2, c.lambda);
    assert!(needed < 50.0, "{needed}");
    let b = bound_theorem3(&tr.record, &c, &hp).unwrap();
    let g1 = tr.grads.iter().map(|g| g.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let gamma = 0.9 / 0.99f64.sqrt();
    let damp = 1.0 - 0.9 * 0.8;
    let oracle = (50.0 * g1 / 0.01f64.sqrt() * (1.5 * 0.81 / (0.1 * (1.0 - gamma)) + 0.04)
        + 0.8 * 0.9 * 4.0 / 100.0 * tr.vhat_sqrt_sums.last().unwrap())
        * (1.0 + 400f64.ln())
        / damp;
    assert!((b - oracle).abs() <= 1e-12 * oracle);
}

#[test]
fn reference_minimizer_satisfies_optimality() {
    let cfg = {
        let mut c = example_config();
        c.problem = ProblemSpec::Logreg(SyntheticSpec {
            n: 200,
            d: 4,
            classes: 3,
            separation: 3.0,
            test_n: 0,
            batch_size: 10,
            l2_weight: 0.01,
            hidden: 8,
        });
        c.feasible_box = Some(BoxSpec { lower: -0.5, upper: 0.5 });
        c
    };
    let run = cfg.resolve().unwrap();
    let x = reference_minimizer(&run.problem, &run.feasible, 1e-10, 100_000).unwrap();
    assert!(run.feasible.contains(&x));
    // A projected gradient step must not move the solution.
    let (_, g) = run.problem.full_eval(&x).unwrap();
    let step: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
    let moved = project_box(&step, &vec![1.0; x.len()], &run.feasible).unwrap();
    let gap = moved.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-7, "{gap}");
    assert!(x.iter().any(|v| v.abs() == 0.5), "the box should bind at this separation");

    let q = Problem::Quad(QuadProblem::new(vec![1.0, 2.0], vec![3.0, -0.2], 0.0).unwrap());
    let b = FeasibleBox::cube(2, -1.0, 1.0).unwrap();
    assert_eq!(reference_minimizer(&q, &b, 1e-12, 10).unwrap(), vec![1.0, -0.2]);
}

#[test]
fn regret_run_writes_csv_and_tallies() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = example_config();
    cfg.problem = ProblemSpec::Logreg(SyntheticSpec {
        n: 100,
        d: 5,
        classes: 2,
        separation: 1.0,
        test_n: 0,
        batch_size: 10,
        l2_weight: 0.1,
        hidden: 8,
    });
    cfg.optimizer = OptimizerKind::Arsg;
    cfg.hyper = hyper(Schedule::constant(0.9), 0.1);
    cfg.iterations = 500;
    cfg.feasible_box = Some(BoxSpec { lower: -2.0, upper: 2.0 });
    let out = run_regret(&cfg, Some(dir.path())).unwrap();
    assert_eq!(out.thm2.evaluated, 500);
    assert_eq!(out.thm2.violations, 0);
    assert_eq!(out.cor1.evaluated, 0);
    assert_eq!(out.thm3.evaluated, 0);
    assert_eq!(out.log_ratio.len(), 500);
    let text = std::fs::read_to_string(dir.path().join(REGRET_FILE)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,f_xt,f_xstar,R_T,bound_thm2,bound_cor1,bound_thm3");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert!(!first[4].is_empty() && first[5].is_empty() && first[6].is_empty());
    assert_eq!(text.lines().count(), 501);

    // Other optimizers still get the regret curve but no bounds.
    cfg.optimizer = OptimizerKind::Amsgrad;
    let out = run_regret(&cfg, None).unwrap();
    assert_eq!(out.thm2.evaluated, 0);
    assert_eq!(out.record.t, 500);
}

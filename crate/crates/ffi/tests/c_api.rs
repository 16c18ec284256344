use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use arsg_core::dynsys::{argmin_gain, eigenvalues, gain_at};
use arsg_core::optim::{FeasibleBox, HyperParams, Optimizer, OptimizerKind, Schedule};
use arsg_ffi::*;

fn new_opt(kind: ArsgKind, hyper: &ArsgHyper, x0: &[f64]) -> *mut ArsgOptimizer {
    let mut h = ptr::null_mut();
    let s = unsafe { arsg_optimizer_new(kind as u32, hyper, x0.as_ptr(), x0.len(), &mut h) };
    assert_eq!(s, ArsgStatus::Ok);
    assert!(!h.is_null());
    h
}

fn params(h: *const ArsgOptimizer, dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    assert_eq!(unsafe { arsg_optimizer_params(h, x.as_mut_ptr(), dim) }, ArsgStatus::Ok);
    x
}

fn last_error() -> String {
    let p = arsg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn grad(t: usize, x: &[f64]) -> Vec<f64> {
    x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v + ((t * 7 + i) as f64).sin()).collect()
}

#[test]
fn trajectory_matches_core_bitwise() {
    let x0 = [1.0, -2.0, 0.5];
    let hyper = ArsgHyper {
        alpha: 0.05,
        alpha_schedule: ArsgSchedule::InvSqrt as u32,
        beta1: 0.9,
        beta1_schedule: ArsgSchedule::Constant as u32,
        beta2: 0.99,
        mu: 0.1,
        epsilon: 1e-8,
    };
    let hp = HyperParams {
        alpha: Schedule::InvSqrt { base: 0.05 },
        beta1: Schedule::constant(0.9),
        beta2: 0.99,
        mu: Schedule::constant(0.1),
        epsilon: 1e-8,
    };
    let h = new_opt(ArsgKind::Arsg, &hyper, &x0);
    let (lo, hi) = ([-1.0; 3], [1.0; 3]);
    assert_eq!(unsafe { arsg_optimizer_set_box(h, lo.as_ptr(), hi.as_ptr(), 3) }, ArsgStatus::Ok);
    let mut reference = Optimizer::new(OptimizerKind::Arsg, hp, x0.to_vec())
        .unwrap()
        .with_box(FeasibleBox::new(lo.to_vec(), hi.to_vec()).unwrap())
        .unwrap();
    for t in 0..200 {
        let g = grad(t, reference.params());
        reference.step(&g).unwrap();
        assert_eq!(unsafe { arsg_optimizer_step(h, g.as_ptr(), 3) }, ArsgStatus::Ok);
        assert_eq!(params(h, 3), reference.params());
    }
    let mut t = 0;
    let mut dim = 0;
    unsafe {
        assert_eq!(arsg_optimizer_iteration(h, &mut t), ArsgStatus::Ok);
        assert_eq!(arsg_optimizer_dim(h, &mut dim), ArsgStatus::Ok);
        arsg_optimizer_free(h);
    }
    assert_eq!(t, 201);
    assert_eq!(dim, 3);
}

#[test]
fn every_kind_constructs_and_steps() {
    let hyper = arsg_hyper_constant(0.01, 0.9, 0.99, 0.1, 1e-8);
    for kind in [
        ArsgKind::Sgd0,
        ArsgKind::Hb,
        ArsgKind::Nag,
        ArsgKind::Rsg,
        ArsgKind::RsgPractical,
        ArsgKind::Amsgrad,
        ArsgKind::Arsg,
    ] {
        let h = new_opt(kind, &hyper, &[1.0, 1.0]);
        assert_eq!(unsafe { arsg_optimizer_step(h, [1.0, -1.0].as_ptr(), 2) }, ArsgStatus::Ok);
        let x = params(h, 2);
        assert!(x[0] < 1.0 && x[1] > 1.0, "{kind:?}: {x:?}");
        unsafe { arsg_optimizer_free(h) };
    }
}

#[test]
fn error_codes() {
    let hyper = arsg_hyper_constant(0.01, 0.9, 0.99, 0.1, 1e-8);
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(arsg_optimizer_new(99, &hyper, [0.0].as_ptr(), 1, &mut h), ArsgStatus::InvalidArgument);
        assert!(h.is_null());
        assert!(last_error().contains("99"));
        let mut bad = hyper;
        bad.alpha_schedule = 17;
        assert_eq!(arsg_optimizer_new(ArsgKind::Arsg as u32, &bad, [0.0].as_ptr(), 1, &mut h), ArsgStatus::InvalidArgument);
        let bad = arsg_hyper_constant(0.01, 1.5, 0.99, 0.1, 1e-8);
        assert_eq!(arsg_optimizer_new(ArsgKind::Arsg as u32, &bad, [0.0].as_ptr(), 1, &mut h), ArsgStatus::InvalidArgument);
        assert_eq!(arsg_optimizer_new(ArsgKind::Arsg as u32, ptr::null(), [0.0].as_ptr(), 1, &mut h), ArsgStatus::NullPointer);
        assert_eq!(arsg_optimizer_new(ArsgKind::Arsg as u32, &hyper, ptr::null(), 1, &mut h), ArsgStatus::NullPointer);
        assert_eq!(arsg_optimizer_new(ArsgKind::Arsg as u32, &hyper, ptr::null(), 0, &mut h), ArsgStatus::InvalidArgument);

        let h = new_opt(ArsgKind::Arsg, &hyper, &[0.0, 0.0]);
        assert_eq!(arsg_optimizer_step(h, [1.0].as_ptr(), 1), ArsgStatus::DimensionMismatch);
        assert!(last_error().contains("dimension"));
        assert_eq!(arsg_optimizer_step(h, [f64::NAN, 0.0].as_ptr(), 2), ArsgStatus::NonFinite);
        let mut x = [0.0; 3];
        assert_eq!(arsg_optimizer_params(h, x.as_mut_ptr(), 3), ArsgStatus::DimensionMismatch);
        assert_eq!(arsg_optimizer_set_box(h, [1.0, 1.0].as_ptr(), [0.0, 0.0].as_ptr(), 2), ArsgStatus::InvalidArgument);
        let mut t = 0;
        assert_eq!(arsg_optimizer_iteration(h, &mut t), ArsgStatus::Ok);
        assert_eq!(t, 1, "failed calls must leave the state untouched");
        arsg_optimizer_free(h);

        let hb = new_opt(ArsgKind::Hb, &hyper, &[0.0]);
        assert_eq!(arsg_optimizer_set_box(hb, [-1.0].as_ptr(), [1.0].as_ptr(), 1), ArsgStatus::InvalidArgument);
        arsg_optimizer_free(hb);
        arsg_optimizer_free(ptr::null_mut());
    }
}

#[test]
fn analysis_functions_match_core() {
    let (beta, mu, tau) = (0.9, 0.2, 1.3);
    let mut roots = [0.0; 4];
    let mut g = 0.0;
    unsafe {
        assert_eq!(arsg_eigenvalues(beta, mu, tau, roots.as_mut_ptr()), ArsgStatus::Ok);
        assert_eq!(arsg_gain_factor(beta, mu, tau, &mut g), ArsgStatus::Ok);
    }
    let (r1, r2) = eigenvalues(beta, mu, tau);
    assert_eq!(roots, [r1.re, r1.im, r2.re, r2.im]);
    assert_eq!(g, gain_at(beta, mu, tau));

    let (mut t, mut gm) = (0.0, 0.0);
    unsafe { assert_eq!(arsg_argmin_gain(beta, mu, 0.0, 20.0, &mut t, &mut gm), ArsgStatus::Ok) };
    assert_eq!((t, gm), argmin_gain(beta, mu, (0.0, 20.0)).unwrap());

    let mut f = 0.0;
    unsafe { assert_eq!(arsg_obsb_alpha_factor(0.999, 0.05, 0.0, 20.0, &mut f), ArsgStatus::Ok) };
    assert_eq!(f, arsg_core::obsb::alpha_factor(0.999, 0.05, (0.0, 20.0)).unwrap());

    let mut r = 0.0;
    unsafe { assert_eq!(arsg_theorem1_rate(1e4, 0.2, 1.0, 1.0, &mut r), ArsgStatus::Ok) };
    assert!(r > 0.99 && r < 1.0);
    unsafe { assert_eq!(arsg_theorem1_rate(1e4, 5.0, 1.0, 1.0, &mut r), ArsgStatus::Precondition) };

    let mut v = 0.0;
    unsafe {
        assert_eq!(arsg_stationary_variance(0.9, 0.1, 0.5, 0.1, 1.0, &mut v), ArsgStatus::Ok);
        assert!(v > 0.0 && v.is_finite());
        assert_eq!(arsg_stationary_variance(0.9, 0.1, 50.0, 0.1, 1.0, &mut v), ArsgStatus::Divergent);
        assert_eq!(arsg_gain_factor(beta, mu, tau, ptr::null_mut()), ArsgStatus::NullPointer);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(arsg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/arsg.h")).unwrap()
}

#[test]
fn header_declares_the_api() {
    let h = header();
    for sym in [
        "typedef struct ArsgOptimizer ArsgOptimizer",
        "ARSG_STATUS_OK = 0",
        "ARSG_STATUS_PANIC = 7",
        "ARSG_KIND_ARSG = 6",
        "ARSG_SCHEDULE_INV_SQUARE = 3",
        "arsg_version(",
        "arsg_last_error(",
        "arsg_hyper_constant(",
        "arsg_optimizer_new(",
        "arsg_optimizer_free(",
        "arsg_optimizer_set_box(",
        "arsg_optimizer_step(",
        "arsg_optimizer_params(",
        "arsg_optimizer_dim(",
        "arsg_optimizer_iteration(",
        "arsg_eigenvalues(",
        "arsg_gain_factor(",
        "arsg_stationary_variance(",
        "arsg_theorem1_rate(",
        "arsg_argmin_gain(",
        "arsg_obsb_alpha_factor(",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"arsg.h\"\nint main(void) { ArsgOptimizer *h = 0; ArsgHyper hp = arsg_hyper_constant(0.1, 0.9, 0.99, 0.1, 1e-8);\n\
         return arsg_optimizer_new(ARSG_KIND_ARSG, &hp, 0, 0, &h) == ARSG_STATUS_OK; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}

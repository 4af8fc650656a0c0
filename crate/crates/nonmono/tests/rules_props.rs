mod common;

use common::{close, rng, uniform};
use nonmono::analysis::eta_bar_eigen;
use nonmono::numlin::{Mat, Tolerances};
use nonmono::ops::{AffineOp, Operator};
use nonmono::problems::builtin;
use nonmono::rules::{eta_bound, gamma_set_sign_test, plan_from_oblique, tau_min, Branch, StepRequest, TauChoice};
use nonmono::semimono::ObliqueParams;
use nonmono::solver::PdProblem;
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// `L` of random shape, sometimes with a repeated top singular value.
fn random_l(r: &mut impl Rng, square: bool) -> Mat {
    let m = r.random_range(1..=3);
    let n = if square { m } else { r.random_range(1..=3) };
    if r.random_bool(0.3) {
        let q1 = common::mat(r, m, m).qr().q();
        let q2 = common::mat(r, n, n).qr().q();
        let mut d = Mat::zeros(m, n);
        let top = uniform(r, 0.5, 2.0);
        for i in 0..m.min(n) {
            d[(i, i)] = if i < 2 { top } else { 0.5 * top };
        }
        q1 * d * q2.transpose()
    } else {
        let mut l = common::mat(r, m, n);
        if square {
            l += Mat::identity(m, n) * 1.5;
        }
        l
    }
}

fn problem(l: Mat) -> PdProblem {
    let (m, n) = l.shape();
    let a = Operator::Affine(AffineOp::linear(Mat::identity(n, n)).unwrap());
    let b = Operator::Affine(AffineOp::linear(Mat::identity(m, m)).unwrap());
    PdProblem::new(l, a, b, &tol()).unwrap()
}

fn random_beta(r: &mut impl Rng) -> ObliqueParams {
    ObliqueParams::new(
        uniform(r, -1.0, 1.0),
        uniform(r, -1.0, 1.0),
        uniform(r, -1.0, 1.0),
        uniform(r, -1.0, 1.0),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn eta_bound_equals_eigen_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = problem(random_l(&mut r, false));
        let beta = random_beta(&mut r);
        let nl = p.svd.norm();
        let gamma = uniform(&mut r, -2.0, 1.0).exp();
        let semidefinite = r.random_bool(0.5);
        let tau = if semidefinite { 1.0 / (gamma * nl * nl) } else { uniform(&mut r, 0.05, 0.95) / (gamma * nl * nl) };
        let eb = eta_bound(&beta, &p.svd, gamma, tau, &tol()).unwrap();
        prop_assert_eq!(eb.branch == Branch::Semidefinite, semidefinite);
        let oracle = eta_bar_eigen(&beta, &p, gamma, tau, &tol()).unwrap();
        prop_assert!(close(eb.eta_bar, oracle, 1e-9), "rule {} oracle {}", eb.eta_bar, oracle);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn gamma_set_matches_eigen_sign(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = problem(random_l(&mut r, true));
        if p.svd.rank() < p.n() {
            return Ok(());
        }
        let beta = random_beta(&mut r);
        let nl = p.svd.norm();
        for gamma in [0.1, 0.3, 1.0, 3.0] {
            for f in [0.2, 0.5, 0.8] {
                let tau = f / (gamma * nl * nl);
                let oracle = eta_bar_eigen(&beta, &p, gamma, tau, &tol()).unwrap();
                if oracle.abs() < 1e-9 {
                    continue;
                }
                prop_assert_eq!(gamma_set_sign_test(beta.beta_p, beta.beta_d, &p.svd, gamma, tau), oracle > 0.0);
            }
        }
    }

    #[test]
    fn plans_inside_the_window_are_certified(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = problem(random_l(&mut r, false));
        let beta = random_beta(&mut r);
        let Ok(base) = plan_from_oblique(&beta, &p.svd, &StepRequest::default(), &tol()) else { return Ok(()) };
        let hi = if base.gamma_hi.is_finite() { base.gamma_hi } else { base.gamma_lo + 10.0 };
        let gamma = base.gamma_lo + uniform(&mut r, 0.01, 0.99) * (hi - base.gamma_lo);
        let Ok(probe) = plan_from_oblique(&beta, &p.svd, &StepRequest::gamma(gamma), &tol()) else {
            // An empty τ window at this γ is allowed only when τ_lo ≥ τ_hi.
            return Ok(());
        };
        let tau = if r.random_bool(0.5) {
            TauChoice::Max
        } else {
            TauChoice::Value(probe.tau_lo + uniform(&mut r, 0.01, 0.99) * (probe.tau_hi - probe.tau_lo))
        };
        let plan = plan_from_oblique(&beta, &p.svd, &StepRequest::gamma(gamma).with_tau(tau), &tol()).unwrap();
        prop_assert!(plan.eta_bar > 0.0);
        prop_assert!(plan.lambda > 0.0 && plan.lambda < 2.0 * plan.eta_bar);
        let oracle = eta_bar_eigen(&beta, &p, plan.gamma, plan.tau, &tol()).unwrap();
        prop_assert!(oracle > 0.0);
        prop_assert!(close(oracle, plan.eta_bar, 1e-9));

        // Requests just outside the window are rejected.
        let out = |g: f64, t: TauChoice| plan_from_oblique(&beta, &p.svd, &StepRequest::gamma(g).with_tau(t), &tol()).is_err();
        if base.gamma_hi.is_finite() {
            prop_assert!(out(base.gamma_hi * (1.0 + 1e-6), TauChoice::Max));
        }
        if base.gamma_lo > 0.0 {
            prop_assert!(out(base.gamma_lo * (1.0 - 1e-6), TauChoice::Max));
        }
        prop_assert!(out(gamma, TauChoice::Value(probe.tau_hi * (1.0 + 1e-6))));
        if probe.tau_lo > 0.0 {
            prop_assert!(out(gamma, TauChoice::Value(probe.tau_lo * (1.0 - 1e-6))));
        }
        // A binding τ_min is the zero of η.
        let t = tau_min(beta.beta_p, beta.beta_d, probe.delta, p.svd.norm(), gamma);
        if t > 0.0 && t == probe.tau_lo {
            let eta = eta_bound(&beta, &p.svd, gamma, t, &tol()).unwrap().eta;
            prop_assert!(eta.abs() <= 1e-8, "eta {} at tau_min {}", eta, t);
        }
    }
}

/// At `τ = τ_min(γ)` the bound `η` vanishes.
#[test]
fn tau_min_is_the_zero_of_eta_on_builtins() {
    for name in ["saddle", "qp-indef"] {
        let inst = builtin(name).unwrap();
        let beta = inst.oblique_params(&tol()).unwrap();
        let plan = inst.default_plan(&tol()).unwrap();
        let t = tau_min(
            beta.beta_p,
            beta.beta_d,
            plan.delta,
            inst.problem.svd.norm(),
            plan.gamma,
        );
        assert!(t > 0.0 && t < plan.tau_hi, "{name}: tau_min {t}");
        let eta = eta_bound(&beta, &inst.problem.svd, plan.gamma, t, &tol()).unwrap().eta;
        assert!(eta.abs() < 1e-9, "{name}: eta {eta} at tau_min");
        let inside = eta_bound(&beta, &inst.problem.svd, plan.gamma, t * 1.01, &tol())
            .unwrap()
            .eta;
        assert!(inside > 0.0);
    }
}

#[test]
fn builtin_windows_are_sharp() {
    for name in ["saddle", "qp-indef", "qp-rankdef"] {
        let inst = builtin(name).unwrap();
        let plan = inst.default_plan(&tol()).unwrap();
        let lo = plan.gamma_lo;
        let hi = plan.gamma_hi;
        assert!(hi.is_finite(), "{name}");
        let at = |g: f64| inst.plan(&StepRequest::gamma(g), &tol());
        assert!(at(hi * (1.0 - 1e-6)).is_ok(), "{name} just below gamma_hi");
        assert!(at(hi * (1.0 + 1e-6)).is_err(), "{name} just above gamma_hi");
        if lo > 0.0 {
            assert!(at(lo * (1.0 + 1e-6)).is_ok(), "{name} just above gamma_lo");
            assert!(at(lo * (1.0 - 1e-6)).is_err(), "{name} just below gamma_lo");
        }
    }
}

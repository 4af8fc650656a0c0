mod common;

use common::{min_eig, psd, rng, uniform};
use nonmono::analysis::{
    algo_operator, probe_problem, radius_scan, stable_lambda_bound, tight_lambda, verify_weak_minty_linear,
};
use nonmono::numlin::{Mat, SymMatrix, Tolerances, Vector};
use nonmono::ops::{split, stack, AffineOp, Operator};
use nonmono::problems::{saddle, singvals};
use nonmono::rules::{StepRequest, TauChoice};
use nonmono::solver::{cpa_step, PdProblem};
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// Random `S + K` with `S ⪰ 0` and `K` skew.
fn monotone_matrix(r: &mut impl Rng, n: usize) -> Mat {
    let k = r.random_range(0..=n);
    let g = common::mat(r, n, n);
    psd(r, n, k).as_mat() + (&g - g.transpose()) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stable_bound_separates_contracting_relaxations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let k = common::mat(&mut r, n, n) * 0.5 + Mat::identity(n, n) * 0.5;
        let Ok(bar) = stable_lambda_bound(&k) else { return Ok(()) };
        if !bar.is_finite() {
            return Ok(());
        }
        let radii = radius_scan(&k, &[0.99 * bar, 1.01 * bar]);
        prop_assert!(radii[0] < 1.0 && radii[1] > 1.0, "{:?} at {}", radii, bar);
    }

    #[test]
    fn monotone_problems_allow_relaxation_two(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (m, n) = (r.random_range(1..=3), r.random_range(1..=3));
        let a = monotone_matrix(&mut r, n);
        let b = monotone_matrix(&mut r, m) + Mat::identity(m, m) * 0.1;
        let Ok(p) = PdProblem::new(
            common::mat(&mut r, m, n),
            Operator::Affine(AffineOp::linear(a).unwrap()),
            Operator::Affine(AffineOp::linear(b).unwrap()),
            &tol(),
        ) else { return Ok(()) };
        let nl = p.svd.norm();
        let gamma = uniform(&mut r, 0.1, 2.0);
        let tau = uniform(&mut r, 0.1, 0.9) / (gamma * nl * nl);
        let Ok(bar) = tight_lambda(&p, gamma, tau, false, &tol()) else { return Ok(()) };
        prop_assert!(bar >= 2.0 - 1e-8, "{}", bar);
    }

    #[test]
    fn algorithmic_operator_reproduces_the_step(seed in any::<u64>()) {
        let mut r = rng(seed);
        let Some((p, _)) = (0..50).find_map(|_| common::random_certified(&mut r)) else { return Ok(()) };
        let nl = p.svd.norm();
        let gamma = uniform(&mut r, 0.1, 2.0);
        let tau = if r.random_bool(0.5) { 1.0 / (gamma * nl * nl) } else { uniform(&mut r, 0.1, 0.9) / (gamma * nl * nl) };
        let lambda = uniform(&mut r, 0.1, 1.9);
        let Ok(h) = algo_operator(&p, gamma, tau, lambda, &tol()) else { return Ok(()) };
        let z = common::vector(&mut r, p.n() + p.m());
        let (x, y) = split(&z, p.n());
        let s = cpa_step(&p, gamma, tau, lambda, &x, &y).unwrap();
        let hz = &h * &z;
        prop_assert!((stack(&s.x_next, &s.y_next) - &hz).amax() <= 1e-9 * (1.0 + hz.amax()));
    }

    #[test]
    fn negative_trace_rules_out_monotonicity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (m, n) = (r.random_range(1..=3), r.random_range(1..=3));
        let a = common::mat(&mut r, n, n) * 2.0;
        let b = common::mat(&mut r, m, m) * 2.0;
        let p = PdProblem::new(
            common::mat(&mut r, m, n),
            Operator::Affine(AffineOp::linear(a).unwrap()),
            Operator::Affine(AffineOp::linear(b).unwrap()),
            &tol(),
        ).unwrap();
        let Ok(probe) = probe_problem(&p) else { return Ok(()) };
        let (t, _) = p.linear_forms().unwrap();
        let mats = [
            nonmono::analysis::primal_matrix(&p).unwrap(),
            nonmono::analysis::dual_matrix(&p).unwrap(),
            t,
        ];
        for (flag, mat) in probe.certifies_nonmonotone().iter().zip(mats.iter()) {
            if *flag {
                prop_assert!(min_eig(mat) < 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Tight `β`'s make the relaxation bound exact on the saddle family.
    #[test]
    fn saddle_bound_is_exact_with_tight_parameters(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = saddle(10.0, -0.25, -0.25, 2.0).unwrap();
        let base = inst.default_plan(&tol()).unwrap();
        let g = base.gamma_lo + uniform(&mut r, 0.02, 0.98) * (base.gamma_hi - base.gamma_lo);
        let plan = inst.plan(&StepRequest::gamma(g).with_tau(TauChoice::Max), &tol()).unwrap();
        let bar = tight_lambda(&inst.problem, plan.gamma, plan.tau, true, &tol()).unwrap();
        prop_assert!((2.0 * plan.eta_bar - bar).abs() <= 1e-4 * bar, "2eta {} tight {}", 2.0 * plan.eta_bar, bar);
    }

    #[test]
    fn singvals_family_has_half_identity_weak_minty_solution(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(0..=4);
        let tail: Vec<f64> = (0..k).map(|_| uniform(&mut r, -1.0, 1.0)).collect();
        let inst = singvals(&tail).unwrap();
        let (t, _) = inst.problem.linear_forms().unwrap();
        let dim = t.nrows();
        let slack = verify_weak_minty_linear(&t, &SymMatrix::scaled_identity(dim, 0.5), None).unwrap();
        prop_assert!(slack >= -1e-12, "{}", slack);

        let plan = inst.default_plan(&tol()).unwrap();
        let h = algo_operator(&inst.problem, plan.gamma, plan.tau, plan.lambda, &tol()).unwrap();
        let z0 = common::vector(&mut r, dim);
        let (x, y) = split(&z0, inst.problem.n());
        let s = cpa_step(&inst.problem, plan.gamma, plan.tau, plan.lambda, &x, &y).unwrap();
        let hz: Vector = &h * &z0;
        prop_assert!((stack(&s.x_next, &s.y_next) - hz).amax() <= 1e-12);
    }
}

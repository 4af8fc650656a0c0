mod common;

use common::{close, min_eig, psd, rng, sym, uniform};
use nonmono::analysis::verify_weak_minty_linear;
use nonmono::numlin::{Mat, SymMatrix, Tolerances, Vector};
use nonmono::ops::{AffineOp, BoxNormalCone, Operator};
use nonmono::semimono::{
    cert_box_normal_cone, cert_compose_dtd, cert_inverse, cert_linear_optimal_r, cert_linear_optimal_r_sym,
    cert_parallel_sum, cert_sum, derive_oblique_params, pd_cert_via_calculus, scalar_oblique_params, universal_cert,
    validate_by_sampling, ObliqueParams, PrimalDualCerts, ScalarModuli, SemiCert,
};
use nonmono::solver::PdProblem;
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn affine(r: &mut impl Rng, n: usize) -> AffineOp {
    AffineOp::new(common::mat(r, n, n) * 1.5, common::vector(r, n)).unwrap()
}

fn optimal_cert(r: &mut impl Rng, d: &Mat) -> Option<SemiCert> {
    let m = sym(r, d.nrows()).scale(0.3);
    let rr = cert_linear_optimal_r(d, &m, &tol()).ok()?;
    SemiCert::global(m, rr).ok()
}

fn certified_with_params(r: &mut impl Rng) -> Option<(PdProblem, ScalarModuli, ObliqueParams)> {
    (0..50).find_map(|_| {
        let (p, md) = common::random_certified(r)?;
        let beta = scalar_oblique_params(&md, &p.svd).ok()?;
        Some((p, md, beta))
    })
}

/// Rounding floor for sampled slacks of large certificates.
fn scale(c: &SemiCert) -> f64 {
    1.0 + c.m.amax() + c.r.amax()
}

fn check_algebra(seed: u64) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let n = r.random_range(1..=3);
    let a = affine(&mut r, n);
    let b = affine(&mut r, n);
    let (Some(ca), Some(cb)) = (optimal_cert(&mut r, &a.d), optimal_cert(&mut r, &b.d)) else {
        return Ok(());
    };
    if let Ok(c) = cert_sum(&ca, &cb, &tol()) {
        let op = Operator::Affine(AffineOp::new(&a.d + &b.d, &a.q + &b.q).unwrap());
        prop_assert!(validate_by_sampling(&op, &c, 200, &mut r) >= -1e-9 * scale(&c));
    }
    if let (Some(ai), Some(bi), Ok(c)) = (
        a.d.clone().try_inverse(),
        b.d.clone().try_inverse(),
        cert_parallel_sum(&ca, &cb, &tol()),
    ) {
        if let Some(par) = (ai + bi).try_inverse() {
            let op = Operator::Affine(AffineOp::linear(par).unwrap());
            prop_assert!(validate_by_sampling(&op, &c, 200, &mut r) >= -1e-9 * scale(&c));
        }
    }
    let k = r.random_range(1..=3);
    let d = common::mat(&mut r, k, n);
    if let Ok(c) = cert_compose_dtd(&d, &ca, None, &tol()) {
        let op = Operator::Affine(AffineOp::linear(&d * &a.d * d.transpose()).unwrap());
        prop_assert!(validate_by_sampling(&op, &c, 200, &mut r) >= -1e-9 * scale(&c));
    }
    Ok(())
}

/// Needs a pseudoinverse of a nearly rank-one 3×3 block.
#[test]
fn composition_with_ill_conditioned_kernel_block() {
    check_algebra(3913818109533312937).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_is_an_involution(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let c = SemiCert::at_point(sym(&mut r, n), sym(&mut r, n), common::vector(&mut r, n), common::vector(&mut r, n)).unwrap();
        prop_assert_eq!(cert_inverse(&cert_inverse(&c)), c);
    }

    #[test]
    fn optimal_r_is_tight(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let d = common::mat(&mut r, n, n) * 2.0;
        let m = sym(&mut r, n).scale(0.3);
        let Ok(rr) = cert_linear_optimal_r(&d, &m, &tol()) else { return Ok(()) };
        let slack = (&d + d.transpose()) * 0.5 - m.as_mat() - d.transpose() * rr.as_mat() * &d;
        prop_assert!(min_eig(&slack) >= -1e-8);
        // Any symmetric increase along range(D) breaks the inequality.
        let bump = psd(&mut r, n, 1).scale(1e-3);
        let more = rr.add(&bump);
        let broken = (&d + d.transpose()) * 0.5 - m.as_mat() - d.transpose() * more.as_mat() * &d;
        if (bump.as_mat() * &d).amax() > 1e-6 {
            prop_assert!(min_eig(&broken) < 1e-9);
        }
    }

    #[test]
    fn optimal_r_closed_form_for_symmetric_maps(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let base = common::mat(&mut r, n, n);
        let d = if r.random_bool(0.5) { &base + base.transpose() } else { &base - base.transpose() };
        let m = sym(&mut r, n).scale(0.2);
        match (cert_linear_optimal_r(&d, &m, &tol()), cert_linear_optimal_r_sym(&d, &m, &tol())) {
            (Ok(a), Ok(b)) => prop_assert!((a.as_mat() - b.as_mat()).amax() <= 1e-7 * (1.0 + a.amax())),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn sum_parallel_sum_and_composition_validate(seed in any::<u64>()) {
        check_algebra(seed)?;
    }

    #[test]
    fn universal_certificate_holds_for_any_map(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let rr = psd(&mut r, n, n).add(&SymMatrix::scaled_identity(n, 0.1)).scale(-1.0);
        let rinv = rr.as_mat().clone().try_inverse().unwrap();
        let m = SymMatrix::new(rinv * 0.25 - psd(&mut r, n, n).as_mat());
        let c = universal_cert(&m, &rr).unwrap();
        let op = Operator::Affine(AffineOp::new(common::mat(&mut r, n, n) * 3.0, common::vector(&mut r, n)).unwrap());
        prop_assert!(validate_by_sampling(&op, &c, 200, &mut r) >= -1e-9);
    }

    #[test]
    fn box_cone_certificate_validates(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let lo = common::vector(&mut r, n);
        let hi = &lo + Vector::from_fn(n, |_, _| 0.1 + r.random::<f64>());
        let bx = BoxNormalCone::new(lo.clone(), hi.clone()).unwrap();
        // Random point on the boundary or inside with a matching normal.
        let mut x = lo.clone();
        let mut v = Vector::zeros(n);
        for i in 0..n {
            match r.random_range(0..3) {
                0 => { x[i] = lo[i]; v[i] = -uniform(&mut r, 0.0, 2.0); }
                1 => { x[i] = hi[i]; v[i] = uniform(&mut r, 0.0, 2.0); }
                _ => { x[i] = 0.5 * (lo[i] + hi[i]); }
            }
        }
        let c = cert_box_normal_cone(&bx, &x, &v).unwrap();
        prop_assert!(validate_by_sampling(&Operator::BoxNormalCone(bx), &c, 300, &mut r) >= -1e-9);
    }

    #[test]
    fn matrix_and_scalar_parameters_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let Some((p, md, scalar)) = certified_with_params(&mut r) else { return Ok(()) };
        let certs = PrimalDualCerts::from_scalar(&md, &p.svd);
        let derived = derive_oblique_params(&certs, &p.svd, &tol()).unwrap();
        prop_assert!(close(derived.beta_p, scalar.beta_p, 1e-10));
        prop_assert!(close(derived.beta_d, scalar.beta_d, 1e-10));
        if !p.svd.full_column_rank() {
            prop_assert!(close(derived.beta_pp, scalar.beta_pp, 1e-10));
        }
        if !p.svd.full_row_rank() {
            prop_assert!(close(derived.beta_dp, scalar.beta_dp, 1e-10));
        }
        let via = pd_cert_via_calculus(&certs, &p.l, &tol()).unwrap();
        prop_assert!((via.r.as_mat() - derived.v_matrix(&p.svd).as_mat()).amax() <= 1e-9);
    }

    #[test]
    fn certified_linear_instances_have_oblique_weak_minty_solutions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let Some((p, md, beta)) = certified_with_params(&mut r) else { return Ok(()) };
        let v = beta.v_matrix(&p.svd);
        let (t, _) = p.linear_forms().unwrap();
        let slack = verify_weak_minty_linear(&t, &v, None).unwrap();
        prop_assert!(slack >= -1e-8, "slack {} for {:?}", slack, md);
    }
}

mod common;

use common::{min_eig, psd, rng, sym};
use nonmono::numlin::{
    direct_sum, grouped_svd, min_eig_sym, parallel_sum_matrix, parallel_summable, pinv, spectral_radius, Mat,
    SymMatrix, Tolerances,
};
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// Random matrix with a chosen rank and, sometimes, repeated singular values.
fn structured(r: &mut impl Rng, m: usize, n: usize) -> Mat {
    match r.random_range(0..3) {
        0 => common::mat(r, m, n),
        1 => {
            let k = r.random_range(0..=m.min(n));
            common::mat(r, m, k) * common::mat(r, k, n)
        }
        _ => {
            let q1 = common::mat(r, m, m).qr().q();
            let q2 = common::mat(r, n, n).qr().q();
            let mut d = Mat::zeros(m, n);
            for i in 0..m.min(n) {
                d[(i, i)] = if i < 2 { 2.0 } else { 0.5 };
            }
            q1 * d * q2.transpose()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn svd_reconstructs_and_projects(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (m, n) = (r.random_range(1..=8), r.random_range(1..=8));
        let l = structured(&mut r, m, n);
        let Ok(svd) = grouped_svd(&l, &tol()) else {
            prop_assert!(l.amax() < 1e-12);
            return Ok(());
        };
        prop_assert!((svd.reconstruct() - &l).amax() <= 1e-9);
        let (pr, pk) = (svd.proj_range_lt(), svd.proj_ker_l());
        prop_assert!((&pr * &pr - &pr).amax() <= 1e-9);
        prop_assert!((&pk * &pk - &pk).amax() <= 1e-9);
        prop_assert!((&pr + &pk - Mat::identity(n, n)).amax() <= 1e-9);
        let (qr, qk) = (svd.proj_range_l(), svd.proj_ker_lt());
        prop_assert!((&qr * &qr - &qr).amax() <= 1e-9);
        prop_assert!((&qr + &qk - Mat::identity(m, m)).amax() <= 1e-9);
        prop_assert!((&l * &pk).amax() <= 1e-9);
        for i in 1..svd.d() {
            prop_assert!(svd.sigma[i] < svd.sigma[i - 1]);
        }
        prop_assert_eq!(svd.mult.iter().sum::<usize>(), svd.rank());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parallel_sum_symmetric_and_equivalent_forms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=5);
        let (ka, kb) = (r.random_range(0..=n), r.random_range(1..=n));
        let (a, b) = if r.random_bool(0.5) {
            (psd(&mut r, n, ka), psd(&mut r, n, kb))
        } else {
            (sym(&mut r, n), sym(&mut r, n))
        };
        if !(parallel_summable(&a, &b, &tol()) && parallel_summable(&b, &a, &tol())) {
            return Ok(());
        }
        let ab = parallel_sum_matrix(&a, &b, &tol()).unwrap();
        let ba = parallel_sum_matrix(&b, &a, &tol()).unwrap();
        prop_assert!((ab.as_mat() - ba.as_mat()).amax() <= 1e-9);
        let s = pinv(&(a.as_mat() + b.as_mat()));
        let first = a.as_mat() - a.as_mat() * &s * a.as_mat();
        let second = b.as_mat() - b.as_mat() * &s * b.as_mat();
        prop_assert!((&first - &second).amax() <= 1e-9 * (1.0 + first.amax()));
    }

    #[test]
    fn pinv_respects_direct_sums(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dims: [usize; 4] = core::array::from_fn(|_| r.random_range(1..=4));
        let a = structured(&mut r, dims[0], dims[1]);
        let b = structured(&mut r, dims[2], dims[3]);
        let lhs = pinv(&direct_sum(&a, &b));
        let rhs = direct_sum(&pinv(&a), &pinv(&b));
        prop_assert!((lhs - rhs).amax() <= 1e-9);
    }

    #[test]
    fn min_eig_matches_direct(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=6);
        let s = sym(&mut r, n);
        prop_assert!((min_eig_sym(&s) - min_eig(s.as_mat())).abs() <= 1e-10);
    }
}

#[test]
fn spectral_radius_of_scaled_rotation() {
    for theta in [0.0, 0.3, 1.2, 3.0] {
        let (c, s) = (f64::cos(theta), f64::sin(theta));
        let h = Mat::from_row_slice(2, 2, &[c, -s, s, c]) * 0.9;
        assert!((spectral_radius(&h) - 0.9).abs() < 1e-9);
    }
}

#[test]
fn min_eig_of_quarter_blocks() {
    let s = SymMatrix::scaled_identity(2, 0.25).direct_sum(&SymMatrix::scaled_identity(2, 0.25));
    assert!((min_eig_sym(&s) - 0.25).abs() < 1e-12);
    assert_eq!(min_eig_sym(&SymMatrix::zeros(0)), f64::INFINITY);
}

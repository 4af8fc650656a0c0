#![allow(dead_code)]

use nonmono::numlin::{Mat, SymMatrix, Tolerances, Vector};
use nonmono::ops::{AffineOp, Operator};
use nonmono::semimono::{cert_linear_optimal_r, ScalarModuli};
use nonmono::solver::PdProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn mat(rng: &mut impl Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| uniform(rng, -1.0, 1.0))
}

pub fn vector(rng: &mut impl Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| uniform(rng, -1.0, 1.0))
}

pub fn sym(rng: &mut impl Rng, n: usize) -> SymMatrix {
    SymMatrix::new(mat(rng, n, n))
}

/// `G Gᵀ` with `G` of size `n × rank`.
pub fn psd(rng: &mut impl Rng, n: usize, rank: usize) -> SymMatrix {
    let g = mat(rng, n, rank);
    SymMatrix::new(&g * g.transpose())
}

pub fn min_eig(m: &Mat) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Random linear `A`, `B` with scalar moduli checked against the defining matrix inequality.
pub fn random_certified(r: &mut impl Rng) -> Option<(PdProblem, ScalarModuli)> {
    let n = r.random_range(1..=3);
    let m = r.random_range(1..=3);
    let l = mat(r, m, n);
    let a = mat(r, n, n) + Mat::identity(n, n) * uniform(r, -0.5, 1.5);
    let b = mat(r, m, m) + Mat::identity(m, m) * uniform(r, -0.5, 1.5);
    let mu_a = uniform(r, -1.0, 1.0);
    let rho_b = uniform(r, -1.0, 1.0);
    let ma = SymMatrix::new(l.transpose() * &l * mu_a);
    let ra = cert_linear_optimal_r(&a, &ma, &Tolerances::default()).ok()?;
    // ρ_A I ⪯ R⋆ keeps the certificate valid.
    let rho_a = min_eig(ra.as_mat()) - 1e-9;
    let rb = SymMatrix::new(&l * l.transpose() * rho_b);
    let mb = (&b + b.transpose()) * 0.5 - b.transpose() * rb.as_mat() * &b;
    let mu_b = min_eig(&mb) - 1e-9;
    let md = ScalarModuli::new(mu_a, rho_a, mu_b, rho_b);
    // Independent check of both certificates.
    let ok_a = min_eig(&((&a + a.transpose()) * 0.5 - ma.as_mat() - a.transpose() * &a * rho_a)) >= -1e-8;
    let ok_b =
        min_eig(&((&b + b.transpose()) * 0.5 - Mat::identity(m, m) * mu_b - b.transpose() * rb.as_mat() * &b)) >= -1e-8;
    if !(ok_a && ok_b) {
        return None;
    }
    let p = PdProblem::new(
        l,
        Operator::Affine(AffineOp::linear(a).ok()?),
        Operator::Affine(AffineOp::linear(b).ok()?),
        &Tolerances::default(),
    )
    .ok()?;
    Some((p, md))
}

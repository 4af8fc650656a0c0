//! Spectral analysis of the iteration on linear instances.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numlin::{eigenvalues, singular_values, Mat, SymMatrix, Tolerances};
use crate::semimono::ObliqueParams;
use crate::solver::{assemble_preconditioner, PdProblem};

#[allow(unused_imports)]
use num_traits::Float;

/// Eigenvalues of `1 − κ` below this modulus are stationary modes (zeros of `T`).
const STATIONARY_TOL: f64 = 1e-9;

fn solve_checked(a: &Mat, b: &Mat) -> Result<Mat> {
    let sv = singular_values(a);
    if sv.is_empty() || sv[sv.len() - 1] <= 1e-12 * sv[0] {
        return Err(Error::SingularResolvent);
    }
    a.clone().lu().solve(b).ok_or(Error::SingularResolvent)
}

/// `(M + T)⁻¹ M`.
pub fn resolvent_matrix(t: &Mat, m: &SymMatrix) -> Result<Mat> {
    solve_checked(&(m.as_mat() + t), m.as_mat())
}

/// `H = I + λ((M+T)⁻¹M − I)`.
pub fn algo_operator_matrix(t: &Mat, m: &SymMatrix, lambda: f64) -> Result<Mat> {
    let k = resolvent_matrix(t, m)?;
    let n = k.nrows();
    Ok(Mat::identity(n, n) + (k - Mat::identity(n, n)) * lambda)
}

pub fn algo_operator(problem: &PdProblem, gamma: f64, tau: f64, lambda: f64, tol: &Tolerances) -> Result<Mat> {
    let (t, _) = problem.linear_forms()?;
    let pre = assemble_preconditioner(&problem.l, &problem.svd, gamma, tau, tol)?;
    algo_operator_matrix(&t, &pre.m, lambda)
}

/// `(M + T)⁻¹ M` in the coordinates of `U` (or all of `ℝⁿ⁺ᵐ` if not projected).
pub fn reduced_resolvent(problem: &PdProblem, gamma: f64, tau: f64, projected: bool, tol: &Tolerances) -> Result<Mat> {
    let (t, _) = problem.linear_forms()?;
    let pre = assemble_preconditioner(&problem.l, &problem.svd, gamma, tau, tol)?;
    let k = resolvent_matrix(&t, &pre.m)?;
    Ok(if projected { pre.u.tr_mul(&(k * &pre.u)) } else { k })
}

/// `I + λ(K − I)` for a reduced resolvent `K`.
pub fn relaxed(k: &Mat, lambda: f64) -> Mat {
    let n = k.nrows();
    Mat::identity(n, n) + (k - Mat::identity(n, n)) * lambda
}

/// Supremum of `λ > 0` with `ρ(I + λ(K − I)) < 1`.
///
/// With `w = 1 − κ` over the eigenvalues `κ` of `K`, `|1 − λw| < 1` iff
/// `0 < λ < 2 Re w / |w|²`.
pub fn stable_lambda_bound(k: &Mat) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (re, im) in eigenvalues(k) {
        let (wr, wi) = (1.0 - re, -im);
        let w2 = wr * wr + wi * wi;
        if w2.sqrt() <= STATIONARY_TOL {
            continue;
        }
        if wr <= 0.0 {
            return Err(Error::NoStableLambda);
        }
        best = best.min(2.0 * wr / w2);
    }
    Ok(best)
}

/// Largest relaxation with spectral radius below one, on `range M` when `projected`.
pub fn tight_lambda(problem: &PdProblem, gamma: f64, tau: f64, projected: bool, tol: &Tolerances) -> Result<f64> {
    stable_lambda_bound(&reduced_resolvent(problem, gamma, tau, projected, tol)?)
}

/// Smallest eigenvalue of `½(T + Tᵀ) − TᵀVT`, optionally pulled back by `T⁻¹U`.
pub fn verify_weak_minty_linear(t: &Mat, v: &SymMatrix, range_basis: Option<&Mat>) -> Result<f64> {
    let q = SymMatrix::new((t + t.transpose()) * 0.5 - t.transpose() * v.as_mat() * t);
    match range_basis {
        None => Ok(q.min_eig()),
        Some(u) => {
            let w = solve_checked(t, u).map_err(|_| Error::SingularOperator)?;
            Ok(q.congruence(&w).min_eig())
        }
    }
}

/// Traces of the primal, dual and primal-dual matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceProbe {
    pub primal: f64,
    pub dual: f64,
    pub primal_dual: f64,
}

impl TraceProbe {
    pub fn certifies_nonmonotone(&self) -> [bool; 3] {
        [self.primal < 0.0, self.dual < 0.0, self.primal_dual < 0.0]
    }
}

pub fn trace_negativity_probe(t_p: &Mat, t_d: &Mat, t_pd: &Mat) -> TraceProbe {
    TraceProbe {
        primal: t_p.trace(),
        dual: t_d.trace(),
        primal_dual: t_pd.trace(),
    }
}

/// `A + LᵀBL`.
pub fn primal_matrix(problem: &PdProblem) -> Result<Mat> {
    let (a, _) = problem.a.matrix_form().ok_or(Error::NotLinear)?;
    let (b, _) = problem.b.matrix_form().ok_or(Error::NotLinear)?;
    Ok(a + problem.l.transpose() * b * &problem.l)
}

/// `LA⁻¹Lᵀ + B⁻¹`.
pub fn dual_matrix(problem: &PdProblem) -> Result<Mat> {
    let (ai, _) = problem.a.inverse_matrix_form()?;
    let (bi, _) = problem.b.inverse_matrix_form()?;
    Ok(&problem.l * ai * problem.l.transpose() + bi)
}

pub fn probe_problem(problem: &PdProblem) -> Result<TraceProbe> {
    let (t, _) = problem.linear_forms()?;
    Ok(trace_negativity_probe(
        &primal_matrix(problem)?,
        &dual_matrix(problem)?,
        &t,
    ))
}

/// `1 + λ_min(UᵀVMU)`, the eigenvalue form of the relaxation bound.
pub fn eta_bar_eigen(p: &ObliqueParams, problem: &PdProblem, gamma: f64, tau: f64, tol: &Tolerances) -> Result<f64> {
    let pre = assemble_preconditioner(&problem.l, &problem.svd, gamma, tau, tol)?;
    let v = p.v_matrix(&problem.svd);
    let vr = v.congruence(&pre.u);
    let mr = pre.m.congruence(&pre.u);
    // UᵀVMU = (UᵀVU)(UᵀMU) is similar to Mr^½ Vr Mr^½.
    let eig = mr.as_mat().clone().symmetric_eigen();
    let half = &eig.eigenvectors
        * Mat::from_diagonal(&eig.eigenvalues.map(|e| e.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    Ok(1.0 + vr.congruence(&half).min_eig())
}

/// Theorem bound next to the spectral bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralReport {
    pub lambda_theorem: f64,
    pub lambda_spectral: f64,
    /// `λ_spectral − λ_theorem`.
    pub slack: f64,
}

pub fn spectral_report(
    problem: &PdProblem,
    gamma: f64,
    tau: f64,
    eta_bar: f64,
    projected: bool,
    tol: &Tolerances,
) -> Result<SpectralReport> {
    let lambda_spectral = tight_lambda(problem, gamma, tau, projected, tol)?;
    let lambda_theorem = 2.0 * eta_bar;
    Ok(SpectralReport {
        lambda_theorem,
        lambda_spectral,
        slack: lambda_spectral - lambda_theorem,
    })
}

/// `ρ(I + λ(K − I))` over a grid of `λ`.
pub fn radius_scan(k: &Mat, lambdas: &[f64]) -> Vec<f64> {
    lambdas
        .iter()
        .map(|&l| crate::numlin::spectral_radius(&relaxed(k, l)))
        .collect()
}

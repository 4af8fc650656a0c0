//! Builtin instances with known solutions and certificates.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numlin::{pinv, Mat, SymMatrix, Tolerances, Vector};
use crate::ops::{AffineOp, BoxNormalCone, Operator};
use crate::rules::{plan_from_moduli, plan_from_oblique, StepRequest, StepsizePlan, TauChoice};
use crate::semimono::{derive_oblique_params, scalar_oblique_params, ObliqueParams, PrimalDualCerts, ScalarModuli};
use crate::solver::PdProblem;

#[allow(unused_imports)]
use num_traits::Float;

pub const BUILTIN_NAMES: [&str; 5] = ["saddle", "singvals", "qp-indef", "qp-rankdef", "monotone"];

/// Certificates that drive the stepsize plan.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Certificates {
    Scalar(ScalarModuli),
    Matrix(PrimalDualCerts),
    Oblique(ObliqueParams),
}

#[derive(Clone, Debug)]
pub struct Reference {
    pub name: String,
    pub certificates: Certificates,
    /// Scalar moduli from the semimonotone reading of the instance, if any.
    pub printed_moduli: Option<ScalarModuli>,
    pub default_request: StepRequest,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub problem: PdProblem,
    pub reference: Reference,
}

impl Instance {
    pub fn oblique_params(&self, tol: &Tolerances) -> Result<ObliqueParams> {
        let svd = &self.problem.svd;
        match &self.reference.certificates {
            Certificates::Scalar(md) => scalar_oblique_params(md, svd),
            Certificates::Matrix(c) => derive_oblique_params(c, svd, tol),
            Certificates::Oblique(p) => Ok(*p),
        }
    }

    pub fn plan(&self, req: &StepRequest, tol: &Tolerances) -> Result<StepsizePlan> {
        match &self.reference.certificates {
            Certificates::Scalar(md) => plan_from_moduli(md, &self.problem.svd, req, tol),
            _ => plan_from_oblique(&self.oblique_params(tol)?, &self.problem.svd, req, tol),
        }
    }

    /// Plan from the printed scalar moduli.
    pub fn printed_plan(&self, req: &StepRequest, tol: &Tolerances) -> Result<StepsizePlan> {
        let md = self
            .reference
            .printed_moduli
            .as_ref()
            .ok_or_else(|| Error::UnknownName(self.reference.name.clone() + " has no printed moduli"))?;
        plan_from_moduli(md, &self.problem.svd, req, tol)
    }

    pub fn default_plan(&self, tol: &Tolerances) -> Result<StepsizePlan> {
        self.plan(&self.reference.default_request, tol)
    }
}

fn vecf(v: &[f64]) -> Vector {
    Vector::from_row_slice(v)
}

/// Skew saddle `A = [[0, a], [−a, 0]]`, `B = diag(b, b, c)`, `L = [[ℓ, 0], [0, ℓ], [0, 0]]`.
pub fn saddle(a: f64, b: f64, c: f64, ell: f64) -> Result<Instance> {
    let tol = Tolerances::default();
    let am = Operator::Affine(AffineOp::linear(Mat::from_row_slice(2, 2, &[0.0, a, -a, 0.0]))?);
    let bm = Operator::Affine(AffineOp::diagonal(&[b, b, c]));
    let l = Mat::from_row_slice(3, 2, &[ell, 0.0, 0.0, ell, 0.0, 0.0]);
    let problem = PdProblem::new(l, am, bm, &tol)?.with_solution(Vector::zeros(2), Vector::zeros(3))?;
    let s2 = a * a + b * b * ell.powi(4);
    let tight = ObliqueParams::new(b * ell * ell / s2, f64::INFINITY, b * a * a / s2, c);
    let defaults = (a, b, c, ell) == (10.0, -0.25, -0.25, 2.0);
    Ok(Instance {
        problem,
        reference: Reference {
            name: "saddle".to_string(),
            certificates: Certificates::Oblique(tight),
            printed_moduli: defaults.then(|| ScalarModuli::new(1.0, -1.0 / 25.0, -0.3, 0.2)),
            default_request: StepRequest::default(),
        },
    })
}

/// `L = diag(ℓ)`, `A = diag(1 + √(1 − ℓᵢ²))`, `B = A⁻¹`, with `ℓ₁ = 1`.
pub fn singvals(tail: &[f64]) -> Result<Instance> {
    let tol = Tolerances::default();
    let mut ell: Vec<f64> = alloc::vec![1.0];
    for &l in tail {
        if !(l.abs() <= 1.0) {
            return Err(Error::InvalidModuli("singular values must lie in [−1, 1]".into()));
        }
        ell.push(l);
    }
    let a: Vec<f64> = ell.iter().map(|l| 1.0 + (1.0 - l * l).sqrt()).collect();
    let b: Vec<f64> = a.iter().map(|v| 1.0 / v).collect();
    let n = ell.len();
    let l = Mat::from_diagonal(&vecf(&ell));
    let problem = PdProblem::new(
        l,
        Operator::Affine(AffineOp::diagonal(&a)),
        Operator::Affine(AffineOp::diagonal(&b)),
        &tol,
    )?
    .with_solution(Vector::zeros(n), Vector::zeros(n))?;
    Ok(Instance {
        problem,
        reference: Reference {
            name: "singvals".to_string(),
            certificates: Certificates::Oblique(ObliqueParams::new(0.5, 0.5, 0.5, 0.5)),
            printed_moduli: Some(ScalarModuli::new(0.5, 0.5, 0.5, 0.5)),
            default_request: StepRequest::gamma(1.0).with_tau(TauChoice::Max),
        },
    })
}

fn box_qp(q: &[f64], lin: &[f64], l: Mat, lo: &[f64], hi: &[f64]) -> Result<PdProblem> {
    let a = Operator::Affine(AffineOp::new(Mat::from_diagonal(&vecf(q)), vecf(lin))?);
    let b = Operator::BoxNormalCone(BoxNormalCone::new(vecf(lo), vecf(hi))?);
    PdProblem::new(l, a, b, &Tolerances::default())
}

/// `y⋆ = −(L⁺)ᵀ(Qx⋆ + q)`.
fn dual_point(p: &PdProblem, x: &Vector) -> Vector {
    let (d, q) = p.a.matrix_form().expect("affine A");
    -(pinv(&p.l).transpose() * (d * x + q))
}

/// Indefinite box-constrained quadratic program with full row rank `L`.
pub fn qp_indef() -> Result<Instance> {
    let l = Mat::from_row_slice(2, 3, &[1.0, 0.25, 0.0, 0.0, 1.0, 0.0]);
    let p = box_qp(&[1.0, -1.0, 2.0], &[-1.0, 1.0, -1.0], l, &[2.0, 2.0], &[4.0, 4.0])?;
    let x = vecf(&[1.0, 4.0, 0.5]);
    let y = dual_point(&p, &x);
    let problem = p.with_solution(x, y)?;
    let certs = PrimalDualCerts {
        m_a: SymMatrix::new(Mat::from_row_slice(2, 2, &[16.0, -4.0, -4.0, -15.0]) / 16.0),
        r_a: SymMatrix::zeros(3),
        r_a_prime: SymMatrix::from_diagonal(&[0.0, 0.0, 0.5]),
        m_b: SymMatrix::from_diagonal(&[0.0, 1.5]),
        m_b_prime: SymMatrix::zeros(2),
        r_b: SymMatrix::zeros(3),
    };
    Ok(Instance {
        problem,
        reference: Reference {
            name: "qp-indef".to_string(),
            certificates: Certificates::Matrix(certs),
            printed_moduli: None,
            default_request: StepRequest::default(),
        },
    })
}

/// Nonconvex box-constrained quadratic program with rank-deficient `L`.
pub fn qp_rankdef() -> Result<Instance> {
    let l = Mat::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, -1.0, 0.0]);
    let lp = pinv(&l);
    let p = box_qp(&[-3.0, -2.0, 1.0], &[0.0, 1.0, 0.0], l, &[0.5; 3], &[1.0; 3])?;
    let x = vecf(&[1.0, 0.0, 0.0]);
    let y = dual_point(&p, &x);
    let problem = p.with_solution(x, y)?;
    let m_a = SymMatrix::from_diagonal(&[-3.0, -2.0, 0.0]).congruence(&lp);
    let certs = PrimalDualCerts {
        m_a,
        r_a: SymMatrix::zeros(3),
        r_a_prime: SymMatrix::from_diagonal(&[0.0, 0.0, 1.0]),
        m_b: SymMatrix::from_diagonal(&[2.0, 1.0, 3.0]),
        m_b_prime: SymMatrix::zeros(3),
        r_b: SymMatrix::zeros(3),
    };
    Ok(Instance {
        problem,
        reference: Reference {
            name: "qp-rankdef".to_string(),
            certificates: Certificates::Matrix(certs),
            printed_moduli: Some(ScalarModuli::new(-1.0, 0.0, 2.0, 0.0)),
            default_request: StepRequest::default(),
        },
    })
}

/// `L = I`, `A`, `B` diagonal positive semidefinite.
pub fn monotone(a: &[f64], b: &[f64]) -> Result<Instance> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch("A and B must have equal size".into()));
    }
    if a.iter().chain(b.iter()).any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidModuli(
            "monotone instance needs nonnegative diagonals".into(),
        ));
    }
    let n = a.len();
    let problem = PdProblem::new(
        Mat::identity(n, n),
        Operator::Affine(AffineOp::diagonal(a)),
        Operator::Affine(AffineOp::diagonal(b)),
        &Tolerances::default(),
    )?
    .with_solution(Vector::zeros(n), Vector::zeros(n))?;
    Ok(Instance {
        problem,
        reference: Reference {
            name: "monotone".to_string(),
            certificates: Certificates::Scalar(ScalarModuli::zero()),
            printed_moduli: None,
            default_request: StepRequest::default(),
        },
    })
}

pub fn builtin(name: &str) -> Result<Instance> {
    match name {
        "saddle" => saddle(10.0, -0.25, -0.25, 2.0),
        "singvals" => singvals(&[0.5, 0.2]),
        "qp-indef" => qp_indef(),
        "qp-rankdef" => qp_rankdef(),
        "monotone" => monotone(&[1.0, 2.0], &[0.5, 1.0]),
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

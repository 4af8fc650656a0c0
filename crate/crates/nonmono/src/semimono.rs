//! (M, R)-semimonotone certificates and their calculus.
//!
//! An operator `A` is `(M, R)`-semimonotone at `(x̄, ȳ)` when
//! `⟨x − x̄, y − ȳ⟩ ≥ |x − x̄|²_M + |y − ȳ|²_R` for every `(x, y)` in its
//! graph, and globally when this holds at every graph point.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numlin::{
    direct_sum, in_parallel_domain, in_parallel_domain_scalar, max_eig_sym, min_eig_sym, parallel_sum_matrix,
    parallel_sum_scalar, pinv_abs, pinv_rel, rank_abs, spectral_norm, GroupedSvd, Mat, SymMatrix, Tolerances, Vector,
};
use crate::ops::{AffineOp, BoxNormalCone, Operator};

/// Default floor for the smallest eigenvalue of a linear certificate.
pub const LINEAR_CERT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Scope {
    Global,
    AtPoint { x: Vector, y: Vector },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemiCert {
    pub m: SymMatrix,
    pub r: SymMatrix,
    pub scope: Scope,
    /// Valid for every operator of this dimension.
    pub universal: bool,
}

impl SemiCert {
    pub fn global(m: SymMatrix, r: SymMatrix) -> Result<Self> {
        check_pair(&m, &r)?;
        Ok(SemiCert {
            m,
            r,
            scope: Scope::Global,
            universal: false,
        })
    }

    pub fn at_point(m: SymMatrix, r: SymMatrix, x: Vector, y: Vector) -> Result<Self> {
        check_pair(&m, &r)?;
        if x.len() != m.dim() || y.len() != m.dim() {
            return Err(Error::DimensionMismatch(format!(
                "certificate of dimension {} at point of lengths {}, {}",
                m.dim(),
                x.len(),
                y.len()
            )));
        }
        Ok(SemiCert {
            m,
            r,
            scope: Scope::AtPoint { x, y },
            universal: false,
        })
    }

    /// `(μ I, ρ I)`.
    pub fn scalar(n: usize, mu: f64, rho: f64) -> Self {
        SemiCert {
            m: SymMatrix::scaled_identity(n, mu),
            r: SymMatrix::scaled_identity(n, rho),
            scope: Scope::Global,
            universal: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `⟨Δx, Δy⟩ − |Δx|²_M − |Δy|²_R` for a pair of graph points.
    pub fn pair_slack(&self, x: &Vector, y: &Vector, xb: &Vector, yb: &Vector) -> f64 {
        let dx = x - xb;
        let dy = y - yb;
        dx.dot(&dy) - self.m.quad(&dx) - self.r.quad(&dy)
    }
}

fn check_pair(m: &SymMatrix, r: &SymMatrix) -> Result<()> {
    if m.dim() != r.dim() {
        return Err(Error::DimensionMismatch(format!(
            "M is {}x{} but R is {}x{}",
            m.dim(),
            m.dim(),
            r.dim(),
            r.dim()
        )));
    }
    Ok(())
}

/// `A` is `(μ_A LᵀL, ρ_A I)`- and `B` is `(μ_B I, ρ_B LLᵀ)`-semimonotone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarModuli {
    pub mu_a: f64,
    pub rho_a: f64,
    pub mu_b: f64,
    pub rho_b: f64,
}

/// Sign structure of scalar moduli.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuliCase {
    /// All moduli zero.
    Monotone,
    /// `μ_A + μ_B > 0`, `ρ_A = ρ_B = 0`.
    Mu,
    /// `ρ_A + ρ_B > 0`, `μ_A = μ_B = 0`.
    Rho,
    /// Both sums positive and `[μ_A□μ_B]₋[ρ_A□ρ_B]₋ < 1/(4|L|²)`.
    Mixed,
}

impl ScalarModuli {
    pub fn new(mu_a: f64, rho_a: f64, mu_b: f64, rho_b: f64) -> Self {
        ScalarModuli {
            mu_a,
            rho_a,
            mu_b,
            rho_b,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn mu_par(&self) -> Result<f64> {
        parallel_sum_scalar(self.mu_a, self.mu_b)
    }

    pub fn rho_par(&self) -> Result<f64> {
        parallel_sum_scalar(self.rho_a, self.rho_b)
    }

    pub fn classify(&self, norm_l: f64) -> Result<ModuliCase> {
        let all = [self.mu_a, self.rho_a, self.mu_b, self.rho_b];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModuli("moduli must be finite".into()));
        }
        let mu_zero = self.mu_a == 0.0 && self.mu_b == 0.0;
        let rho_zero = self.rho_a == 0.0 && self.rho_b == 0.0;
        let mu_sum = self.mu_a + self.mu_b;
        let rho_sum = self.rho_a + self.rho_b;
        if mu_zero && rho_zero {
            return Ok(ModuliCase::Monotone);
        }
        if rho_zero {
            return if mu_sum > 0.0 {
                Ok(ModuliCase::Mu)
            } else {
                Err(Error::CaseViolated(format!(
                    "rho_A = rho_B = 0 requires mu_A + mu_B > 0, got {mu_sum}"
                )))
            };
        }
        if mu_zero {
            return if rho_sum > 0.0 {
                Ok(ModuliCase::Rho)
            } else {
                Err(Error::CaseViolated(format!(
                    "mu_A = mu_B = 0 requires rho_A + rho_B > 0, got {rho_sum}"
                )))
            };
        }
        if !(mu_sum > 0.0 && rho_sum > 0.0) {
            return Err(Error::CaseViolated(format!(
                "mixed moduli require mu_A + mu_B > 0 and rho_A + rho_B > 0, got {mu_sum} and {rho_sum}"
            )));
        }
        let mu = self.mu_par()?;
        let rho = self.rho_par()?;
        let prod = neg(mu) * neg(rho);
        let cap = 1.0 / (4.0 * norm_l * norm_l);
        if prod < cap {
            Ok(ModuliCase::Mixed)
        } else {
            Err(Error::CaseViolated(format!(
                "[mu_A□mu_B]_-[rho_A□rho_B]_- = {prod} must be below 1/(4|L|^2) = {cap}"
            )))
        }
    }
}

/// `[−a]₊ = max(−a, 0)`, the magnitude of the negative part.
pub fn neg(a: f64) -> f64 {
    (-a).max(0.0)
}

/// `[a]₊ = max(a, 0)`.
pub fn pos(a: f64) -> f64 {
    a.max(0.0)
}

/// The quadruple `(β_P, β_P′, β_D, β_D′)` of the block weak-Minty matrix
/// `V = (β_P XXᵀ + β_P′ X′X′ᵀ) ⊕ (β_D YYᵀ + β_D′ Y′Y′ᵀ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObliqueParams {
    pub beta_p: f64,
    pub beta_pp: f64,
    pub beta_d: f64,
    pub beta_dp: f64,
}

impl ObliqueParams {
    pub fn new(beta_p: f64, beta_pp: f64, beta_d: f64, beta_dp: f64) -> Self {
        ObliqueParams {
            beta_p,
            beta_pp,
            beta_d,
            beta_dp,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    /// Assembles `V`. Infinite `β′` only multiply empty bases and are dropped.
    pub fn v_matrix(&self, svd: &GroupedSvd) -> SymMatrix {
        let mut vp = svd.proj_range_lt() * self.beta_p;
        if svd.xp.ncols() > 0 {
            vp += svd.proj_ker_l() * self.beta_pp;
        }
        let mut vd = svd.proj_range_l() * self.beta_d;
        if svd.yp.ncols() > 0 {
            vd += svd.proj_ker_lt() * self.beta_dp;
        }
        SymMatrix::new(direct_sum(&vp, &vd))
    }
}

/// Matrices of the primal-dual certificate: `A` is
/// `(LᵀM_A L, R_A + R_A′)`- and `B` is `(M_B + M_B′, L R_B Lᵀ)`-semimonotone.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualCerts {
    pub m_a: SymMatrix,
    pub r_a: SymMatrix,
    pub r_a_prime: SymMatrix,
    pub m_b: SymMatrix,
    pub m_b_prime: SymMatrix,
    pub r_b: SymMatrix,
}

impl PrimalDualCerts {
    /// Matrix certificates induced by scalar moduli.
    pub fn from_scalar(md: &ScalarModuli, svd: &GroupedSvd) -> Self {
        let pyy = svd.proj_range_l();
        let pxx = svd.proj_range_lt();
        PrimalDualCerts {
            m_a: SymMatrix::new(&pyy * md.mu_a),
            r_a: SymMatrix::new(&pxx * md.rho_a),
            r_a_prime: SymMatrix::new(svd.proj_ker_l() * md.rho_a),
            m_b: SymMatrix::new(&pyy * md.mu_b),
            m_b_prime: SymMatrix::new(svd.proj_ker_lt() * md.mu_b),
            r_b: SymMatrix::new(&pxx * md.rho_b),
        }
    }

    pub fn zero(n: usize, m: usize) -> Self {
        PrimalDualCerts {
            m_a: SymMatrix::zeros(m),
            r_a: SymMatrix::zeros(n),
            r_a_prime: SymMatrix::zeros(n),
            m_b: SymMatrix::zeros(m),
            m_b_prime: SymMatrix::zeros(m),
            r_b: SymMatrix::zeros(n),
        }
    }

    /// `(LᵀM_A L, R_A + R_A′)`.
    pub fn cert_a(&self, l: &Mat) -> SymMatrix {
        self.m_a.congruence(l)
    }

    /// Certificate of `A` as a global [`SemiCert`].
    pub fn semicert_a(&self, l: &Mat) -> SemiCert {
        SemiCert {
            m: self.m_a.congruence(l),
            r: self.r_a.add(&self.r_a_prime),
            scope: Scope::Global,
            universal: false,
        }
    }

    /// Certificate of `B` as a global [`SemiCert`].
    pub fn semicert_b(&self, l: &Mat) -> SemiCert {
        SemiCert {
            m: self.m_b.add(&self.m_b_prime),
            r: self.r_b.congruence(&l.transpose()),
            scope: Scope::Global,
            universal: false,
        }
    }
}

/// Smallest eigenvalue of `½(D + Dᵀ) − M − DᵀRD`.
pub fn linear_cert_slack(d: &Mat, m: &SymMatrix, r: &SymMatrix) -> Result<f64> {
    let n = d.nrows();
    if !d.is_square() || m.dim() != n || r.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "D is {}x{}, M is {}x{}, R is {}x{}",
            d.nrows(),
            d.ncols(),
            m.dim(),
            m.dim(),
            r.dim(),
            r.dim()
        )));
    }
    let sym = (d + d.transpose()) * 0.5;
    let s = SymMatrix::new(sym - m.as_mat() - d.transpose() * r.as_mat() * d);
    Ok(min_eig_sym(&s))
}

/// `D` is `(M, R)`-semimonotone.
pub fn check_linear_cert(d: &Mat, m: &SymMatrix, r: &SymMatrix) -> Result<bool> {
    Ok(linear_cert_slack(d, m, r)? >= -LINEAR_CERT_TOL)
}

/// Certificate valid for every operator: `R ≺ 0` and `M ⪯ ¼R⁻¹`.
pub fn universal_cert(m: &SymMatrix, r: &SymMatrix) -> Result<SemiCert> {
    check_pair(m, r)?;
    if !(max_eig_sym(r) < 0.0) {
        return Err(Error::InvalidModuli(
            "universal certificate requires R negative definite".into(),
        ));
    }
    let rinv = r
        .as_mat()
        .clone()
        .try_inverse()
        .ok_or(Error::InvalidModuli("R is singular".into()))?;
    let gap = SymMatrix::new(rinv * 0.25 - m.as_mat());
    let scale = spectral_norm(m).max(1.0);
    if min_eig_sym(&gap) < -LINEAR_CERT_TOL * scale {
        return Err(Error::InvalidModuli("universal certificate requires M ⪯ ¼R⁻¹".into()));
    }
    Ok(SemiCert {
        m: m.clone(),
        r: r.clone(),
        scope: Scope::Global,
        universal: true,
    })
}

/// Certificate of `A⁻¹`.
pub fn cert_inverse(c: &SemiCert) -> SemiCert {
    SemiCert {
        m: c.r.clone(),
        r: c.m.clone(),
        scope: match &c.scope {
            Scope::Global => Scope::Global,
            Scope::AtPoint { x, y } => Scope::AtPoint {
                x: y.clone(),
                y: x.clone(),
            },
        },
        universal: c.universal,
    }
}

/// Certificate of `x ↦ w + αA(x + u)`.
pub fn cert_scale_shift(c: &SemiCert, alpha: f64, u: &Vector, w: &Vector) -> Result<SemiCert> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidModuli(format!("scaling requires alpha > 0, got {alpha}")));
    }
    if u.len() != c.dim() || w.len() != c.dim() {
        return Err(Error::DimensionMismatch(
            "shift vectors do not match the certificate".into(),
        ));
    }
    Ok(SemiCert {
        m: c.m.scale(alpha),
        r: c.r.scale(1.0 / alpha),
        scope: match &c.scope {
            Scope::Global => Scope::Global,
            Scope::AtPoint { x, y } => Scope::AtPoint {
                x: x - u,
                y: w + y * alpha,
            },
        },
        universal: c.universal,
    })
}

fn concat(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Certificate of `A × B`.
pub fn cert_cartesian(ca: &SemiCert, cb: &SemiCert) -> Result<SemiCert> {
    let scope = match (&ca.scope, &cb.scope) {
        (Scope::Global, Scope::Global) => Scope::Global,
        (Scope::AtPoint { x: xa, y: ya }, Scope::AtPoint { x: xb, y: yb }) => Scope::AtPoint {
            x: concat(xa, xb),
            y: concat(ya, yb),
        },
        _ => {
            return Err(Error::DimensionMismatch(
                "cartesian product of a global and a pointwise certificate".into(),
            ))
        }
    };
    Ok(SemiCert {
        m: ca.m.direct_sum(&cb.m),
        r: ca.r.direct_sum(&cb.r),
        scope,
        universal: ca.universal && cb.universal,
    })
}

fn same_dim(ca: &SemiCert, cb: &SemiCert) -> Result<()> {
    if ca.dim() != cb.dim() {
        return Err(Error::DimensionMismatch(format!(
            "certificates of dimension {} and {}",
            ca.dim(),
            cb.dim()
        )));
    }
    Ok(())
}

fn close(a: &Vector, b: &Vector) -> bool {
    (a - b).amax() <= 1e-12 * (1.0 + a.amax().max(b.amax()))
}

/// Certificate of `A + B`: `(M_A + M_B, R_A □ R_B)`.
pub fn cert_sum(ca: &SemiCert, cb: &SemiCert, tol: &Tolerances) -> Result<SemiCert> {
    same_dim(ca, cb)?;
    if !in_parallel_domain(&ca.r, &cb.r, tol) {
        return Err(Error::NotParallelSummable);
    }
    let scope = match (&ca.scope, &cb.scope) {
        (Scope::Global, Scope::Global) => Scope::Global,
        (Scope::AtPoint { x: xa, y: ya }, Scope::AtPoint { x: xb, y: yb }) => {
            if !close(xa, xb) {
                return Err(Error::DimensionMismatch("sum requires a common base point x".into()));
            }
            Scope::AtPoint {
                x: xa.clone(),
                y: ya + yb,
            }
        }
        _ => {
            return Err(Error::DimensionMismatch(
                "sum of a global and a pointwise certificate".into(),
            ))
        }
    };
    Ok(SemiCert {
        m: ca.m.add(&cb.m),
        r: parallel_sum_matrix(&ca.r, &cb.r, tol)?,
        scope,
        universal: false,
    })
}

/// Certificate of `A □ B = (A⁻¹ + B⁻¹)⁻¹`: `(M_A □ M_B, R_A + R_B)`.
pub fn cert_parallel_sum(ca: &SemiCert, cb: &SemiCert, tol: &Tolerances) -> Result<SemiCert> {
    same_dim(ca, cb)?;
    if !in_parallel_domain(&ca.m, &cb.m, tol) {
        return Err(Error::NotParallelSummable);
    }
    let scope = match (&ca.scope, &cb.scope) {
        (Scope::Global, Scope::Global) => Scope::Global,
        (Scope::AtPoint { x: xa, y: ya }, Scope::AtPoint { x: xb, y: yb }) => {
            if !close(ya, yb) {
                return Err(Error::DimensionMismatch(
                    "parallel sum requires a common base point y".into(),
                ));
            }
            Scope::AtPoint {
                x: xa + xb,
                y: ya.clone(),
            }
        }
        _ => {
            return Err(Error::DimensionMismatch(
                "parallel sum of a global and a pointwise certificate".into(),
            ))
        }
    };
    Ok(SemiCert {
        m: parallel_sum_matrix(&ca.m, &cb.m, tol)?,
        r: ca.r.add(&cb.r),
        scope,
        universal: false,
    })
}

fn kernel_projector(d: &Mat, tol: &Tolerances) -> Mat {
    let n = d.ncols();
    let dp = pinv_rel(d, tol.rank_tol);
    SymMatrix::new(Mat::identity(n, n) - dp * d).into_inner()
}

/// Solvability of `DᵀXD ⪯ Y`: `P Y P ⪰ 0` and `rank(PYP) = rank(PY)` with
/// `P` the projector onto `ker D`.
pub fn lmi_feasible(d: &Mat, y: &SymMatrix, tol: &Tolerances) -> Result<bool> {
    if d.ncols() != y.dim() {
        return Err(Error::DimensionMismatch(format!(
            "D is {}x{} but Y is {}x{}",
            d.nrows(),
            d.ncols(),
            y.dim(),
            y.dim()
        )));
    }
    let p = kernel_projector(d, tol);
    let pyp = SymMatrix::new(&p * y.as_mat() * &p);
    let thresh = tol.rank_tol * spectral_norm(y).max(1.0);
    if pyp.dim() > 0 && min_eig_sym(&pyp) < -thresh {
        return Ok(false);
    }
    Ok(rank_abs(&pyp, thresh) == rank_abs(&(&p * y.as_mat()), thresh))
}

/// Largest symmetric `X` with `DᵀXD ⪯ Y`:
/// `X⋆ = (D⁺)ᵀ(Y − YP(PYP)⁺PY)D⁺`.
pub fn lmi_solve(d: &Mat, y: &SymMatrix, tol: &Tolerances) -> Result<SymMatrix> {
    if !lmi_feasible(d, y, tol)? {
        return Err(Error::Infeasible);
    }
    let p = kernel_projector(d, tol);
    let thresh = tol.rank_tol * spectral_norm(y).max(1.0);
    let yy = y.as_mat();
    let pyp = &p * yy * &p;
    let inner = yy - yy * &p * pinv_abs(&pyp, thresh) * &p * yy;
    let dp = pinv_rel(d, tol.rank_tol);
    Ok(SymMatrix::new(dp.transpose() * inner * dp))
}

/// `[0 I] [[−Y, Dᵀ], [D, 0]]⁺ [0; I]`.
pub fn lmi_solve_bordered(d: &Mat, y: &SymMatrix, tol: &Tolerances) -> Result<SymMatrix> {
    if !lmi_feasible(d, y, tol)? {
        return Err(Error::Infeasible);
    }
    Ok(bordered_block(d, &(-y.as_mat()), tol))
}

fn bordered_block(d: &Mat, top_left: &Mat, tol: &Tolerances) -> SymMatrix {
    let (m, n) = d.shape();
    let mut big = Mat::zeros(n + m, n + m);
    big.view_mut((0, 0), (n, n)).copy_from(top_left);
    big.view_mut((0, n), (n, m)).copy_from(&d.transpose());
    big.view_mut((n, 0), (m, n)).copy_from(d);
    let inv = pinv_rel(&big, tol.rank_tol);
    SymMatrix::new(inv.view((n, n), (m, m)).into_owned())
}

/// Tightest `R` for which the linear map `D` is `(M, R)`-semimonotone.
pub fn cert_linear_optimal_r(d: &Mat, m: &SymMatrix, tol: &Tolerances) -> Result<SymMatrix> {
    if !d.is_square() || d.nrows() != m.dim() {
        return Err(Error::DimensionMismatch("D must be square and match M".into()));
    }
    let sym = (d + d.transpose()) * 0.5;
    let y = SymMatrix::new(&sym - m.as_mat());
    if !lmi_feasible(d, &y, tol)? {
        return Err(Error::Infeasible);
    }
    Ok(bordered_block(d, &(m.as_mat() - sym), tol))
}

/// Closed form of [`cert_linear_optimal_r`] for symmetric or skew `D`:
/// `(½(D+Dᵀ))⁺ − (D⁺)ᵀMD⁺ + (D⁺)ᵀMP(PMP)⁺PMD⁺`.
pub fn cert_linear_optimal_r_sym(d: &Mat, m: &SymMatrix, tol: &Tolerances) -> Result<SymMatrix> {
    let asym = (d - d.transpose()).amax();
    let sym_err = (d + d.transpose()).amax();
    let scale = d.amax().max(1.0);
    if asym > 1e-12 * scale && sym_err > 1e-12 * scale {
        return Err(Error::DimensionMismatch("D must be symmetric or skew-symmetric".into()));
    }
    let sym = (d + d.transpose()) * 0.5;
    let y = SymMatrix::new(&sym - m.as_mat());
    if !lmi_feasible(d, &y, tol)? {
        return Err(Error::Infeasible);
    }
    let p = kernel_projector(d, tol);
    let dp = pinv_rel(d, tol.rank_tol);
    let mm = m.as_mat();
    let thresh = tol.rank_tol * spectral_norm(mm).max(1.0);
    let pmp = &p * mm * &p;
    let out = pinv_rel(&sym, tol.rank_tol) - dp.transpose() * mm * &dp
        + dp.transpose() * mm * &p * pinv_abs(&pmp, thresh) * &p * mm * &dp;
    Ok(SymMatrix::new(out))
}

/// Certificate of `D T Dᵀ` from a `(M, Y)` certificate of `T`. A pointwise
/// certificate at `(Dᵀx̄, ȳ)` needs `x̄`.
pub fn cert_compose_dtd(d: &Mat, ct: &SemiCert, xbar: Option<&Vector>, tol: &Tolerances) -> Result<SemiCert> {
    if d.ncols() != ct.dim() {
        return Err(Error::DimensionMismatch(format!(
            "D has {} columns but T has dimension {}",
            d.ncols(),
            ct.dim()
        )));
    }
    let x_star = lmi_solve(d, &ct.r, tol)?;
    let m = ct.m.congruence(&d.transpose());
    let scope = match (&ct.scope, xbar) {
        (Scope::Global, _) => Scope::Global,
        (Scope::AtPoint { x, y }, Some(xb)) => {
            if xb.len() != d.nrows() || !close(&(d.transpose() * xb), x) {
                return Err(Error::NotInGraph);
            }
            Scope::AtPoint {
                x: xb.clone(),
                y: d * y,
            }
        }
        (Scope::AtPoint { .. }, None) => {
            return Err(Error::DimensionMismatch(
                "pointwise composition needs the outer point".into(),
            ))
        }
    };
    Ok(SemiCert {
        m,
        r: x_star,
        scope,
        universal: false,
    })
}

/// Certificate `(0, R′ + M □ R)` of `T + D` where `T` is
/// `(DᵀMD, R + R′)`-semimonotone, `D` is symmetric or skew, and
/// `range(R′) ⊆ ker D`.
pub fn cert_sum_skew(
    d: &Mat,
    m: &SymMatrix,
    r: &SymMatrix,
    r_prime: &SymMatrix,
    point: Option<(&Vector, &Vector)>,
    tol: &Tolerances,
) -> Result<SemiCert> {
    let n = d.nrows();
    if !d.is_square() || m.dim() != n || r.dim() != n || r_prime.dim() != n {
        return Err(Error::DimensionMismatch(
            "D, M, R and R′ must share one dimension".into(),
        ));
    }
    let scale = d.amax().max(1.0);
    if (d - d.transpose()).amax() > 1e-12 * scale && (d + d.transpose()).amax() > 1e-12 * scale {
        return Err(Error::DimensionMismatch("D must be symmetric or skew-symmetric".into()));
    }
    let leak = (d * r_prime.as_mat()).amax();
    if leak > 1e-10 * scale * r_prime.amax().max(1.0) {
        return Err(Error::RangeConditionViolated(format!(
            "|D R′| = {leak}, expected range(R′) ⊆ ker D"
        )));
    }
    if !in_parallel_domain(m, r, tol) {
        return Err(Error::NotParallelSummable);
    }
    let v = r_prime.add(&parallel_sum_matrix(m, r, tol)?);
    let scope = match point {
        None => Scope::Global,
        Some((x, y)) => Scope::AtPoint {
            x: x.clone(),
            y: y + d * x,
        },
    };
    Ok(SemiCert {
        m: SymMatrix::zeros(n),
        r: v,
        scope,
        universal: false,
    })
}

/// Certificate of `A + αI` from scalar moduli `(μ, ρ)` and a split `ε`.
pub fn cert_shift_scaled_identity(mu: f64, rho: f64, alpha: f64, eps: f64) -> Result<(f64, f64)> {
    if alpha == 0.0 {
        return Err(Error::InvalidModuli("shift requires alpha != 0".into()));
    }
    if !in_parallel_domain_scalar(rho, eps) {
        return Err(Error::NotParallelSummable);
    }
    Ok((mu + alpha * (1.0 - eps * alpha), parallel_sum_scalar(rho, eps)?))
}

/// Pointwise certificate `(diag(|ṽᵢ|/(uᵢ − lᵢ)), 0)` of the box normal cone
/// at `(x̃, ṽ)`.
pub fn cert_box_normal_cone(bx: &BoxNormalCone, x: &Vector, v: &Vector) -> Result<SemiCert> {
    if !bx.contains(x, v, 1e-12 * (1.0 + x.amax())) {
        return Err(Error::NotInGraph);
    }
    let diag: Vec<f64> = (0..bx.dim()).map(|i| v[i].abs() / (bx.u[i] - bx.l[i])).collect();
    SemiCert::at_point(
        SymMatrix::from_diagonal(&diag),
        SymMatrix::zeros(bx.dim()),
        x.clone(),
        v.clone(),
    )
}

/// `β`-parameters from primal-dual matrix certificates.
pub fn derive_oblique_params(c: &PrimalDualCerts, svd: &GroupedSvd, tol: &Tolerances) -> Result<ObliqueParams> {
    let (n, m) = (svd.n(), svd.m());
    let dims_ok = c.m_a.dim() == m
        && c.m_b.dim() == m
        && c.m_b_prime.dim() == m
        && c.r_a.dim() == n
        && c.r_a_prime.dim() == n
        && c.r_b.dim() == n;
    if !dims_ok {
        return Err(Error::DimensionMismatch(format!(
            "certificates do not match L of size {m}x{n}"
        )));
    }
    let leak_a = (svd.x.transpose() * c.r_a_prime.as_mat()).amax();
    if leak_a > 1e-10 * c.r_a_prime.amax().max(1.0) {
        return Err(Error::RangeConditionViolated(format!(
            "range(R_A′) ⊄ ker L (component {leak_a} along range(Lᵀ))"
        )));
    }
    let leak_b = (svd.y.transpose() * c.m_b_prime.as_mat()).amax();
    if leak_b > 1e-10 * c.m_b_prime.amax().max(1.0) {
        return Err(Error::RangeConditionViolated(format!(
            "range(M_B′) ⊄ ker Lᵀ (component {leak_b} along range(L))"
        )));
    }
    if !in_parallel_domain(&c.m_a, &c.m_b, tol) || !in_parallel_domain(&c.r_a, &c.r_b, tol) {
        return Err(Error::NotParallelSummable);
    }
    let rpar = parallel_sum_matrix(&c.r_a, &c.r_b, tol)?;
    let mpar = parallel_sum_matrix(&c.m_a, &c.m_b, tol)?;
    Ok(ObliqueParams {
        beta_p: min_eig_sym(&rpar.congruence(&svd.x)),
        beta_pp: min_eig_sym(&c.r_a_prime.congruence(&svd.xp)),
        beta_d: min_eig_sym(&mpar.congruence(&svd.y)),
        beta_dp: min_eig_sym(&c.m_b_prime.congruence(&svd.yp)),
    })
}

/// Weak-Minty matrix of `T_PD` through the calculus:
/// `A × B⁻¹` followed by the sum with the skew map `(x, y) ↦ (Lᵀy, −Lx)`.
pub fn pd_cert_via_calculus(c: &PrimalDualCerts, l: &Mat, tol: &Tolerances) -> Result<SemiCert> {
    let (m, n) = l.shape();
    let mut skew = Mat::zeros(n + m, n + m);
    skew.view_mut((0, n), (n, m)).copy_from(&l.transpose());
    skew.view_mut((n, 0), (m, n)).copy_from(&(-l));
    // |D z|²_W with D z = (Lᵀy, −Lx): W pairs R_B with Lᵀy and M_A with Lx.
    let w = c.r_b.direct_sum(&c.m_a);
    let r = c.r_a.direct_sum(&c.m_b);
    let rp = c.r_a_prime.direct_sum(&c.m_b_prime);
    cert_sum_skew(&skew, &w, &r, &rp, None, tol)
}

/// `β`-parameters from scalar moduli.
pub fn scalar_oblique_params(md: &ScalarModuli, svd: &GroupedSvd) -> Result<ObliqueParams> {
    if !in_parallel_domain_scalar(md.mu_a, md.mu_b) || !in_parallel_domain_scalar(md.rho_a, md.rho_b) {
        return Err(Error::NotParallelSummable);
    }
    Ok(ObliqueParams {
        beta_p: md.rho_par()?,
        beta_pp: if svd.full_column_rank() { 0.0 } else { md.rho_a },
        beta_d: md.mu_par()?,
        beta_dp: if svd.full_row_rank() { 0.0 } else { md.mu_b },
    })
}

/// `[μ]₊[ρ]₊ ≤ 1/(4σ_d²)` for both operators.
pub fn check_moduli_bounds(md: &ScalarModuli, svd: &GroupedSvd) -> bool {
    let cap = 1.0 / (4.0 * svd.sigma_d() * svd.sigma_d());
    pos(md.mu_a) * pos(md.rho_a) <= cap && pos(md.mu_b) * pos(md.rho_b) <= cap
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Gaussian vector with the given scale.
pub fn random_vector<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| scale * std_normal(rng)))
}

/// Gaussian matrix with the given scale.
pub fn random_matrix<R: Rng + ?Sized>(r: usize, c: usize, scale: f64, rng: &mut R) -> Mat {
    Mat::from_iterator(r, c, (0..r * c).map(|_| scale * std_normal(rng)))
}

/// Random graph point: Gaussian `x` for affine operators; for the box
/// normal cone, coordinates land on the lower face, upper face or interior
/// with equal probability and `v` carries the matching sign.
pub fn sample_graph_point<R: Rng + ?Sized>(op: &Operator, rng: &mut R) -> (Vector, Vector) {
    match op {
        Operator::Affine(a) => {
            let x = random_vector(a.dim(), 2.0, rng);
            let v = a.apply(&x);
            (x, v)
        }
        Operator::BoxNormalCone(b) => {
            let n = b.dim();
            let mut x = Vector::zeros(n);
            let mut v = Vector::zeros(n);
            for i in 0..n {
                match rng.random_range(0..3u8) {
                    0 => {
                        x[i] = b.l[i];
                        v[i] = -3.0 * rng.random::<f64>();
                    }
                    1 => {
                        x[i] = b.u[i];
                        v[i] = 3.0 * rng.random::<f64>();
                    }
                    _ => {
                        x[i] = b.l[i] + (b.u[i] - b.l[i]) * rng.random::<f64>();
                    }
                }
            }
            (x, v)
        }
    }
}

/// Smallest slack of the certificate inequality over sampled graph points.
/// Pointwise certificates compare against their base point; global ones
/// compare consecutive pairs of samples.
pub fn sampled_slack(points: &[(Vector, Vector)], cert: &SemiCert) -> f64 {
    let mut worst = f64::INFINITY;
    match &cert.scope {
        Scope::AtPoint { x: xb, y: yb } => {
            for (x, y) in points {
                worst = worst.min(cert.pair_slack(x, y, xb, yb));
            }
        }
        Scope::Global => {
            for w in points.windows(2) {
                worst = worst.min(cert.pair_slack(&w[1].0, &w[1].1, &w[0].0, &w[0].1));
            }
        }
    }
    worst
}

/// Samples `count` graph points of `op` and returns [`sampled_slack`].
pub fn validate_by_sampling<R: Rng + ?Sized>(op: &Operator, cert: &SemiCert, count: usize, rng: &mut R) -> f64 {
    let pts: Vec<(Vector, Vector)> = (0..count).map(|_| sample_graph_point(op, rng)).collect();
    sampled_slack(&pts, cert)
}

/// Affine operator `x ↦ w + α(D(x + u) + q)`.
pub fn scale_shift_affine(a: &AffineOp, alpha: f64, u: &Vector, w: &Vector) -> AffineOp {
    AffineOp {
        d: &a.d * alpha,
        q: w + (&a.d * u + &a.q) * alpha,
    }
}

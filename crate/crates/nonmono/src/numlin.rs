//! Dense matrix utilities: grouped SVD, pseudoinverse, projections,
//! parallel sums, symmetric eigenvalue bounds and spectral radius.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Deref;

use nalgebra::{DMatrix, DVector, Schur};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Tolerances that decide rank, grouping and branch selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Singular values below `rank_tol * sigma_max` count as zero.
    pub rank_tol: f64,
    /// Singular values within `group_tol * sigma_max` share a group.
    pub group_tol: f64,
    /// Relative tolerance for `gamma * tau * |L|^2 == 1`.
    pub eq_tol: f64,
    /// Lower bound on `lambda * (2 eta_bar - lambda)`.
    pub margin_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: 1e-10,
            group_tol: 1e-8,
            eq_tol: 1e-12,
            margin_tol: 1e-6,
        }
    }
}

/// Dense symmetric matrix, symmetrized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    /// Panics if `m` is not square.
    pub fn new(m: Mat) -> Self {
        assert!(m.is_square(), "SymMatrix requires a square matrix");
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn try_new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::new(m))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(Mat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Mat::identity(n, n))
    }

    pub fn scaled_identity(n: usize, a: f64) -> Self {
        SymMatrix(Mat::identity(n, n) * a)
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(Mat::from_diagonal(&Vector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    pub fn scale(&self, a: f64) -> SymMatrix {
        SymMatrix(&self.0 * a)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    /// `pᵀ S p`.
    pub fn congruence(&self, p: &Mat) -> SymMatrix {
        SymMatrix::new(p.transpose() * &self.0 * p)
    }

    /// `S₁ ⊕ S₂`.
    pub fn direct_sum(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(direct_sum(&self.0, &other.0))
    }

    /// `|v|²_S = vᵀ S v`.
    pub fn quad(&self, v: &Vector) -> f64 {
        v.dot(&(&self.0 * v))
    }

    pub fn min_eig(&self) -> f64 {
        min_eig_sym(self)
    }
}

impl Deref for SymMatrix {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

/// SVD of `L` with equal singular values merged into groups.
///
/// Columns of `x` and `y` are ordered group by group; group `i` spans
/// columns `offset(i) .. offset(i) + mult[i]`.
#[derive(Clone, Debug)]
pub struct GroupedSvd {
    pub sigma: Vec<f64>,
    pub mult: Vec<usize>,
    pub x: Mat,
    pub y: Mat,
    pub xp: Mat,
    pub yp: Mat,
    pub group_tol: f64,
}

impl GroupedSvd {
    /// Number of distinct positive singular values.
    pub fn d(&self) -> usize {
        self.sigma.len()
    }

    pub fn rank(&self) -> usize {
        self.x.ncols()
    }

    /// Column dimension of `L`.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Row dimension of `L`.
    pub fn m(&self) -> usize {
        self.y.nrows()
    }

    /// Spectral norm `|L|`.
    pub fn norm(&self) -> f64 {
        self.sigma[0]
    }

    pub fn sigma_d(&self) -> f64 {
        self.sigma[self.sigma.len() - 1]
    }

    pub fn full_column_rank(&self) -> bool {
        self.rank() == self.n()
    }

    pub fn full_row_rank(&self) -> bool {
        self.rank() == self.m()
    }

    pub fn offset(&self, i: usize) -> usize {
        self.mult[..i].iter().sum()
    }

    pub fn x_block(&self, i: usize) -> Mat {
        self.x.columns(self.offset(i), self.mult[i]).into_owned()
    }

    pub fn y_block(&self, i: usize) -> Mat {
        self.y.columns(self.offset(i), self.mult[i]).into_owned()
    }

    pub fn proj_range_lt(&self) -> Mat {
        proj(&self.x)
    }

    pub fn proj_ker_l(&self) -> Mat {
        proj(&self.xp)
    }

    pub fn proj_range_l(&self) -> Mat {
        proj(&self.y)
    }

    pub fn proj_ker_lt(&self) -> Mat {
        proj(&self.yp)
    }

    /// `Y Σ Xᵀ`.
    pub fn reconstruct(&self) -> Mat {
        let mut s = Vec::with_capacity(self.rank());
        for (sig, &k) in self.sigma.iter().zip(&self.mult) {
            s.extend(core::iter::repeat_n(*sig, k));
        }
        let sig = Mat::from_diagonal(&Vector::from_vec(s));
        &self.y * sig * self.x.transpose()
    }
}

/// Grouped SVD of `l` with explicit range and kernel bases.
pub fn grouped_svd(l: &Mat, tol: &Tolerances) -> Result<GroupedSvd> {
    let (m, n) = l.shape();
    if m == 0 || n == 0 || l.norm() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let (u, sv, v) = thin_svd(l);
    let smax = sv[0];
    let kept: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > tol.rank_tol * smax).collect();

    let mut sigma = Vec::new();
    let mut mult = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for &i in &kept {
        let s = sv[i];
        if let Some(&last) = members.last() {
            if last - s > tol.group_tol * smax {
                sigma.push(members.iter().sum::<f64>() / members.len() as f64);
                mult.push(members.len());
                members.clear();
            }
        }
        members.push(s);
    }
    sigma.push(members.iter().sum::<f64>() / members.len() as f64);
    mult.push(members.len());

    let r = kept.len();
    let mut x = Mat::zeros(n, r);
    let mut y = Mat::zeros(m, r);
    for (c, &i) in kept.iter().enumerate() {
        x.set_column(c, &v.column(i));
        y.set_column(c, &u.column(i));
    }
    let xp = orth_complement(&x);
    let yp = orth_complement(&y);
    Ok(GroupedSvd {
        sigma,
        mult,
        x,
        y,
        xp,
        yp,
        group_tol: tol.group_tol,
    })
}

/// Orthonormal basis of the orthogonal complement of the columns of `q`,
/// which must be orthonormal.
pub fn orth_complement(q: &Mat) -> Mat {
    let n = q.nrows();
    let k = n - q.ncols().min(n);
    if k == 0 {
        return Mat::zeros(n, 0);
    }
    let p = Mat::identity(n, n) - proj(q);
    let eig = SymMatrix::new(p).0.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut out = Mat::zeros(n, k);
    for (c, &i) in idx.iter().take(k).enumerate() {
        out.set_column(c, &eig.eigenvectors.column(i));
    }
    out
}

/// `Q Qᵀ`.
pub fn proj(q: &Mat) -> Mat {
    q * q.transpose()
}

pub fn direct_sum(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Mat::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Horizontal concatenation; all blocks must share the row count.
pub fn hcat(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation; all blocks must share the column count.
pub fn vcat(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

pub fn singular_values(a: &Mat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    thin_svd(a).1
}

/// Thin SVD `a = U diag(σ) Vᵀ` with `σ` sorted in decreasing order.
///
/// nalgebra's bidiagonal QR occasionally returns a factorization that does
/// not reproduce `a` (seen on nearly rank-one 3×3 inputs). Such results are
/// replaced by the symmetric eigendecomposition of `[[0, a], [aᵀ, 0]]`,
/// whose eigenpairs are `±σᵢ` with vectors `(uᵢ; ±vᵢ)/√2`.
fn thin_svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (r, c) = a.shape();
    let k = r.min(c);
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let v = svd.v_t.expect("requested").transpose();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let sigma: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let u = u.select_columns(&idx);
    let v = v.select_columns(&idx);
    let scale = a.amax();
    let eps = 1e-12 * (r + c) as f64;
    let rebuilt = &u * Mat::from_diagonal(&Vector::from_column_slice(&sigma)) * v.transpose();
    let ok = sigma.iter().all(|s| s.is_finite())
        && (rebuilt - a).amax() <= eps * scale
        && (u.transpose() * &u - Mat::identity(k, k)).amax() <= eps
        && (v.transpose() * &v - Mat::identity(k, k)).amax() <= eps;
    if ok || !scale.is_finite() {
        return (u, sigma, v);
    }
    let mut h = Mat::zeros(r + c, r + c);
    h.view_mut((0, r), (r, c)).copy_from(a);
    h.view_mut((r, 0), (c, r)).copy_from(&a.transpose());
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..r + c).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let floor = 1e-14 * (r + c) as f64 * scale;
    let mut ucols: Vec<Vector> = Vec::new();
    let mut vcols: Vec<Vector> = Vec::new();
    let mut sigma = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let s = eig.eigenvalues[i];
        if s <= floor {
            break;
        }
        let col = eig.eigenvectors.column(i);
        ucols.push(col.rows(0, r).normalize());
        vcols.push(col.rows(r, c).normalize());
        sigma.push(s);
    }
    let us = if ucols.is_empty() {
        Mat::zeros(r, 0)
    } else {
        Mat::from_columns(&ucols)
    };
    let vs = if vcols.is_empty() {
        Mat::zeros(c, 0)
    } else {
        Mat::from_columns(&vcols)
    };
    let p = sigma.len();
    let uc = orth_complement(&us);
    let vc = orth_complement(&vs);
    sigma.resize(k, 0.0);
    (
        hcat(&[&us, &uc.columns(0, k - p).into_owned()]),
        sigma,
        hcat(&[&vs, &vc.columns(0, k - p).into_owned()]),
    )
}

pub fn spectral_norm(a: &Mat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Number of singular values above the absolute threshold `thresh`.
pub fn rank_abs(a: &Mat, thresh: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > thresh).count()
}

/// Rank with threshold `rel * sigma_max`.
pub fn rank(a: &Mat, rel: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&v| v > rel * smax).count(),
        _ => 0,
    }
}

/// Moore–Penrose pseudoinverse, cutting singular values below
/// `1e-10 * sigma_max`.
pub fn pinv(a: &Mat) -> Mat {
    pinv_rel(a, Tolerances::default().rank_tol)
}

pub fn pinv_rel(a: &Mat, rel: f64) -> Mat {
    let smax = spectral_norm(a);
    pinv_abs(a, rel * smax)
}

pub fn pinv_abs(a: &Mat, thresh: f64) -> Mat {
    let (r, c) = a.shape();
    let mut out = Mat::zeros(c, r);
    if r == 0 || c == 0 {
        return out;
    }
    let (u, sv, v) = thin_svd(a);
    for (i, &s) in sv.iter().enumerate() {
        if s > thresh && s > 0.0 {
            out += v.column(i) * u.column(i).transpose() / s;
        }
    }
    out
}

/// Orthonormal basis of `range(a)`.
pub fn range_basis(a: &Mat, thresh: f64) -> Mat {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Mat::zeros(r, 0);
    }
    let (u, sv, _) = thin_svd(a);
    let cols: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > thresh).collect();
    let mut out = Mat::zeros(r, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &u.column(i));
    }
    out
}

/// Orthonormal basis of `ker(a)`.
pub fn kernel_basis(a: &Mat, thresh: f64) -> Mat {
    orth_complement(&range_basis(&a.transpose(), thresh))
}

/// Scalar parallel sum `ab/(a+b)` with `0□0 = 0` and `a□∞ = a`.
pub fn parallel_sum_scalar(a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::NotParallelSummable);
    }
    if a == f64::INFINITY {
        return Ok(b);
    }
    if b == f64::INFINITY {
        return Ok(a);
    }
    if a == 0.0 && b == 0.0 {
        return Ok(0.0);
    }
    if a + b == 0.0 || a.is_infinite() || b.is_infinite() {
        return Err(Error::NotParallelSummable);
    }
    Ok(a * b / (a + b))
}

fn summability_threshold(a: &Mat, b: &Mat, tol: &Tolerances) -> f64 {
    let scale = spectral_norm(a).max(spectral_norm(b)).max(spectral_norm(&(a + b)));
    tol.rank_tol * scale.max(f64::MIN_POSITIVE)
}

/// `range(A) ⊆ range(A+B)` tested by comparing `rank(A+B)` with
/// `rank([A, A+B])`.
pub fn parallel_summable(a: &SymMatrix, b: &SymMatrix, tol: &Tolerances) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    let s = a.as_mat() + b.as_mat();
    let thresh = summability_threshold(a, b, tol);
    rank_abs(&s, thresh) == rank_abs(&hcat(&[a.as_mat(), &s]), thresh)
}

/// Matrix parallel sum `A(A+B)⁺B`.
pub fn parallel_sum_matrix(a: &SymMatrix, b: &SymMatrix, tol: &Tolerances) -> Result<SymMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "parallel sum of {}x{} and {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    if !parallel_summable(a, b, tol) {
        return Err(Error::NotParallelSummable);
    }
    let s = a.as_mat() + b.as_mat();
    let thresh = summability_threshold(a, b, tol);
    Ok(SymMatrix::new(a.as_mat() * pinv_abs(&s, thresh) * b.as_mat()))
}

/// `(A, B) ∈ dom□`: `A + B ⪰ 0` and parallel summable.
pub fn in_parallel_domain(a: &SymMatrix, b: &SymMatrix, tol: &Tolerances) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    let s = a.add(b);
    let floor = -1e-10 * spectral_norm(&s).max(1.0);
    s.min_eig() >= floor && parallel_summable(a, b, tol)
}

/// Scalar `dom□`: `a + b > 0` or `a = b = 0`.
pub fn in_parallel_domain_scalar(a: f64, b: f64) -> bool {
    (a == 0.0 && b == 0.0) || a + b > 0.0
}

/// Smallest eigenvalue; `+∞` for an empty matrix.
pub fn min_eig_sym(s: &SymMatrix) -> f64 {
    if s.dim() == 0 {
        return f64::INFINITY;
    }
    s.0.clone().symmetric_eigen().eigenvalues.min()
}

/// Largest eigenvalue; `-∞` for an empty matrix.
pub fn max_eig_sym(s: &SymMatrix) -> f64 {
    if s.dim() == 0 {
        return f64::NEG_INFINITY;
    }
    s.0.clone().symmetric_eigen().eigenvalues.max()
}

/// Eigenvalues of a general square matrix as `(re, im)` pairs.
pub fn eigenvalues(h: &Mat) -> Vec<(f64, f64)> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    match Schur::try_new(h.clone(), f64::EPSILON, 100_000) {
        Some(s) => s.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect(),
        None => Vec::new(),
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(h: &Mat) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    let ev = eigenvalues(h);
    if ev.is_empty() {
        return gelfand_radius(h);
    }
    ev.iter().map(|&(re, im)| re.hypot(im)).fold(0.0, f64::max)
}

// Fallback when the Schur iteration stalls: ‖H^(2^k)‖^(1/2^k) with
// rescaling at every squaring.
fn gelfand_radius(h: &Mat) -> f64 {
    let mut p = h.clone();
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..40 {
        let nrm = p.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        p /= nrm;
        log_scale += nrm.ln() / k;
        p = &p * &p;
        k *= 2.0;
        log_scale *= 1.0;
    }
    (log_scale + p.norm().ln() / k).exp()
}

//! Operators with closed-form resolvents.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::linalg::LU;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::numlin::{singular_values, Mat, Vector};

const SINGULAR_RCOND: f64 = 1e-12;

/// `x ↦ Dx + q`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineOp {
    pub d: Mat,
    pub q: Vector,
}

impl AffineOp {
    pub fn new(d: Mat, q: Vector) -> Result<Self> {
        if !d.is_square() || d.nrows() != q.len() {
            return Err(Error::DimensionMismatch(format!(
                "affine operator with D {}x{} and q of length {}",
                d.nrows(),
                d.ncols(),
                q.len()
            )));
        }
        Ok(AffineOp { d, q })
    }

    pub fn linear(d: Mat) -> Result<Self> {
        let n = d.nrows();
        Self::new(d, Vector::zeros(n))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        AffineOp {
            d: Mat::from_diagonal(&Vector::from_column_slice(diag)),
            q: Vector::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.d * x + &self.q
    }
}

/// Normal cone of the box `[l, u]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxNormalCone {
    pub l: Vector,
    pub u: Vector,
}

impl BoxNormalCone {
    pub fn new(l: Vector, u: Vector) -> Result<Self> {
        if l.len() != u.len() {
            return Err(Error::DimensionMismatch(format!(
                "box bounds of length {} and {}",
                l.len(),
                u.len()
            )));
        }
        if l.iter().zip(u.iter()).any(|(a, b)| !(a < b)) {
            return Err(Error::DimensionMismatch("box requires l < u componentwise".into()));
        }
        Ok(BoxNormalCone { l, u })
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    pub fn project(&self, w: &Vector) -> Vector {
        Vector::from_iterator(
            w.len(),
            w.iter()
                .zip(self.l.iter().zip(self.u.iter()))
                .map(|(&v, (&lo, &hi))| v.max(lo).min(hi)),
        )
    }

    /// `v ∈ N_C(x)` up to `tol`, both in the position of `x` on the faces
    /// and in the entries of `v` that must vanish.
    pub fn contains(&self, x: &Vector, v: &Vector, tol: f64) -> bool {
        if x.len() != self.dim() || v.len() != self.dim() {
            return false;
        }
        (0..self.dim()).all(|i| {
            let (xi, vi, lo, hi) = (x[i], v[i], self.l[i], self.u[i]);
            if xi < lo - tol || xi > hi + tol {
                return false;
            }
            if vi > tol {
                (xi - hi).abs() <= tol
            } else if vi < -tol {
                (xi - lo).abs() <= tol
            } else {
                true
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Affine(AffineOp),
    BoxNormalCone(BoxNormalCone),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Affine(a) => a.dim(),
            Operator::BoxNormalCone(b) => b.dim(),
        }
    }

    /// Resolvents of both operator classes are single-valued and continuous
    /// wherever they are defined.
    pub fn continuous(&self) -> bool {
        true
    }

    /// True for the box normal cone; affine operators depend on the step.
    pub fn full_domain(&self) -> bool {
        matches!(self, Operator::BoxNormalCone(_))
    }

    /// `(D, q)` when the operator is affine.
    pub fn matrix_form(&self) -> Option<(&Mat, &Vector)> {
        match self {
            Operator::Affine(a) => Some((&a.d, &a.q)),
            Operator::BoxNormalCone(_) => None,
        }
    }

    /// `(D⁻¹, −D⁻¹q)` for the inverse of an affine operator with nonsingular `D`.
    pub fn inverse_matrix_form(&self) -> Result<(Mat, Vector)> {
        let (d, q) = self.matrix_form().ok_or(Error::NotLinear)?;
        let s = singular_values(d);
        if s.is_empty() || s[s.len() - 1] <= SINGULAR_RCOND * s[0] {
            return Err(Error::NotLinear);
        }
        let inv = d.clone().try_inverse().ok_or(Error::NotLinear)?;
        let off = -(&inv * q);
        Ok((inv, off))
    }

    /// `J_{sA}(w)`.
    pub fn resolvent(&self, s: f64, w: &Vector) -> Result<Vector> {
        Ok(self.prepare(s, false)?.apply(w))
    }

    /// `J_{sA⁻¹}(y) = y − s·J_{s⁻¹A}(y/s)`.
    pub fn inverse_resolvent(&self, s: f64, y: &Vector) -> Result<Vector> {
        Ok(self.prepare(s, true)?.apply(y))
    }

    /// Factorizes the resolvent for repeated evaluation at a fixed step.
    pub fn prepare(&self, s: f64, inverse: bool) -> Result<PreparedResolvent> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::SingularResolvent);
        }
        let t = if inverse { 1.0 / s } else { s };
        let kind = match self {
            Operator::Affine(a) => {
                let n = a.dim();
                let sys = Mat::identity(n, n) + &a.d * t;
                let sv = singular_values(&sys);
                if sv.is_empty() || sv[sv.len() - 1] <= SINGULAR_RCOND * sv[0] {
                    return Err(Error::SingularResolvent);
                }
                Kind::Affine {
                    lu: sys.lu(),
                    tq: &a.q * t,
                }
            }
            Operator::BoxNormalCone(b) => Kind::Box(b.clone()),
        };
        Ok(PreparedResolvent { kind, s, inverse })
    }

    /// `v ∈ A x` up to `tol`.
    pub fn in_graph(&self, x: &Vector, v: &Vector, tol: f64) -> bool {
        match self {
            Operator::Affine(a) => x.len() == a.dim() && v.len() == a.dim() && (a.apply(x) - v).amax() <= tol,
            Operator::BoxNormalCone(b) => b.contains(x, v, tol),
        }
    }
}

enum Kind {
    Affine { lu: LU<f64, Dyn, Dyn>, tq: Vector },
    Box(BoxNormalCone),
}

/// Resolvent of an operator or of its inverse at a fixed step.
pub struct PreparedResolvent {
    kind: Kind,
    s: f64,
    inverse: bool,
}

impl PreparedResolvent {
    fn forward(&self, w: &Vector) -> Vector {
        match &self.kind {
            Kind::Affine { lu, tq } => lu.solve(&(w - tq)).expect("nonsingular by construction"),
            Kind::Box(b) => b.project(w),
        }
    }

    pub fn apply(&self, w: &Vector) -> Vector {
        if self.inverse {
            w - self.forward(&(w / self.s)) * self.s
        } else {
            self.forward(w)
        }
    }

    pub fn step(&self) -> f64 {
        self.s
    }
}

/// `z` with `(I + sD)z = w − sq`.
pub fn resolvent_affine(d: &Mat, q: &Vector, s: f64, w: &Vector) -> Result<Vector> {
    Operator::Affine(AffineOp::new(d.clone(), q.clone())?).resolvent(s, w)
}

/// `y − τ proj_C(y/τ)`.
pub fn resolvent_box_inverse(l: &Vector, u: &Vector, tau: f64, y: &Vector) -> Result<Vector> {
    Operator::BoxNormalCone(BoxNormalCone::new(l.clone(), u.clone())?).inverse_resolvent(tau, y)
}

/// Matrix and offset of `T_PD(x, y) = (Ax + Lᵀy, B⁻¹y − Lx)`.
pub fn pd_matrix(l: &Mat, a: &Operator, b: &Operator) -> Result<(Mat, Vector)> {
    let (m, n) = l.shape();
    if a.dim() != n || b.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "L is {}x{}, A has dimension {}, B has dimension {}",
            m,
            n,
            a.dim(),
            b.dim()
        )));
    }
    let (da, qa) = a.matrix_form().ok_or(Error::NotLinear)?;
    let (dbi, qbi) = b.inverse_matrix_form()?;
    let mut t = Mat::zeros(n + m, n + m);
    t.view_mut((0, 0), (n, n)).copy_from(da);
    t.view_mut((0, n), (n, m)).copy_from(&l.transpose());
    t.view_mut((n, 0), (m, n)).copy_from(&(-l));
    t.view_mut((n, n), (m, m)).copy_from(&dbi);
    let off = Vector::from_iterator(n + m, qa.iter().chain(qbi.iter()).copied());
    Ok((t, off))
}

/// `T_PD z` for affine `A` and `B`.
pub fn apply_pd_operator(l: &Mat, a: &Operator, b: &Operator, z: &Vector) -> Result<Vector> {
    let (t, off) = pd_matrix(l, a, b)?;
    if z.len() != t.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "point of length {} for T_PD of size {}",
            z.len(),
            t.nrows()
        )));
    }
    Ok(t * z + off)
}

/// Stacks `x` and `y`.
pub fn stack(x: &Vector, y: &Vector) -> Vector {
    Vector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
}

/// Splits `z` into its first `n` and remaining entries.
pub fn split(z: &Vector, n: usize) -> (Vector, Vector) {
    let x: Vec<f64> = z.iter().take(n).copied().collect();
    let y: Vec<f64> = z.iter().skip(n).copied().collect();
    (Vector::from_vec(x), Vector::from_vec(y))
}

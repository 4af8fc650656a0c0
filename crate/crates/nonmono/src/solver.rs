//! Relaxed Chambolle–Pock iteration with residual and shadow diagnostics.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numlin::{grouped_svd, hcat, singular_values, vcat, GroupedSvd, Mat, SymMatrix, Tolerances, Vector};
use crate::ops::{pd_matrix, split, stack, Operator, PreparedResolvent};
use crate::rules::{branch_of, Branch, StepsizePlan};

#[allow(unused_imports)]
use num_traits::Float;

/// `0 ∈ Ax + LᵀBLx` with its primal-dual data.
#[derive(Clone, Debug)]
pub struct PdProblem {
    pub l: Mat,
    pub svd: GroupedSvd,
    pub a: Operator,
    pub b: Operator,
    /// Known primal-dual solution `(x⋆, y⋆)`.
    pub solution: Option<(Vector, Vector)>,
}

impl PdProblem {
    pub fn new(l: Mat, a: Operator, b: Operator, tol: &Tolerances) -> Result<Self> {
        let (m, n) = l.shape();
        if a.dim() != n || b.dim() != m {
            return Err(Error::DimensionMismatch(format!(
                "L is {m}x{n}, A has dimension {}, B has dimension {}",
                a.dim(),
                b.dim()
            )));
        }
        let svd = grouped_svd(&l, tol)?;
        Ok(PdProblem {
            l,
            svd,
            a,
            b,
            solution: None,
        })
    }

    pub fn with_solution(mut self, x: Vector, y: Vector) -> Result<Self> {
        if x.len() != self.n() || y.len() != self.m() {
            return Err(Error::DimensionMismatch("solution does not match the problem".into()));
        }
        self.solution = Some((x, y));
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.l.ncols()
    }

    pub fn m(&self) -> usize {
        self.l.nrows()
    }

    /// `(T_PD, c)` with `T_PD z + c` the primal-dual operator.
    pub fn linear_forms(&self) -> Result<(Mat, Vector)> {
        pd_matrix(&self.l, &self.a, &self.b)
    }

    pub fn is_linear(&self) -> bool {
        self.linear_forms().is_ok()
    }

    pub fn solution_z(&self) -> Option<Vector> {
        self.solution.as_ref().map(|(x, y)| stack(x, y))
    }
}

/// Resolvents factorized for fixed `(γ, τ)`.
pub struct CpaKernel<'a> {
    problem: &'a PdProblem,
    ja: PreparedResolvent,
    jb: PreparedResolvent,
    pub gamma: f64,
    pub tau: f64,
}

/// One relaxed step: `(x̄, ȳ)` and `(x⁺, y⁺)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CpaStep {
    pub xbar: Vector,
    pub ybar: Vector,
    pub x_next: Vector,
    pub y_next: Vector,
}

impl<'a> CpaKernel<'a> {
    pub fn new(problem: &'a PdProblem, gamma: f64, tau: f64) -> Result<Self> {
        Ok(CpaKernel {
            problem,
            ja: problem.a.prepare(gamma, false)?,
            jb: problem.b.prepare(tau, true)?,
            gamma,
            tau,
        })
    }

    /// `x̄ = J_{γA}(x − γLᵀy)`, `ȳ = J_{τB⁻¹}(y + τL(2x̄ − x))`.
    pub fn resolve(&self, x: &Vector, y: &Vector) -> (Vector, Vector) {
        let l = &self.problem.l;
        let xbar = self.ja.apply(&(x - l.tr_mul(y) * self.gamma));
        let ybar = self.jb.apply(&(y + l * (&xbar * 2.0 - x) * self.tau));
        (xbar, ybar)
    }

    pub fn step(&self, lambda: f64, x: &Vector, y: &Vector) -> CpaStep {
        let (xbar, ybar) = self.resolve(x, y);
        let x_next = x + (&xbar - x) * lambda;
        let y_next = y + (&ybar - y) * lambda;
        CpaStep {
            xbar,
            ybar,
            x_next,
            y_next,
        }
    }

    /// `v̄ = M(z − z̄)`.
    pub fn residual(&self, x: &Vector, y: &Vector, xbar: &Vector, ybar: &Vector) -> Vector {
        apply_preconditioner(&self.problem.l, self.gamma, self.tau, &(x - xbar), &(y - ybar))
    }
}

/// One relaxed CPA step.
pub fn cpa_step(problem: &PdProblem, gamma: f64, tau: f64, lambda: f64, x: &Vector, y: &Vector) -> Result<CpaStep> {
    Ok(CpaKernel::new(problem, gamma, tau)?.step(lambda, x, y))
}

/// `M (dx, dy) = (dx/γ − Lᵀdy, −L dx + dy/τ)`.
pub fn apply_preconditioner(l: &Mat, gamma: f64, tau: f64, dx: &Vector, dy: &Vector) -> Vector {
    let top = dx / gamma - l.tr_mul(dy);
    let bot = dy / tau - l * dx;
    stack(&top, &bot)
}

/// One preconditioned proximal point step for affine `T z + c`:
/// `z̄ = (M+T)⁻¹(Mz − c)`, `z⁺ = z + λ(z̄ − z)`.
pub fn pppa_step(t: &Mat, c: &Vector, m: &SymMatrix, lambda: f64, z: &Vector) -> Result<Vector> {
    let sys = m.as_mat() + t;
    let sv = singular_values(&sys);
    if sv.is_empty() || sv[sv.len() - 1] <= 1e-12 * sv[0] {
        return Err(Error::SingularResolvent);
    }
    let zbar = sys.lu().solve(&(m.as_mat() * z - c)).ok_or(Error::SingularResolvent)?;
    Ok(z + (zbar - z) * lambda)
}

/// Preconditioner `M` and an orthonormal basis `U` of its range.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    pub m: SymMatrix,
    pub u: Mat,
    pub branch: Branch,
}

impl Preconditioner {
    /// `P_Q = UUᵀ`.
    pub fn projector(&self) -> Mat {
        &self.u * self.u.transpose()
    }
}

/// `M = [[I/γ, −Lᵀ], [−L, I/τ]]` and `U`.
pub fn assemble_preconditioner(
    l: &Mat,
    svd: &GroupedSvd,
    gamma: f64,
    tau: f64,
    tol: &Tolerances,
) -> Result<Preconditioner> {
    let branch = branch_of(gamma, tau, svd.norm(), tol)?;
    let (m, n) = l.shape();
    let mut big = Mat::zeros(n + m, n + m);
    big.view_mut((0, 0), (n, n)).copy_from(&(Mat::identity(n, n) / gamma));
    big.view_mut((0, n), (n, m)).copy_from(&(-l.transpose()));
    big.view_mut((n, 0), (m, n)).copy_from(&(-l));
    big.view_mut((n, n), (m, m)).copy_from(&(Mat::identity(m, m) / tau));
    let u = match branch {
        Branch::Definite => Mat::identity(n + m, n + m),
        Branch::Semidefinite => range_basis_semidefinite(svd, gamma, tau),
    };
    Ok(Preconditioner {
        m: SymMatrix::new(big),
        u,
        branch,
    })
}

fn rest_x(svd: &GroupedSvd) -> Mat {
    let m1 = svd.mult[0];
    let tail = svd.x.columns(m1, svd.rank() - m1).into_owned();
    hcat(&[&tail, &svd.xp])
}

fn rest_y(svd: &GroupedSvd) -> Mat {
    let m1 = svd.mult[0];
    let tail = svd.y.columns(m1, svd.rank() - m1).into_owned();
    hcat(&[&tail, &svd.yp])
}

fn range_basis_semidefinite(svd: &GroupedSvd, gamma: f64, tau: f64) -> Mat {
    let (n, m) = (svd.n(), svd.m());
    let x1 = svd.x_block(0);
    let y1 = svd.y_block(0);
    let c = (tau / (gamma + tau)).sqrt();
    let first = vcat(&[&(&x1 * c), &(&y1 * (-c * (gamma / tau).sqrt()))]);
    let rx = rest_x(svd);
    let ry = rest_y(svd);
    let xs = vcat(&[&rx, &Mat::zeros(m, rx.ncols())]);
    let ys = vcat(&[&Mat::zeros(n, ry.ncols()), &ry]);
    hcat(&[&first, &xs, &ys])
}

/// `s = (X₁ᵀx − √(γ/τ)Y₁ᵀy, [X₂ … X′]ᵀx, [Y₂ … Y′]ᵀy)`.
pub fn shadow(svd: &GroupedSvd, gamma: f64, tau: f64, x: &Vector, y: &Vector, tol: &Tolerances) -> Result<Vector> {
    if branch_of(gamma, tau, svd.norm(), tol)? != Branch::Semidefinite {
        return Err(Error::WrongBranch);
    }
    Ok(shadow_unchecked(svd, gamma, tau, x, y))
}

fn shadow_unchecked(svd: &GroupedSvd, gamma: f64, tau: f64, x: &Vector, y: &Vector) -> Vector {
    let head = svd.x_block(0).tr_mul(x) - svd.y_block(0).tr_mul(y) * (gamma / tau).sqrt();
    let sx = rest_x(svd).tr_mul(x);
    let sy = rest_y(svd).tr_mul(y);
    Vector::from_iterator(
        head.len() + sx.len() + sy.len(),
        head.iter().chain(sx.iter()).chain(sy.iter()).copied(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub max_iter: usize,
    pub eps_res: f64,
    /// Bound on `|P_Q zᵏ|`; defaults to `1e8 (1 + |z⁰|)`.
    pub divergence_cap: Option<f64>,
    /// Keep iterates; defaults to `n + m ≤ 64`.
    pub keep_history: Option<bool>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_iter: 100_000,
            eps_res: 1e-8,
            divergence_cap: None,
            keep_history: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterState {
    pub x: Vector,
    pub y: Vector,
    pub xbar: Vector,
    pub ybar: Vector,
    /// Empty in the definite branch.
    pub shadow: Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    /// `|v̄ᵏ|`.
    pub res_norm: f64,
    /// `|P_Q zᵏ − P_Q z̄ᵏ|`.
    pub projdiff_norm: f64,
    /// `|sᵏ|` in the semidefinite branch, `|zᵏ|` otherwise.
    pub shadow_norm: f64,
    pub z_norm: f64,
    pub state: Option<IterState>,
}

#[derive(Clone, Debug)]
pub struct IterateTrace {
    pub records: Vec<IterRecord>,
    pub status: Status,
    pub plan: StepsizePlan,
    /// Last iterate `zᵏ` and its resolvent point `z̄ᵏ`.
    pub z: Vector,
    pub zbar: Vector,
}

impl IterateTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.res_norm)
    }

    pub fn final_point(&self, n: usize) -> (Vector, Vector) {
        split(&self.zbar, n)
    }

    pub fn series(&self, f: impl Fn(&IterRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    v[v.len() / 2]
}

/// Runs the iteration until `|v̄ᵏ| ≤ ε`, `k = max_iter`, or `|P_Q zᵏ|`
/// exceeds the divergence cap.
pub fn run(
    problem: &PdProblem,
    plan: &StepsizePlan,
    z0: &Vector,
    opts: &RunOptions,
    tol: &Tolerances,
) -> Result<IterateTrace> {
    let (n, m) = (problem.n(), problem.m());
    if z0.len() != n + m {
        return Err(Error::DimensionMismatch(format!(
            "start point of length {} for n + m = {}",
            z0.len(),
            n + m
        )));
    }
    let (gamma, tau, lambda) = (plan.gamma, plan.tau, plan.lambda);
    let kernel = CpaKernel::new(problem, gamma, tau)?;
    let pre = assemble_preconditioner(&problem.l, &problem.svd, gamma, tau, tol)?;
    let semidefinite = pre.branch == Branch::Semidefinite;
    let u = pre.u;
    let keep = opts.keep_history.unwrap_or(n + m <= 64);
    let cap = opts.divergence_cap.unwrap_or(1e8 * (1.0 + z0.norm()));

    let (mut x, mut y) = split(z0, n);
    let mut records = Vec::new();
    let mut k = 0usize;
    loop {
        let (xbar, ybar) = kernel.resolve(&x, &y);
        let res = kernel.residual(&x, &y, &xbar, &ybar);
        let z = stack(&x, &y);
        let zbar = stack(&xbar, &ybar);
        let pz = u.tr_mul(&z);
        let projdiff = (&pz - u.tr_mul(&zbar)).norm();
        let s = if semidefinite {
            shadow_unchecked(&problem.svd, gamma, tau, &x, &y)
        } else {
            Vector::zeros(0)
        };
        let shadow_norm = if semidefinite { s.norm() } else { z.norm() };
        let res_norm = res.norm();
        records.push(IterRecord {
            k,
            res_norm,
            projdiff_norm: projdiff,
            shadow_norm,
            z_norm: z.norm(),
            state: keep.then(|| IterState {
                x: x.clone(),
                y: y.clone(),
                xbar: xbar.clone(),
                ybar: ybar.clone(),
                shadow: s,
            }),
        });
        let finish = |status: Status, records: Vec<IterRecord>| IterateTrace {
            records,
            status,
            plan: *plan,
            z: z.clone(),
            zbar: zbar.clone(),
        };
        if !res_norm.is_finite() || !pz.norm().is_finite() || pz.norm() > cap {
            return Ok(finish(Status::Diverged, records));
        }
        if res_norm <= opts.eps_res {
            return Ok(finish(Status::Converged, records));
        }
        if k >= opts.max_iter {
            let status = if growing(&records) {
                Status::Diverged
            } else {
                Status::MaxIter
            };
            return Ok(finish(status, records));
        }
        x = &x + (&xbar - &x) * lambda;
        y = &y + (&ybar - &y) * lambda;
        k += 1;
    }
}

// Median residual of the last quarter exceeds twice that of the quarter before.
fn growing(records: &[IterRecord]) -> bool {
    let q = records.len() / 4;
    if q < 2 {
        return false;
    }
    let len = records.len();
    let mut last: Vec<f64> = records[len - q..].iter().map(|r| r.res_norm).collect();
    let mut prev: Vec<f64> = records[len - 2 * q..len - q].iter().map(|r| r.res_norm).collect();
    median(&mut last) > 2.0 * median(&mut prev)
}

/// `N ↦ N · min_{k<N} |v̄ᵏ|²`; `None` for diverged runs.
pub fn min_residual_rate(trace: &IterateTrace) -> Option<Vec<f64>> {
    if trace.status == Status::Diverged {
        return None;
    }
    let mut best = f64::INFINITY;
    Some(
        trace
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                best = best.min(r.res_norm * r.res_norm);
                (i + 1) as f64 * best
            })
            .collect(),
    )
}

/// Geometric rate `q` of a positive series, fitted by least squares on
/// `log sₖ` after dropping the first 20% of entries.
pub fn rlinear_fit(series: &[f64]) -> Result<f64> {
    let start = series.len() / 5;
    let pts: Vec<(f64, f64)> = series[start..]
        .iter()
        .enumerate()
        .take_while(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(i, v)| ((start + i) as f64, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::NotGeometric);
    }
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if syy <= 1e-24 * nf {
        return Err(Error::NotGeometric);
    }
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    if !(slope < 0.0) || r2 < 0.98 {
        return Err(Error::NotGeometric);
    }
    Ok(slope.exp())
}

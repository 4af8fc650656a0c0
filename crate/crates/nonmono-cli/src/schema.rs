//! Problem files and builtin lookup.

use std::path::Path;

use nonmono::numlin::{Mat, SymMatrix, Tolerances, Vector};
use nonmono::ops::{AffineOp, BoxNormalCone, Operator};
use nonmono::problems::{self, Certificates, Instance, Reference};
use nonmono::rules::StepRequest;
use nonmono::semimono::{ObliqueParams, PrimalDualCerts, ScalarModuli};
use nonmono::solver::PdProblem;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::json::{rows, Real};

type Rows = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "L")]
    pub l: Rows,
    #[serde(rename = "A")]
    pub a: OperatorSpec,
    #[serde(rename = "B")]
    pub b: OperatorSpec,
    pub certificates: CertSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Affine {
        #[serde(rename = "D")]
        d: Rows,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Vec<f64>>,
    },
    BoxNormalCone {
        l: Vec<Real>,
        u: Vec<Real>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CertSpec {
    Scalar(ScalarSpec),
    Matrix(MatrixSpec),
    Oblique(ObliqueSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarSpec {
    #[serde(rename = "muA")]
    pub mu_a: f64,
    #[serde(rename = "rhoA")]
    pub rho_a: f64,
    #[serde(rename = "muB")]
    pub mu_b: f64,
    #[serde(rename = "rhoB")]
    pub rho_b: f64,
}

/// Missing blocks are zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    #[serde(rename = "MA", default, skip_serializing_if = "Option::is_none")]
    pub m_a: Option<Rows>,
    #[serde(rename = "RA", default, skip_serializing_if = "Option::is_none")]
    pub r_a: Option<Rows>,
    #[serde(rename = "RAprime", default, skip_serializing_if = "Option::is_none")]
    pub r_a_prime: Option<Rows>,
    #[serde(rename = "MB", default, skip_serializing_if = "Option::is_none")]
    pub m_b: Option<Rows>,
    #[serde(rename = "MBprime", default, skip_serializing_if = "Option::is_none")]
    pub m_b_prime: Option<Rows>,
    #[serde(rename = "RB", default, skip_serializing_if = "Option::is_none")]
    pub r_b: Option<Rows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObliqueSpec {
    #[serde(rename = "betaP")]
    pub beta_p: Real,
    #[serde(rename = "betaPprime")]
    pub beta_pp: Real,
    #[serde(rename = "betaD")]
    pub beta_d: Real,
    #[serde(rename = "betaDprime")]
    pub beta_dp: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn to_mat(what: &str, r: &Rows) -> CliResult<Mat> {
    let nr = r.len();
    let nc = r.first().map_or(0, Vec::len);
    if nr == 0 || nc == 0 {
        return Err(CliError::Input(format!("schema: {what} must be a nonempty matrix")));
    }
    if let Some(i) = r.iter().position(|row| row.len() != nc) {
        return Err(CliError::Input(format!(
            "schema: {what} row {i} has {} entries, row 0 has {nc}",
            r[i].len()
        )));
    }
    Ok(Mat::from_fn(nr, nc, |i, j| r[i][j]))
}

fn to_sym(what: &str, r: &Option<Rows>, n: usize) -> CliResult<SymMatrix> {
    let Some(r) = r else { return Ok(SymMatrix::zeros(n)) };
    let m = to_mat(what, r)?;
    if m.shape() != (n, n) {
        return Err(CliError::Input(format!(
            "schema: {what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = (&m - m.transpose()).amax();
    if asym > 1e-12 * (1.0 + m.amax()) {
        return Err(CliError::Input(format!(
            "schema: {what} is not symmetric (|M - Mt| = {asym:e})"
        )));
    }
    Ok(SymMatrix::new(m))
}

fn check_len(what: &str, v: &[impl Sized], n: usize) -> CliResult<()> {
    if v.len() != n {
        return Err(CliError::Input(format!(
            "schema: {what} has length {}, expected {n}",
            v.len()
        )));
    }
    Ok(())
}

fn operator(what: &str, spec: &OperatorSpec, n: usize) -> CliResult<Operator> {
    match spec {
        OperatorSpec::Affine { d, q } => {
            let d = to_mat(&format!("{what}.D"), d)?;
            if d.shape() != (n, n) {
                return Err(CliError::Input(format!(
                    "schema: {what}.D is {}x{}, expected {n}x{n}",
                    d.nrows(),
                    d.ncols()
                )));
            }
            let q = match q {
                Some(q) => {
                    check_len(&format!("{what}.q"), q, n)?;
                    Vector::from_column_slice(q)
                }
                None => Vector::zeros(n),
            };
            Ok(Operator::Affine(
                AffineOp::new(d, q).map_err(|e| CliError::input(&format!("schema: {what}"), e))?,
            ))
        }
        OperatorSpec::BoxNormalCone { l, u } => {
            check_len(&format!("{what}.l"), l, n)?;
            check_len(&format!("{what}.u"), u, n)?;
            let lo = Vector::from_iterator(n, l.iter().map(|r| r.0));
            let hi = Vector::from_iterator(n, u.iter().map(|r| r.0));
            Ok(Operator::BoxNormalCone(
                BoxNormalCone::new(lo, hi).map_err(|e| CliError::input(&format!("schema: {what}"), e))?,
            ))
        }
    }
}

fn operator_spec(op: &Operator) -> OperatorSpec {
    match op {
        Operator::Affine(a) => OperatorSpec::Affine {
            d: rows(&a.d),
            q: Some(a.q.iter().copied().collect()),
        },
        Operator::BoxNormalCone(b) => OperatorSpec::BoxNormalCone {
            l: b.l.iter().map(|&v| Real(v)).collect(),
            u: b.u.iter().map(|&v| Real(v)).collect(),
        },
    }
}

impl ProblemFile {
    pub fn into_instance(self, name: &str) -> CliResult<Instance> {
        let l = to_mat("L", &self.l)?;
        let (m, n) = l.shape();
        let a = operator("A", &self.a, n)?;
        let b = operator("B", &self.b, m)?;
        let certificates = match &self.certificates {
            CertSpec::Scalar(s) => Certificates::Scalar(ScalarModuli::new(s.mu_a, s.rho_a, s.mu_b, s.rho_b)),
            CertSpec::Matrix(c) => Certificates::Matrix(PrimalDualCerts {
                m_a: to_sym("certificates.matrix.MA", &c.m_a, m)?,
                r_a: to_sym("certificates.matrix.RA", &c.r_a, n)?,
                r_a_prime: to_sym("certificates.matrix.RAprime", &c.r_a_prime, n)?,
                m_b: to_sym("certificates.matrix.MB", &c.m_b, m)?,
                m_b_prime: to_sym("certificates.matrix.MBprime", &c.m_b_prime, m)?,
                r_b: to_sym("certificates.matrix.RB", &c.r_b, n)?,
            }),
            CertSpec::Oblique(o) => {
                Certificates::Oblique(ObliqueParams::new(o.beta_p.0, o.beta_pp.0, o.beta_d.0, o.beta_dp.0))
            }
        };
        let mut problem = PdProblem::new(l, a, b, &Tolerances::default()).map_err(|e| CliError::input("schema", e))?;
        if let Some(s) = &self.solution {
            check_len("solution.x", &s.x, n)?;
            check_len("solution.y", &s.y, m)?;
            problem = problem
                .with_solution(Vector::from_column_slice(&s.x), Vector::from_column_slice(&s.y))
                .map_err(|e| CliError::input("schema: solution", e))?;
        }
        Ok(Instance {
            problem,
            reference: Reference {
                name: name.to_string(),
                certificates,
                printed_moduli: None,
                default_request: StepRequest::default(),
            },
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let p = &inst.problem;
        let certificates = match &inst.reference.certificates {
            Certificates::Scalar(md) => CertSpec::Scalar(ScalarSpec {
                mu_a: md.mu_a,
                rho_a: md.rho_a,
                mu_b: md.mu_b,
                rho_b: md.rho_b,
            }),
            Certificates::Matrix(c) => CertSpec::Matrix(MatrixSpec {
                m_a: Some(rows(c.m_a.as_mat())),
                r_a: Some(rows(c.r_a.as_mat())),
                r_a_prime: Some(rows(c.r_a_prime.as_mat())),
                m_b: Some(rows(c.m_b.as_mat())),
                m_b_prime: Some(rows(c.m_b_prime.as_mat())),
                r_b: Some(rows(c.r_b.as_mat())),
            }),
            Certificates::Oblique(o) => CertSpec::Oblique(ObliqueSpec {
                beta_p: Real(o.beta_p),
                beta_pp: Real(o.beta_pp),
                beta_d: Real(o.beta_d),
                beta_dp: Real(o.beta_dp),
            }),
        };
        ProblemFile {
            l: rows(&p.l),
            a: operator_spec(&p.a),
            b: operator_spec(&p.b),
            certificates,
            solution: p.solution.as_ref().map(|(x, y)| SolutionSpec {
                x: x.iter().copied().collect(),
                y: y.iter().copied().collect(),
            }),
        }
    }
}

pub fn parse_problem(text: &str, name: &str) -> CliResult<Instance> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::input("schema", e))?;
    file.into_instance(name)
}

fn builtin_with_params(name: &str, params: &[f64]) -> CliResult<Instance> {
    let bad = |e: nonmono::Error| CliError::input(&format!("builtin:{name}"), e);
    match (name, params) {
        (_, []) => problems::builtin(name)
            .map_err(|e| CliError::Input(format!("{e}; known: {}", problems::BUILTIN_NAMES.join(", ")))),
        ("saddle", &[a, b, c, ell]) => problems::saddle(a, b, c, ell).map_err(bad),
        ("saddle", _) => Err(CliError::Input("builtin:saddle takes four parameters a,b,c,l".into())),
        ("singvals", tail) => problems::singvals(tail).map_err(bad),
        _ => Err(CliError::Input(format!("builtin:{name} takes no parameters"))),
    }
}

/// `builtin:name[:p1,p2,…]` or a path to a problem file.
pub fn load_problem(source: &str) -> CliResult<Instance> {
    if let Some(rest) = source.strip_prefix("builtin:") {
        let (name, params) = match rest.split_once(':') {
            Some((n, p)) => {
                let vals = p
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::input(&format!("builtin:{n} parameters"), e))?;
                (n, vals)
            }
            None => (rest, Vec::new()),
        };
        return builtin_with_params(name, &params);
    }
    let path = Path::new(source);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(&format!("cannot read {source}"), e))?;
    parse_problem(&text, source)
}

//! Subcommand implementations. Each returns the process exit code.

use std::fs::File;
use std::io::{BufWriter, Write};

use nonmono::analysis::{spectral_report, verify_weak_minty_linear};
use nonmono::numlin::{Mat, SymMatrix, Tolerances, Vector};
use nonmono::ops::Operator;
use nonmono::problems::{Certificates, Instance};
use nonmono::rules::{Branch, StepsizePlan};
use nonmono::semimono::{
    cert_linear_optimal_r, linear_cert_slack, random_vector, validate_by_sampling, PrimalDualCerts, SemiCert,
    LINEAR_CERT_TOL,
};
use nonmono::solver::{assemble_preconditioner, run, RunOptions, Status};
use nonmono::Error;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::cli::{CertSource, CertifyArgs, ExportArgs, PlanArgs, SolveArgs, SpectralArgs};
use crate::error::{CliError, CliResult};
use crate::json::{self, num, pair, vector};
use crate::schema::{load_problem, to_mat, ProblemFile};
use crate::{EXIT_DIVERGED, EXIT_FAIL, EXIT_OK};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn emit(out: &mut dyn Write, v: &Value) -> CliResult<()> {
    writeln!(out, "{}", json::to_string(v)).map_err(|e| CliError::Runtime(format!("writing output: {e}")))
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Definite => "definite",
        Branch::Semidefinite => "semidefinite",
    }
}

pub fn plan_json(p: &StepsizePlan) -> Value {
    json!({
        "gamma": num(p.gamma),
        "tau": num(p.tau),
        "lambda": num(p.lambda),
        "branch": branch_name(p.branch),
        "delta": num(p.delta),
        "gamma_window": pair(p.gamma_lo, p.gamma_hi),
        "tau_window": pair(p.tau_lo, p.tau_hi),
        "eta": num(p.eta),
        "eta_prime": num(p.eta_prime),
        "eta_bar": num(p.eta_bar),
        "lambda_window": pair(0.0, p.lambda_max()),
        "lambda_in_window": p.lambda_in_window,
    })
}

/// Plan from the request flags, starting from the problem's default request.
pub fn plan_for(inst: &Instance, a: &PlanArgs) -> CliResult<StepsizePlan> {
    let mut req = inst.reference.default_request;
    if let Some(g) = a.gamma {
        req.gamma = Some(g);
    }
    if let Some(t) = a.tau {
        req.tau = t;
    }
    let plan = match a.certs {
        CertSource::Shipped => inst.plan(&req, &tol()),
        CertSource::Printed => inst.printed_plan(&req, &tol()),
    };
    plan.map_err(CliError::from_plan)
}

fn start_point(a: &SolveArgs, n: usize, m: usize, seed: u64) -> CliResult<Vector> {
    if a.x0.is_none() && a.y0.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(random_vector(n + m, 1.0, &mut rng));
    }
    let part = |v: &Option<Vec<f64>>, len: usize, what: &str| -> CliResult<Vec<f64>> {
        match v {
            None => Ok(vec![0.0; len]),
            Some(v) if v.len() == len => Ok(v.clone()),
            Some(v) => Err(CliError::Input(format!(
                "--{what} has {} entries, expected {len}",
                v.len()
            ))),
        }
    };
    let mut z = part(&a.x0, n, "x0")?;
    z.extend(part(&a.y0, m, "y0")?);
    Ok(Vector::from_vec(z))
}

pub fn solve(a: &SolveArgs, seed: u64, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let inst = load_problem(&a.plan.problem)?;
    let mut plan = plan_for(&inst, &a.plan)?;
    if let Some(l) = a.lambda {
        if !l.is_finite() || l <= 0.0 {
            return Err(CliError::Plan(format!("lambda = {l} must be positive")));
        }
        plan = plan.override_lambda(l, &tol()).map_err(CliError::from_plan)?;
        if !plan.lambda_in_window {
            let _ = writeln!(
                err,
                "warning: lambda = {l} is outside (0, 2*eta_bar) = (0, {}); convergence is not certified",
                plan.lambda_max()
            );
        }
    }
    let p = &inst.problem;
    let (n, m) = (p.n(), p.m());
    let z0 = start_point(a, n, m, seed)?;
    let opts = RunOptions {
        max_iter: a.max_iter,
        eps_res: a.eps,
        ..RunOptions::default()
    };
    let trace = run(p, &plan, &z0, &opts, &tol()).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(path) = &a.out {
        let f = File::create(path).map_err(|e| CliError::input(&format!("cannot create {}", path.display()), e))?;
        crate::trace::write_csv(BufWriter::new(f), &trace, n, m)
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
    }
    let (x, y) = trace.final_point(n);
    let (status, code) = match trace.status {
        Status::Converged => ("converged", EXIT_OK),
        Status::Diverged => ("diverged", EXIT_DIVERGED),
        Status::MaxIter => ("max_iter", EXIT_FAIL),
    };
    emit(
        out,
        &json!({
            "status": status,
            "iters": trace.iterations(),
            "final_residual": num(trace.final_residual()),
            "plan": plan_json(&plan),
            "x": vector(&x),
            "y": vector(&y),
        }),
    )?;
    Ok(code)
}

pub fn window(a: &PlanArgs, out: &mut dyn Write) -> CliResult<i32> {
    let inst = load_problem(&a.problem)?;
    let p = plan_for(&inst, a)?;
    let mut obj = Map::new();
    obj.insert("problem".into(), Value::String(inst.reference.name.clone()));
    obj.insert("gamma".into(), pair(p.gamma_lo, p.gamma_hi));
    obj.insert(format!("tau_at_{}", p.gamma), pair(p.tau_lo, p.tau_hi));
    obj.insert(
        "at".into(),
        json!({ "gamma": num(p.gamma), "tau": num(p.tau), "branch": branch_name(p.branch) }),
    );
    obj.insert("delta".into(), num(p.delta));
    obj.insert("eta".into(), num(p.eta));
    obj.insert("eta_prime".into(), num(p.eta_prime));
    obj.insert("eta_bar".into(), num(p.eta_bar));
    obj.insert("lambda".into(), pair(0.0, p.lambda_max()));
    emit(out, &Value::Object(obj))?;
    Ok(EXIT_OK)
}

pub fn spectral(a: &SpectralArgs, out: &mut dyn Write) -> CliResult<i32> {
    let inst = load_problem(&a.plan.problem)?;
    if !inst.problem.is_linear() {
        return Err(CliError::Input("spectral analysis needs affine A and B".into()));
    }
    let p = plan_for(&inst, &a.plan)?;
    let (spec, stable) = match spectral_report(&inst.problem, p.gamma, p.tau, p.eta_bar, a.projected, &tol()) {
        Ok(r) => (r.lambda_spectral, true),
        Err(Error::NoStableLambda) => (0.0, false),
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };
    emit(
        out,
        &json!({
            "gamma": num(p.gamma),
            "tau": num(p.tau),
            "branch": branch_name(p.branch),
            "projected": a.projected,
            "lambda_theorem": num(p.lambda_max()),
            "lambda_spectral": num(spec),
            "slack": num(spec - p.lambda_max()),
            "stable": stable,
        }),
    )?;
    Ok(EXIT_OK)
}

/// A matrix given inline (`[[...]]`) or as a file.
fn read_matrix(what: &str, src: &str) -> CliResult<Mat> {
    let text = if src.trim_start().starts_with('[') {
        src.to_string()
    } else {
        std::fs::read_to_string(src).map_err(|e| CliError::input(&format!("cannot read {src}"), e))?
    };
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| CliError::input(what, e))?;
    to_mat(what, &rows)
}

fn read_sym(what: &str, src: &str, n: usize) -> CliResult<SymMatrix> {
    let m = read_matrix(what, src)?;
    if m.shape() != (n, n) {
        return Err(CliError::Input(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(SymMatrix::new(m))
}

fn certify_linear(a: &CertifyArgs, d_src: &str, out: &mut dyn Write) -> CliResult<i32> {
    let d = read_matrix("--matrix", d_src)?;
    if !d.is_square() {
        return Err(CliError::Input(format!(
            "--matrix is {}x{}, expected square",
            d.nrows(),
            d.ncols()
        )));
    }
    let n = d.nrows();
    let m = read_sym("--M", a.m.as_deref().unwrap_or_default(), n)?;
    if let Some(r_src) = &a.r {
        let r = read_sym("--R", r_src, n)?;
        let slack = linear_cert_slack(&d, &m, &r).map_err(|e| CliError::Runtime(e.to_string()))?;
        let pass = slack >= -LINEAR_CERT_TOL;
        emit(out, &json!({ "pass": pass, "min_eig": num(slack) }))?;
        return Ok(if pass { EXIT_OK } else { EXIT_FAIL });
    }
    if !a.optimal_r {
        return Err(CliError::Input("certify --matrix needs --R or --optimal-R".into()));
    }
    match cert_linear_optimal_r(&d, &m, &tol()) {
        Ok(r) => {
            let slack = linear_cert_slack(&d, &m, &r).map_err(|e| CliError::Runtime(e.to_string()))?;
            emit(
                out,
                &json!({ "feasible": true, "R": json::matrix(r.as_mat()), "min_eig": num(slack) }),
            )?;
            Ok(EXIT_OK)
        }
        Err(e @ (Error::Infeasible | Error::RangeConditionViolated(_))) => {
            emit(out, &json!({ "feasible": false, "reason": e.to_string() }))?;
            Ok(EXIT_FAIL)
        }
        Err(e) => Err(CliError::Runtime(e.to_string())),
    }
}

fn check_operator(
    op: &Operator,
    cert: SemiCert,
    at: Option<(Vector, Vector)>,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> CliResult<Value> {
    if let Some((d, _)) = op.matrix_form() {
        let slack = linear_cert_slack(d, &cert.m, &cert.r).map_err(|e| CliError::Runtime(e.to_string()))?;
        return Ok(json!({ "method": "lmi", "pass": slack >= -LINEAR_CERT_TOL, "slack": num(slack) }));
    }
    let cert = match at {
        Some((x, y)) => SemiCert::at_point(cert.m, cert.r, x, y).map_err(|e| CliError::Runtime(e.to_string()))?,
        None => cert,
    };
    let pointwise = matches!(cert.scope, nonmono::semimono::Scope::AtPoint { .. });
    let slack = validate_by_sampling(op, &cert, samples, rng);
    Ok(json!({
        "method": "sampled",
        "at_solution": pointwise,
        "samples": samples,
        "pass": slack >= -LINEAR_CERT_TOL,
        "slack": num(slack),
    }))
}

fn certify_problem(a: &CertifyArgs, src: &str, seed: u64, out: &mut dyn Write) -> CliResult<i32> {
    let inst = load_problem(src)?;
    let p = &inst.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let certs = match &inst.reference.certificates {
        Certificates::Scalar(md) => PrimalDualCerts::from_scalar(md, &p.svd),
        Certificates::Matrix(c) => c.clone(),
        Certificates::Oblique(beta) => {
            // Checked on the range of the preconditioner of the default plan.
            let (t, _) = p
                .linear_forms()
                .map_err(|_| CliError::Input("oblique certificates can be checked on affine problems only".into()))?;
            let plan = inst.default_plan(&tol()).map_err(CliError::from_plan)?;
            let rt = |e: Error| CliError::Runtime(e.to_string());
            let pre = assemble_preconditioner(&p.l, &p.svd, plan.gamma, plan.tau, &tol()).map_err(rt)?;
            let slack = verify_weak_minty_linear(&t, &beta.v_matrix(&p.svd), Some(&pre.u)).map_err(rt)?;
            let pass = slack >= -LINEAR_CERT_TOL;
            let report = json!({
                "method": "weak_minty",
                "gamma": num(plan.gamma),
                "tau": num(plan.tau),
                "pass": pass,
                "slack": num(slack),
            });
            emit(out, &json!({ "weak_minty": report, "pass": pass }))?;
            return Ok(if pass { EXIT_OK } else { EXIT_FAIL });
        }
    };
    let sol = p.solution.clone();
    let at_a = sol.as_ref().map(|(x, y)| (x.clone(), -p.l.tr_mul(y)));
    let at_b = sol.as_ref().map(|(x, y)| (&p.l * x, y.clone()));
    let ra = check_operator(&p.a, certs.semicert_a(&p.l), at_a, a.samples, &mut rng)?;
    let rb = check_operator(&p.b, certs.semicert_b(&p.l), at_b, a.samples, &mut rng)?;
    let pass = ra["pass"] == Value::Bool(true) && rb["pass"] == Value::Bool(true);
    emit(out, &json!({ "A": ra, "B": rb, "pass": pass, "seed": seed }))?;
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

pub fn certify(a: &CertifyArgs, seed: u64, out: &mut dyn Write) -> CliResult<i32> {
    match (&a.matrix, &a.problem) {
        (Some(d), None) => certify_linear(a, d, out),
        (None, Some(src)) => certify_problem(a, src, seed, out),
        _ => Err(CliError::Input(
            "certify needs either --matrix with --M, or --problem".into(),
        )),
    }
}

pub fn export(a: &ExportArgs, out: &mut dyn Write) -> CliResult<i32> {
    let inst = load_problem(&a.problem)?;
    writeln!(out, "{}", json::to_string(&ProblemFile::from_instance(&inst)))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(EXIT_OK)
}

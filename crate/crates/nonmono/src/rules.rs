//! Stepsize windows and relaxation bounds.

use alloc::format;

use crate::error::{Error, Result};
use crate::numlin::{GroupedSvd, Tolerances};
use crate::semimono::{neg, ModuliCase, ObliqueParams, ScalarModuli};

#[allow(unused_imports)]
use num_traits::Float;

/// `γτ|L|² < 1` or `γτ|L|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Definite,
    Semidefinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauChoice {
    /// Upper end of the window.
    Auto,
    Value(f64),
    /// `τ = 1/(γ|L|²)`, forcing the semidefinite branch.
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRequest {
    pub gamma: Option<f64>,
    pub tau: TauChoice,
    pub lambda: Option<f64>,
}

impl Default for StepRequest {
    fn default() -> Self {
        StepRequest {
            gamma: None,
            tau: TauChoice::Auto,
            lambda: None,
        }
    }
}

impl StepRequest {
    pub fn gamma(g: f64) -> Self {
        StepRequest {
            gamma: Some(g),
            ..Self::default()
        }
    }

    pub fn with_tau(mut self, tau: TauChoice) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_lambda(mut self, l: f64) -> Self {
        self.lambda = Some(l);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepsizePlan {
    pub gamma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub delta: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Open window `(gamma_lo, gamma_hi)` for `γ`.
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    /// Half-open window `(tau_lo, tau_hi]` for `τ` at this `γ`.
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub eta: f64,
    pub eta_prime: f64,
    pub eta_bar: f64,
    pub branch: Branch,
    /// False when `λ` was overridden outside `(0, 2η̄)`.
    pub lambda_in_window: bool,
}

impl StepsizePlan {
    /// Upper end of the relaxation window.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.eta_bar
    }

    /// Replaces `λ` without enforcing the relaxation window.
    pub fn override_lambda(mut self, lambda: f64, tol: &Tolerances) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::RequestedOutOfWindow(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        self.lambda = lambda;
        self.lambda_in_window = lambda_admissible(lambda, self.eta_bar, tol);
        Ok(self)
    }
}

/// Result of the quadratic inequality `β_D|L|²γ² + δγ + β_P > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadWindow {
    pub exists: bool,
    pub delta: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

/// `(γ_min, γ_max)` with `δ = 1 + min{β_Pβ_D, 0}(|L|² − σ_d²)`.
pub fn quadratic_window(beta_p: f64, beta_d: f64, norm_l: f64, sigma_d: f64) -> QuadWindow {
    let l2 = norm_l * norm_l;
    let exists = neg(beta_p) * neg(beta_d) < 1.0 / (4.0 * l2);
    let delta = 1.0 + (beta_p * beta_d).min(0.0) * (l2 - sigma_d * sigma_d);
    let root = delta + (delta * delta - 4.0 * beta_p * beta_d * l2).max(0.0).sqrt();
    let gamma_min = if beta_p < 0.0 { 2.0 * neg(beta_p) / root } else { 0.0 };
    let gamma_max = if beta_d < 0.0 {
        root / (2.0 * neg(beta_d) * l2)
    } else {
        f64::INFINITY
    };
    QuadWindow {
        exists,
        delta,
        gamma_min,
        gamma_max,
    }
}

/// `τ_min(γ)`; zero when `β_D ≥ 0`.
pub fn tau_min(beta_p: f64, beta_d: f64, delta: f64, norm_l: f64, gamma: f64) -> f64 {
    if beta_d >= 0.0 {
        return 0.0;
    }
    let l2 = norm_l * norm_l;
    neg(beta_d) * (gamma + beta_p) / (gamma * (delta - beta_p * beta_d * l2) + beta_p)
}

/// `(max{τ_min(γ), [−β_D′]₊}, 1/(γ|L|²)]`.
pub fn tau_window(beta_p: f64, beta_d: f64, beta_dp: f64, delta: f64, norm_l: f64, gamma: f64) -> Result<(f64, f64)> {
    let lo = tau_min(beta_p, beta_d, delta, norm_l, gamma).max(neg(beta_dp));
    let hi = 1.0 / (gamma * norm_l * norm_l);
    if lo >= hi {
        return Err(Error::EmptyWindow(format!(
            "tau window ({lo}, {hi}] at gamma = {gamma}"
        )));
    }
    Ok((lo, hi))
}

/// `(η, η′, η̄)` and the branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaBound {
    pub eta: f64,
    pub eta_prime: f64,
    pub eta_bar: f64,
    pub branch: Branch,
}

/// `γτ|L|² ≤ 1` and the branch it selects.
pub fn branch_of(gamma: f64, tau: f64, norm_l: f64, tol: &Tolerances) -> Result<Branch> {
    let p = gamma * tau * norm_l * norm_l;
    if p > 1.0 + tol.eq_tol {
        return Err(Error::StepsizeOutOfRange);
    }
    Ok(if (p - 1.0).abs() <= tol.eq_tol {
        Branch::Semidefinite
    } else {
        Branch::Definite
    })
}

fn eta_prime_table(svd: &GroupedSvd, gamma: f64, tau: f64, bpp: f64, bdp: f64) -> f64 {
    let mut e = f64::INFINITY;
    if !svd.full_column_rank() {
        e = e.min(1.0 + bpp / gamma);
    }
    if !svd.full_row_rank() {
        e = e.min(1.0 + bdp / tau);
    }
    e
}

/// `η`, `η′` and `η̄ = min{η, η′}`.
pub fn eta_bound(p: &ObliqueParams, svd: &GroupedSvd, gamma: f64, tau: f64, tol: &Tolerances) -> Result<EtaBound> {
    eta_bound_branch(p, svd, gamma, tau, branch_of(gamma, tau, svd.norm(), tol)?)
}

fn eta_bound_branch(p: &ObliqueParams, svd: &GroupedSvd, gamma: f64, tau: f64, branch: Branch) -> Result<EtaBound> {
    let (bp, bd) = (p.beta_p, p.beta_d);
    let theta = |s: f64| {
        let a = bp / (2.0 * gamma) - bd / (2.0 * tau);
        (a * a + bp * bd * s * s).max(0.0).sqrt()
    };
    let base = 1.0 + bp / (2.0 * gamma) + bd / (2.0 * tau);
    let full = 1.0 + bp / gamma + bd / tau;
    let eta = match branch {
        Branch::Definite => {
            if bp * bd < 0.0 {
                base - theta(svd.sigma_d())
            } else {
                base - theta(svd.norm())
            }
        }
        Branch::Semidefinite if svd.d() == 1 => full,
        Branch::Semidefinite => {
            if bp * bd < 0.0 {
                base - theta(svd.sigma_d())
            } else if bp.min(bd) >= 0.0 {
                base - theta(svd.sigma[1])
            } else {
                full
            }
        }
    };
    let eta_prime = eta_prime_table(svd, gamma, tau, p.beta_pp, p.beta_dp);
    Ok(EtaBound {
        eta,
        eta_prime,
        eta_bar: eta.min(eta_prime),
        branch,
    })
}

fn lambda_admissible(lambda: f64, eta_bar: f64, tol: &Tolerances) -> bool {
    lambda > 0.0 && lambda < 2.0 * eta_bar && lambda * (2.0 * eta_bar - lambda) >= tol.margin_tol
}

fn default_gamma(lo: f64, hi: f64, norm_l: f64) -> f64 {
    match (lo > 0.0, hi.is_finite()) {
        (true, true) => (lo * hi).sqrt(),
        (false, true) => hi / 2.0,
        (true, false) => 2.0 * lo,
        (false, false) => 1.0 / norm_l,
    }
}

fn pick_gamma(req: &StepRequest, lo: f64, hi: f64, norm_l: f64) -> Result<f64> {
    match req.gamma {
        Some(g) => {
            if g > lo && g < hi {
                Ok(g)
            } else {
                Err(Error::RequestedOutOfWindow(format!("gamma = {g} not in ({lo}, {hi})")))
            }
        }
        None => Ok(default_gamma(lo, hi, norm_l)),
    }
}

fn pick_tau(req: &StepRequest, lo: f64, hi: f64, tol: &Tolerances) -> Result<(f64, bool)> {
    match req.tau {
        TauChoice::Auto | TauChoice::Max => Ok((hi, true)),
        TauChoice::Value(t) => {
            if (t - hi).abs() <= tol.eq_tol * hi {
                Ok((t, true))
            } else if t > lo && t < hi {
                Ok((t, false))
            } else {
                Err(Error::RequestedOutOfWindow(format!("tau = {t} not in ({lo}, {hi}]")))
            }
        }
    }
}

struct Windows {
    delta: f64,
    gamma_min: f64,
    gamma_max: f64,
    gamma_lo: f64,
    gamma_hi: f64,
}

#[allow(clippy::too_many_arguments)]
fn finish(
    w: Windows,
    gamma: f64,
    tau_lo: f64,
    tau_hi: f64,
    tau: (f64, bool),
    eta: EtaBound,
    req: &StepRequest,
    tol: &Tolerances,
) -> Result<StepsizePlan> {
    if !(eta.eta_bar > 0.0) {
        return Err(Error::EmptyWindow(format!(
            "relaxation bound eta_bar = {} is not positive",
            eta.eta_bar
        )));
    }
    let lambda = match req.lambda {
        Some(l) => {
            if !lambda_admissible(l, eta.eta_bar, tol) {
                return Err(Error::RequestedOutOfWindow(format!(
                    "lambda = {l} not in (0, {}) with margin {}",
                    2.0 * eta.eta_bar,
                    tol.margin_tol
                )));
            }
            l
        }
        None => eta.eta_bar,
    };
    Ok(StepsizePlan {
        gamma,
        tau: tau.0,
        lambda,
        delta: w.delta,
        gamma_min: w.gamma_min,
        gamma_max: w.gamma_max,
        gamma_lo: w.gamma_lo,
        gamma_hi: w.gamma_hi,
        tau_lo,
        tau_hi,
        eta: eta.eta,
        eta_prime: eta.eta_prime,
        eta_bar: eta.eta_bar,
        branch: eta.branch,
        lambda_in_window: true,
    })
}

/// Validated plan from oblique weak-Minty parameters.
pub fn plan_from_oblique(
    p: &ObliqueParams,
    svd: &GroupedSvd,
    req: &StepRequest,
    tol: &Tolerances,
) -> Result<StepsizePlan> {
    let nl = svd.norm();
    let l2 = nl * nl;
    let prod = neg(p.beta_p) * neg(p.beta_d);
    if !(prod < 1.0 / (4.0 * l2)) {
        return Err(Error::ExistenceViolated(format!(
            "[beta_P]_-[beta_D]_- = {prod} must be below 1/(4|L|^2) = {}",
            1.0 / (4.0 * l2)
        )));
    }
    let prod_k = neg(p.beta_pp) * neg(p.beta_dp);
    if !(prod_k < 1.0 / l2) {
        return Err(Error::ExistenceViolated(format!(
            "[beta_P']_-[beta_D']_- = {prod_k} must be below 1/|L|^2 = {}",
            1.0 / l2
        )));
    }
    let q = quadratic_window(p.beta_p, p.beta_d, nl, svd.sigma_d());
    if !(neg(p.beta_pp) < q.gamma_max) {
        return Err(Error::ExistenceViolated(format!(
            "[-beta_P']_+ = {} must be below gamma_max = {}",
            neg(p.beta_pp),
            q.gamma_max
        )));
    }
    if !(neg(p.beta_dp) * q.gamma_min * l2 < 1.0) {
        return Err(Error::ExistenceViolated(format!(
            "[-beta_D']_+ = {} must be below 1/(gamma_min |L|^2) = {}",
            neg(p.beta_dp),
            1.0 / (q.gamma_min * l2)
        )));
    }
    let gamma_lo = q.gamma_min.max(neg(p.beta_pp));
    let cap = if p.beta_dp < 0.0 {
        1.0 / (neg(p.beta_dp) * l2)
    } else {
        f64::INFINITY
    };
    let gamma_hi = q.gamma_max.min(cap);
    let gamma = pick_gamma(req, gamma_lo, gamma_hi, nl)?;
    let (tau_lo, tau_hi) = tau_window(p.beta_p, p.beta_d, p.beta_dp, q.delta, nl, gamma)?;
    let tau = pick_tau(req, tau_lo, tau_hi, tol)?;
    let branch = if tau.1 {
        Branch::Semidefinite
    } else {
        branch_of(gamma, tau.0, nl, tol)?
    };
    let eta = eta_bound_branch(p, svd, gamma, tau.0, branch)?;
    let w = Windows {
        delta: q.delta,
        gamma_min: q.gamma_min,
        gamma_max: q.gamma_max,
        gamma_lo,
        gamma_hi,
    };
    finish(w, gamma, tau_lo, tau_hi, tau, eta, req, tol)
}

/// Validated plan from scalar moduli, evaluated cell by cell from the
/// sign pattern of `μ_Aμ_B` and `ρ_Aρ_B`.
pub fn plan_from_moduli(
    md: &ScalarModuli,
    svd: &GroupedSvd,
    req: &StepRequest,
    tol: &Tolerances,
) -> Result<StepsizePlan> {
    let nl = svd.norm();
    let l2 = nl * nl;
    let case = md.classify(nl)?;
    let mu = md.mu_par()?;
    let rho = md.rho_par()?;
    let mu_neg = md.mu_a * md.mu_b < 0.0;
    let rho_neg = md.rho_a * md.rho_b < 0.0;

    let delta = 1.0 + (mu * rho).min(0.0) * (l2 - svd.sigma_d() * svd.sigma_d());
    let root = delta + (delta * delta - 4.0 * mu * rho * l2).max(0.0).sqrt();
    let gamma_min = if rho < 0.0 { -2.0 * rho / root } else { 0.0 };
    let gamma_max = if mu < 0.0 {
        -root / (2.0 * mu * l2)
    } else {
        f64::INFINITY
    };
    let (gamma_lo, gamma_hi) = match case {
        ModuliCase::Monotone => (0.0, f64::INFINITY),
        _ => (
            if rho_neg { gamma_min } else { 0.0 },
            if mu_neg { gamma_max } else { f64::INFINITY },
        ),
    };
    let gamma = pick_gamma(req, gamma_lo, gamma_hi, nl)?;
    let tau_hi = 1.0 / (gamma * l2);
    let tau_lo = if mu_neg {
        -mu * (gamma + rho) / (gamma * (delta - mu * rho * l2) + rho)
    } else {
        0.0
    };
    if tau_lo >= tau_hi {
        return Err(Error::EmptyWindow(format!(
            "tau window ({tau_lo}, {tau_hi}] at gamma = {gamma}"
        )));
    }
    let tau = pick_tau(req, tau_lo, tau_hi, tol)?;
    let branch = if tau.1 {
        Branch::Semidefinite
    } else {
        branch_of(gamma, tau.0, nl, tol)?
    };
    let t = tau.0;

    let dlt = rho / (2.0 * gamma) + mu / (2.0 * t);
    let theta = |s: f64| {
        let a = rho / (2.0 * gamma) - mu / (2.0 * t);
        (a * a + mu * rho * s * s).max(0.0).sqrt()
    };
    let eta_prime = eta_prime_table(svd, gamma, t, md.rho_a, md.mu_b);
    let pm = md.mu_a * md.mu_b;
    let pr = md.rho_a * md.rho_b;
    let (eta, eta_bar) = match branch {
        Branch::Definite => {
            if pm * pr >= 0.0 {
                let e = 1.0 + dlt - theta(nl);
                (e, e)
            } else {
                let e = 1.0 + dlt - theta(svd.sigma_d());
                (e, e.min(eta_prime))
            }
        }
        Branch::Semidefinite if svd.d() == 1 => {
            let e = 1.0 + 2.0 * dlt;
            if pm.max(pr) <= 0.0 {
                (e, e)
            } else {
                (e, e.min(eta_prime))
            }
        }
        Branch::Semidefinite => {
            if pm.max(pr) <= 0.0 {
                let e = 1.0 + 2.0 * dlt;
                (e, e)
            } else if pm.min(pr) > 0.0 {
                let e = 1.0 + dlt - theta(svd.sigma[1]);
                (e, e)
            } else {
                let e = 1.0 + dlt - theta(svd.sigma_d());
                (e, e.min(eta_prime))
            }
        }
    };
    let w = Windows {
        delta,
        gamma_min,
        gamma_max,
        gamma_lo,
        gamma_hi,
    };
    let eb = EtaBound {
        eta,
        eta_prime,
        eta_bar,
        branch,
    };
    finish(w, gamma, tau_lo, tau_hi, tau, eb, req, tol)
}

/// Membership of `(γ, τ)` in the set where `1 + β_P/2γ + β_D/2τ > θ(σ)`,
/// with `σ` chosen as in the stepsize lemma: `σ_d` when `β_Pβ_D < 0`,
/// `σ₂` (or `|L|` for `d = 1`) when `min{β_P, β_D} > 0` on the boundary,
/// `|L|` otherwise.
pub fn gamma_set_sign_test(bp: f64, bd: f64, svd: &GroupedSvd, gamma: f64, tau: f64) -> bool {
    let a = bp / (2.0 * gamma) - bd / (2.0 * tau);
    let sigma = if bp * bd < 0.0 { svd.sigma_d() } else { svd.norm() };
    let th = (a * a + bp * bd * sigma * sigma).max(0.0).sqrt();
    1.0 + bp / (2.0 * gamma) + bd / (2.0 * tau) > th
}

use serde::Serialize;

use super::integrate::{integrate_with, suggest_dt, IntegrateOptions};
use crate::divergence::{relative_entropy, sandwiched_renyi};
use crate::error::{LelError, Result};
use crate::generator::GnsGenerator;
use crate::matcore::DensityMatrix;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ComparisonConstants {
    pub alpha0: f64,
    pub alpha1: f64,
    pub eps: f64,
    pub lambda_big: f64,
    pub eta: f64,
    /// Time after which D_{α₁}(ρ_t) ≤ D_{α₀}(ρ₀).
    pub t: f64,
}

fn check_eps(eps: f64, lambda_min: f64) -> Result<()> {
    let lim = lambda_min * lambda_min / 2.0;
    if !(eps > 0.0 && eps < lim) {
        return Err(LelError::validation(
            "0 < ε < λ_min(σ)²/2",
            None,
            format!("ε = {eps:e}, bound {lim:e}"),
        ));
    }
    Ok(())
}

fn lambda_big(alpha0: f64, eps: f64, lmin: f64, lmax: f64) -> f64 {
    let r = (2.0 * eps).sqrt();
    (lmax / lmin) * (alpha0 * r * (2.0 * lmin - r) / (lmin * (lmin - r))).exp()
}

fn eta(lambda_big: f64, omegas: &[f64]) -> f64 {
    omegas
        .iter()
        .map(|&w| 2.0 * (w.exp() / lambda_big).sqrt() / (1.0 + w.exp() * lambda_big))
        .fold(0.5, f64::min)
}

pub fn comparison_constants(
    alpha0: f64,
    alpha1: f64,
    eps: f64,
    sigma: &DensityMatrix,
    omegas: &[f64],
    k: f64,
) -> Result<ComparisonConstants> {
    if !(alpha0 > 1.0 && alpha1 >= alpha0 && alpha1.is_finite()) {
        return Err(LelError::validation(
            "1 < α₀ ≤ α₁",
            None,
            format!("α₀ = {alpha0}, α₁ = {alpha1}"),
        ));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(LelError::Domain(format!("log-Sobolev constant must be positive, got {k}")));
    }
    check_eps(eps, sigma.min_eig())?;
    let lb = lambda_big(alpha0, eps, sigma.min_eig(), sigma.max_eig());
    let et = eta(lb, omegas);
    Ok(ComparisonConstants {
        alpha0,
        alpha1,
        eps,
        lambda_big: lb,
        eta: et,
        t: ((alpha1 - 1.0) / (alpha0 - 1.0)).ln() / (2.0 * k * et),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TheoremConstants {
    pub alpha: f64,
    pub eps: f64,
    pub lambda_big: f64,
    pub eta: f64,
    pub t_alpha: f64,
    pub c: f64,
    pub tau: f64,
}

/// Constants of the Rényi decay bound D_α(ρ_t) ≤ C e^{−2Kt} D_α(ρ₀), reference order 2.
pub fn theorem_constants(
    alpha: f64,
    eps: f64,
    rho0: &DensityMatrix,
    sigma: &DensityMatrix,
    omegas: &[f64],
    k: f64,
    lambda_l: f64,
) -> Result<TheoremConstants> {
    const ALPHA0: f64 = 2.0;
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(LelError::validation("α > 1", None, format!("α = {alpha}")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(LelError::Domain(format!("log-Sobolev constant must be positive, got {k}")));
    }
    check_eps(eps, sigma.min_eig())?;
    let lb = lambda_big(ALPHA0, eps, sigma.min_eig(), sigma.max_eig());
    let et = eta(lb, omegas);
    let t_alpha = if alpha > ALPHA0 {
        (alpha - 1.0).ln() / (2.0 * k * et)
    } else {
        0.0
    };
    let d2 = sandwiched_renyi(rho0, sigma, 2.0)?.value;
    let da = sandwiched_renyi(rho0, sigma, alpha)?.value;
    let growth = if alpha > ALPHA0 { 2.0 * lambda_l * t_alpha } else { 0.0 };
    let c = if da > 0.0 {
        d2.exp_m1() / da * growth.exp()
    } else {
        f64::INFINITY
    };
    let tau = if alpha <= ALPHA0 {
        0.0
    } else {
        let d = relative_entropy(rho0, sigma)?;
        t_alpha + ((d / eps).ln() / (2.0 * k)).max(0.0)
    };
    Ok(TheoremConstants {
        alpha,
        eps,
        lambda_big: lb,
        eta: et,
        t_alpha,
        c,
        tau,
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(LelError::Domain(format!("weight function needs β > 1, got {beta}")));
    }
    Ok(())
}

/// f(s) = β²/(2(β−1)) · (min(s, 2(β−1)/β − s) − max(−s, s − 2/β)), a density on [0, 1].
pub fn weight_function(s: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let a = beta * beta / (2.0 * (beta - 1.0));
    Ok(a * (s.min(2.0 * (beta - 1.0) / beta - s) - (-s).max(s - 2.0 / beta)))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FKnots {
    pub s1: f64,
    pub s2: f64,
    pub f_max: f64,
}

pub fn f_knots(beta: f64) -> Result<FKnots> {
    check_beta(beta)?;
    let s1 = (beta - 1.0) / (beta * beta);
    Ok(FKnots {
        s1,
        s2: 1.0 - s1,
        f_max: if beta <= 2.0 { beta } else { beta / (beta - 1.0) },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperTrace {
    pub times: Vec<f64>,
    pub beta: Vec<f64>,
    /// (1/β_t) log Z_{β_t}(ρ_t)
    pub f: Vec<f64>,
    /// Largest F_{t+1} − F_t over the trace (≤ 0 when monotone).
    pub max_forward_diff: f64,
}

fn require_close(rho0: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    check_eps(eps, sigma.min_eig())?;
    let d = relative_entropy(rho0, sigma)?;
    if d > eps {
        return Err(LelError::validation(
            "D(ρ₀‖σ) ≤ ε",
            None,
            format!("D(ρ₀‖σ) = {d:e} exceeds ε = {eps:e}"),
        ));
    }
    Ok(d)
}

fn beta_at(alpha0: f64, eta: f64, k: f64, t: f64) -> f64 {
    1.0 + (alpha0 - 1.0) * (2.0 * eta * k * t).exp()
}

/// Tracks F_t along the flow with β_t = 1 + (α₀−1)e^{2ηKt} until β reaches α₁.
#[allow(clippy::too_many_arguments)]
pub fn hypercontractivity_monitor(
    g: &GnsGenerator,
    rho0: &DensityMatrix,
    alpha0: f64,
    alpha1: f64,
    eta: f64,
    k: f64,
    eps: f64,
    samples: usize,
) -> Result<HyperTrace> {
    let sigma = g.stationary();
    require_close(rho0, sigma, eps)?;
    if !(alpha0 > 1.0 && alpha1 >= alpha0 && eta > 0.0 && k > 0.0) {
        return Err(LelError::Domain("need 1 < α₀ ≤ α₁, η > 0 and K > 0".into()));
    }
    let t_end = ((alpha1 - 1.0) / (alpha0 - 1.0)).ln() / (2.0 * eta * k);
    let dt = suggest_dt(g, 0.01);
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let every = (steps / samples.max(1)).max(1);
    let traj = integrate_with(g, rho0, IntegrateOptions { t_end, dt, record_every: every })?;
    let mut beta = Vec::with_capacity(traj.times.len());
    let mut f = Vec::with_capacity(traj.times.len());
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let b = beta_at(alpha0, eta, k, *t);
        let z = sandwiched_renyi(rho, sigma, b)?.z;
        beta.push(b);
        f.push(z.ln() / b);
    }
    let max_forward_diff = f.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(HyperTrace {
        times: traj.times,
        beta,
        f,
        max_forward_diff,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonCheck {
    pub constants: ComparisonConstants,
    pub d_alpha0_initial: f64,
    pub d_alpha1_final: f64,
    pub max_forward_diff: f64,
    pub pass: bool,
}

pub fn comparison_check(
    g: &GnsGenerator,
    rho0: &DensityMatrix,
    alpha0: f64,
    alpha1: f64,
    eps: f64,
    k: f64,
) -> Result<ComparisonCheck> {
    let sigma = g.stationary();
    require_close(rho0, sigma, eps)?;
    let c = comparison_constants(alpha0, alpha1, eps, sigma, &g.omegas(), k)?;
    let hyper = hypercontractivity_monitor(g, rho0, alpha0, alpha1, c.eta, k, eps, 400)?;
    let d0 = sandwiched_renyi(rho0, sigma, alpha0)?.value;
    // β_T = α₁, so F_T = (1 − 1/α₁) D_{α₁}(ρ_T).
    let f_t = *hyper.f.last().expect("final sample");
    let d1 = if alpha1 > alpha0 { f_t * alpha1 / (alpha1 - 1.0) } else { d0 };
    Ok(ComparisonCheck {
        constants: c,
        d_alpha0_initial: d0,
        d_alpha1_final: d1,
        max_forward_diff: hyper.max_forward_diff,
        pass: d1 <= d0 + 1e-9 && hyper.max_forward_diff.max(0.0) <= 1e-8,
    })
}

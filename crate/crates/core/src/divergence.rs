//! Sandwiched and Petz Rényi divergences, relative entropy, χ², the
//! functional derivative of D_α and the relative α-Fisher information.

use serde::Serialize;

use crate::error::{LelError, Result};
use crate::generator::GnsGenerator;
use crate::matcore::{frobenius, hs_inner, CMatrix, DensityMatrix, Domain};
use crate::noncomm::rho_sigma;

/// |α − 1| at or below this uses the relative-entropy branch.
pub const ALPHA_ONE_WINDOW: f64 = 1e-6;
/// Floor for ρ eigenvalues inside log ρ when ρ is rank deficient.
pub const LOG_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub alpha: f64,
    pub value: f64,
    /// tr ρ_σ^α (1 on the relative-entropy branch).
    pub z: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(LelError::Domain(format!("alpha must be positive and finite, got {alpha}")))
    }
}

fn check_pair(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(LelError::Structural(format!(
            "rho is {0}x{0}, sigma is {1}x{1}",
            rho.dim(),
            sigma.dim()
        )));
    }
    sigma.require_positive()
}

pub fn is_alpha_one(alpha: f64) -> bool {
    (alpha - 1.0).abs() <= ALPHA_ONE_WINDOW
}

pub fn sandwiched_renyi(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<DivergenceValue> {
    check_alpha(alpha)?;
    check_pair(rho, sigma)?;
    if is_alpha_one(alpha) {
        return Ok(DivergenceValue {
            alpha,
            value: relative_entropy(rho, sigma)?,
            z: 1.0,
        });
    }
    let rs = rho_sigma(rho, sigma, alpha)?;
    let spec = crate::matcore::eig_hermitian(&crate::matcore::hermitian_part(&rs))?;
    let z: f64 = spec.values.iter().map(|&m| m.max(0.0).powf(alpha)).sum();
    Ok(DivergenceValue {
        alpha,
        value: z.ln() / (alpha - 1.0),
        z,
    })
}

/// tr(ρ log ρ − ρ log σ).
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let plogp: f64 = rho
        .spectrum()
        .values
        .iter()
        .map(|&p| if p <= 0.0 { 0.0 } else { p * p.max(LOG_FLOOR).ln() })
        .sum();
    let cross = (rho.matrix() * sigma.log()?).trace().re;
    Ok(plogp - cross)
}

/// (1/(α−1)) log tr(ρ^α σ^{1−α}).
pub fn petz_renyi(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_pair(rho, sigma)?;
    if is_alpha_one(alpha) {
        return Err(LelError::Domain("Petz-Rényi divergence needs α ≠ 1".into()));
    }
    if alpha > 1.0 {
        rho.require_positive()?;
    }
    let ra = rho.spectrum().pow(alpha, Domain::Strict)?;
    let sa = sigma.pow(1.0 - alpha)?;
    Ok((ra * sa).trace().re.ln() / (alpha - 1.0))
}

/// ⟨Γ_σ⁻¹(ρ−σ), Γ_σ⁻¹(ρ−σ)⟩_{1/2} = tr((ρ−σ)σ^{−1/2}(ρ−σ)σ^{−1/2}).
pub fn chi2_divergence(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let d = rho.matrix() - sigma.matrix();
    let h = sigma.pow(-0.5)?;
    Ok((&d * &h * &d * &h).trace().re)
}

/// Functional derivative of D_α(·‖σ) at ρ (log ρ − log σ at α = 1).
pub fn functional_derivative(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<CMatrix> {
    check_alpha(alpha)?;
    check_pair(rho, sigma)?;
    rho.require_positive()?;
    if is_alpha_one(alpha) {
        return Ok(rho.log()? - sigma.log()?);
    }
    let rs = rho_sigma(rho, sigma, alpha)?;
    let spec = crate::matcore::eig_hermitian(&crate::matcore::hermitian_part(&rs))?;
    let z: f64 = spec.values.iter().map(|&m| m.powf(alpha)).sum();
    let inner = spec.pow(alpha - 1.0, Domain::Strict)?;
    let q = sigma.pow((1.0 - alpha) / (2.0 * alpha))?;
    let fd = (&q * inner * &q).scale(alpha / ((alpha - 1.0) * z));
    Ok(crate::matcore::hermitian_part(&fd))
}

fn check_generator_sigma(g: &GnsGenerator, sigma: &DensityMatrix) -> Result<()> {
    let gs = g.stationary().matrix();
    if gs.nrows() != sigma.dim() || frobenius(&(gs - sigma.matrix())) > 1e-10 {
        return Err(LelError::validation(
            "generator stationary state",
            None,
            "sigma differs from the generator's stationary state",
        ));
    }
    Ok(())
}

/// I_α(ρ‖σ) = −⟨fd_α(ρ), L†(ρ)⟩.
pub fn fisher_information(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64, g: &GnsGenerator) -> Result<f64> {
    check_generator_sigma(g, sigma)?;
    let fd = functional_derivative(rho, sigma, alpha)?;
    Ok(-hs_inner(&fd, &g.apply_ldag(rho.matrix())).re)
}

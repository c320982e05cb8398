//! Detailed-balance classification (GNS, KMS, BKM, SRD), the two-level KMS
//! generator that is SRD only at α = 2, and the α sweep of the SRD residual.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LelError, Result};
use crate::generator::{gns_asymmetry, Generator, RawGenerator};
use crate::matcore::{c64, superop_of, CMatrix, DensityMatrix, Superoperator};
use crate::noncomm::weight_operator;

/// Verdict threshold on normalized residuals.
pub const VERDICT_TOL: f64 = 1e-8;

fn sigma_of(g: &dyn Generator) -> Result<&DensityMatrix> {
    let s = g
        .sigma()
        .ok_or_else(|| LelError::validation("stationary state", None, "generator has no sigma"))?;
    s.require_positive()?;
    Ok(s)
}

/// ‖Γ_σ⁻¹ ∘ L† ∘ Γ_σ − L‖_F / ‖L‖_F.
pub fn check_kms(g: &dyn Generator) -> Result<f64> {
    let sigma = sigma_of(g)?;
    let h = sigma.pow(0.5)?;
    let hi = sigma.pow(-0.5)?;
    let gamma = Superoperator::sandwich(&h, &h);
    let gamma_inv = Superoperator::sandwich(&hi, &hi);
    let d = gamma_inv.compose(g.schrodinger()).compose(&gamma).sub(g.heisenberg());
    Ok(d.frobenius() / g.heisenberg().frobenius().max(1e-300))
}

/// Normalized asymmetry of L in ⟨·,·⟩₁ over matrix-unit pairs.
pub fn check_gns(g: &dyn Generator) -> Result<f64> {
    let sigma = sigma_of(g)?;
    Ok(gns_asymmetry(sigma.matrix(), g.heisenberg()))
}

/// Trace norm of W_{σ,α} ∘ L ∘ W_{σ,α}⁻¹ − L† (not normalized).
pub fn srd_residual(g: &dyn Generator, alpha: f64) -> Result<f64> {
    let sigma = sigma_of(g)?;
    let w = weight_operator(sigma, alpha)?;
    let ws = w.superop();
    let wi = w.inverse().superop();
    Ok(ws.compose(g.heisenberg()).compose(&wi).sub(g.schrodinger()).trace_norm())
}

/// BKM residual, i.e. the SRD residual with W_{σ,1} = [σ]₀.
pub fn check_bkm(g: &dyn Generator) -> Result<f64> {
    srd_residual(g, 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct SrdEntry {
    pub alpha: f64,
    pub residual: Option<f64>,
    pub normalized: Option<f64>,
    pub pass: Option<bool>,
    pub warning: Option<String>,
}

pub fn check_srd(g: &dyn Generator, alphas: &[f64]) -> Result<Vec<SrdEntry>> {
    let norm = g.heisenberg().trace_norm().max(1e-300);
    alphas
        .par_iter()
        .map(|&alpha| {
            if !(alpha > 0.0) {
                return Ok(SrdEntry {
                    alpha,
                    residual: None,
                    normalized: None,
                    pass: None,
                    warning: Some(format!("alpha = {alpha} is not positive; skipped")),
                });
            }
            let r = srd_residual(g, alpha)?;
            Ok(SrdEntry {
                alpha,
                residual: Some(r),
                normalized: Some(r / norm),
                pass: Some(r / norm <= VERDICT_TOL),
                warning: None,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdicts {
    pub gns: bool,
    pub kms: bool,
    pub bkm: bool,
    pub srd_all: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BalanceReport {
    pub label: String,
    pub gns_residual: f64,
    pub kms_residual: f64,
    /// Trace-norm residual, normalized by ‖L‖_Tr.
    pub bkm_residual: f64,
    pub srd_residuals: Vec<SrdEntry>,
    pub verdicts: Verdicts,
}

pub fn balance_report(g: &dyn Generator, alphas: &[f64]) -> Result<BalanceReport> {
    let gns = check_gns(g)?;
    let kms = check_kms(g)?;
    let bkm = check_bkm(g)? / g.heisenberg().trace_norm().max(1e-300);
    let srd = check_srd(g, alphas)?;
    let srd_all = srd.iter().all(|e| e.pass.unwrap_or(true));
    Ok(BalanceReport {
        label: g.label().to_string(),
        gns_residual: gns,
        kms_residual: kms,
        bkm_residual: bkm,
        verdicts: Verdicts {
            gns: gns <= VERDICT_TOL,
            kms: kms <= VERDICT_TOL,
            bkm: bkm <= VERDICT_TOL,
            srd_all,
        },
        srd_residuals: srd,
    })
}

fn ket(a: f64, b: f64) -> CMatrix {
    let n = (a * a + b * b).sqrt();
    CMatrix::from_column_slice(2, 1, &[c64(a / n), c64(b / n)])
}

/// σ = (1/7)[[2,3],[3,5]].
pub fn carlen_maas_sigma() -> DensityMatrix {
    DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[c64(2.0), c64(3.0), c64(3.0), c64(5.0)]).unscale(7.0))
        .expect("valid state")
}

/// Kraus operators K₁ = |ψ⟩⟨0|, K₂ = |φ⟩⟨1|.
pub fn carlen_maas_kraus() -> [CMatrix; 2] {
    let psi = ket(1.0, 1.0);
    let phi = ket(1.0, 2.0);
    let e0 = ket(1.0, 0.0);
    let e1 = ket(0.0, 1.0);
    [&psi * e0.adjoint(), &phi * e1.adjoint()]
}

/// Heisenberg channel A ↦ Σ K_j* A K_j.
pub fn heisenberg_channel(kraus: &[CMatrix]) -> Superoperator {
    let ks = kraus.to_vec();
    superop_of(kraus[0].nrows(), move |a| {
        ks.iter().map(|k| k.adjoint() * a * k).fold(CMatrix::zeros(a.nrows(), a.ncols()), |x, y| x + y)
    })
}

/// L = 𝒦̃ ∘ 𝒦 − ℐ with K̃_j = σ^{1/2} K_j* σ^{−1/2}.
pub fn carlen_maas_counterexample() -> RawGenerator {
    let sigma = carlen_maas_sigma();
    let h = sigma.pow(0.5).expect("positive");
    let hi = sigma.pow(-0.5).expect("positive");
    let kraus = carlen_maas_kraus();
    let tilde: Vec<CMatrix> = kraus.iter().map(|k| &h * k.adjoint() * &hi).collect();
    let l = heisenberg_channel(&tilde)
        .compose(&heisenberg_channel(&kraus))
        .sub(&Superoperator::identity(2));
    RawGenerator::new(Some(sigma), l.adjoint(), "carlen-maas").expect("trace preserving")
}

/// (α, trace-norm SRD residual) rows in grid order.
pub fn fig1_sweep(g: &dyn Generator, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(bad) = grid.iter().find(|a| !(**a > 0.0)) {
        return Err(LelError::Domain(format!("alpha grid must be positive, found {bad}")));
    }
    grid.par_iter().map(|&a| Ok((a, srd_residual(g, a)?))).collect()
}

use serde::Serialize;

use crate::divergence::{fisher_information, sandwiched_renyi};
use crate::error::Result;
use crate::generator::{GnsGenerator, SpectralGap};
use crate::matcore::{identity, inner_s, CMatrix, DensityMatrix};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PoincareCheck {
    /// ⟨A, −L(A)⟩_{1/2}
    pub lhs: f64,
    /// λ ⟨A, A⟩_{1/2}
    pub rhs: f64,
    pub pass: bool,
    /// A had a component along I that was removed first.
    pub projected: bool,
}

pub fn poincare_check(g: &GnsGenerator, gap: &SpectralGap, a: &CMatrix) -> Result<PoincareCheck> {
    let sigma = g.stationary();
    let n = g.dim();
    let scale = crate::matcore::frobenius(a).max(1e-300);
    let m = inner_s(&identity(n), a, sigma, 0.5)?;
    let projected = m.norm() > 1e-10 * scale;
    let a = if projected { a - identity(n) * m } else { a.clone() };
    let lhs = inner_s(&a, &g.apply_l(&a).scale(-1.0), sigma, 0.5)?.re;
    let norm = inner_s(&a, &a, sigma, 0.5)?.re;
    let rhs = gap.gap * norm;
    Ok(PoincareCheck {
        lhs,
        rhs,
        pass: lhs >= rhs - 1e-10 * norm.max(1.0),
        projected,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Fisher2Check {
    pub i2: f64,
    /// 2λ(1 − e^{−D₂})
    pub bound: f64,
    pub pass: bool,
}

pub fn fisher2_bound_check(g: &GnsGenerator, gap: f64, rho: &DensityMatrix) -> Result<Fisher2Check> {
    let sigma = g.stationary();
    let i2 = fisher_information(rho, sigma, 2.0, g)?;
    let d2 = sandwiched_renyi(rho, sigma, 2.0)?.value;
    let bound = -2.0 * gap * (-d2).exp_m1();
    Ok(Fisher2Check {
        i2,
        bound,
        pass: i2 >= bound - 1e-9,
    })
}

use nalgebra::DMatrix;
use serde::Serialize;

use super::comparison::{ComparisonConstants, TheoremConstants};
use super::optimize::minimize_multistart;
use crate::divergence::{fisher_information, relative_entropy, sandwiched_renyi};
use crate::error::{LelError, Result};
use crate::generator::{spectral_gap, GnsGenerator};
use crate::matcore::{
    c64, eig_hermitian, hs_inner, traceless_hermitian_basis, CMatrix, DensityMatrix, C64,
};
use crate::noncomm::{gamma_pow, mop, rho_sigma};
use crate::random::{random_hermitian, seeded};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LsiBudget {
    pub starts: usize,
    pub iterations: u64,
    pub seed: u64,
    /// Initial simplex edge in the Hermitian-exponent parameterization.
    pub step: f64,
}

impl Default for LsiBudget {
    fn default() -> Self {
        LsiBudget {
            starts: 8,
            iterations: 200,
            seed: 0,
            step: 0.5,
        }
    }
}

/// Small-deviation limits ρ = σ + εν, ε → 0, of the four LSI quotients.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearizedConstants {
    pub k: f64,
    pub k2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct T2Entry {
    pub eps: f64,
    pub t2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsReport {
    pub label: String,
    pub lambda_l: f64,
    pub lambda_min: f64,
    pub k_lower: f64,
    pub k_upper: f64,
    pub k2_lower: f64,
    pub k_est: f64,
    pub k2_est: f64,
    pub kappa1_est: f64,
    pub kappa2_est: f64,
    /// Best sampled values before taking the minimum with the linearized limit.
    pub k_sampled: f64,
    pub k2_sampled: f64,
    pub kappa1_sampled: f64,
    pub kappa2_sampled: f64,
    pub linearized: LinearizedConstants,
    pub t2_bound: Vec<T2Entry>,
    pub budget: LsiBudget,
    pub comparison: Option<ComparisonConstants>,
    pub theorem: Option<TheoremConstants>,
}

pub fn k_lower(lambda_l: f64, lambda_min: f64) -> f64 {
    lambda_l / (1.0 - lambda_min.sqrt().ln())
}

pub fn k2_lower(lambda_l: f64, lambda_min: f64) -> f64 {
    lambda_l * (1.0 - lambda_min) / (1.0 / lambda_min).ln()
}

/// max(0, (1/2λ) log(1/(λ_min ε²))).
pub fn t2_bound(eps: f64, lambda_l: f64, lambda_min: f64) -> f64 {
    ((1.0 / (lambda_min * eps * eps)).ln() / (2.0 * lambda_l)).max(0.0)
}

fn hermitian_from_params(n: usize, x: &[f64]) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    let mut i = 0;
    for k in 0..n {
        h[(k, k)] = c64(x[i]);
        i += 1;
    }
    for k in 0..n {
        for l in (k + 1)..n {
            let z = C64::new(x[i], x[i + 1]);
            h[(k, l)] = z;
            h[(l, k)] = z.conj();
            i += 2;
        }
    }
    h
}

fn params_from_hermitian(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    let mut x: Vec<f64> = (0..n).map(|k| h[(k, k)].re).collect();
    for k in 0..n {
        for l in (k + 1)..n {
            x.push(h[(k, l)].re);
            x.push(h[(k, l)].im);
        }
    }
    x
}

/// ρ = e^H / tr e^H.
fn state_from_params(n: usize, x: &[f64]) -> Option<DensityMatrix> {
    let h = hermitian_from_params(n, x);
    let spec = eig_hermitian(&h).ok()?;
    let top = spec.max();
    let e = spec.apply_fn(|v| (v - top).exp());
    let rho = DensityMatrix::normalized(&e).ok()?;
    rho.is_strictly_positive().then_some(rho)
}

/// min generalized eigenvalue of N x = μ D x with D positive definite.
fn min_generalized(nm: &DMatrix<f64>, dm: &DMatrix<f64>) -> Result<f64> {
    let nm = (nm + nm.transpose()) * 0.5;
    let dm = (dm + dm.transpose()) * 0.5;
    let chol = dm
        .cholesky()
        .ok_or_else(|| LelError::Numerical("denominator form is not positive definite".into()))?;
    let l = chol.l();
    let li = l
        .clone()
        .try_inverse()
        .ok_or_else(|| LelError::Numerical("singular Cholesky factor".into()))?;
    let m = &li * nm * li.transpose();
    let m = (&m + m.transpose()) * 0.5;
    Ok(m.symmetric_eigen().eigenvalues.min())
}

fn gram(basis: &[CMatrix], left: impl Fn(&CMatrix) -> CMatrix, right: impl Fn(&CMatrix) -> CMatrix) -> DMatrix<f64> {
    let ls: Vec<CMatrix> = basis.iter().map(&left).collect();
    let rs: Vec<CMatrix> = basis.iter().map(&right).collect();
    DMatrix::from_fn(basis.len(), basis.len(), |i, j| hs_inner(&ls[i], &rs[j]).re)
}

pub fn linearized_constants(g: &GnsGenerator) -> Result<LinearizedConstants> {
    let sigma = g.stationary();
    let basis = traceless_hermitian_basis(g.dim());
    let bkm_inv = mop(sigma.matrix(), 0.0)?.inverse();
    let minus_ldag = |b: &CMatrix| g.apply_ldag(b).scale(-1.0);
    let gamma_inv = |b: &CMatrix| gamma_pow(sigma, -1.0, b).expect("σ positive");
    let q = sigma.pow(0.25)?;
    let qi = sigma.pow(-0.25)?;
    let s_op = |b: &CMatrix| &q * b * &qi + &qi * b * &q;

    let nk = gram(&basis, |b| bkm_inv.apply(b), minus_ldag);
    let dk = gram(&basis, |b| b.clone(), |b| bkm_inv.apply(b));
    let k = min_generalized(&nk, &dk)?;

    let n2 = gram(&basis, gamma_inv, minus_ldag);
    let d2 = gram(&basis, |b| b.clone(), gamma_inv);
    let k2 = min_generalized(&n2, &d2)?;

    let dkap = gram(&basis, s_op, |b| bkm_inv.apply(&s_op(b)));
    let kappa2 = min_generalized(&(n2.clone() * 2.0), &dkap)?;
    Ok(LinearizedConstants {
        k,
        k2,
        kappa1: k / 2.0,
        kappa2,
    })
}

#[derive(Clone, Copy)]
enum Quotient {
    K,
    K2,
    Kappa1,
    Kappa2,
}

/// Below this divergence the quotients lose digits to cancellation; the
/// linearized limit covers that region instead.
const DEN_FLOOR: f64 = 1e-6;

fn quotient(g: &GnsGenerator, rho: &DensityMatrix, which: Quotient) -> Option<f64> {
    let sigma = g.stationary();
    match which {
        Quotient::K | Quotient::Kappa1 => {
            let d = relative_entropy(rho, sigma).ok()?;
            if d < DEN_FLOOR {
                return None;
            }
            let i = fisher_information(rho, sigma, 1.0, g).ok()?;
            Some(match which {
                Quotient::K => i / (2.0 * d),
                _ => i / (4.0 * d),
            })
        }
        Quotient::K2 => {
            let d = sandwiched_renyi(rho, sigma, 2.0).ok()?.value;
            if d < DEN_FLOOR {
                return None;
            }
            Some(fisher_information(rho, sigma, 2.0, g).ok()? / (2.0 * d))
        }
        Quotient::Kappa2 => {
            let rs = rho_sigma(rho, sigma, 2.0).ok()?;
            let sq = &rs * &rs;
            let tau = DensityMatrix::normalized(&sq).ok()?;
            let d = relative_entropy(&tau, sigma).ok()?;
            if d < DEN_FLOOR {
                return None;
            }
            Some(0.5 * fisher_information(rho, sigma, 2.0, g).ok()? / d)
        }
    }
}

fn starts(g: &GnsGenerator, budget: &LsiBudget) -> Result<Vec<Vec<f64>>> {
    let n = g.dim();
    let log_sigma = g.stationary().log()?;
    let scales = [0.3, 1.0, 2.0, 4.0];
    Ok((0..budget.starts)
        .map(|s| {
            let mut rng = seeded(budget.seed.wrapping_add(s as u64));
            let h = &log_sigma + random_hermitian(n, &mut rng).scale(scales[s % scales.len()]);
            params_from_hermitian(&h)
        })
        .collect())
}

fn sampled(g: &GnsGenerator, budget: &LsiBudget, which: Quotient) -> Result<f64> {
    let n = g.dim();
    let x0 = starts(g, budget)?;
    let f = |x: &[f64]| state_from_params(n, x).and_then(|rho| quotient(g, &rho, which));
    Ok(minimize_multistart(&f, &x0, budget.step, budget.iterations)?.best)
}

pub fn lsi_constants(g: &GnsGenerator, budget: LsiBudget) -> Result<ConstantsReport> {
    let gap = spectral_gap(g)?;
    let lam = gap.gap;
    let lmin = g.stationary().min_eig();
    let lin = linearized_constants(g)?;
    let k_s = sampled(g, &budget, Quotient::K)?;
    let k2_s = sampled(g, &budget, Quotient::K2)?;
    let kap1_s = sampled(g, &budget, Quotient::Kappa1)?;
    let kap2_s = sampled(g, &budget, Quotient::Kappa2)?;
    let t2 = [1e-1, 1e-2, 1e-3, 1e-6]
        .iter()
        .map(|&eps| T2Entry {
            eps,
            t2: t2_bound(eps, lam, lmin),
        })
        .collect();
    Ok(ConstantsReport {
        label: crate::generator::Generator::label(g).to_string(),
        lambda_l: lam,
        lambda_min: lmin,
        k_lower: k_lower(lam, lmin),
        k_upper: lam,
        k2_lower: k2_lower(lam, lmin),
        k_est: k_s.min(lin.k),
        k2_est: k2_s.min(lin.k2),
        kappa1_est: kap1_s.min(lin.kappa1),
        kappa2_est: kap2_s.min(lin.kappa2),
        k_sampled: k_s,
        k2_sampled: k2_s,
        kappa1_sampled: kap1_s,
        kappa2_sampled: kap2_s,
        linearized: lin,
        t2_bound: t2,
        budget,
        comparison: None,
        theorem: None,
    })
}

//! Kernel operators diagonal in an eigenbasis, and the operators built on them:
//! Γ_σ powers, Δ_σ, [X]_ω, M^α_{ρ,ω}, G_{X,ω}(s), W_{σ,α}, gradient and divergence,
//! power operator, entropy function and Dirichlet form.

use nalgebra::DMatrix;

use crate::error::{LelError, Result};
use crate::generator::GnsGenerator;
use crate::matcore::{
    c64, commutator, eig_hermitian, frobenius, identity, inner_s, superop_of, CMatrix, DensityMatrix,
    Domain, SpectralDecomposition, Superoperator, POS_FLOOR,
};

/// Switch to the series branch below this |u|.
const SERIES_SWITCH: f64 = 1e-8;

/// A ↦ U (m ∘ (U* A U)) U*.
#[derive(Clone, Debug)]
pub struct KernelOp {
    basis: CMatrix,
    kernel: DMatrix<f64>,
}

impl KernelOp {
    pub fn new(basis: CMatrix, kernel: DMatrix<f64>) -> Self {
        KernelOp { basis, kernel }
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let u = &self.basis;
        let mut t = u.adjoint() * a * u;
        t.zip_apply(&self.kernel.map(c64), |x, k| *x *= k);
        u * t * u.adjoint()
    }

    pub fn inverse(&self) -> KernelOp {
        KernelOp {
            basis: self.basis.clone(),
            kernel: self.kernel.map(|x| 1.0 / x),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.kernel.iter().all(|&x| x > 0.0)
    }

    pub fn superop(&self) -> Superoperator {
        superop_of(self.basis.nrows(), |a| self.apply(a))
    }
}

fn require_positive_spec(x: &CMatrix, what: &str) -> Result<SpectralDecomposition> {
    let spec = eig_hermitian(x)?;
    if spec.min() < POS_FLOOR {
        return Err(LelError::Singular {
            what: format!("{what} requires a strictly positive matrix"),
            eigenvalue: spec.min(),
        });
    }
    Ok(spec)
}

/// ∫₀¹ e^{ω(s−½)} e^{s·lk} e^{(1−s)·ll} ds, given lk = log λ_k, ll = log λ_l.
pub fn mop_entry(lk: f64, ll: f64, omega: f64) -> f64 {
    let u = omega + lk - ll;
    let base = (ll - omega / 2.0).exp();
    if u.abs() <= SERIES_SWITCH {
        base * (1.0 + u / 2.0 + u * u / 6.0)
    } else {
        base * u.exp_m1() / u
    }
}

fn log_kernel(logs: &[f64], f: impl Fn(f64, f64) -> f64) -> DMatrix<f64> {
    let n = logs.len();
    DMatrix::from_fn(n, n, |k, l| f(logs[k], logs[l]))
}

/// σ^{γ/2} A σ^{γ/2}.
pub fn gamma_pow(sigma: &DensityMatrix, gamma: f64, a: &CMatrix) -> Result<CMatrix> {
    sigma.require_positive()?;
    let h = sigma.pow(gamma / 2.0)?;
    Ok(&h * a * &h)
}

/// Δ_σ(A) = σ A σ⁻¹.
pub fn modular(sigma: &DensityMatrix, a: &CMatrix) -> Result<CMatrix> {
    sigma.require_positive()?;
    Ok(sigma.matrix() * a * sigma.pow(-1.0)?)
}

/// [X]_ω as a kernel operator.
pub fn mop(x: &CMatrix, omega: f64) -> Result<KernelOp> {
    let spec = require_positive_spec(x, "[X]_ω")?;
    Ok(mop_from_spec(&spec, omega))
}

pub fn mop_from_spec(spec: &SpectralDecomposition, omega: f64) -> KernelOp {
    let logs: Vec<f64> = spec.values.iter().map(|l| l.ln()).collect();
    KernelOp::new(spec.vectors.clone(), log_kernel(&logs, |a, b| mop_entry(a, b, omega)))
}

/// [X]_ω⁻¹.
pub fn mop_inv(x: &CMatrix, omega: f64) -> Result<KernelOp> {
    Ok(mop(x, omega)?.inverse())
}

/// ‖[X]_ω(V log(e^{−ω/2}X) − log(e^{ω/2}X)V) − (e^{−ω/2}VX − e^{ω/2}XV)‖_F.
pub fn chain_rule_residual(v: &CMatrix, x: &CMatrix, omega: f64) -> Result<f64> {
    let spec = require_positive_spec(x, "chain rule")?;
    let logx = spec.log(Domain::Strict)?;
    let n = x.nrows();
    let id = identity(n);
    let lm = &logx - id.scale(omega / 2.0);
    let lp = &logx + id.scale(omega / 2.0);
    let lhs = mop_from_spec(&spec, omega).apply(&(v * lm - lp * v));
    let rhs = (v * x).scale((-omega / 2.0).exp()) - (x * v).scale((omega / 2.0).exp());
    Ok(frobenius(&(lhs - rhs)))
}

/// ∂_j A = [V_j, A] for every effective jump operator.
pub fn nc_gradient(g: &GnsGenerator, a: &CMatrix) -> Vec<CMatrix> {
    g.jump_ops().iter().map(|v| commutator(v, a)).collect()
}

/// div(A⃗) = Σ_j [A_j, V_j*].
pub fn nc_divergence(g: &GnsGenerator, field: &[CMatrix]) -> Result<CMatrix> {
    let ops = g.jump_ops();
    if field.len() != ops.len() {
        return Err(LelError::Structural(format!(
            "vector field has {} components, generator has {} terms",
            field.len(),
            ops.len()
        )));
    }
    let n = g.dim();
    let mut acc = CMatrix::zeros(n, n);
    for (a, v) in field.iter().zip(ops) {
        acc += commutator(a, &v.adjoint());
    }
    Ok(acc)
}

/// Quantities of (ρ, σ, α) shared by every M^α_{ρ,ω}.
#[derive(Clone, Debug)]
pub struct RenyiGeometry {
    pub alpha: f64,
    /// tr ρ_σ^α.
    pub z: f64,
    rho_sigma: SpectralDecomposition,
    /// σ^{(α−1)/(2α)}.
    p: CMatrix,
    p_inv: CMatrix,
}

/// ρ_σ = σ^{(1−α)/2α} ρ σ^{(1−α)/2α}.
pub fn rho_sigma(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<CMatrix> {
    let q = sigma.pow((1.0 - alpha) / (2.0 * alpha))?;
    Ok(&q * rho.matrix() * &q)
}

impl RenyiGeometry {
    pub fn new(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(LelError::Domain(format!("alpha must be positive, got {alpha}")));
        }
        rho.require_positive()?;
        sigma.require_positive()?;
        let rs = rho_sigma(rho, sigma, alpha)?;
        let spec = require_positive_spec(&rs, "ρ_σ")?;
        let z = spec.values.iter().map(|m| m.powf(alpha)).sum();
        let e = (alpha - 1.0) / (2.0 * alpha);
        Ok(RenyiGeometry {
            alpha,
            z,
            rho_sigma: spec,
            p: sigma.pow(e)?,
            p_inv: sigma.pow(-e)?,
        })
    }

    /// M^α_{ρ,ω} = (Z/α) Γ^{(α−1)/α} ∘ [ρ_σ]_{ω/α} ∘ [ρ_σ^{α−1}]⁻¹_{(α−1)ω/α} ∘ Γ^{(α−1)/α}.
    pub fn operator(&self, omega: f64) -> MopRenyi {
        let a = self.alpha;
        let logs: Vec<f64> = self.rho_sigma.values.iter().map(|m| m.ln()).collect();
        let pref = self.z / a;
        let kernel = log_kernel(&logs, |lk, ll| {
            let num = mop_entry(lk, ll, omega / a);
            let den = mop_entry((a - 1.0) * lk, (a - 1.0) * ll, (a - 1.0) * omega / a);
            pref * num / den
        });
        MopRenyi {
            inner: KernelOp::new(self.rho_sigma.vectors.clone(), kernel),
            p: self.p.clone(),
            p_inv: self.p_inv.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MopRenyi {
    inner: KernelOp,
    p: CMatrix,
    p_inv: CMatrix,
}

impl MopRenyi {
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        &self.p * self.inner.apply(&(&self.p * a * &self.p)) * &self.p
    }

    pub fn apply_inv(&self, a: &CMatrix) -> CMatrix {
        &self.p_inv * self.inner.inverse().apply(&(&self.p_inv * a * &self.p_inv)) * &self.p_inv
    }

    pub fn is_positive(&self) -> bool {
        self.inner.is_positive()
    }

    pub fn superop(&self) -> Superoperator {
        superop_of(self.p.nrows(), |a| self.apply(a))
    }
}

pub fn moprenyi(rho: &DensityMatrix, sigma: &DensityMatrix, omega: f64, alpha: f64) -> Result<MopRenyi> {
    Ok(RenyiGeometry::new(rho, sigma, alpha)?.operator(omega))
}

/// G_{X,ω}(s) with kernel b^s + b^{1−s}, b = e^ω λ_k/λ_l.
pub fn g_op(x: &CMatrix, omega: f64, s: f64) -> Result<KernelOp> {
    if !(0.0..=0.5).contains(&s) {
        return Err(LelError::Domain(format!("s must lie in [0, 1/2], got {s}")));
    }
    let spec = require_positive_spec(x, "G_{X,ω}")?;
    let logs: Vec<f64> = spec.values.iter().map(|l| l.ln()).collect();
    let kernel = log_kernel(&logs, |lk, ll| {
        let lb = omega + lk - ll;
        (s * lb).exp() + ((1.0 - s) * lb).exp()
    });
    Ok(KernelOp::new(spec.vectors, kernel))
}

/// Weight-operator coefficient f^α_{kj} for eigenvalues λ_k, λ_j of σ.
pub fn weight_coefficient(lk: f64, lj: f64, alpha: f64, same: bool) -> f64 {
    if same {
        return lk;
    }
    // Fixed argument order keeps the kernel bitwise symmetric.
    let (lk, lj) = if lk >= lj { (lk, lj) } else { (lj, lk) };
    let d = lk.ln() - lj.ln();
    if d.abs() <= SERIES_SWITCH {
        return (lk * lj).sqrt();
    }
    let logmean = lj * d.exp_m1() / d;
    if alpha == 0.0 {
        lk.max(lj)
    } else if alpha == 1.0 {
        logmean
    } else if alpha == 2.0 {
        (lk * lj).sqrt()
    } else if alpha.is_infinite() {
        lk * lj / logmean
    } else {
        lj * (1.0 - alpha) * (d / alpha).exp_m1() / (d * (1.0 - alpha) / alpha).exp_m1()
    }
}

/// W_{σ,α} for α ∈ [0, ∞]; pass `f64::INFINITY` for α = ∞.
pub fn weight_operator(sigma: &DensityMatrix, alpha: f64) -> Result<KernelOp> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(LelError::Domain(format!("alpha must be in [0, ∞], got {alpha}")));
    }
    sigma.require_positive()?;
    let spec = sigma.spectrum();
    let lam = &spec.values;
    let n = lam.len();
    let kernel = DMatrix::from_fn(n, n, |k, j| weight_coefficient(lam[k], lam[j], alpha, k == j));
    Ok(KernelOp::new(spec.vectors.clone(), kernel))
}

/// |B|^p = (B*B)^{p/2}.
fn abs_pow(b: &CMatrix, p: f64) -> Result<CMatrix> {
    eig_hermitian(&crate::matcore::hermitian_part(&(b.adjoint() * b)))?.pow(p / 2.0, Domain::Strict)
}

/// Γ_σ^{−1/β}(|Γ_σ^{1/α}(A)|^{α/β}).
pub fn power_op(sigma: &DensityMatrix, beta: f64, alpha: f64, a: &CMatrix) -> Result<CMatrix> {
    let inner = gamma_pow(sigma, 1.0 / alpha, a)?;
    gamma_pow(sigma, -1.0 / beta, &abs_pow(&inner, alpha / beta)?)
}

/// ‖A‖_{α,σ} = (tr |Γ_σ^{1/α}(A)|^α)^{1/α}.
pub fn lp_norm(sigma: &DensityMatrix, alpha: f64, a: &CMatrix) -> Result<f64> {
    let inner = gamma_pow(sigma, 1.0 / alpha, a)?;
    Ok(abs_pow(&inner, alpha)?.trace().re.powf(1.0 / alpha))
}

/// α-entropy function Ent_α(X) for X > 0.
pub fn ent_fun(sigma: &DensityMatrix, alpha: f64, x: &CMatrix) -> Result<f64> {
    let y = gamma_pow(sigma, 1.0 / alpha, x)?;
    let spec = require_positive_spec(&crate::matcore::hermitian_part(&y), "Ent_α")?;
    let ya = spec.pow(alpha, Domain::Strict)?;
    let norm_a: f64 = spec.values.iter().map(|m| m.powf(alpha)).sum();
    let ylogy: f64 = spec.values.iter().map(|m| alpha * m.powf(alpha) * m.ln()).sum();
    let ylogs = (&ya * sigma.log()?).trace().re;
    Ok(ylogy - ylogs - norm_a * norm_a.ln())
}

/// α-Dirichlet form E_α(X); the logarithmic limit is used for |α − 1| ≤ 1e−6.
pub fn dirichlet_form(g: &GnsGenerator, alpha: f64, x: &CMatrix) -> Result<f64> {
    let sigma = g.stationary();
    let lx = g.apply_l(x).scale(-1.0);
    if (alpha - 1.0).abs() <= crate::divergence::ALPHA_ONE_WINDOW {
        let gx = gamma_pow(sigma, 1.0, x)?;
        let lg = require_positive_spec(&crate::matcore::hermitian_part(&gx), "E_1")?.log(Domain::Strict)?;
        let arg = lg - sigma.log()?;
        return Ok(0.25 * inner_s(&arg, &lx, sigma, 0.5)?.re);
    }
    let at = alpha / (alpha - 1.0);
    let p = power_op(sigma, at, alpha, x)?;
    Ok(alpha * at / 4.0 * inner_s(&p, &lx, sigma, 0.5)?.re)
}

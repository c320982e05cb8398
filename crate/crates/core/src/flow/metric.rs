use nalgebra::{DMatrix, DVector};

use crate::divergence::{functional_derivative, is_alpha_one};
use crate::error::{LelError, Result};
use crate::generator::GnsGenerator;
use crate::matcore::{
    frobenius, from_traceless_coords, hermiticity_residual, hs_inner, traceless_coords,
    traceless_hermitian_basis, CMatrix, DensityMatrix,
};
use crate::noncomm::{nc_divergence, nc_gradient, MopRenyi, RenyiGeometry};

fn operators(g: &GnsGenerator, rho: &DensityMatrix, alpha: f64) -> Result<Vec<MopRenyi>> {
    let a = if is_alpha_one(alpha) { 1.0 } else { alpha };
    let geom = RenyiGeometry::new(rho, g.stationary(), a)?;
    Ok(g.omegas().iter().map(|&w| geom.operator(w)).collect())
}

/// div(M ∇U) for the given per-term operators.
fn flux_divergence(g: &GnsGenerator, ms: &[MopRenyi], u: &CMatrix) -> Result<CMatrix> {
    let field: Vec<CMatrix> = nc_gradient(g, u).iter().zip(ms).map(|(d, m)| m.apply(d)).collect();
    nc_divergence(g, &field)
}

/// ‖div(M^α_{ρ,ω⃗}(∇ fd_α(ρ))) − L†(ρ)‖_F / ‖L†(ρ)‖_F (absolute below 1e−12).
pub fn gradient_flow_residual(g: &GnsGenerator, rho: &DensityMatrix, alpha: f64) -> Result<f64> {
    let ms = operators(g, rho, alpha)?;
    let fd = functional_derivative(rho, g.stationary(), alpha)?;
    let lhs = flux_divergence(g, &ms, &fd)?;
    let rhs = g.apply_ldag(rho.matrix());
    let r = frobenius(&(lhs - &rhs));
    let d = frobenius(&rhs);
    Ok(if d < 1e-12 { r } else { r / d })
}

/// The operator U ↦ −div(M ∇U) on traceless Hermitian matrices, in an orthonormal basis.
#[derive(Clone, Debug)]
pub struct MetricTensor {
    basis: Vec<CMatrix>,
    ms: Vec<MopRenyi>,
    op: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl MetricTensor {
    pub fn new(g: &GnsGenerator, rho: &DensityMatrix, alpha: f64) -> Result<Self> {
        let ms = operators(g, rho, alpha)?;
        let basis = traceless_hermitian_basis(g.dim());
        let m = basis.len();
        let mut op = DMatrix::<f64>::zeros(m, m);
        for (j, b) in basis.iter().enumerate() {
            let img = flux_divergence(g, &ms, b)?.scale(-1.0);
            for (i, bi) in basis.iter().enumerate() {
                op[(i, j)] = hs_inner(bi, &img).re;
            }
        }
        let op = (&op + op.transpose()) * 0.5;
        let svd = op.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() <= 1e-10 * smax {
            return Err(LelError::validation(
                "primitivity",
                None,
                "−div(M∇·) is singular on traceless matrices",
            ));
        }
        let pinv = svd
            .pseudo_inverse(1e-10 * smax)
            .map_err(|e| LelError::Numerical(e.to_string()))?;
        Ok(MetricTensor { basis, ms, op, pinv })
    }

    fn check_tangent(&self, nu: &CMatrix) -> Result<()> {
        let scale = frobenius(nu).max(1.0);
        if nu.trace().norm() > 1e-10 * scale || hermiticity_residual(nu) > 1e-12 * scale {
            return Err(LelError::validation(
                "traceless Hermitian tangent vector",
                None,
                "ν must be Hermitian with zero trace",
            ));
        }
        Ok(())
    }

    /// U with −div(M ∇U) = ν.
    pub fn potential(&self, nu: &CMatrix) -> Result<CMatrix> {
        self.check_tangent(nu)?;
        let x = &self.pinv * traceless_coords(&self.basis, nu);
        Ok(from_traceless_coords(&self.basis, &x))
    }

    /// Σ_j ⟨∂_j U₁, M_j(∂_j U₂)⟩.
    pub fn eval(&self, g: &GnsGenerator, nu1: &CMatrix, nu2: &CMatrix) -> Result<f64> {
        let u1 = self.potential(nu1)?;
        let u2 = self.potential(nu2)?;
        let d1 = nc_gradient(g, &u1);
        let d2 = nc_gradient(g, &u2);
        Ok(d1
            .iter()
            .zip(&d2)
            .zip(&self.ms)
            .map(|((a, b), m)| hs_inner(a, &m.apply(b)).re)
            .sum())
    }

    /// Matrix of the metric in the traceless basis (inverse of the operator).
    pub fn gram(&self) -> DMatrix<f64> {
        self.pinv.clone()
    }

    pub fn operator_matrix(&self) -> &DMatrix<f64> {
        &self.op
    }

    pub fn coords(&self, nu: &CMatrix) -> DVector<f64> {
        traceless_coords(&self.basis, nu)
    }
}

pub fn metric_eval(
    g: &GnsGenerator,
    rho: &DensityMatrix,
    alpha: f64,
    nu1: &CMatrix,
    nu2: &CMatrix,
) -> Result<f64> {
    MetricTensor::new(g, rho, alpha)?.eval(g, nu1, nu2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::fisher_information;
    use crate::generator::{build_gns, pauli, qubit_xz, random_gns, JumpTerm};
    use crate::random::{random_density, random_traceless_hermitian, seeded};

    #[test]
    fn residual_vanishes() {
        let mut rng = seeded(1);
        let g = random_gns(3, &mut rng);
        for alpha in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let rho = random_density(3, &mut rng);
            assert!(gradient_flow_residual(&g, &rho, alpha).unwrap() <= 1e-8, "alpha {alpha}");
        }
        let s = g.stationary().clone();
        assert!(gradient_flow_residual(&g, &s, 2.0).unwrap() <= 1e-12);
    }

    #[test]
    fn metric_symmetric_positive_and_energy() {
        let mut rng = seeded(2);
        let g = random_gns(3, &mut rng);
        let rho = random_density(3, &mut rng);
        for alpha in [0.5, 1.0, 2.0] {
            let mt = MetricTensor::new(&g, &rho, alpha).unwrap();
            let a = random_traceless_hermitian(3, &mut rng);
            let b = random_traceless_hermitian(3, &mut rng);
            let ab = mt.eval(&g, &a, &b).unwrap();
            let ba = mt.eval(&g, &b, &a).unwrap();
            assert!((ab - ba).abs() <= 1e-10 * ab.abs().max(1.0));
            assert!(mt.eval(&g, &a, &a).unwrap() > 0.0);
            let ld = g.apply_ldag(rho.matrix());
            let e = mt.eval(&g, &ld, &ld).unwrap();
            let i = fisher_information(&rho, g.stationary(), alpha, &g).unwrap();
            assert!((e - i).abs() <= 1e-8 * i.max(1.0), "alpha {alpha}: {e} vs {i}");
        }
    }

    #[test]
    fn non_tangent_and_non_primitive_rejected() {
        let g = qubit_xz();
        let rho = random_density(2, &mut seeded(3));
        let mt = MetricTensor::new(&g, &rho, 2.0).unwrap();
        assert!(mt.eval(&g, &crate::matcore::identity(2), &pauli()[0]).is_err());
        let [_, _, z] = pauli();
        let single = build_gns(g.stationary().clone(), vec![JumpTerm::new(z, 0.0, 1.0)]).unwrap();
        assert!(MetricTensor::new(&single, &rho, 2.0).is_err());
    }
}

//! Lindblad generators with GNS detailed balance, plus raw superoperator
//! generators for examples not written in jump form.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{LelError, Result};
use crate::matcore::{
    c64, commutator, eig_hermitian, frobenius, gell_mann_diagonal, hs_inner, identity, max_abs,
    superop_of, vec_of, CMatrix, DensityMatrix, Superoperator, C64,
};
use crate::random::random_density_with_floor;

/// Relative threshold below which eigenvalues of σ count as equal.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Relative zero-mode threshold for kernels and gaps.
pub const ZERO_MODE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct JumpTerm {
    pub v: CMatrix,
    pub omega: f64,
    pub weight: f64,
}

impl JumpTerm {
    pub fn new(v: CMatrix, omega: f64, weight: f64) -> Self {
        JumpTerm { v, omega, weight }
    }

    /// √c · V/‖V‖_F, the operator that enters the dynamics.
    pub fn effective(&self) -> CMatrix {
        let nv = frobenius(&self.v);
        self.v.scale(self.weight.sqrt() / nv)
    }
}

/// Anything that provides a Heisenberg generator L and its adjoint L†.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    fn sigma(&self) -> Option<&DensityMatrix>;
    /// Heisenberg picture L.
    fn heisenberg(&self) -> &Superoperator;
    /// Schrödinger picture L†.
    fn schrodinger(&self) -> &Superoperator;
    fn label(&self) -> &str;
}

#[derive(Clone, Debug)]
pub struct GnsGenerator {
    sigma: DensityMatrix,
    terms: Vec<JumpTerm>,
    ops: Vec<CMatrix>,
    l: Superoperator,
    ldag: Superoperator,
    label: String,
}

impl Generator for GnsGenerator {
    fn dim(&self) -> usize {
        self.sigma.dim()
    }
    fn sigma(&self) -> Option<&DensityMatrix> {
        Some(&self.sigma)
    }
    fn heisenberg(&self) -> &Superoperator {
        &self.l
    }
    fn schrodinger(&self) -> &Superoperator {
        &self.ldag
    }
    fn label(&self) -> &str {
        &self.label
    }
}

impl GnsGenerator {
    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn stationary(&self) -> &DensityMatrix {
        &self.sigma
    }

    pub fn terms(&self) -> &[JumpTerm] {
        &self.terms
    }

    /// Effective jump operators √c_j V̂_j, in term order.
    pub fn jump_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.omega).collect()
    }

    pub fn apply_l(&self, a: &CMatrix) -> CMatrix {
        self.l.apply(a)
    }

    pub fn apply_ldag(&self, a: &CMatrix) -> CMatrix {
        self.ldag.apply(a)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same generator with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| JumpTerm::new(t.v.clone(), t.omega, t.weight * factor))
            .collect();
        Ok(build_gns(self.sigma.clone(), terms)?.with_label(self.label.clone()))
    }
}

fn schrodinger_superop(n: usize, ops: &[CMatrix], omegas: &[f64]) -> Superoperator {
    let mut acc = CMatrix::zeros(n * n, n * n);
    let id = identity(n);
    for (v, &w) in ops.iter().zip(omegas) {
        let f = (-w / 2.0).exp();
        let vv = v.adjoint() * v;
        // 2 V A V* − V*V A − A V*V
        let jump = v.conjugate().kronecker(v).scale(2.0);
        let left = id.kronecker(&vv);
        let right = vv.transpose().kronecker(&id);
        acc += (jump - left - right).scale(f);
    }
    Superoperator::from_matrix(n, acc).expect("shape is n²×n²")
}

pub fn build_gns(sigma: DensityMatrix, terms: Vec<JumpTerm>) -> Result<GnsGenerator> {
    sigma.require_positive()?;
    let n = sigma.dim();
    if terms.is_empty() {
        return Err(LelError::validation("nonempty term list", None, "no jump terms given"));
    }
    for (j, t) in terms.iter().enumerate() {
        if t.v.nrows() != n || t.v.ncols() != n {
            return Err(LelError::validation(
                "dimension",
                Some(j),
                format!("jump operator is {}x{}, sigma is {n}x{n}", t.v.nrows(), t.v.ncols()),
            ));
        }
        if !(t.weight.is_finite() && t.weight > 0.0) || !t.omega.is_finite() {
            return Err(LelError::validation(
                "positive weight, finite frequency",
                Some(j),
                format!("weight {} omega {}", t.weight, t.omega),
            ));
        }
        let nv = frobenius(&t.v);
        if !(nv > 0.0) || !nv.is_finite() {
            return Err(LelError::validation("nonzero jump operator", Some(j), "V = 0"));
        }
        let tr = t.v.trace().norm();
        if tr > 1e-10 * nv.max(1.0) {
            return Err(LelError::validation(
                "traceless",
                Some(j),
                format!("|tr V| = {tr:e}"),
            ));
        }
    }
    let unit: Vec<CMatrix> = terms.iter().map(|t| t.v.unscale(frobenius(&t.v))).collect();
    for j in 0..terms.len() {
        for k in (j + 1)..terms.len() {
            let o = hs_inner(&unit[j], &unit[k]).norm();
            if o > 1e-8 {
                return Err(LelError::validation(
                    "orthogonality",
                    Some(j),
                    format!("overlap {o:e} with term {k}"),
                ));
            }
        }
    }
    let sm = sigma.matrix();
    let sinv = sigma.pow(-1.0)?;
    for (j, t) in terms.iter().enumerate() {
        let target = (-t.omega).exp();
        let res = frobenius(&(sm * &t.v * &sinv - t.v.scale(target)));
        if res > 1e-8 * frobenius(&t.v) * target.max(1.0) {
            return Err(LelError::validation(
                "modular eigenvector",
                Some(j),
                format!("residual {res:e} for omega {}", t.omega),
            ));
        }
    }
    for (j, t) in terms.iter().enumerate() {
        let adj = unit[j].adjoint();
        let partner = (0..terms.len()).find(|&k| (hs_inner(&adj, &unit[k]).norm() - 1.0).abs() <= 1e-8);
        let Some(k) = partner else {
            return Err(LelError::validation(
                "adjoint pairing",
                Some(j),
                "no term is proportional to V*",
            ));
        };
        let tk = &terms[k];
        let wscale = t.weight.max(tk.weight);
        if (t.weight - tk.weight).abs() > 1e-10 * wscale
            || (t.omega + tk.omega).abs() > 1e-8 * t.omega.abs().max(1.0)
        {
            return Err(LelError::validation(
                "paired weights and frequencies",
                Some(j),
                format!(
                    "partner {k}: weights {} vs {}, omegas {} vs {}",
                    t.weight, tk.weight, t.omega, tk.omega
                ),
            ));
        }
    }

    let ops: Vec<CMatrix> = terms.iter().map(JumpTerm::effective).collect();
    let omegas: Vec<f64> = terms.iter().map(|t| t.omega).collect();
    let ldag = schrodinger_superop(n, &ops, &omegas);
    let l = ldag.adjoint();
    let g = GnsGenerator {
        sigma,
        terms,
        ops,
        l,
        ldag,
        label: "gns".into(),
    };
    validate_structure(&g)?;
    Ok(g)
}

fn validate_structure(g: &GnsGenerator) -> Result<()> {
    let n = g.dim();
    let scale = g.l.frobenius().max(1e-300);
    let li = frobenius(&g.apply_l(&identity(n)));
    if li > 1e-10 * scale {
        return Err(LelError::validation("unital L(I) = 0", None, format!("{li:e}")));
    }
    // tr L†(A) = 0 for all A  ⇔  vec(I)^H L† = 0
    let vi = vec_of(&identity(n));
    let tp = (vi.adjoint() * g.ldag.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if tp > 1e-10 * scale {
        return Err(LelError::validation("trace preservation", None, format!("{tp:e}")));
    }
    let st = frobenius(&g.apply_ldag(g.sigma.matrix()));
    if st > 1e-10 * scale {
        return Err(LelError::validation("stationarity L†(σ) = 0", None, format!("{st:e}")));
    }
    let asym = gns_asymmetry(g.sigma.matrix(), &g.l);
    if asym > 1e-10 {
        return Err(LelError::validation("GNS self-adjointness", None, format!("{asym:e}")));
    }
    let sinv = g.sigma.pow(-1.0)?;
    let delta = Superoperator::sandwich(g.sigma.matrix(), &sinv);
    let comm = delta.compose(&g.l).sub(&g.l.compose(&delta)).frobenius();
    if comm > 1e-8 * scale * frobenius(delta.matrix()) {
        return Err(LelError::validation("[L, Δσ] = 0", None, format!("{comm:e}")));
    }
    Ok(())
}

/// max |⟨L(E_a),E_b⟩₁ − ⟨E_a,L(E_b)⟩₁| / max |⟨L(E_a),E_b⟩₁| over matrix units.
pub fn gns_asymmetry(sigma: &CMatrix, l: &Superoperator) -> f64 {
    // ⟨A,B⟩₁ = tr(σA*B) = ⟨A, Bσ⟩_HS, so the Gram superoperator is B ↦ Bσ.
    let gram = Superoperator::right(sigma);
    let q = gram.compose(l);
    let qm = q.matrix();
    let asym = max_abs(&(qm.adjoint() - qm));
    asym / max_abs(qm).max(1e-300)
}

/// Generator given directly as a superoperator L†.
#[derive(Clone, Debug)]
pub struct RawGenerator {
    sigma: Option<DensityMatrix>,
    l: Superoperator,
    ldag: Superoperator,
    label: String,
}

impl RawGenerator {
    pub fn new(sigma: Option<DensityMatrix>, ldag: Superoperator, label: impl Into<String>) -> Result<Self> {
        let n = ldag.dim();
        let vi = vec_of(&identity(n));
        let tp = (vi.adjoint() * ldag.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tp > 1e-10 * ldag.frobenius().max(1.0) {
            return Err(LelError::validation("trace preservation", None, format!("{tp:e}")));
        }
        if let Some(s) = &sigma {
            if s.dim() != n {
                return Err(LelError::validation("dimension", None, "sigma does not match L†"));
            }
        }
        Ok(RawGenerator {
            sigma,
            l: ldag.adjoint(),
            ldag,
            label: label.into(),
        })
    }
}

impl Generator for RawGenerator {
    fn dim(&self) -> usize {
        self.ldag.dim()
    }
    fn sigma(&self) -> Option<&DensityMatrix> {
        self.sigma.as_ref()
    }
    fn heisenberg(&self) -> &Superoperator {
        &self.l
    }
    fn schrodinger(&self) -> &Superoperator {
        &self.ldag
    }
    fn label(&self) -> &str {
        &self.label
    }
}

fn bohr(lk: f64, ll: f64) -> f64 {
    if (lk - ll).abs() <= DEGENERACY_TOL * lk.max(ll) {
        0.0
    } else {
        (ll / lk).ln()
    }
}

/// |ψ_k⟩⟨ψ_l| for k ≠ l plus the n−1 traceless diagonal operators, all with weight 1.
pub fn eigen_jump_terms(sigma: &DensityMatrix) -> Result<Vec<JumpTerm>> {
    sigma.require_positive()?;
    let spec = sigma.spectrum();
    let n = sigma.dim();
    let u = &spec.vectors;
    let mut terms = Vec::with_capacity(n * n - 1);
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            let v = u.column(k) * u.column(l).adjoint();
            terms.push(JumpTerm::new(v, bohr(spec.values[k], spec.values[l]), 1.0));
        }
    }
    for m in 1..n {
        let d = gell_mann_diagonal(n, m);
        terms.push(JumpTerm::new(spec.from_eigenbasis(&d), 0.0, 1.0));
    }
    Ok(terms)
}

/// Eigen-jump generator with weights drawn from [0.5, 1.5], equal within adjoint pairs.
pub fn random_gns<R: Rng>(n: usize, rng: &mut R) -> GnsGenerator {
    let sigma = random_density_with_floor(n, 0.25, rng);
    let mut terms = eigen_jump_terms(&sigma).expect("sigma is strictly positive");
    let mut w = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        for l in (k + 1)..n {
            let x = 0.5 + rng.random::<f64>();
            w[(k, l)] = x;
            w[(l, k)] = x;
        }
    }
    let mut idx = 0;
    for k in 0..n {
        for l in 0..n {
            if k != l {
                terms[idx].weight = w[(k, l)];
                idx += 1;
            }
        }
    }
    for t in terms.iter_mut().skip(idx) {
        t.weight = 0.5 + rng.random::<f64>();
    }
    build_gns(sigma, terms)
        .expect("eigen-jump terms satisfy detailed balance")
        .with_label(format!("random-{n}"))
}

pub fn pauli() -> [CMatrix; 3] {
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[c64(0.0), c64(1.0), c64(1.0), c64(0.0)]),
        CMatrix::from_row_slice(2, 2, &[c64(0.0), -i, i, c64(0.0)]),
        CMatrix::from_row_slice(2, 2, &[c64(1.0), c64(0.0), c64(0.0), c64(-1.0)]),
    ]
}

/// σ = I/2 with jump operators σ_X and σ_Z.
pub fn qubit_xz() -> GnsGenerator {
    let [x, _, z] = pauli();
    build_gns(
        DensityMatrix::maximally_mixed(2),
        vec![JumpTerm::new(x, 0.0, 1.0), JumpTerm::new(z, 0.0, 1.0)],
    )
    .expect("qubit-xz is valid")
    .with_label("qubit-xz")
}

/// Jump-term realization of L(A) = γ(tr(σA) I − A).
pub fn depolarizing(sigma: &DensityMatrix, gamma: f64) -> Result<GnsGenerator> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(LelError::Domain(format!("gamma must be positive, got {gamma}")));
    }
    sigma.require_positive()?;
    let spec = sigma.spectrum();
    let n = sigma.dim();
    let lam = &spec.values;
    let u = &spec.vectors;
    let mut terms = Vec::with_capacity(n * n - 1);
    for k in 0..n {
        for l in 0..n {
            if k != l {
                let v = u.column(k) * u.column(l).adjoint();
                terms.push(JumpTerm::new(v, bohr(lam[k], lam[l]), gamma * (lam[k] * lam[l]).sqrt() / 2.0));
            }
        }
    }
    // Coherence damping: Σ_r (d_p − d_q)² = γ(λ_p + λ_q)/2 with traceless diagonal d.
    let diag_basis: Vec<CMatrix> = (1..n).map(|m| gell_mann_diagonal(n, m)).collect();
    let mut kmat = DMatrix::<f64>::zeros(n - 1, n - 1);
    for k in 0..n {
        let b: Vec<f64> = diag_basis.iter().map(|bm| bm[(k, k)].re).collect();
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                kmat[(i, j)] += gamma * lam[k] / 2.0 * b[i] * b[j];
            }
        }
    }
    let eig = kmat.symmetric_eigen();
    for r in 0..n - 1 {
        let mu = eig.eigenvalues[r];
        let mut d = CMatrix::zeros(n, n);
        for (m, bm) in diag_basis.iter().enumerate() {
            d += bm.scale(eig.eigenvectors[(m, r)]);
        }
        terms.push(JumpTerm::new(spec.from_eigenbasis(&d), 0.0, mu));
    }
    Ok(build_gns(sigma.clone(), terms)?.with_label(format!("depolarizing(gamma={gamma})")))
}

#[derive(Clone, Debug)]
pub struct PrimitivityReport {
    pub primitive: bool,
    pub kernel_dim: usize,
    /// Orthonormal (Hilbert-Schmidt) basis of Ker L.
    pub kernel: Vec<CMatrix>,
}

pub fn check_primitive(g: &dyn Generator) -> PrimitivityReport {
    let n = g.dim();
    let svd = g.heisenberg().matrix().clone().svd(false, true);
    let sv = &svd.singular_values;
    let vt = svd.v_t.expect("requested V^T");
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let kernel: Vec<CMatrix> = (0..sv.len())
        .filter(|&i| sv[i] <= ZERO_MODE_TOL * smax)
        .map(|i| {
            let row: Vec<C64> = vt.row(i).iter().map(|z| z.conj()).collect();
            CMatrix::from_column_slice(n, n, &row)
        })
        .collect();
    let primitive = kernel.len() == 1 && {
        let unit = identity(n).unscale((n as f64).sqrt());
        (hs_inner(&unit, &kernel[0]).norm() - 1.0).abs() <= 1e-8
    };
    PrimitivityReport {
        primitive,
        kernel_dim: kernel.len(),
        kernel,
    }
}

#[derive(Clone, Debug)]
pub struct SpectralGap {
    pub gap: f64,
    /// Spectrum of −L in ⟨·,·⟩_{1/2}, ascending.
    pub spectrum: Vec<f64>,
    /// Eigenvector of −L for `gap`, normalized in ⟨·,·⟩_{1/2}.
    pub gap_vector: CMatrix,
}

pub fn spectral_gap(g: &GnsGenerator) -> Result<SpectralGap> {
    if !check_primitive(g).primitive {
        return Err(LelError::validation("primitivity", None, "kernel of L is not spanned by I"));
    }
    let n = g.dim();
    let q = g.sigma.pow(0.25)?;
    let qi = g.sigma.pow(-0.25)?;
    let t = Superoperator::sandwich(&q, &q);
    let ti = Superoperator::sandwich(&qi, &qi);
    let s = t.compose(&g.l.scale(-1.0)).compose(&ti);
    let sym = crate::matcore::hermitian_part(s.matrix());
    let eig = eig_hermitian(&sym)?;
    let scale = eig.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if eig.values[0] < -1e-6 * scale.max(1.0) {
        return Err(LelError::validation(
            "GNS positivity of −L",
            None,
            format!("eigenvalue {:e}", eig.values[0]),
        ));
    }
    let idx = eig
        .values
        .iter()
        .position(|&x| x > ZERO_MODE_TOL * scale)
        .ok_or_else(|| LelError::Numerical("no nonzero eigenvalue".into()))?;
    let y = CMatrix::from_column_slice(n, n, eig.vectors.column(idx).as_slice());
    Ok(SpectralGap {
        gap: eig.values[idx],
        spectrum: eig.values.clone(),
        gap_vector: ti.apply(&y),
    })
}

/// Superoperator of the modular map A ↦ σAσ⁻¹.
pub fn modular_superop(sigma: &DensityMatrix) -> Result<Superoperator> {
    Ok(Superoperator::sandwich(sigma.matrix(), &sigma.pow(-1.0)?))
}

/// Superoperator of the Heisenberg generator written out term by term (for cross-checks).
pub fn heisenberg_direct(g: &GnsGenerator) -> Superoperator {
    let ops = g.jump_ops().to_vec();
    let om = g.omegas();
    superop_of(g.dim(), move |a| {
        let mut acc = CMatrix::zeros(a.nrows(), a.ncols());
        for (v, w) in ops.iter().zip(&om) {
            let vs = v.adjoint();
            acc += (&vs * commutator(a, v) + commutator(&vs, a) * v).scale((-w / 2.0).exp());
        }
        acc
    })
}

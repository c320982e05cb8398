//! Dense complex linear algebra: Hermitian spectral calculus, norms, weighted
//! inner products and superoperators on column-stacked matrices.

use std::cmp::Ordering;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{LelError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const TOL_HERM: f64 = 1e-12;
pub const TOL_TRACE: f64 = 1e-10;
pub const TOL_PSD: f64 = 1e-10;
pub const POS_FLOOR: f64 = 1e-12;

/// How matrix functions treat eigenvalues at or below `POS_FLOOR` when the
/// function is singular there (log, negative powers).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Domain {
    #[default]
    Strict,
    /// Clamp eigenvalues in `[-TOL_PSD, POS_FLOOR]` up to `POS_FLOOR`.
    Lenient,
}

#[inline]
pub fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Hilbert-Schmidt inner product tr(A* B).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn vec_of(a: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unvec(v: &DVector<C64>, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(LelError::Structural(format!(
            "expected a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LelError::Structural("matrix has non-finite entries".into()));
    }
    Ok(a.nrows())
}

fn check_hermitian(a: &CMatrix) -> Result<usize> {
    let n = check_square(a)?;
    let res = hermiticity_residual(a);
    if res > TOL_HERM * max_abs(a).max(1.0) {
        return Err(LelError::Structural(format!(
            "matrix is not Hermitian (residual {res:e})"
        )));
    }
    Ok(n)
}

#[derive(Clone, Debug)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(a: CMatrix) -> Result<Self> {
        check_hermitian(&a)?;
        Ok(HermitianMatrix(hermitian_part(&a)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// Ascending eigenvalues with unitary eigenvector columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// U f(Λ) U*.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let u = &self.vectors;
        let mut scaled = u.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(j).scale_mut(fl);
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(|x| x)
    }

    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * a * &self.vectors
    }

    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.vectors * a * self.vectors.adjoint()
    }

    /// Eigenvalues prepared for a function singular at zero.
    fn guarded(&self, domain: Domain, what: &str) -> Result<Vec<f64>> {
        self.values
            .iter()
            .map(|&l| {
                if l >= POS_FLOOR {
                    Ok(l)
                } else if domain == Domain::Lenient && l >= -TOL_PSD {
                    Ok(POS_FLOOR)
                } else {
                    Err(LelError::Singular {
                        what: what.to_string(),
                        eigenvalue: l,
                    })
                }
            })
            .collect()
    }

    /// Eigenvalues prepared for a function defined on [0, ∞).
    fn nonnegative(&self, what: &str) -> Result<Vec<f64>> {
        self.values
            .iter()
            .map(|&l| {
                if l >= 0.0 {
                    Ok(l)
                } else if l >= -TOL_PSD {
                    Ok(0.0)
                } else {
                    Err(LelError::Domain(format!("{what}: negative eigenvalue {l:e}")))
                }
            })
            .collect()
    }

    pub fn pow(&self, p: f64, domain: Domain) -> Result<CMatrix> {
        let vals = if p < 0.0 {
            self.guarded(domain, "negative power")?
        } else {
            self.nonnegative("power")?
        };
        Ok(self.with_values(&vals, |x| if p == 0.0 { 1.0 } else { x.powf(p) }))
    }

    pub fn log(&self, domain: Domain) -> Result<CMatrix> {
        let vals = self.guarded(domain, "logarithm")?;
        Ok(self.with_values(&vals, f64::ln))
    }

    fn with_values(&self, vals: &[f64], f: impl Fn(f64) -> f64) -> CMatrix {
        let u = &self.vectors;
        let mut scaled = u.clone();
        for (j, &l) in vals.iter().enumerate() {
            scaled.column_mut(j).scale_mut(f(l));
        }
        scaled * u.adjoint()
    }
}

fn lex_cmp(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

pub fn eig_hermitian(a: &CMatrix) -> Result<SpectralDecomposition> {
    let n = check_hermitian(a)?;
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut cols: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|j| {
            let mut v: Vec<C64> = eig.eigenvectors.column(j).iter().copied().collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if let Some(p) = v.iter().find(|z| z.norm() > 1e-8 * norm).copied() {
                let phase = p.conj() / p.norm() / norm;
                v.iter_mut().for_each(|z| *z *= phase);
            }
            (eig.eigenvalues[j], v)
        })
        .collect();
    cols.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Deterministic order inside (near-)degenerate groups.
    let scale = cols.iter().map(|c| c.0.abs()).fold(1e-300, f64::max);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cols[end].0 - cols[start].0).abs() <= 1e-10 * scale {
            end += 1;
        }
        cols[start..end].sort_by(|x, y| lex_cmp(&x.1, &y.1));
        start = end;
    }
    let mut vectors = CMatrix::zeros(n, n);
    for (j, (_, v)) in cols.iter().enumerate() {
        for (i, z) in v.iter().enumerate() {
            vectors[(i, j)] = *z;
        }
    }
    Ok(SpectralDecomposition {
        values: cols.iter().map(|c| c.0).collect(),
        vectors,
    })
}

/// U f(Λ) U* for a Hermitian `a`.
pub fn mat_fn(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    Ok(eig_hermitian(a)?.apply_fn(f))
}

pub fn mat_pow(a: &CMatrix, p: f64, domain: Domain) -> Result<CMatrix> {
    eig_hermitian(a)?.pow(p, domain)
}

pub fn mat_log(a: &CMatrix, domain: Domain) -> Result<CMatrix> {
    eig_hermitian(a)?.log(domain)
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
    spec: SpectralDecomposition,
}

impl DensityMatrix {
    pub fn new(a: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(a)?.into_inner();
        let tr = h.trace().re;
        if (tr - 1.0).abs() > TOL_TRACE {
            return Err(LelError::validation(
                "unit trace",
                None,
                format!("trace is {tr:.16e}"),
            ));
        }
        let spec = eig_hermitian(&h)?;
        if spec.min() < -TOL_PSD {
            return Err(LelError::validation(
                "positive semidefinite",
                None,
                format!("minimum eigenvalue {:e}", spec.min()),
            ));
        }
        Ok(DensityMatrix { mat: h, spec })
    }

    /// Symmetrizes and renormalizes before validating.
    pub fn normalized(a: &CMatrix) -> Result<Self> {
        let h = hermitian_part(a);
        let tr = h.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(LelError::Numerical(format!("cannot normalize trace {tr:e}")));
        }
        DensityMatrix::new(h.unscale(tr))
    }

    pub fn strictly_positive(a: CMatrix) -> Result<Self> {
        let d = DensityMatrix::new(a)?;
        d.require_positive()?;
        Ok(d)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix::new(identity(n).unscale(n as f64)).expect("I/n is a density matrix")
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        let n = p.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &x) in p.iter().enumerate() {
            m[(i, i)] = c64(x);
        }
        DensityMatrix::new(m)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.spec.min() >= POS_FLOOR
    }

    pub fn require_positive(&self) -> Result<()> {
        if self.is_strictly_positive() {
            Ok(())
        } else {
            Err(LelError::Singular {
                what: "density matrix is not strictly positive".into(),
                eigenvalue: self.spec.min(),
            })
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spec
    }

    pub fn min_eig(&self) -> f64 {
        self.spec.min()
    }

    pub fn max_eig(&self) -> f64 {
        self.spec.max()
    }

    pub fn pow(&self, p: f64) -> Result<CMatrix> {
        self.spec.pow(p, Domain::Strict)
    }

    pub fn log(&self) -> Result<CMatrix> {
        self.spec.log(Domain::Strict)
    }
}

/// tr(σ^s A* σ^{1-s} B), evaluated in the eigenbasis of σ.
pub fn inner_s(a: &CMatrix, b: &CMatrix, sigma: &DensityMatrix, s: f64) -> Result<C64> {
    sigma.require_positive()?;
    let spec = sigma.spectrum();
    let at = spec.to_eigenbasis(a);
    let bt = spec.to_eigenbasis(b);
    let n = spec.dim();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        let wk = spec.values[k].powf(s);
        for l in 0..n {
            let wl = spec.values[l].powf(1.0 - s);
            acc += at[(l, k)].conj() * bt[(l, k)] * (wk * wl);
        }
    }
    Ok(acc)
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Schatten-1 norm.
pub fn trace_norm(a: &CMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// Matrix of a linear map on n×n matrices, acting on column-stacked vectors.
#[derive(Clone, Debug)]
pub struct Superoperator {
    n: usize,
    mat: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(n: usize, mat: CMatrix) -> Result<Self> {
        if mat.nrows() != n * n || mat.ncols() != n * n {
            return Err(LelError::Structural(format!(
                "superoperator for n={n} must be {0}x{0}",
                n * n
            )));
        }
        Ok(Superoperator { n, mat })
    }

    pub fn identity(n: usize) -> Self {
        Superoperator {
            n,
            mat: identity(n * n),
        }
    }

    pub fn zero(n: usize) -> Self {
        Superoperator {
            n,
            mat: CMatrix::zeros(n * n, n * n),
        }
    }

    /// A ↦ X A Y, i.e. Yᵀ ⊗ X.
    pub fn sandwich(x: &CMatrix, y: &CMatrix) -> Self {
        Superoperator {
            n: x.nrows(),
            mat: y.transpose().kronecker(x),
        }
    }

    /// A ↦ X A.
    pub fn left(x: &CMatrix) -> Self {
        Self::sandwich(x, &identity(x.nrows()))
    }

    /// A ↦ A Y.
    pub fn right(y: &CMatrix) -> Self {
        Self::sandwich(&identity(y.nrows()), y)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        unvec(&(&self.mat * vec_of(a)), self.n)
    }

    /// Hilbert-Schmidt adjoint (conjugate transpose of the matrix).
    pub fn adjoint(&self) -> Self {
        Superoperator {
            n: self.n,
            mat: self.mat.adjoint(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Self {
        Superoperator {
            n: self.n,
            mat: &self.mat * &other.mat,
        }
    }

    pub fn add(&self, other: &Superoperator) -> Self {
        Superoperator {
            n: self.n,
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Superoperator) -> Self {
        Superoperator {
            n: self.n,
            mat: &self.mat - &other.mat,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Superoperator {
            n: self.n,
            mat: self.mat.scale(s),
        }
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(&self.mat)
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm(&self.mat)
    }

    pub fn try_inverse(&self) -> Result<Self> {
        self.mat
            .clone()
            .try_inverse()
            .map(|mat| Superoperator { n: self.n, mat })
            .ok_or_else(|| LelError::Numerical("superoperator is singular".into()))
    }
}

/// Columns are vec(map(E_kl)) over the matrix-unit basis.
pub fn superop_of(n: usize, map: impl Fn(&CMatrix) -> CMatrix) -> Superoperator {
    let mut mat = CMatrix::zeros(n * n, n * n);
    for col in 0..n * n {
        let mut e = CMatrix::zeros(n, n);
        e[(col % n, col / n)] = c64(1.0);
        let img = map(&e);
        mat.column_mut(col).copy_from_slice(img.as_slice());
    }
    Superoperator { n, mat }
}

pub fn superop_trace_norm(s: &Superoperator) -> f64 {
    s.trace_norm()
}

/// Orthonormal (Hilbert-Schmidt) basis of traceless Hermitian n×n matrices:
/// normalized generalized Gell-Mann matrices, off-diagonal symmetric and
/// antisymmetric pairs first, then the n−1 diagonal ones.
pub fn traceless_hermitian_basis(n: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(n * n - 1);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..n {
        for l in (k + 1)..n {
            let mut s = CMatrix::zeros(n, n);
            s[(k, l)] = c64(r);
            s[(l, k)] = c64(r);
            basis.push(s);
            let mut a = CMatrix::zeros(n, n);
            a[(k, l)] = C64::new(0.0, -r);
            a[(l, k)] = C64::new(0.0, r);
            basis.push(a);
        }
    }
    for m in 1..n {
        basis.push(gell_mann_diagonal(n, m));
    }
    basis
}

/// (Σ_{k<m} E_kk − m E_mm)/√(m(m+1)).
pub fn gell_mann_diagonal(n: usize, m: usize) -> CMatrix {
    let norm = ((m * (m + 1)) as f64).sqrt();
    let mut d = CMatrix::zeros(n, n);
    for k in 0..m {
        d[(k, k)] = c64(1.0 / norm);
    }
    d[(m, m)] = c64(-(m as f64) / norm);
    d
}

/// Real coordinates of a traceless Hermitian matrix in `traceless_hermitian_basis`.
pub fn traceless_coords(basis: &[CMatrix], a: &CMatrix) -> DVector<f64> {
    DVector::from_iterator(basis.len(), basis.iter().map(|b| hs_inner(b, a).re))
}

pub fn from_traceless_coords(basis: &[CMatrix], x: &DVector<f64>) -> CMatrix {
    let n = basis[0].nrows();
    let mut acc = CMatrix::zeros(n, n);
    for (b, &xi) in basis.iter().zip(x.iter()) {
        acc += b.scale(xi);
    }
    acc
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV block: `matrix,<name>,<n>` then n rows of re,im interleaved.
pub fn matrix_to_csv(name: &str, a: &CMatrix) -> String {
    let n = a.nrows();
    let mut out = format!("matrix,{name},{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..a.ncols())
            .flat_map(|j| [fmt_f(a[(i, j)].re), fmt_f(a[(i, j)].im)])
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Parse a row of 2n interleaved reals.
pub fn parse_interleaved_row(vals: &[f64], n: usize) -> Result<Vec<C64>> {
    if vals.len() != 2 * n {
        return Err(LelError::Parse(format!(
            "expected {} numbers per row, got {}",
            2 * n,
            vals.len()
        )));
    }
    Ok(vals.chunks(2).map(|p| C64::new(p[0], p[1])).collect())
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(LelError::Parse("empty matrix".into()));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        for (j, z) in parse_interleaved_row(r, n)?.into_iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

/// All named blocks in a CSV text, in file order.
pub fn matrices_from_csv(text: &str) -> Result<Vec<(String, CMatrix)>> {
    let mut out = Vec::new();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    while let Some(header) = lines.next() {
        let parts: Vec<&str> = header.split(',').map(str::trim).collect();
        if parts.len() != 3 || parts[0] != "matrix" {
            return Err(LelError::Parse(format!("bad matrix header `{header}`")));
        }
        let n: usize = parts[2]
            .parse()
            .map_err(|_| LelError::Parse(format!("bad dimension in `{header}`")))?;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| LelError::Parse(format!("block `{}` is truncated", parts[1])))?;
            let vals = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| LelError::Parse(format!("bad number `{s}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(vals);
        }
        out.push((parts[1].to_string(), matrix_from_rows(&rows)?));
    }
    Ok(out)
}

//! Seeded random matrices for sampling and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{hermitian_part, identity, CMatrix, DensityMatrix, C64};

pub type LelRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> LelRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ginibre matrix with standard normal real and imaginary parts.
pub fn random_complex<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    hermitian_part(&random_complex(n, rng))
}

pub fn random_traceless_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let h = random_hermitian(n, rng);
    let t = h.trace() / C64::new(n as f64, 0.0);
    h - identity(n) * t
}

/// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal removed.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let qr = random_complex(n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let col: Vec<C64> = q.column(j).iter().map(|z| z * ph).collect();
        q.column_mut(j).copy_from_slice(&col);
    }
    q
}

/// Full-rank state G G*/tr(G G*) from a Ginibre G.
pub fn random_density<R: Rng>(n: usize, rng: &mut R) -> DensityMatrix {
    let g = random_complex(n, rng);
    DensityMatrix::normalized(&(&g * g.adjoint())).expect("Wishart sample is a state")
}

/// State with spectrum bounded below by `floor` (relative to the uniform weight 1/n).
pub fn random_density_with_floor<R: Rng>(n: usize, floor: f64, rng: &mut R) -> DensityMatrix {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + floor).collect();
    let s: f64 = w.iter().sum();
    let u = random_unitary(n, rng);
    let mut d = CMatrix::zeros(n, n);
    for (i, x) in w.iter().enumerate() {
        d[(i, i)] = C64::new(x / s, 0.0);
    }
    DensityMatrix::normalized(&(&u * d * u.adjoint())).expect("valid state")
}

/// (1−t)σ + tρ for a random ρ; stays close to σ for small t.
pub fn random_state_near<R: Rng>(sigma: &DensityMatrix, t: f64, rng: &mut R) -> DensityMatrix {
    let r = random_density(sigma.dim(), rng);
    let m = sigma.matrix().scale(1.0 - t) + r.matrix().scale(t);
    DensityMatrix::normalized(&m).expect("convex combination is a state")
}

//! Seed-deterministic random operators for oracle searches and sampled checks.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operator::{c64, operator_norm, ComplexMatrix, ComplexVector, HermitianOperator};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-task seed from `(base, index)` (splitmix64 finalizer), so parallel
/// sampling is reproducible regardless of scheduling.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Complex Ginibre matrix with i.i.d. `N(0,1/2) + i N(0,1/2)` entries.
pub fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(s * re, s * im)
    })
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> ComplexVector {
    ginibre(rng, n, 1).column(0).into_owned()
}

pub fn gaussian_real_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Ginibre matrix rescaled to operator norm `1 / (1 + 1e-12)`.
pub fn contraction_from<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    let norm = operator_norm(&g);
    if norm == 0.0 {
        return g;
    }
    g * c64(1.0 / (norm * (1.0 + 1e-12)), 0.0)
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase fixing.
pub fn unitary_from<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let qr = ginibre(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

pub fn selfadjoint_from<R: Rng>(rng: &mut R, n: usize) -> HermitianOperator {
    let g = ginibre(rng, n, n);
    HermitianOperator::symmetrized(g)
}

pub fn random_contraction(n: usize, seed: u64) -> ComplexMatrix {
    contraction_from(&mut rng_from_seed(seed), n)
}

pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    unitary_from(&mut rng_from_seed(seed), n)
}

pub fn random_selfadjoint(n: usize, seed: u64) -> HermitianOperator {
    selfadjoint_from(&mut rng_from_seed(seed), n)
}

//! Seeded random instances for property suites and sweeps.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::operator::{c, CMatrix, DensityMatrix, HermitianOperator};

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// GUE-distributed Hermitian matrix with unit-variance entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::from_trusted((&g + g.adjoint()) * c(0.5))
}

/// Random positive-semidefinite matrix `G G†` (full rank almost surely).
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::from_trusted(&g * g.adjoint())
}

/// Random density matrix of the given rank (`1 ≤ rank ≤ dim`).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let rank = rank.clamp(1, dim);
    let g = ginibre(rng, dim, rank);
    let m = &g * g.adjoint();
    let tr = crate::operator::trace(&m).re;
    DensityMatrix::from_trusted_matrix(m / c(tr))
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    random_density(rng, dim, 1)
}

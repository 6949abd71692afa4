//! Dense Hermitian operator algebra.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>`. Operators are
//! validated once on construction and are immutable afterwards, so they can
//! be shared freely between threads.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Hermiticity tolerance applied to caller-supplied operators.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Hermiticity tolerance applied to operators produced by arithmetic.
pub const DERIVED_TOL: f64 = 1e-10;
/// Eigenvalues of intended-PSD matrices in `[-PSD_CLAMP, 0)` are rounded to 0.
pub const PSD_CLAMP: f64 = 1e-12;
/// Default hard cap on Hilbert-space dimension.
pub const DEFAULT_MAX_DIM: usize = 4096;

const TRACE_TOL: f64 = 1e-12;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry modulus of `m + m†`.
pub fn anti_hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] + m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Dense complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Validates hermiticity at [`HERMITICITY_TOL`].
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, HERMITICITY_TOL)
    }

    /// For results of arithmetic on Hermitian operators: checks at
    /// [`DERIVED_TOL`] and then symmetrizes away the residual.
    pub fn from_derived(matrix: CMatrix) -> Result<Self> {
        let mut op = Self::with_tolerance(matrix, DERIVED_TOL)?;
        op.symmetrize();
        Ok(op)
    }

    fn with_tolerance(matrix: CMatrix, tolerance: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::EmptyOperator);
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("operator has non-finite entries".into()));
        }
        let deviation = hermiticity_defect(&matrix);
        if deviation > tolerance {
            return Err(Error::NotHermitian { deviation, tolerance });
        }
        Ok(Self { matrix })
    }

    /// Skips validation; only for matrices Hermitian by construction.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        debug_assert!(hermiticity_defect(&matrix) <= DERIVED_TOL);
        let mut op = Self { matrix };
        op.symmetrize();
        op
    }

    fn symmetrize(&mut self) {
        let n = self.matrix.nrows();
        for i in 0..n {
            self.matrix[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let avg = (self.matrix[(i, j)] + self.matrix[(j, i)].conj()) * 0.5;
                self.matrix[(i, j)] = avg;
                self.matrix[(j, i)] = avg.conj();
            }
        }
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyOperator);
        }
        let diag = nalgebra::DVector::from_iterator(values.len(), values.iter().map(|&v| c(v)));
        Self::new(CMatrix::from_diagonal(&diag))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn sigma_x() -> Self {
        Self::from_trusted(CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]))
    }

    pub fn sigma_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self::from_trusted(CMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]))
    }

    pub fn sigma_z() -> Self {
        Self::from_trusted(CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self::from_trusted(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self::from_trusted(&self.matrix - &other.matrix))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * c(factor),
        }
    }

    /// Sum of an iterator of operators of equal dimension.
    pub fn sum<'a>(dim: usize, terms: impl IntoIterator<Item = &'a HermitianOperator>) -> Result<Self> {
        let mut acc = CMatrix::zeros(dim, dim);
        for t in terms {
            check_same_dim(dim, t.dim())?;
            acc += &t.matrix;
        }
        Ok(Self::from_trusted(acc))
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)] == Complex64::new(0.0, 0.0)))
    }
}

/// Ascending real eigenvalues and the matching orthonormal eigenvectors
/// (as columns).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `U diag(values) U†`.
    pub fn compose(&self, values: &[f64]) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        scaled * u.adjoint()
    }

    /// `U diag(values) U†` for complex `values` (e.g. phases).
    pub fn compose_complex(&self, values: &[Complex64]) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &v) in values.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= v;
            }
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.compose(&self.eigenvalues)
    }

    pub fn reconstruction_error(&self, source: &HermitianOperator) -> f64 {
        max_abs(&(self.reconstruct() - source.matrix()))
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.eigenvectors.adjoint() * &self.eigenvectors - CMatrix::identity(n, n)))
    }

    /// `U diag(f(λ)) U†`; fails if `f` is not finite on the spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
        let mut values = Vec::with_capacity(self.dim());
        for &lambda in &self.eigenvalues {
            let v = f(lambda);
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "function value {v} at eigenvalue {lambda:e} is not finite"
                )));
            }
            values.push(v);
        }
        Ok(HermitianOperator::from_trusted(self.compose(&values)))
    }
}

pub fn spectral_decompose(a: &HermitianOperator) -> SpectralDecomposition {
    let eig = a.matrix.clone().symmetric_eigen();
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Validating entry point for raw matrices.
pub fn spectral_decompose_matrix(m: &CMatrix) -> Result<SpectralDecomposition> {
    let op = HermitianOperator::new(m.clone())?;
    Ok(spectral_decompose(&op))
}

pub fn matrix_function(a: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    spectral_decompose(a).apply(f)
}

/// Clamps eigenvalues in `[-PSD_CLAMP, 0)` to zero; rejects anything more
/// negative.
pub(crate) fn clamp_psd_eigenvalue(lambda: f64) -> Result<f64> {
    if lambda >= 0.0 {
        Ok(lambda)
    } else if lambda >= -PSD_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NotDensityMatrix(format!(
            "eigenvalue {lambda:e} is below the PSD clamp of -{PSD_CLAMP:e}"
        )))
    }
}

/// Principal square root of a positive-semidefinite operator.
pub fn psd_sqrt(a: &HermitianOperator) -> Result<HermitianOperator> {
    let dec = spectral_decompose(a);
    psd_sqrt_from(&dec)
}

/// Eigenvalues below `dim · ε · λ_max` are below the resolution of the
/// eigensolver and are treated as zero; their square roots would otherwise
/// inject noise of order `√ε`.
pub(crate) fn psd_sqrt_from(dec: &SpectralDecomposition) -> Result<HermitianOperator> {
    let max = dec.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    let floor = dec.eigenvalues.len() as f64 * f64::EPSILON * max;
    let roots = dec
        .eigenvalues
        .iter()
        .map(|&l| clamp_psd_eigenvalue(l).map(|l| if l < floor { 0.0 } else { l.sqrt() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(HermitianOperator::from_trusted(dec.compose(&roots)))
}

/// `AB - BA`; anti-Hermitian for Hermitian inputs.
pub fn commutator(a: &HermitianOperator, b: &HermitianOperator) -> Result<CMatrix> {
    check_same_dim(a.dim(), b.dim())?;
    Ok(commutator_raw(&a.matrix, &b.matrix))
}

pub(crate) fn commutator_raw(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Positive-semidefinite unit-trace Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "trace {tr} differs from 1 by more than {TRACE_TOL:e}"
            )));
        }
        let dec = spectral_decompose(&op);
        clamp_psd_eigenvalue(dec.min_eigenvalue())?;
        Ok(Self { op })
    }

    /// Symmetrized copy of a matrix known to be a density matrix up to
    /// rounding (e.g. a unitary conjugate of one).
    pub(crate) fn from_trusted_matrix(m: CMatrix) -> Self {
        Self {
            op: HermitianOperator::from_trusted(m),
        }
    }

    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(p)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: HermitianOperator::identity(dim).scaled(1.0 / dim as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("state vector has zero or non-finite norm".into()));
        }
        let v = v / c(norm);
        let m = &v * v.adjoint();
        Ok(Self::from_trusted_matrix(m))
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn sqrt(&self) -> Result<HermitianOperator> {
        psd_sqrt(&self.op)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        spectral_decompose(&self.op).eigenvalues
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(self.matrix(), self.matrix()).re
    }
}

/// `tr(ρA)`.
pub fn expectation(rho: &DensityMatrix, a: &CMatrix) -> Result<Complex64> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    check_same_dim(rho.dim(), a.nrows())?;
    Ok(trace_of_product(rho.matrix(), a))
}

/// `tr(ρA)` for Hermitian `A`, returned as a real number.
pub fn expectation_real(rho: &DensityMatrix, a: &HermitianOperator) -> Result<f64> {
    Ok(expectation(rho, a.matrix())?.re)
}

/// Ordered tensor factor dimensions; slot 0 is the most significant index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeSpace {
    factor_dims: Vec<usize>,
    dim: usize,
}

impl CompositeSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(factor_dims, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(factor_dims: Vec<usize>, cap: usize) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidArgument(
                "composite space needs at least one factor".into(),
            ));
        }
        if factor_dims.contains(&0) {
            return Err(Error::InvalidArgument("factor dimensions must be positive".into()));
        }
        let dim = checked_product(&factor_dims, cap)?;
        Ok(Self { factor_dims, dim })
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> usize {
        self.factor_dims.len()
    }

    /// Mixed-radix digits of a flat index.
    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &d) in self.factor_dims.iter().enumerate().rev() {
            out[slot] = index % d;
            index /= d;
        }
    }
}

fn checked_product(dims: &[usize], cap: usize) -> Result<usize> {
    let mut dim: usize = 1;
    for &d in dims {
        dim = dim.checked_mul(d).filter(|&p| p <= cap).ok_or(Error::DimensionCap {
            dim: dims.iter().fold(1usize, |a, &b| a.saturating_mul(b)),
            cap,
        })?;
    }
    Ok(dim)
}

pub fn tensor_product(factors: &[HermitianOperator]) -> Result<HermitianOperator> {
    tensor_product_capped(factors, DEFAULT_MAX_DIM)
}

pub fn tensor_product_capped(factors: &[HermitianOperator], cap: usize) -> Result<HermitianOperator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("tensor product of an empty factor list".into()))?;
    let dims: Vec<usize> = factors.iter().map(HermitianOperator::dim).collect();
    checked_product(&dims, cap)?;
    let mut acc = first.matrix.clone();
    for f in rest {
        acc = acc.kronecker(&f.matrix);
    }
    Ok(HermitianOperator::from_trusted(acc))
}

/// `I ⊗ … ⊗ A ⊗ … ⊗ I` with `A` at `slot`.
pub fn embed(a: &HermitianOperator, space: &CompositeSpace, slot: usize) -> Result<HermitianOperator> {
    let slot_dim = *space
        .factor_dims
        .get(slot)
        .ok_or_else(|| Error::InvalidArgument(format!("slot {slot} out of range for {} factors", space.slots())))?;
    check_same_dim(slot_dim, a.dim())?;
    let left: usize = space.factor_dims[..slot].iter().product();
    let right: usize = space.factor_dims[slot + 1..].iter().product();
    let mut m = a.matrix.clone();
    if left > 1 {
        m = CMatrix::identity(left, left).kronecker(&m);
    }
    if right > 1 {
        m = m.kronecker(&CMatrix::identity(right, right));
    }
    Ok(HermitianOperator::from_trusted(m))
}

/// Reduced state on the slots in `keep` (in ascending slot order).
pub fn partial_trace(rho: &DensityMatrix, space: &CompositeSpace, keep: &[usize]) -> Result<DensityMatrix> {
    check_same_dim(space.dim(), rho.dim())?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::InvalidArgument("duplicate slot in keep set".into()));
    }
    if keep_sorted.iter().any(|&s| s >= space.slots()) {
        return Err(Error::InvalidArgument(format!(
            "keep set {keep:?} out of range for {} factors",
            space.slots()
        )));
    }
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&s| space.factor_dims[s]).collect();
    let kept_dim: usize = kept_dims.iter().product();
    let kept_space = CompositeSpace {
        dim: kept_dim,
        factor_dims: if kept_dims.is_empty() { vec![1] } else { kept_dims },
    };

    let n = space.dim();
    let slots = space.slots();
    // Reduced index and the "environment" index of every flat basis state.
    let mut reduced = vec![0usize; n];
    let mut env = vec![0usize; n];
    let mut digits = vec![0usize; slots];
    for flat in 0..n {
        space.digits(flat, &mut digits);
        let (mut r, mut e) = (0usize, 0usize);
        for (slot, (&digit, &d)) in digits.iter().zip(&space.factor_dims).enumerate() {
            if keep_sorted.binary_search(&slot).is_ok() {
                r = r * d + digit;
            } else {
                e = e * d + digit;
            }
        }
        reduced[flat] = r;
        env[flat] = e;
    }

    let m = rho.matrix();
    let mut out = CMatrix::zeros(kept_space.dim(), kept_space.dim());
    for i in 0..n {
        for j in 0..n {
            if env[i] == env[j] {
                out[(reduced[i], reduced[j])] += m[(i, j)];
            }
        }
    }
    Ok(DensityMatrix::from_trusted_matrix(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, random_psd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn i() -> Complex64 {
        Complex64::new(0.0, 1.0)
    }

    #[test]
    fn rejects_non_hermitian_with_deviation() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.5), c(0.0)]);
        match HermitianOperator::new(m) {
            Err(Error::NotHermitian { deviation, .. }) => assert!((deviation - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let a = HermitianOperator::from_real_diagonal(&[3.0, 1.0]).unwrap();
        let dec = spectral_decompose(&a);
        assert_eq!(dec.eigenvalues, vec![1.0, 3.0]);
        // eigenvectors are a permutation of the identity
        for col in 0..2 {
            let norms: Vec<f64> = (0..2).map(|r| dec.eigenvectors[(r, col)].norm()).collect();
            assert!(norms.iter().any(|&x| (x - 1.0).abs() < 1e-15));
            assert!(norms.iter().any(|&x| x < 1e-15));
        }
        assert!(dec.eigenvectors[(1, 0)].norm() > 0.5);
    }

    #[test]
    fn pauli_x_spectrum() {
        let dec = spectral_decompose(&HermitianOperator::sigma_x());
        assert!((dec.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((dec.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_hermitian(&mut rng, 8);
        let dec = spectral_decompose(&a);
        assert!(dec.reconstruction_error(&a) < 1e-10);
        assert!(dec.orthonormality_defect() < 1e-10);
        assert!(dec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn matrix_function_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_hermitian(&mut rng, 5);
        let same = matrix_function(&a, |x| x).unwrap();
        assert!(max_abs(&(same.matrix() - a.matrix())) < 1e-10);

        let d = HermitianOperator::from_real_diagonal(&[0.0, 2f64.ln()]).unwrap();
        let e = matrix_function(&d, f64::exp).unwrap();
        let expected = HermitianOperator::from_real_diagonal(&[1.0, 2.0]).unwrap();
        assert!(max_abs(&(e.matrix() - expected.matrix())) < 1e-12);

        let m = random_psd(&mut rng, 6);
        let root = psd_sqrt(&m).unwrap();
        let squared = root.matrix() * root.matrix();
        assert!(max_abs(&(squared - m.matrix())) < 1e-9);
    }

    #[test]
    fn matrix_function_domain_error() {
        let a = HermitianOperator::from_real_diagonal(&[-1.0, 1.0]).unwrap();
        assert!(matches!(matrix_function(&a, f64::ln), Err(Error::Domain(_))));
        assert!(matches!(psd_sqrt(&a), Err(Error::NotDensityMatrix(_))));
        // rounding-level negatives are clamped
        let b = HermitianOperator::from_real_diagonal(&[-5e-13, 1.0]).unwrap();
        let r = psd_sqrt(&b).unwrap();
        assert_eq!(r.matrix()[(0, 0)], c(0.0));
    }

    #[test]
    fn pauli_commutator() {
        let comm = commutator(&HermitianOperator::sigma_z(), &HermitianOperator::sigma_x()).unwrap();
        let expected = HermitianOperator::sigma_y().matrix() * (i() * 2.0);
        assert!(max_abs(&(comm.clone() - expected)) < 1e-15);
        assert!(anti_hermiticity_defect(&comm) < 1e-12);
        let a = HermitianOperator::sigma_y();
        assert_eq!(max_abs(&commutator(&a, &a).unwrap()), 0.0);
        assert!(matches!(
            commutator(&a, &HermitianOperator::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tensor_and_embed() {
        let zi = tensor_product(&[HermitianOperator::sigma_z(), HermitianOperator::identity(2)]).unwrap();
        assert_eq!(zi.matrix()[(0, 0)], c(1.0));
        assert_eq!(zi.matrix()[(2, 2)], c(-1.0));

        let xx = tensor_product(&[HermitianOperator::sigma_x(), HermitianOperator::sigma_x()]).unwrap();
        let sq = xx.matrix() * xx.matrix();
        assert!(max_abs(&(sq - CMatrix::identity(4, 4))) < 1e-15);

        let space = CompositeSpace::new(vec![2, 3, 3]).unwrap();
        let number = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0]).unwrap();
        let a = embed(&HermitianOperator::sigma_x(), &space, 0).unwrap();
        let b = embed(&number, &space, 1).unwrap();
        assert_eq!(a.dim(), 18);
        assert!(max_abs(&commutator(&a, &b).unwrap()) < 1e-12);
        assert!(embed(&number, &space, 3).is_err());
        assert!(embed(&number, &space, 0).is_err());
    }

    #[test]
    fn dimension_cap() {
        let big = HermitianOperator::identity(64);
        assert!(matches!(
            tensor_product(&[big.clone(), big.clone(), big]),
            Err(Error::DimensionCap { cap: 4096, .. })
        ));
        assert!(CompositeSpace::with_cap(vec![2, 2, 2], 7).is_err());
        assert!(CompositeSpace::with_cap(vec![2, 2, 2], 8).is_ok());
        assert!(tensor_product(&[]).is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ra = random_density(&mut rng, 2, 2);
        let rb = random_density(&mut rng, 3, 2);
        let joint = DensityMatrix::from_trusted_matrix(
            tensor_product(&[ra.op().clone(), rb.op().clone()])
                .unwrap()
                .into_matrix(),
        );
        let space = CompositeSpace::new(vec![2, 3]).unwrap();
        let back_a = partial_trace(&joint, &space, &[0]).unwrap();
        let back_b = partial_trace(&joint, &space, &[1]).unwrap();
        assert!(max_abs(&(back_a.matrix() - ra.matrix())) < 1e-12);
        assert!(max_abs(&(back_b.matrix() - rb.matrix())) < 1e-12);
        let everything = partial_trace(&joint, &space, &[0, 1]).unwrap();
        assert!(max_abs(&(everything.matrix() - joint.matrix())) < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        let space = CompositeSpace::new(vec![2, 2]).unwrap();
        let reduced = partial_trace(&bell, &space, &[1]).unwrap();
        let half = DensityMatrix::maximally_mixed(2);
        assert!(max_abs(&(reduced.matrix() - half.matrix())) < 1e-15);
        assert!(partial_trace(&bell, &space, &[2]).is_err());
        assert!(partial_trace(&bell, &space, &[0, 0]).is_err());
        let wrong = CompositeSpace::new(vec![2, 3]).unwrap();
        assert!(partial_trace(&bell, &wrong, &[0]).is_err());
    }

    #[test]
    fn expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&mut rng, 4, 3);
        let one = expectation(&rho, &CMatrix::identity(4, 4)).unwrap();
        assert!((one - c(1.0)).norm() < 1e-12);

        let w = [(-1f64).exp(), 1f64.exp()];
        let z = w[0] + w[1];
        let thermal = DensityMatrix::from_probabilities(&[w[0] / z, w[1] / z]).unwrap();
        let sz = expectation_real(&thermal, &HermitianOperator::sigma_z()).unwrap();
        assert!((sz + 1f64.tanh()).abs() < 1e-12);
        assert!((sz + 0.761594).abs() < 1e-6);

        let h0 = random_hermitian(&mut rng, 4);
        let v = random_hermitian(&mut rng, 4);
        let comm = commutator(&h0, &v).unwrap();
        let sq = expectation(&rho, &(&comm * &comm)).unwrap();
        assert!(sq.im.abs() < 1e-10);
        assert!(sq.re <= 1e-10);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_probabilities(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::from_probabilities(&[1.1, -0.1]).is_err());
        assert!(DensityMatrix::from_probabilities(&[1.0 + 5e-13, -5e-13]).is_ok());
        assert!(DensityMatrix::pure(&[c(0.0), c(0.0)]).is_err());
    }
}

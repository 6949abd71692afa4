//! Distinguishability measures between density matrices.
//!
//! The root-based measures (`d_measure`, Bures angle, skew information) are
//! evaluated as squared Frobenius norms wherever an identity allows it, so
//! values near zero do not suffer from `1 - (1 - ε)` cancellation.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::operator::{commutator_raw, spectral_decompose, CMatrix, DensityMatrix, HermitianOperator};

/// Two orderings of the Bures angle that disagree by more than this are
/// reported as a numerical-health warning.
pub const BURES_SYMMETRY_TOL: f64 = 1e-9;

const SVD_RECONSTRUCTION_TOL: f64 = 1e-12;

/// Slack tolerated above 1 before an arcsin argument is an error.
const ARCSIN_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceTriple {
    pub trace_distance: f64,
    pub bures_angle: f64,
    pub d_measure: f64,
}

/// Bures angle together with the disagreement between the two argument
/// orderings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuresAngle {
    pub value: f64,
    pub asymmetry: f64,
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, found: b })
    }
}

fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `arcsin(x)` for `x` that should lie in `[0, 1]`; rounding up to
/// `1 + 1e-9` is clamped, anything beyond is an error.
pub fn arcsin_unit(x: f64) -> Result<f64> {
    if x.is_nan() || !(-ARCSIN_SLACK..=1.0 + ARCSIN_SLACK).contains(&x) {
        return Err(Error::Domain(format!("arcsin argument {x} outside [0, 1]")));
    }
    Ok(x.clamp(0.0, 1.0).asin())
}

/// `(1/2) tr|ρ2 − ρ1|`, from the eigenvalues of the difference.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    same_dim(rho1.dim(), rho2.dim())?;
    let diff = HermitianOperator::from_trusted(rho2.matrix() - rho1.matrix());
    let dec = spectral_decompose(&diff);
    let half_l1: f64 = 0.5 * dec.eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
    Ok(half_l1.clamp(0.0, 1.0))
}

/// `1 − tr(√ρ1 √ρ2)`.
pub fn d_measure(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    same_dim(rho1.dim(), rho2.dim())?;
    Ok(d_measure_from_roots(&rho1.sqrt()?, &rho2.sqrt()?))
}

/// Uses `1 − tr(√ρ1 √ρ2) = ½‖√ρ1 − √ρ2‖²_F`, valid for unit-trace states.
pub fn d_measure_from_roots(root1: &HermitianOperator, root2: &HermitianOperator) -> f64 {
    (0.5 * frobenius_sq(&(root1.matrix() - root2.matrix()))).clamp(0.0, 1.0)
}

/// `arccos tr √(√ρ1 ρ2 √ρ1)`.
pub fn bures_angle(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    Ok(bures_angle_checked(rho1, rho2)?.value)
}

pub fn bures_angle_checked(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<BuresAngle> {
    same_dim(rho1.dim(), rho2.dim())?;
    Ok(bures_angle_from_roots(&rho1.sqrt()?, &rho2.sqrt()?))
}

/// Bures angle from the square roots of the two states.
///
/// With `√ρ1 √ρ2 = U Σ W†` the fidelity is `tr Σ`, and for the unitary
/// `X = W U†` one has `‖√ρ1 − √ρ2 X‖²_F = 2 − 2 tr Σ`. The angle is then
/// `2 arcsin(‖√ρ1 − √ρ2 X‖_F / 2)`.
pub fn bures_angle_from_roots(root1: &HermitianOperator, root2: &HermitianOperator) -> BuresAngle {
    let forward = bures_one_way(root1.matrix(), root2.matrix());
    let backward = bures_one_way(root2.matrix(), root1.matrix());
    let asymmetry = (forward - backward).abs();
    if asymmetry > BURES_SYMMETRY_TOL {
        log::warn!("Bures angle asymmetric by {asymmetry:e}; inputs may be ill-conditioned");
    }
    BuresAngle {
        value: forward,
        asymmetry,
    }
}

fn bures_one_way(r1: &CMatrix, r2: &CMatrix) -> f64 {
    let product = r1 * r2;
    match checked_svd_factors(&product) {
        Some((u, w)) => {
            let x = w * u.adjoint();
            let gap = frobenius_sq(&(r1 - r2 * x)).sqrt();
            (2.0 * (0.5 * gap).min(1.0).asin()).clamp(0.0, FRAC_PI_2)
        }
        None => {
            log::warn!("SVD failed its reconstruction check; using eigenvalues of M†M");
            fidelity_from_gram(&product).clamp(0.0, 1.0).acos()
        }
    }
}

/// `(U, W)` with `M = U Σ W†`, or `None` when the factorization does not
/// reproduce `M`.
fn checked_svd_factors(m: &CMatrix) -> Option<(CMatrix, CMatrix)> {
    let n = m.nrows();
    let svd = faer::Mat::from_fn(n, m.ncols(), |i, j| m[(i, j)]).svd().ok()?;
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let u = CMatrix::from_fn(fu.nrows(), fu.ncols(), |i, j| fu[(i, j)]);
    let w = CMatrix::from_fn(fv.nrows(), fv.ncols(), |i, j| fv[(i, j)]);
    let sigma = CMatrix::from_fn(fs.nrows(), fs.nrows(), |i, j| if i == j { fs[i] } else { 0.0.into() });
    let residual = frobenius_sq(&(&u * sigma * w.adjoint() - m)).sqrt();
    let scale = frobenius_sq(m).sqrt().max(1.0);
    (residual <= SVD_RECONSTRUCTION_TOL * scale).then_some((u, w))
}

/// `tr √(M†M)` from the Hermitian eigensolver, dropping eigenvalues below
/// its resolution.
fn fidelity_from_gram(m: &CMatrix) -> f64 {
    let gram = HermitianOperator::from_trusted(m.adjoint() * m);
    let eig = spectral_decompose(&gram).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, &l| a.max(l));
    let floor = eig.len() as f64 * f64::EPSILON * max;
    eig.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum()
}

pub fn distance_triple(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<DistanceTriple> {
    same_dim(rho1.dim(), rho2.dim())?;
    let (r1, r2) = (rho1.sqrt()?, rho2.sqrt()?);
    Ok(DistanceTriple {
        trace_distance: trace_distance(rho1, rho2)?,
        bures_angle: bures_angle_from_roots(&r1, &r2).value,
        d_measure: d_measure_from_roots(&r1, &r2),
    })
}

/// Wigner–Yanase skew information `−tr[√ρ, V]²`, evaluated as
/// `‖[√ρ, V]‖²_F` since the commutator is anti-Hermitian.
pub fn wy_skew_information(rho: &DensityMatrix, v: &HermitianOperator) -> Result<f64> {
    same_dim(rho.dim(), v.dim())?;
    Ok(skew_information_from_root(&rho.sqrt()?, v))
}

pub fn skew_information_from_root(root: &HermitianOperator, v: &HermitianOperator) -> f64 {
    frobenius_sq(&commutator_raw(root.matrix(), v.matrix()))
}

fn check_d(d: f64) -> Result<()> {
    if (0.0..=1.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::Domain(format!("D-measure value {d} outside [0, 1]")))
    }
}

/// `√(d(2−d))`, the tight Holevo right-hand side.
pub fn holevo_rhs(d: f64) -> Result<f64> {
    check_d(d)?;
    Ok((d * (2.0 - d)).sqrt())
}

/// `√(2d)`, the loose Holevo right-hand side.
pub fn holevo_loose_rhs(d: f64) -> Result<f64> {
    check_d(d)?;
    Ok((2.0 * d).sqrt())
}

/// `arcsin √(d(2−d))`.
pub fn audenaert_rhs(d: f64) -> Result<f64> {
    arcsin_unit(holevo_rhs(d)?.min(1.0))
}

/// `arcsin √(2d)`, saturating at π/2.
pub fn audenaert_loose_rhs(d: f64) -> Result<f64> {
    arcsin_unit(holevo_loose_rhs(d)?.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c, expectation_real};
    use crate::random::{random_density, random_hermitian};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ket0() -> DensityMatrix {
        DensityMatrix::from_probabilities(&[1.0, 0.0]).unwrap()
    }

    fn ket1() -> DensityMatrix {
        DensityMatrix::from_probabilities(&[0.0, 1.0]).unwrap()
    }

    #[test]
    fn identical_states_are_at_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for rank in 1..=4 {
            let rho = random_density(&mut rng, 4, rank);
            let t = distance_triple(&rho, &rho).unwrap();
            assert!(t.trace_distance < 1e-14);
            assert!(t.d_measure < 1e-14);
            // Null-space eigenvalues of order 1e-17 give √ρ entries of order
            // 1e-9, so rank-deficient inputs only reach √ε accuracy.
            let tol = if rank == 4 { 1e-10 } else { 5e-8 };
            assert!(t.bures_angle < tol, "rank {rank}: {}", t.bures_angle);
        }
    }

    #[test]
    fn orthogonal_pure_states() {
        let t = distance_triple(&ket0(), &ket1()).unwrap();
        assert!((t.trace_distance - 1.0).abs() < 1e-15);
        assert!((t.d_measure - 1.0).abs() < 1e-15);
        assert!((t.bures_angle - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn commuting_diagonal_pair() {
        let a = DensityMatrix::from_probabilities(&[0.7, 0.3]).unwrap();
        let b = DensityMatrix::from_probabilities(&[0.4, 0.6]).unwrap();
        assert!((trace_distance(&a, &b).unwrap() - 0.3).abs() < 1e-12);
        let closed = 1.0 - (0.7f64.sqrt() * 0.4f64.sqrt() + 0.3f64.sqrt() * 0.6f64.sqrt());
        assert!((d_measure(&a, &b).unwrap() - closed).abs() < 1e-12);
        assert!((closed - 0.0465857).abs() < 1e-7);
    }

    #[test]
    fn pure_qubits_at_bloch_angle() {
        for &theta in &[0.1, 0.7, 1.3, 2.0, 3.0] {
            let a = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
            let b = DensityMatrix::pure(&[
                c((theta / 2.0f64).cos()),
                Complex64::from_polar((theta / 2.0f64).sin(), 0.4),
            ])
            .unwrap();
            let angle = bures_angle(&a, &b).unwrap();
            assert!((angle - theta / 2.0).abs() < 1e-9, "theta {theta}: {angle}");
        }
    }

    #[test]
    fn skew_information_examples() {
        let sz = HermitianOperator::sigma_z();
        let rho = DensityMatrix::from_probabilities(&[0.2, 0.8]).unwrap();
        assert!(wy_skew_information(&rho, &sz).unwrap() < 1e-15);

        // pure state: 2(⟨V²⟩ − ⟨V⟩²)
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = crate::random::random_pure(&mut rng, 3);
        let v = random_hermitian(&mut rng, 3);
        let v2 = HermitianOperator::from_trusted(v.matrix() * v.matrix());
        let mean = expectation_real(&psi, &v).unwrap();
        let expected = 2.0 * (expectation_real(&psi, &v2).unwrap() - mean * mean);
        assert!((wy_skew_information(&psi, &v).unwrap() - expected).abs() < 1e-10);

        // thermal(σz, β=1) with V = σx, evaluated directly on 2×2 entries:
        // √ρ = diag(a, b), [√ρ, σx] = (a − b)(|0⟩⟨1| − |1⟩⟨0|), −tr[..]² = 2(a − b)².
        let (w0, w1) = ((-1f64).exp(), 1f64.exp());
        let z = w0 + w1;
        let thermal = DensityMatrix::from_probabilities(&[w0 / z, w1 / z]).unwrap();
        let direct = 2.0 * ((w0 / z).sqrt() - (w1 / z).sqrt()).powi(2);
        let value = wy_skew_information(&thermal, &HermitianOperator::sigma_x()).unwrap();
        assert!((value - direct).abs() < 1e-14);
        assert!(value > 0.0 && value <= 2.0);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn scalar_right_hand_sides() {
        assert_eq!(holevo_rhs(0.0).unwrap(), 0.0);
        assert_eq!(audenaert_rhs(0.0).unwrap(), 0.0);
        assert!((holevo_rhs(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((audenaert_rhs(1.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((holevo_rhs(0.5).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((holevo_rhs(0.5).unwrap() - 0.866025).abs() < 1e-6);
        assert!((audenaert_rhs(0.5).unwrap() - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
        assert!((audenaert_rhs(0.5).unwrap() - 1.047198).abs() < 1e-6);
        assert!(holevo_rhs(-0.1).is_err());
        assert!(holevo_rhs(1.1).is_err());
        assert!(audenaert_rhs(f64::NAN).is_err());
        assert_eq!(audenaert_loose_rhs(0.9).unwrap(), FRAC_PI_2);
        assert!(arcsin_unit(1.0 + 1e-10).is_ok());
        assert!(arcsin_unit(1.0 + 1e-8).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(2);
        let b = DensityMatrix::maximally_mixed(3);
        assert!(trace_distance(&a, &b).is_err());
        assert!(d_measure(&a, &b).is_err());
        assert!(bures_angle(&a, &b).is_err());
        assert!(wy_skew_information(&a, &HermitianOperator::identity(3)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rhs_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(holevo_rhs(lo).unwrap() <= holevo_rhs(hi).unwrap());
            prop_assert!(audenaert_rhs(lo).unwrap() <= audenaert_rhs(hi).unwrap());
            prop_assert!(holevo_rhs(lo).unwrap() <= holevo_loose_rhs(lo).unwrap());
        }

        #[test]
        fn measures_symmetric_and_chained(seed in any::<u64>(), dim in 2usize..7, r1 in 1usize..7, r2 in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_density(&mut rng, dim, r1);
            let b = random_density(&mut rng, dim, r2);
            let ab = distance_triple(&a, &b).unwrap();
            let ba = distance_triple(&b, &a).unwrap();
            prop_assert!((ab.trace_distance - ba.trace_distance).abs() < 1e-9);
            prop_assert!((ab.d_measure - ba.d_measure).abs() < 1e-9);
            prop_assert!((ab.bures_angle - ba.bures_angle).abs() < 1e-9);
            prop_assert!(ab.trace_distance <= holevo_rhs(ab.d_measure).unwrap() + 1e-10);
            prop_assert!(ab.bures_angle <= audenaert_rhs(ab.d_measure).unwrap() + 1e-10);
        }
    }
}

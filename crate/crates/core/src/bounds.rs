//! Thermal states and speed-limit bounds.
//!
//! Every thermal average of a squared operator is evaluated as a squared
//! Frobenius norm, e.g. `−⟨[H0,V]²⟩_β = ‖[H0,V] √ρ0‖²_F`, so averages that
//! are nonnegative in exact arithmetic stay nonnegative numerically.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::distances::{
    audenaert_rhs, bures_angle_from_roots, d_measure_from_roots, holevo_rhs, skew_information_from_root, trace_distance,
};
use crate::error::{Error, Result};
use crate::evolution::{propagate, DriveSchedule, Piece, DEFAULT_DT_MAX};
use crate::operator::{
    c, commutator_raw, spectral_decompose, CMatrix, DensityMatrix, HermitianOperator, SpectralDecomposition,
};

/// Slack allowed when checking that a bound dominates the actual distance.
pub const CERTIFICATION_SLACK: f64 = 1e-9;
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-8;

/// Below this `|β(E − E′)/2|`, `f_beta` switches to its Taylor series.
const F_BETA_SERIES_THRESHOLD: f64 = 1e-6;

fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "time {t} must be finite and non-negative"
        )))
    }
}

/// Gibbs state `e^{−βH0}/Z0` together with the spectral data of `H0`.
#[derive(Clone, Debug)]
pub struct ThermalContext {
    h0: HermitianOperator,
    beta: f64,
    spectrum: SpectralDecomposition,
    populations: Vec<f64>,
    rho0: DensityMatrix,
    sqrt_rho0: HermitianOperator,
    log_z0: f64,
}

/// `β = 0` is infinite temperature: `ρ0 = I/d` exactly.
pub fn thermal_state(h0: &HermitianOperator, beta: f64) -> Result<ThermalContext> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "inverse temperature must be finite and non-negative, got {beta}"
        )));
    }
    let spectrum = spectral_decompose(h0);
    let dim = h0.dim();
    let e_min = spectrum.min_eigenvalue();

    if beta == 0.0 {
        return Ok(ThermalContext {
            h0: h0.clone(),
            beta,
            populations: vec![1.0 / dim as f64; dim],
            rho0: DensityMatrix::maximally_mixed(dim),
            sqrt_rho0: HermitianOperator::identity(dim).scaled(1.0 / (dim as f64).sqrt()),
            log_z0: (dim as f64).ln(),
            spectrum,
        });
    }

    // Shifting by the ground energy leaves ρ0 unchanged and keeps the
    // weights in (0, 1].
    let weights: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .map(|&e| (-beta * (e - e_min)).exp())
        .collect();
    let z_shifted: f64 = weights.iter().sum();
    let populations: Vec<f64> = weights.iter().map(|w| w / z_shifted).collect();
    let roots: Vec<f64> = populations.iter().map(|p| p.sqrt()).collect();
    let rho0 = DensityMatrix::from_trusted_matrix(spectrum.compose(&populations));
    let sqrt_rho0 = HermitianOperator::from_trusted(spectrum.compose(&roots));
    Ok(ThermalContext {
        h0: h0.clone(),
        beta,
        populations,
        rho0,
        sqrt_rho0,
        log_z0: z_shifted.ln() - beta * e_min,
        spectrum,
    })
}

impl ThermalContext {
    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn sqrt_rho0(&self) -> &HermitianOperator {
        &self.sqrt_rho0
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    /// Boltzmann populations of the eigenstates of `H0`, ascending energy.
    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn log_partition_function(&self) -> f64 {
        self.log_z0
    }

    /// `Z0 = tr e^{−βH0}`; may overflow to infinity for large `β|E_min|`.
    pub fn partition_function(&self) -> f64 {
        self.log_z0.exp()
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// `⟨A⟩_β` for Hermitian `A`.
    pub fn average(&self, a: &HermitianOperator) -> Result<f64> {
        same_dim(self.dim(), a.dim())?;
        Ok(crate::operator::trace_of_product(self.rho0.matrix(), a.matrix()).re)
    }

    /// `⟨A†A⟩_β = ‖A √ρ0‖²_F`.
    pub fn average_gram(&self, a: &CMatrix) -> Result<f64> {
        same_dim(self.dim(), a.nrows())?;
        Ok(frobenius_sq(&(a * self.sqrt_rho0.matrix())))
    }

    /// `−⟨[H0,V]²⟩_β`, computed as `⟨C†C⟩_β` with `C = [H0, V]`.
    pub fn commutator_variance(&self, v: &HermitianOperator) -> Result<f64> {
        same_dim(self.dim(), v.dim())?;
        self.average_gram(&commutator_raw(self.h0.matrix(), v.matrix()))
    }

    /// Ground energy of `H0 + V`.
    pub fn ground_energy(&self, v: &HermitianOperator) -> Result<f64> {
        Ok(spectral_decompose(&self.h0.add(v)?).min_eigenvalue())
    }
}

/// A bound value before and after clamping to the trivial maximum
/// (1 for trace distance, π/2 for the Bures angle). For Bures-form bounds
/// `raw` is the arcsin argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub raw: f64,
    pub value: f64,
}

impl Bound {
    pub(crate) fn trace(raw: f64) -> Self {
        Self {
            raw,
            value: raw.min(1.0),
        }
    }

    fn bures(argument: f64) -> Self {
        Self {
            raw: argument,
            value: if argument >= 1.0 { FRAC_PI_2 } else { argument.asin() },
        }
    }

    pub const ZERO: Bound = Bound { raw: 0.0, value: 0.0 };
}

/// `min(1, √(βt) (−2⟨[H0,V]²⟩_β)^{1/4})`.
pub fn tqsl_quench(ctx: &ThermalContext, v: &HermitianOperator, t: f64) -> Result<Bound> {
    check_time(t)?;
    let cv = ctx.commutator_variance(v)?;
    Ok(Bound::trace(tqsl_raw(ctx.beta, t, cv)))
}

fn tqsl_raw(beta: f64, t: f64, commutator_variance: f64) -> f64 {
    (beta * t).sqrt() * (2.0 * commutator_variance).sqrt().sqrt()
}

/// Bures form of [`tqsl_quench`].
pub fn tqsl_bures(ctx: &ThermalContext, v: &HermitianOperator, t: f64) -> Result<Bound> {
    Ok(Bound::bures(tqsl_quench(ctx, v, t)?.raw))
}

/// `∫₀ᵗ √(−2⟨[H0,V_s]²⟩_β) ds` over a drive schedule.
///
/// Constant pieces are integrated exactly. On a linear piece the commutator
/// is affine in time, so the integrand is `√(a + 2bs + cs²)` and is
/// integrated by composite Simpson with doubling until the relative change
/// drops below `tol`.
pub fn commutator_integral(ctx: &ThermalContext, schedule: &DriveSchedule, t: f64, tol: f64) -> Result<f64> {
    check_time(t)?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    same_dim(ctx.dim(), schedule.dim())?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for piece in schedule.pieces(t)? {
        let (start, end) = (piece.start(), piece.end().min(t));
        if end <= start {
            continue;
        }
        match piece {
            Piece::Constant { v, .. } => {
                total += (end - start) * (2.0 * ctx.commutator_variance(v)?).sqrt();
            }
            Piece::Linear {
                start: a,
                end: b,
                v_start,
                v_end,
            } => {
                let root = ctx.sqrt_rho0.matrix();
                let ca = commutator_raw(ctx.h0.matrix(), v_start.matrix()) * root;
                let cb = commutator_raw(ctx.h0.matrix(), v_end.matrix()) * root;
                let slope = &cb - &ca;
                // ‖ca + s·slope‖² as a quadratic in s = (τ − a)/(b − a)
                let q0 = frobenius_sq(&ca);
                let q1 = ca.iter().zip(slope.iter()).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
                let q2 = frobenius_sq(&slope);
                let integrand = |tau: f64| {
                    let s = (tau - a) / (b - a);
                    (2.0 * (q0 + 2.0 * q1 * s + q2 * s * s).max(0.0)).sqrt()
                };
                total += simpson(integrand, start, end, tol)?;
            }
        }
    }
    Ok(total)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let rule = |n: usize| {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for k in 1..n {
            acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let mut n = 2;
    let mut prev = rule(n);
    while n < 1 << 22 {
        n *= 2;
        let next = rule(n);
        if (next - prev).abs() <= tol * next.abs() || next.abs() < f64::MIN_POSITIVE {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Domain(format!(
        "Simpson quadrature did not reach relative tolerance {tol:e}"
    )))
}

/// `min(1, √(β ∫₀ᵗ √(−2⟨[H0,V_s]²⟩_β) ds))`.
pub fn tqsl_general(ctx: &ThermalContext, schedule: &DriveSchedule, t: f64, quadrature_tol: f64) -> Result<Bound> {
    let integral = commutator_integral(ctx, schedule, t, quadrature_tol)?;
    Ok(Bound::trace((ctx.beta * integral).sqrt()))
}

pub fn tqsl_bures_general(
    ctx: &ThermalContext,
    schedule: &DriveSchedule,
    t: f64,
    quadrature_tol: f64,
) -> Result<Bound> {
    Ok(Bound::bures(tqsl_general(ctx, schedule, t, quadrature_tol)?.raw))
}

/// `(β/2) ∫₀ᵗ √(−2⟨[H0,V_s]²⟩_β) ds`, the intermediate bound on the
/// D-measure before the Holevo/Audenaert conversion.
pub fn tqsl_d_bound(ctx: &ThermalContext, schedule: &DriveSchedule, t: f64, quadrature_tol: f64) -> Result<f64> {
    Ok(0.5 * ctx.beta * commutator_integral(ctx, schedule, t, quadrature_tol)?)
}

/// Energy uncertainty of `H0 + V` in the thermal state.
pub fn energy_uncertainty(ctx: &ThermalContext, v: &HermitianOperator) -> Result<f64> {
    let h = ctx.h0.add(v)?;
    let mean = ctx.average(&h)?;
    let centered = h.matrix() - CMatrix::identity(h.dim(), h.dim()) * c(mean);
    Ok(ctx.average_gram(&centered)?.sqrt())
}

/// `min(1, ΔE t)`.
pub fn mt_bound(ctx: &ThermalContext, v: &HermitianOperator, t: f64) -> Result<Bound> {
    check_time(t)?;
    Ok(Bound::trace(energy_uncertainty(ctx, v)? * t))
}

/// `⟨H0 + V⟩_β − E_gs(H0 + V)`.
pub fn mean_excitation_energy(ctx: &ThermalContext, v: &HermitianOperator) -> Result<f64> {
    let h = ctx.h0.add(v)?;
    let mean = ctx.average(&h)?;
    let e_gs = spectral_decompose(&h).min_eigenvalue();
    let excess = mean - e_gs;
    if excess < -1e-10 {
        return Err(Error::Domain(format!(
            "mean energy lies {excess:e} below the ground energy"
        )));
    }
    Ok(excess.max(0.0))
}

/// `min(1, √(2 Ē t))`.
pub fn ml_bound(ctx: &ThermalContext, v: &HermitianOperator, t: f64) -> Result<Bound> {
    check_time(t)?;
    Ok(Bound::trace((2.0 * mean_excitation_energy(ctx, v)? * t).sqrt()))
}

/// The skew-information bound on the D-measure, with its trace-distance
/// and Bures-angle conversions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MdsOriginal {
    pub skew_information: f64,
    /// `2 sin²(t√I/2)`.
    pub d_bound: f64,
    /// `√(d(2−d))` inside the domain, 1 outside.
    pub trace_bound: f64,
    /// `arcsin √(d(2−d))` inside the domain, π/2 outside.
    pub bures_bound: f64,
    /// Whether `t√I/2 ≤ π/4`.
    pub domain_ok: bool,
}

pub fn mds_original(ctx: &ThermalContext, v: &HermitianOperator, t: f64) -> Result<MdsOriginal> {
    check_time(t)?;
    same_dim(ctx.dim(), v.dim())?;
    let skew = skew_information_from_root(&ctx.sqrt_rho0, v);
    Ok(mds_from_skew(skew, t))
}

fn mds_from_skew(skew: f64, t: f64) -> MdsOriginal {
    let half_angle = t * skew.sqrt() / 2.0;
    let d_bound = 2.0 * half_angle.sin().powi(2);
    let domain_ok = half_angle <= FRAC_PI_4;
    let (trace_bound, bures_bound) = if domain_ok {
        let d = d_bound.clamp(0.0, 1.0);
        (
            holevo_rhs(d).expect("d clamped to [0, 1]"),
            audenaert_rhs(d).expect("d clamped to [0, 1]"),
        )
    } else {
        (1.0, FRAC_PI_2)
    };
    MdsOriginal {
        skew_information: skew,
        d_bound,
        trace_bound,
        bures_bound,
        domain_ok,
    }
}

/// `min(1, t √(2⟨V²⟩_β))`.
pub fn mds_simplified(ctx: &ThermalContext, v: &HermitianOperator, t: f64) -> Result<Bound> {
    check_time(t)?;
    same_dim(ctx.dim(), v.dim())?;
    Ok(Bound::trace(t * (2.0 * ctx.average_gram(v.matrix())?).sqrt()))
}

/// `(e^{−βE/2} − e^{−βE′/2}) / (β(E − E′)/2)`.
///
/// Evaluated as `−e^{−βm/2} sinh(x)/x` with `m = (E+E′)/2` and
/// `x = β(E−E′)/4`, switching to a three-term series for `sinh(x)/x` when
/// `|β(E−E′)/2| < 1e-6`. At `β = 0` this gives the limit value `−1`.
pub fn f_beta(e: f64, e_prime: f64, beta: f64) -> Result<f64> {
    if !e.is_finite() || !e_prime.is_finite() || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "f_beta needs finite arguments, got ({e}, {e_prime}, {beta})"
        )));
    }
    let mid = 0.5 * (e + e_prime);
    let h = 0.5 * beta * (e - e_prime);
    let x = 0.5 * h;
    let sinhc = if h.abs() < F_BETA_SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    };
    Ok(-(-0.5 * beta * mid).exp() * sinhc)
}

/// Second route to `∂t D(ρ0, ρ_t)` through the eigenbasis of `H0`:
/// `(iβ / 2√Z0) Σ f_{E_n E_k} ⟨n|V_t|k⟩ (E_n − E_k) ⟨k|√ρ_t|n⟩`.
pub fn dtd_spectral_rhs(
    ctx: &ThermalContext,
    v_t: &HermitianOperator,
    sqrt_rho_t: &HermitianOperator,
) -> Result<Complex64> {
    same_dim(ctx.dim(), v_t.dim())?;
    same_dim(ctx.dim(), sqrt_rho_t.dim())?;
    if ctx.beta == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let u = &ctx.spectrum.eigenvectors;
    let v_eig = u.adjoint() * v_t.matrix() * u;
    let r_eig = u.adjoint() * sqrt_rho_t.matrix() * u;
    let energies = &ctx.spectrum.eigenvalues;
    let e_min = energies[0];
    // Shifted energies: f(E − E_min) e^{...} / √Z_shifted.
    let z_shifted: f64 = energies.iter().map(|&e| (-ctx.beta * (e - e_min)).exp()).sum();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..ctx.dim() {
        for k in 0..ctx.dim() {
            let f = f_beta(energies[n] - e_min, energies[k] - e_min, ctx.beta)?;
            acc += v_eig[(n, k)] * r_eig[(k, n)] * (f * (energies[n] - energies[k]));
        }
    }
    Ok(Complex64::new(0.0, ctx.beta / (2.0 * z_shifted.sqrt())) * acc)
}

/// The Cauchy–Schwarz bracket `Σ Z0⁻¹ f² |⟨n|[H0,V]|k⟩|²` and the bound
/// `−2⟨[H0,V]²⟩_β` it must not exceed.
pub fn cauchy_schwarz_bracket(ctx: &ThermalContext, v: &HermitianOperator) -> Result<(f64, f64)> {
    same_dim(ctx.dim(), v.dim())?;
    let u = &ctx.spectrum.eigenvectors;
    let comm = commutator_raw(ctx.h0.matrix(), v.matrix());
    let comm_eig = u.adjoint() * comm * u;
    let energies = &ctx.spectrum.eigenvalues;
    let e_min = energies[0];
    let z_shifted: f64 = energies.iter().map(|&e| (-ctx.beta * (e - e_min)).exp()).sum();
    let mut lhs = 0.0;
    for n in 0..ctx.dim() {
        for k in 0..ctx.dim() {
            let f = f_beta(energies[n] - e_min, energies[k] - e_min, ctx.beta)?;
            lhs += f * f * comm_eig[(n, k)].norm_sqr();
        }
    }
    Ok((lhs / z_shifted, 2.0 * ctx.commutator_variance(v)?))
}

#[derive(Clone, Copy, Debug)]
pub struct ReportOptions {
    pub dt_max: f64,
    pub quadrature_tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            dt_max: DEFAULT_DT_MAX,
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub model: String,
    pub parameters: Vec<(String, f64)>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NumericalHealth {
    pub max_unitarity_defect: f64,
    pub max_bures_asymmetry: f64,
    pub evolution_steps: usize,
}

/// Actual distances and every bound on a shared time grid.
///
/// The MT, ML and MDS columns apply to quenches only and are `None` for
/// time-dependent schedules.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub times: Vec<f64>,
    pub actual_trace_distance: Vec<f64>,
    pub actual_bures_angle: Vec<f64>,
    pub actual_d_measure: Vec<f64>,
    pub tqsl_trace: Vec<Bound>,
    pub tqsl_bures: Vec<Bound>,
    pub tqsl_d: Vec<f64>,
    pub mt: Option<Vec<Bound>>,
    pub ml: Option<Vec<Bound>>,
    pub mds_original: Option<Vec<MdsOriginal>>,
    pub mds_simplified: Option<Vec<Bound>>,
    pub metadata: ReportMetadata,
    pub health: NumericalHealth,
}

/// A point where a bound falls below the quantity it should dominate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub column: &'static str,
    pub time: f64,
    pub actual: f64,
    pub bound: f64,
}

impl BoundReport {
    /// Smallest `bound − actual` per column (trace-distance and Bures forms).
    pub fn slacks(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        let mut push = |name: &'static str, bounds: Vec<f64>, actual: &[f64]| {
            let worst = bounds
                .iter()
                .zip(actual)
                .map(|(b, a)| b - a)
                .fold(f64::INFINITY, f64::min);
            out.push((name, worst));
        };
        let values = |v: &[Bound]| v.iter().map(|b| b.value).collect::<Vec<_>>();
        push("tqsl", values(&self.tqsl_trace), &self.actual_trace_distance);
        push("tqsl_bures", values(&self.tqsl_bures), &self.actual_bures_angle);
        push("tqsl_d", self.tqsl_d.clone(), &self.actual_d_measure);
        if let Some(mt) = &self.mt {
            push("mt", values(mt), &self.actual_trace_distance);
        }
        if let Some(ml) = &self.ml {
            push("ml", values(ml), &self.actual_trace_distance);
        }
        if let Some(mds) = &self.mds_original {
            push(
                "mds_orig",
                mds.iter().map(|m| m.trace_bound).collect(),
                &self.actual_trace_distance,
            );
            push(
                "mds_orig_bures",
                mds.iter().map(|m| m.bures_bound).collect(),
                &self.actual_bures_angle,
            );
            push(
                "mds_orig_d",
                mds.iter().map(|m| if m.domain_ok { m.d_bound } else { 1.0 }).collect(),
                &self.actual_d_measure,
            );
        }
        if let Some(mds) = &self.mds_simplified {
            push("mds_simpl", values(mds), &self.actual_trace_distance);
        }
        out
    }

    /// Every point where a bound is exceeded by more than `slack`.
    pub fn violations(&self, slack: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut scan = |column: &'static str, bounds: &mut dyn Iterator<Item = f64>, actual: &[f64]| {
            for ((&t, &a), b) in self.times.iter().zip(actual).zip(bounds) {
                if b < a - slack {
                    out.push(Violation {
                        column,
                        time: t,
                        actual: a,
                        bound: b,
                    });
                }
            }
        };
        scan(
            "tqsl",
            &mut self.tqsl_trace.iter().map(|b| b.value),
            &self.actual_trace_distance,
        );
        scan(
            "tqsl_bures",
            &mut self.tqsl_bures.iter().map(|b| b.value),
            &self.actual_bures_angle,
        );
        scan("tqsl_d", &mut self.tqsl_d.iter().copied(), &self.actual_d_measure);
        if let Some(mt) = &self.mt {
            scan("mt", &mut mt.iter().map(|b| b.value), &self.actual_trace_distance);
        }
        if let Some(ml) = &self.ml {
            scan("ml", &mut ml.iter().map(|b| b.value), &self.actual_trace_distance);
        }
        if let Some(mds) = &self.mds_original {
            scan(
                "mds_orig",
                &mut mds.iter().map(|m| m.trace_bound),
                &self.actual_trace_distance,
            );
            scan(
                "mds_orig_bures",
                &mut mds.iter().map(|m| m.bures_bound),
                &self.actual_bures_angle,
            );
        }
        if let Some(mds) = &self.mds_simplified {
            scan(
                "mds_simpl",
                &mut mds.iter().map(|b| b.value),
                &self.actual_trace_distance,
            );
        }
        out
    }
}

/// Runs the evolution once and evaluates all distances and bounds on the
/// shared time grid.
pub fn bound_report(
    ctx: &ThermalContext,
    schedule: &DriveSchedule,
    times: &[f64],
    options: &ReportOptions,
) -> Result<BoundReport> {
    same_dim(ctx.dim(), schedule.dim())?;
    let traj = propagate(
        &[ctx.rho0.matrix().clone(), ctx.sqrt_rho0.matrix().clone()],
        &ctx.h0,
        schedule,
        times,
        options.dt_max,
    )?;

    let per_time: Vec<(f64, f64, f64, f64)> = traj
        .frames
        .par_iter()
        .zip(times.par_iter())
        .map(|(frame, &t)| {
            if t == 0.0 {
                return Ok((0.0, 0.0, 0.0, 0.0));
            }
            let rho_t = DensityMatrix::from_trusted_matrix(frame[0].clone());
            let root_t = HermitianOperator::from_trusted(frame[1].clone());
            let bures = bures_angle_from_roots(&ctx.sqrt_rho0, &root_t);
            Ok((
                trace_distance(&ctx.rho0, &rho_t)?,
                bures.value,
                d_measure_from_roots(&ctx.sqrt_rho0, &root_t),
                bures.asymmetry,
            ))
        })
        .collect::<Result<_>>()?;

    let integrals = times
        .iter()
        .map(|&t| commutator_integral(ctx, schedule, t, options.quadrature_tol))
        .collect::<Result<Vec<_>>>()?;
    let tqsl_trace: Vec<Bound> = integrals.iter().map(|i| Bound::trace((ctx.beta * i).sqrt())).collect();
    let tqsl_bures = tqsl_trace.iter().map(|b| Bound::bures(b.raw)).collect();
    let tqsl_d = integrals.iter().map(|i| 0.5 * ctx.beta * i).collect();

    let (mut mt, mut ml, mut mds_orig, mut mds_simpl) = (None, None, None, None);
    if schedule.is_constant() {
        let v = schedule.perturbation_at(0.0)?;
        let delta_e = energy_uncertainty(ctx, &v)?;
        let excess = mean_excitation_energy(ctx, &v)?;
        let skew = skew_information_from_root(&ctx.sqrt_rho0, &v);
        let v_rms = (2.0 * ctx.average_gram(v.matrix())?).sqrt();
        mt = Some(times.iter().map(|&t| Bound::trace(delta_e * t)).collect());
        ml = Some(times.iter().map(|&t| Bound::trace((2.0 * excess * t).sqrt())).collect());
        mds_orig = Some(times.iter().map(|&t| mds_from_skew(skew, t)).collect());
        mds_simpl = Some(times.iter().map(|&t| Bound::trace(t * v_rms)).collect());
    }

    Ok(BoundReport {
        times: times.to_vec(),
        actual_trace_distance: per_time.iter().map(|p| p.0).collect(),
        actual_bures_angle: per_time.iter().map(|p| p.1).collect(),
        actual_d_measure: per_time.iter().map(|p| p.2).collect(),
        tqsl_trace,
        tqsl_bures,
        tqsl_d,
        mt,
        ml,
        mds_original: mds_orig,
        mds_simplified: mds_simpl,
        metadata: ReportMetadata::default(),
        health: NumericalHealth {
            max_unitarity_defect: traj.max_unitarity_defect,
            max_bures_asymmetry: per_time.iter().map(|p| p.3).fold(0.0, f64::max),
            evolution_steps: traj.step_count,
        },
    })
}

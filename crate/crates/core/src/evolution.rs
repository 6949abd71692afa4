//! Unitary evolution of density matrices under `H0 + V_t`.
//!
//! Constant stretches of a schedule are propagated exactly from one
//! eigendecomposition of the stretch Hamiltonian. Linearly interpolated
//! stretches use midpoint steps `exp(−i H(t + dt/2) dt)`, which are second
//! order in `dt`.

use num_complex::Complex64;

use crate::distances::d_measure_from_roots;
use crate::error::{Error, Result};
use crate::operator::{
    commutator_raw, max_abs, spectral_decompose, trace_of_product, CMatrix, DensityMatrix, HermitianOperator,
    SpectralDecomposition,
};

pub const DEFAULT_DT_MAX: f64 = 1e-3;

/// Tolerance on `‖U†U − I‖_max` for every step unitary.
pub const UNITARITY_TOL: f64 = 1e-11;

/// How a sampled schedule is read between grid points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    /// `V(t) = V_i` on `[t_i, t_{i+1})`.
    LeftConstant,
    /// Linear between neighbouring samples.
    Linear,
}

#[derive(Clone, Debug)]
pub struct Segment {
    pub duration: f64,
    pub perturbation: HermitianOperator,
}

#[derive(Clone, Debug)]
enum ScheduleKind {
    Constant(HermitianOperator),
    Piecewise(Vec<Segment>),
    Sampled {
        grid: Vec<f64>,
        samples: Vec<HermitianOperator>,
        interpolation: Interpolation,
    },
}

/// Declarative time-dependent perturbation `V_t`.
#[derive(Clone, Debug)]
pub struct DriveSchedule {
    kind: ScheduleKind,
    dim: usize,
}

/// A stretch `[start, end]` on which the perturbation is either constant or
/// linear in time.
#[derive(Clone, Debug)]
pub(crate) enum Piece<'a> {
    Constant {
        start: f64,
        end: f64,
        v: &'a HermitianOperator,
    },
    Linear {
        start: f64,
        end: f64,
        v_start: &'a HermitianOperator,
        v_end: &'a HermitianOperator,
    },
}

impl Piece<'_> {
    pub(crate) fn start(&self) -> f64 {
        match self {
            Piece::Constant { start, .. } | Piece::Linear { start, .. } => *start,
        }
    }

    pub(crate) fn end(&self) -> f64 {
        match self {
            Piece::Constant { end, .. } | Piece::Linear { end, .. } => *end,
        }
    }
}

impl DriveSchedule {
    pub fn constant(v: HermitianOperator) -> Self {
        let dim = v.dim();
        Self {
            kind: ScheduleKind::Constant(v),
            dim,
        }
    }

    pub fn piecewise(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidSchedule("piecewise schedule needs at least one segment".into()))?;
        let dim = first.perturbation.dim();
        for (i, s) in segments.iter().enumerate() {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} has non-positive duration {}",
                    s.duration
                )));
            }
            if s.perturbation.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.perturbation.dim(),
                });
            }
        }
        Ok(Self {
            kind: ScheduleKind::Piecewise(segments),
            dim,
        })
    }

    /// Samples on a grid starting at `t = 0`.
    pub fn sampled(grid: Vec<f64>, samples: Vec<HermitianOperator>, interpolation: Interpolation) -> Result<Self> {
        if grid.len() != samples.len() || grid.is_empty() {
            return Err(Error::InvalidSchedule(format!(
                "grid has {} points but {} samples were given",
                grid.len(),
                samples.len()
            )));
        }
        if grid[0] != 0.0 {
            return Err(Error::InvalidSchedule("sample grid must start at t = 0".into()));
        }
        if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule(
                "sample grid must be finite and strictly increasing".into(),
            ));
        }
        let dim = samples[0].dim();
        if let Some(bad) = samples.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self {
            kind: ScheduleKind::Sampled {
                grid,
                samples,
                interpolation,
            },
            dim,
        })
    }

    /// `V_t = (t / ramp_time) V` for `t ≤ ramp_time`.
    pub fn linear_ramp(v: &HermitianOperator, ramp_time: f64) -> Result<Self> {
        if !(ramp_time > 0.0) || !ramp_time.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "ramp time {ramp_time} must be positive"
            )));
        }
        Self::sampled(
            vec![0.0, ramp_time],
            vec![HermitianOperator::zeros(v.dim()), v.clone()],
            Interpolation::Linear,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Last time at which the schedule is defined; `None` if unbounded.
    pub fn end_time(&self) -> Option<f64> {
        match &self.kind {
            ScheduleKind::Constant(_) => None,
            ScheduleKind::Piecewise(segs) => Some(segs.iter().map(|s| s.duration).sum()),
            ScheduleKind::Sampled { grid, .. } => grid.last().copied(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ScheduleKind::Constant(_))
    }

    fn check_support(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time {t} must be finite and non-negative"
            )));
        }
        if let Some(end) = self.end_time() {
            if t > end * (1.0 + 1e-12) {
                return Err(Error::InvalidSchedule(format!("time {t} beyond schedule end {end}")));
            }
        }
        Ok(())
    }

    /// Points where `V_t` jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match &self.kind {
            ScheduleKind::Constant(_) => vec![],
            ScheduleKind::Piecewise(segs) => segs
                .iter()
                .scan(0.0, |acc, s| {
                    *acc += s.duration;
                    Some(*acc)
                })
                .take(segs.len() - 1)
                .collect(),
            ScheduleKind::Sampled {
                grid, interpolation, ..
            } => match interpolation {
                Interpolation::LeftConstant => grid[1..].to_vec(),
                Interpolation::Linear => vec![],
            },
        }
    }

    /// `V_t`; at a jump the value on the right is returned.
    pub fn perturbation_at(&self, t: f64) -> Result<HermitianOperator> {
        self.check_support(t)?;
        Ok(match &self.kind {
            ScheduleKind::Constant(v) => v.clone(),
            ScheduleKind::Piecewise(segs) => {
                let mut start = 0.0;
                for s in segs {
                    if t < start + s.duration {
                        return Ok(s.perturbation.clone());
                    }
                    start += s.duration;
                }
                segs[segs.len() - 1].perturbation.clone()
            }
            ScheduleKind::Sampled {
                grid,
                samples,
                interpolation,
            } => {
                let i = grid.partition_point(|&g| g <= t).saturating_sub(1);
                match interpolation {
                    Interpolation::Linear if i + 1 < grid.len() => {
                        interpolate(&samples[i], &samples[i + 1], (t - grid[i]) / (grid[i + 1] - grid[i]))
                    }
                    _ => samples[i].clone(),
                }
            }
        })
    }

    /// Pieces covering `[0, t_end]`. Pieces keep their own endpoints; the
    /// caller stops at `t_end`.
    pub(crate) fn pieces(&self, t_end: f64) -> Result<Vec<Piece<'_>>> {
        self.check_support(t_end)?;
        let mut out = Vec::new();
        match &self.kind {
            ScheduleKind::Constant(v) => out.push(Piece::Constant {
                start: 0.0,
                end: t_end,
                v,
            }),
            ScheduleKind::Piecewise(segs) => {
                let mut start = 0.0;
                for s in segs {
                    if start >= t_end && !out.is_empty() {
                        break;
                    }
                    out.push(Piece::Constant {
                        start,
                        end: start + s.duration,
                        v: &s.perturbation,
                    });
                    start += s.duration;
                }
            }
            ScheduleKind::Sampled {
                grid,
                samples,
                interpolation,
            } => {
                if grid.len() == 1 {
                    out.push(Piece::Constant {
                        start: 0.0,
                        end: t_end,
                        v: &samples[0],
                    });
                }
                for i in 0..grid.len().saturating_sub(1) {
                    let (start, end) = (grid[i], grid[i + 1]);
                    if start >= t_end && !out.is_empty() {
                        break;
                    }
                    out.push(match interpolation {
                        Interpolation::LeftConstant => Piece::Constant {
                            start,
                            end,
                            v: &samples[i],
                        },
                        Interpolation::Linear => Piece::Linear {
                            start,
                            end,
                            v_start: &samples[i],
                            v_end: &samples[i + 1],
                        },
                    });
                }
            }
        }
        Ok(out)
    }

    /// The remainder of this schedule after time `t`, re-based to start at 0.
    pub fn shifted(&self, t: f64) -> Result<Self> {
        self.check_support(t)?;
        match &self.kind {
            ScheduleKind::Constant(v) => Ok(Self::constant(v.clone())),
            ScheduleKind::Piecewise(segs) => {
                let mut start = 0.0;
                let mut rest = Vec::new();
                for s in segs {
                    let end = start + s.duration;
                    if end > t {
                        rest.push(Segment {
                            duration: end - t.max(start),
                            perturbation: s.perturbation.clone(),
                        });
                    }
                    start = end;
                }
                if rest.is_empty() {
                    return Err(Error::InvalidSchedule(format!(
                        "nothing left of the schedule after t = {t}"
                    )));
                }
                Self::piecewise(rest)
            }
            ScheduleKind::Sampled {
                grid,
                samples,
                interpolation,
            } => {
                let mut new_grid = vec![0.0];
                let mut new_samples = vec![self.perturbation_at(t)?];
                for (g, s) in grid.iter().zip(samples) {
                    if *g > t {
                        new_grid.push(g - t);
                        new_samples.push(s.clone());
                    }
                }
                Self::sampled(new_grid, new_samples, *interpolation)
            }
        }
    }
}

fn interpolate(a: &HermitianOperator, b: &HermitianOperator, s: f64) -> HermitianOperator {
    HermitianOperator::from_trusted(a.matrix() * Complex64::new(1.0 - s, 0.0) + b.matrix() * Complex64::new(s, 0.0))
}

/// States of one experiment sampled on a time grid.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub step_count: usize,
    pub max_unitarity_defect: f64,
}

/// Propagated copies of several operators (e.g. `ρ0` and `√ρ0`) on a grid.
#[derive(Clone, Debug)]
pub(crate) struct Trajectory {
    /// `frames[k][j]` is operator `j` at `times[k]`.
    pub frames: Vec<Vec<CMatrix>>,
    pub step_count: usize,
    pub max_unitarity_defect: f64,
}

fn unitary_from(dec: &SpectralDecomposition, tau: f64) -> CMatrix {
    let phases: Vec<Complex64> = dec
        .eigenvalues
        .iter()
        .map(|&e| Complex64::from_polar(1.0, -e * tau))
        .collect();
    dec.compose_complex(&phases)
}

fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t >= &0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be ascending".into()));
    }
    Ok(())
}

/// Evolves every operator in `ops` by `X ↦ U X U†` along the schedule and
/// records them at each requested time.
pub(crate) fn propagate(
    ops: &[CMatrix],
    h0: &HermitianOperator,
    schedule: &DriveSchedule,
    times: &[f64],
    dt_max: f64,
) -> Result<Trajectory> {
    if !(dt_max > 0.0) || !dt_max.is_finite() {
        return Err(Error::InvalidArgument(format!("dt_max must be positive, got {dt_max}")));
    }
    validate_times(times)?;
    if schedule.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: schedule.dim(),
        });
    }
    for op in ops {
        if op.nrows() != h0.dim() {
            return Err(Error::DimensionMismatch {
                expected: h0.dim(),
                found: op.nrows(),
            });
        }
    }
    let t_last = times.last().copied().unwrap_or(0.0);
    let pieces = schedule.pieces(t_last)?;

    let mut current: Vec<CMatrix> = ops.to_vec();
    let mut clock = 0.0;
    let mut frames = Vec::with_capacity(times.len());
    let mut step_count = 0;
    let mut max_defect: f64 = 0.0;
    let mut next_time = 0;

    let conjugate = |u: &CMatrix, x: &CMatrix| -> CMatrix { u * x * u.adjoint() };

    for piece in &pieces {
        // Output times that fall inside this piece, plus its end.
        let is_last_piece = std::ptr::eq(piece, pieces.last().unwrap());
        let piece_end = if is_last_piece { t_last } else { piece.end().min(t_last) };
        while next_time < times.len() && times[next_time] <= clock {
            frames.push(current.clone());
            next_time += 1;
        }
        let mut stops: Vec<f64> = times[next_time..].iter().copied().filter(|&t| t <= piece_end).collect();
        if stops.last().is_none_or(|&t| t < piece_end) {
            stops.push(piece_end);
        }

        match piece {
            Piece::Constant { v, .. } => {
                let h = h0.add(v)?;
                let dec = spectral_decompose(&h);
                let base = current.clone();
                let base_time = clock;
                for &stop in &stops {
                    if stop <= clock {
                        continue;
                    }
                    let u = unitary_from(&dec, stop - base_time);
                    max_defect = max_defect.max(unitarity_defect(&u));
                    step_count += 1;
                    current = base.iter().map(|x| conjugate(&u, x)).collect();
                    clock = stop;
                    while next_time < times.len() && times[next_time] <= clock {
                        frames.push(current.clone());
                        next_time += 1;
                    }
                }
            }
            Piece::Linear {
                start,
                end,
                v_start,
                v_end,
            } => {
                for &stop in &stops {
                    if stop <= clock {
                        continue;
                    }
                    let span = stop - clock;
                    let n = (span / dt_max).ceil().max(1.0) as usize;
                    let dt = span / n as f64;
                    for k in 0..n {
                        let mid = clock + (k as f64 + 0.5) * dt;
                        let v_mid = interpolate(v_start, v_end, (mid - start) / (end - start));
                        let dec = spectral_decompose(&h0.add(&v_mid)?);
                        let u = unitary_from(&dec, dt);
                        max_defect = max_defect.max(unitarity_defect(&u));
                        step_count += 1;
                        current = current.iter().map(|x| conjugate(&u, x)).collect();
                    }
                    clock = stop;
                    while next_time < times.len() && times[next_time] <= clock {
                        frames.push(current.clone());
                        next_time += 1;
                    }
                }
            }
        }
    }
    while next_time < times.len() {
        frames.push(current.clone());
        next_time += 1;
    }
    Ok(Trajectory {
        frames,
        step_count,
        max_unitarity_defect: max_defect,
    })
}

fn into_result(times: &[f64], rho0: &DensityMatrix, traj: Trajectory) -> EvolutionResult {
    let states = traj
        .frames
        .into_iter()
        .zip(times)
        .map(|(mut f, &t)| {
            if t == 0.0 {
                rho0.clone()
            } else {
                DensityMatrix::from_trusted_matrix(f.swap_remove(0))
            }
        })
        .collect();
    EvolutionResult {
        times: times.to_vec(),
        states,
        step_count: traj.step_count,
        max_unitarity_defect: traj.max_unitarity_defect,
    }
}

/// `ρ_t = e^{−iHt} ρ0 e^{iHt}` from a single eigendecomposition of `H`.
pub fn evolve_const(rho0: &DensityMatrix, h: &HermitianOperator, times: &[f64]) -> Result<EvolutionResult> {
    if rho0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho0.dim(),
        });
    }
    let schedule = DriveSchedule::constant(HermitianOperator::zeros(h.dim()));
    let traj = propagate(&[rho0.matrix().clone()], h, &schedule, times, DEFAULT_DT_MAX)?;
    Ok(into_result(times, rho0, traj))
}

pub fn evolve_driven(
    rho0: &DensityMatrix,
    h0: &HermitianOperator,
    schedule: &DriveSchedule,
    times: &[f64],
    dt_max: f64,
) -> Result<EvolutionResult> {
    if rho0.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: rho0.dim(),
        });
    }
    let traj = propagate(&[rho0.matrix().clone()], h0, schedule, times, dt_max)?;
    Ok(into_result(times, rho0, traj))
}

/// Evolves `√ρ0` with the same unitaries as `ρ0` and returns
/// `‖(evolved √ρ0)² − ρ_t‖_max`.
pub fn sqrt_evolution_check(
    rho0: &DensityMatrix,
    h0: &HermitianOperator,
    schedule: &DriveSchedule,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let root = rho0.sqrt()?;
    let traj = propagate(&[rho0.matrix().clone(), root.matrix().clone()], h0, schedule, &[t], dt)?;
    let frame = &traj.frames[0];
    Ok(max_abs(&(&frame[1] * &frame[1] - &frame[0])))
}

/// Both sides of `∂t D(ρ0, ρ_t) = i tr([√ρ0, V_t] √ρ_t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtDCheck {
    /// Central finite difference of `D(ρ0, ρ_t)`.
    pub lhs: f64,
    /// Real part of `i tr([√ρ0, V_t] √ρ_t)`.
    pub rhs: f64,
    pub rhs_imag: f64,
}

impl DtDCheck {
    pub fn defect(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn dtd_identity_check(
    rho0: &DensityMatrix,
    h0: &HermitianOperator,
    schedule: &DriveSchedule,
    t: f64,
    dt_fd: f64,
) -> Result<DtDCheck> {
    dtd_identity_check_with_step(rho0, h0, schedule, t, dt_fd, DEFAULT_DT_MAX)
}

pub fn dtd_identity_check_with_step(
    rho0: &DensityMatrix,
    h0: &HermitianOperator,
    schedule: &DriveSchedule,
    t: f64,
    dt_fd: f64,
    dt_max: f64,
) -> Result<DtDCheck> {
    if !(dt_fd > 0.0) || !dt_fd.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {dt_fd} must be positive"
        )));
    }
    if t - dt_fd < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "t = {t} is not interior: t − dt_fd < 0"
        )));
    }
    if let Some(&jump) = schedule
        .discontinuities()
        .iter()
        .find(|&&d| d > t - dt_fd && d < t + dt_fd)
    {
        return Err(Error::InvalidSchedule(format!(
            "schedule jumps at t = {jump}; the derivative at {t} is undefined"
        )));
    }
    let root0 = rho0.sqrt()?;
    let times = [t - dt_fd, t, t + dt_fd];
    let traj = propagate(&[root0.matrix().clone()], h0, schedule, &times, dt_max)?;
    let roots: Vec<HermitianOperator> = traj
        .frames
        .iter()
        .map(|f| HermitianOperator::from_trusted(f[0].clone()))
        .collect();
    let d_minus = d_measure_from_roots(&root0, &roots[0]);
    let d_plus = d_measure_from_roots(&root0, &roots[2]);
    let lhs = (d_plus - d_minus) / (2.0 * dt_fd);

    let v_t = schedule.perturbation_at(t)?;
    let comm = commutator_raw(root0.matrix(), v_t.matrix());
    let value = Complex64::new(0.0, 1.0) * trace_of_product(&comm, roots[1].matrix());
    Ok(DtDCheck {
        lhs,
        rhs: value.re,
        rhs_imag: value.im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::trace_distance;
    use crate::operator::c;
    use crate::random::{random_density, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_thermal() -> DensityMatrix {
        let (w0, w1) = ((-1f64).exp(), 1f64.exp());
        DensityMatrix::from_probabilities(&[w0 / (w0 + w1), w1 / (w0 + w1)]).unwrap()
    }

    fn qubit_h() -> HermitianOperator {
        HermitianOperator::sigma_z().add(&HermitianOperator::sigma_x()).unwrap()
    }

    /// `exp(A)` by scaling and squaring a truncated Taylor series.
    fn expm_taylor(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let norm = max_abs(a) * n as f64;
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as i32
        } else {
            0
        };
        let scaled = a * c(0.5f64.powi(squarings));
        let mut term = CMatrix::identity(n, n);
        let mut acc = CMatrix::identity(n, n);
        for k in 1..30 {
            term = &term * &scaled * c(1.0 / k as f64);
            acc += &term;
        }
        for _ in 0..squarings {
            acc = &acc * &acc;
        }
        acc
    }

    /// Row-major vectorization: vec(H ρ − ρ H) = (H ⊗ I − I ⊗ Hᵀ) vec(ρ).
    fn superoperator_evolve(rho: &CMatrix, h: &CMatrix, t: f64) -> CMatrix {
        let n = rho.nrows();
        let id = CMatrix::identity(n, n);
        let liouvillian = (h.kronecker(&id) - id.kronecker(&h.transpose())) * Complex64::new(0.0, -t);
        let prop = expm_taylor(&liouvillian);
        let vec = nalgebra::DVector::from_iterator(
            n * n,
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| rho[(i, j)]),
        );
        let out = prop * vec;
        CMatrix::from_fn(n, n, |i, j| out[i * n + j])
    }

    #[test]
    fn commuting_hamiltonian_leaves_state_fixed() {
        let rho = qubit_thermal();
        let h = HermitianOperator::sigma_z().scaled(0.7);
        let res = evolve_const(&rho, &h, &[0.0, 0.3, 1.0, 5.0]).unwrap();
        for s in &res.states {
            assert!(max_abs(&(s.matrix() - rho.matrix())) < 1e-10);
        }
        assert_eq!(res.states[0], rho);
    }

    #[test]
    fn const_evolution_matches_superoperator_oracle() {
        let rho = qubit_thermal();
        let h = qubit_h();
        let res = evolve_const(&rho, &h, &[0.5]).unwrap();
        let oracle = DensityMatrix::from_trusted_matrix(superoperator_evolve(rho.matrix(), h.matrix(), 0.5));
        assert!(max_abs(&(res.states[0].matrix() - oracle.matrix())) < 1e-12);
        let d_num = trace_distance(&rho, &res.states[0]).unwrap();
        let d_oracle = trace_distance(&rho, &oracle).unwrap();
        assert!((d_num - d_oracle).abs() < 1e-12);
        assert!(d_num > 0.1);
        assert!(res.max_unitarity_defect < UNITARITY_TOL);
    }

    #[test]
    fn constant_schedule_equals_const_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h0 = random_hermitian(&mut rng, 5);
        let v = random_hermitian(&mut rng, 5);
        let rho = random_density(&mut rng, 5, 5);
        let times = [0.0, 0.1, 0.25, 1.0, 2.0];
        let a = evolve_const(&rho, &h0.add(&v).unwrap(), &times).unwrap();
        let b = evolve_driven(&rho, &h0, &DriveSchedule::constant(v), &times, 1e-3).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-10);
        }
    }

    #[test]
    fn spectrum_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h0 = random_hermitian(&mut rng, 4);
        let v = random_hermitian(&mut rng, 4);
        let rho = random_density(&mut rng, 4, 3);
        let schedule = DriveSchedule::linear_ramp(&v, 1.0).unwrap();
        let res = evolve_driven(&rho, &h0, &schedule, &[0.0, 0.4, 1.0], 1e-2).unwrap();
        let reference = rho.eigenvalues();
        for s in &res.states {
            for (a, b) in s.eigenvalues().iter().zip(&reference) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        assert!(res.max_unitarity_defect < UNITARITY_TOL);
    }

    #[test]
    fn midpoint_stepping_is_second_order() {
        let rho = qubit_thermal();
        let h0 = HermitianOperator::sigma_z();
        let schedule = DriveSchedule::linear_ramp(&HermitianOperator::sigma_x(), 1.0).unwrap();
        let reference = evolve_driven(&rho, &h0, &schedule, &[1.0], 1e-4).unwrap().states[0].clone();
        let defect = |dt: f64| {
            let s = evolve_driven(&rho, &h0, &schedule, &[1.0], dt).unwrap();
            max_abs(&(s.states[0].matrix() - reference.matrix()))
        };
        let coarse = defect(0.1);
        let fine = defect(0.05);
        let ratio = coarse / fine;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn piecewise_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h0 = random_hermitian(&mut rng, 4);
        let segs = (0..3)
            .map(|i| Segment {
                duration: 0.3 + 0.1 * i as f64,
                perturbation: random_hermitian(&mut rng, 4),
            })
            .collect();
        let schedule = DriveSchedule::piecewise(segs).unwrap();
        let rho = random_density(&mut rng, 4, 4);
        let (t1, t2) = (0.45, 1.1);
        let direct = evolve_driven(&rho, &h0, &schedule, &[t2], 1e-3).unwrap();
        let first = evolve_driven(&rho, &h0, &schedule, &[t1], 1e-3).unwrap();
        let rest = schedule.shifted(t1).unwrap();
        let second = evolve_driven(&first.states[0], &h0, &rest, &[t2 - t1], 1e-3).unwrap();
        assert!(max_abs(&(direct.states[0].matrix() - second.states[0].matrix())) < 1e-9);
    }

    #[test]
    fn schedule_validation() {
        let v = HermitianOperator::sigma_x();
        assert!(DriveSchedule::piecewise(vec![]).is_err());
        assert!(DriveSchedule::piecewise(vec![Segment {
            duration: 0.0,
            perturbation: v.clone()
        }])
        .is_err());
        assert!(DriveSchedule::sampled(vec![0.0, 0.0], vec![v.clone(), v.clone()], Interpolation::Linear).is_err());
        assert!(DriveSchedule::sampled(vec![0.1], vec![v.clone()], Interpolation::Linear).is_err());
        assert!(DriveSchedule::sampled(vec![0.0, 1.0], vec![v.clone()], Interpolation::Linear).is_err());
        assert!(DriveSchedule::piecewise(vec![
            Segment {
                duration: 1.0,
                perturbation: v.clone()
            },
            Segment {
                duration: 1.0,
                perturbation: HermitianOperator::identity(3)
            },
        ])
        .is_err());
        let ramp = DriveSchedule::linear_ramp(&v, 2.0).unwrap();
        assert!(ramp.perturbation_at(2.5).is_err());
        let rho = qubit_thermal();
        assert!(evolve_driven(&rho, &HermitianOperator::sigma_z(), &ramp, &[3.0], 1e-3).is_err());
        assert!(evolve_driven(&rho, &HermitianOperator::sigma_z(), &ramp, &[1.0], 0.0).is_err());
        assert!(evolve_driven(&rho, &HermitianOperator::sigma_z(), &ramp, &[1.0, 0.5], 1e-3).is_err());
        assert!(evolve_const(&rho, &HermitianOperator::identity(3), &[1.0]).is_err());
    }

    #[test]
    fn schedule_values() {
        let v = HermitianOperator::sigma_x();
        let ramp = DriveSchedule::linear_ramp(&v, 2.0).unwrap();
        let half = ramp.perturbation_at(1.0).unwrap();
        assert!(max_abs(&(half.matrix() - v.scaled(0.5).matrix())) < 1e-15);
        let end = ramp.perturbation_at(2.0).unwrap();
        assert!(max_abs(&(end.matrix() - v.matrix())) < 1e-15);

        let z = HermitianOperator::sigma_z();
        let pw = DriveSchedule::piecewise(vec![
            Segment {
                duration: 1.0,
                perturbation: v.clone(),
            },
            Segment {
                duration: 1.0,
                perturbation: z.clone(),
            },
        ])
        .unwrap();
        assert_eq!(pw.discontinuities(), vec![1.0]);
        assert_eq!(pw.perturbation_at(0.5).unwrap(), v);
        assert_eq!(pw.perturbation_at(1.0).unwrap(), z);
        assert_eq!(pw.perturbation_at(2.0).unwrap(), z);
        assert_eq!(pw.end_time(), Some(2.0));
    }

    #[test]
    fn sqrt_evolution_defects() {
        let rho = qubit_thermal();
        let trivial = DriveSchedule::constant(HermitianOperator::sigma_z().scaled(0.3));
        assert!(sqrt_evolution_check(&rho, &HermitianOperator::sigma_z(), &trivial, 1.3, 1e-3).unwrap() < 1e-12);
        let quench = DriveSchedule::constant(HermitianOperator::sigma_x());
        assert!(sqrt_evolution_check(&rho, &HermitianOperator::sigma_z(), &quench, 0.7, 1e-3).unwrap() < 1e-10);
    }

    #[test]
    fn dtd_identity_on_qubit_quench() {
        let rho = qubit_thermal();
        let h0 = HermitianOperator::sigma_z();
        let quench = DriveSchedule::constant(HermitianOperator::sigma_x());
        let check = dtd_identity_check(&rho, &h0, &quench, 0.6, 1e-4).unwrap();
        assert!(check.defect() < 1e-6, "{check:?}");
        assert!(check.rhs_imag.abs() < 1e-9);
        assert!(check.rhs.abs() > 1e-3);

        let trivial = DriveSchedule::constant(HermitianOperator::sigma_z());
        let t = dtd_identity_check(&rho, &h0, &trivial, 0.6, 1e-4).unwrap();
        assert!(t.lhs.abs() < 1e-10 && t.rhs.abs() < 1e-10);
    }

    #[test]
    fn dtd_finite_difference_converges_quadratically() {
        let rho = qubit_thermal();
        let h0 = HermitianOperator::sigma_z();
        let quench = DriveSchedule::constant(HermitianOperator::sigma_x());
        let e1 = dtd_identity_check(&rho, &h0, &quench, 0.6, 2e-2).unwrap().defect();
        let e2 = dtd_identity_check(&rho, &h0, &quench, 0.6, 1e-2).unwrap().defect();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn dtd_rejects_discontinuity() {
        let rho = qubit_thermal();
        let pw = DriveSchedule::piecewise(vec![
            Segment {
                duration: 1.0,
                perturbation: HermitianOperator::sigma_x(),
            },
            Segment {
                duration: 1.0,
                perturbation: HermitianOperator::sigma_y(),
            },
        ])
        .unwrap();
        let h0 = HermitianOperator::sigma_z();
        assert!(matches!(
            dtd_identity_check(&rho, &h0, &pw, 1.0, 1e-3),
            Err(Error::InvalidSchedule(_))
        ));
        assert!(dtd_identity_check(&rho, &h0, &pw, 0.5, 1e-3).is_ok());
        assert!(dtd_identity_check(&rho, &h0, &pw, 0.5, 0.0).is_err());
        assert!(dtd_identity_check(&rho, &h0, &pw, 1e-4, 1e-3).is_err());
    }
}

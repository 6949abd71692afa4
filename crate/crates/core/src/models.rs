//! Model Hamiltonians: spin-boson, a lattice impurity in a box, a random
//! spin chain, plus closed-form T-QSL values for the first two.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{thermal_state, Bound};
use crate::error::{Error, Result};
use crate::operator::{c, embed, CMatrix, CompositeSpace, HermitianOperator, DEFAULT_MAX_DIM};

/// Short description of a model known to the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelInfo {
    pub id: &'static str,
    pub summary: &'static str,
}

pub const MODELS: &[ModelInfo] = &[
    ModelInfo {
        id: "qubit",
        summary: "H0 = omega sigma_z, V = epsilon sigma_x",
    },
    ModelInfo {
        id: "spin-boson",
        summary: "spin coupled to N truncated bosonic modes; V local (sigma_x), mode-shift or trivial",
    },
    ModelInfo {
        id: "impurity",
        summary: "particle hopping in a hard-wall box, V = F X",
    },
    ModelInfo {
        id: "spin-chain",
        summary: "random nearest-neighbour spin-1/2 chain; V local or extensive",
    },
    ModelInfo {
        id: "random",
        summary: "GUE H0 and V of a given dimension",
    },
];

/// Truncated annihilation operator on `cutoff` levels as a dense matrix.
pub fn annihilation(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// Position-like quadrature `a + a†`.
fn quadrature_x(cutoff: usize) -> HermitianOperator {
    let a = annihilation(cutoff);
    HermitianOperator::from_trusted(&a + a.adjoint())
}

/// `i(a − a†)`.
fn quadrature_p(cutoff: usize) -> HermitianOperator {
    let a = annihilation(cutoff);
    HermitianOperator::from_trusted((&a - a.adjoint()) * Complex64::i())
}

fn number(cutoff: usize) -> HermitianOperator {
    HermitianOperator::from_real_diagonal(&(0..cutoff).map(|n| n as f64).collect::<Vec<_>>()).expect("diagonal is real")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinBosonParams {
    pub n_modes: usize,
    /// Fock levels per mode (occupations `0..cutoff`).
    pub cutoff: usize,
    pub omega_spin: f64,
    pub g: Vec<f64>,
    pub omega: Vec<f64>,
    pub max_dim: usize,
}

impl SpinBosonParams {
    /// Seeded parameters: `ω_k ~ U[0.5, 1.5]`, `g_k ~ U[0.2, 0.6]`, `Ω = 1`.
    /// Mode `k` gets the same values for every `n_modes > k`.
    pub fn seeded(n_modes: usize, cutoff: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut omega, mut g) = (Vec::with_capacity(n_modes), Vec::with_capacity(n_modes));
        for _ in 0..n_modes {
            omega.push(rng.random_range(0.5..1.5));
            g.push(rng.random_range(0.2..0.6));
        }
        Self {
            n_modes,
            cutoff,
            omega_spin: 1.0,
            g,
            omega,
            max_dim: DEFAULT_MAX_DIM,
        }
    }

    /// All modes identical.
    pub fn uniform(n_modes: usize, cutoff: usize, omega_spin: f64, g: f64, omega: f64) -> Self {
        Self {
            n_modes,
            cutoff,
            omega_spin,
            g: vec![g; n_modes],
            omega: vec![omega; n_modes],
            max_dim: DEFAULT_MAX_DIM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidArgument(
                "spin-boson model needs at least one mode".into(),
            ));
        }
        if self.cutoff < 2 {
            return Err(Error::InvalidArgument(format!(
                "Fock cutoff must be at least 2, got {}",
                self.cutoff
            )));
        }
        if self.g.len() != self.n_modes || self.omega.len() != self.n_modes {
            return Err(Error::InvalidArgument(format!(
                "expected {} couplings and mode energies, got {} and {}",
                self.n_modes,
                self.g.len(),
                self.omega.len()
            )));
        }
        let finite = self
            .g
            .iter()
            .chain(&self.omega)
            .chain([&self.omega_spin])
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("spin-boson parameters must be finite".into()));
        }
        self.space().map(|_| ())
    }

    /// Spin in slot 0, mode `k` in slot `k + 1`.
    pub fn space(&self) -> Result<CompositeSpace> {
        let mut dims = vec![2];
        dims.extend(std::iter::repeat_n(self.cutoff, self.n_modes));
        CompositeSpace::with_cap(dims, self.max_dim)
    }
}

/// `Ω σz + (1/√N) σx Σ g_k (a_k† + a_k) + Σ ω_k a_k† a_k`.
pub fn build_spin_boson(p: &SpinBosonParams) -> Result<HermitianOperator> {
    p.validate()?;
    let space = p.space()?;
    let dim = space.dim();
    let sx = embed(&HermitianOperator::sigma_x(), &space, 0)?;
    let mut h = embed(&HermitianOperator::sigma_z(), &space, 0)?
        .scaled(p.omega_spin)
        .into_matrix();
    let mut bath = CMatrix::zeros(dim, dim);
    for k in 0..p.n_modes {
        let xk = embed(&quadrature_x(p.cutoff), &space, k + 1)?;
        bath += xk.matrix() * c(p.g[k]);
        h += embed(&number(p.cutoff), &space, k + 1)?.matrix() * c(p.omega[k]);
    }
    h += sx.matrix() * bath * c(1.0 / (p.n_modes as f64).sqrt());
    HermitianOperator::from_derived(h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpinBosonPerturbation {
    /// `ε σx` on the spin.
    LocalSigmaX { epsilon: f64 },
    /// `δω Σ a_k† a_k`.
    ModeShift { delta_omega: f64 },
    /// `κ H0`, which commutes with `H0`.
    Trivial { kappa: f64 },
}

impl SpinBosonPerturbation {
    pub fn name(&self) -> &'static str {
        match self {
            Self::LocalSigmaX { .. } => "local",
            Self::ModeShift { .. } => "mode-shift",
            Self::Trivial { .. } => "trivial",
        }
    }
}

pub fn spin_boson_perturbation(p: &SpinBosonParams, kind: SpinBosonPerturbation) -> Result<HermitianOperator> {
    p.validate()?;
    let space = p.space()?;
    match kind {
        SpinBosonPerturbation::LocalSigmaX { epsilon } => {
            Ok(embed(&HermitianOperator::sigma_x(), &space, 0)?.scaled(epsilon))
        }
        SpinBosonPerturbation::ModeShift { delta_omega } => {
            let mut v = HermitianOperator::zeros(space.dim());
            for k in 0..p.n_modes {
                v = v.add(&embed(&number(p.cutoff), &space, k + 1)?)?;
            }
            Ok(v.scaled(delta_omega))
        }
        SpinBosonPerturbation::Trivial { kappa } => Ok(build_spin_boson(p)?.scaled(kappa)),
    }
}

/// `(δω/√N) σx Σ g_k (a_k − a_k†)`, the commutator `[H0, V]` for the
/// mode-shift perturbation.
pub fn mode_shift_commutator(p: &SpinBosonParams, delta_omega: f64) -> Result<CMatrix> {
    p.validate()?;
    let space = p.space()?;
    let sx = embed(&HermitianOperator::sigma_x(), &space, 0)?;
    let mut sum = CMatrix::zeros(space.dim(), space.dim());
    for k in 0..p.n_modes {
        // a − a† = −i · i(a − a†)
        sum += embed(&quadrature_p(p.cutoff), &space, k + 1)?.matrix() * c(p.g[k]);
    }
    Ok(sx.matrix() * sum * Complex64::new(0.0, -delta_omega / (p.n_modes as f64).sqrt()))
}

/// Occupation statistics used by the analytic mode-shift bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticMode {
    /// Geometric weights restricted to the `cutoff` retained levels, with
    /// the truncated `⟨a a† + a† a⟩`.
    Truncated,
    /// Bose–Einstein occupations of an untruncated oscillator.
    Ideal,
}

/// `⟨a a† + a† a⟩` for a free mode of energy `omega`.
pub fn anticommutator_average(omega: f64, beta: f64, cutoff: usize, mode: AnalyticMode) -> f64 {
    match mode {
        AnalyticMode::Ideal => 1.0 / (0.5 * beta * omega).tanh(),
        AnalyticMode::Truncated => {
            let weights: Vec<f64> = (0..cutoff).map(|n| (-beta * omega * n as f64).exp()).collect();
            let z: f64 = weights.iter().sum();
            let mean: f64 = weights
                .iter()
                .enumerate()
                .map(|(n, w)| (2 * n + 1) as f64 * w)
                .sum::<f64>()
                / z;
            // a a† annihilates the top level
            mean - cutoff as f64 * weights[cutoff - 1] / z
        }
    }
}

/// Closed-form T-QSL for the spin-boson perturbations.
///
/// Local: `√(2√2 εΩβt)`. Mode shift: `√(βt) (2δω² Σ g_k² ⟨{a_k,a_k†}⟩ / N)^{1/4}`
/// with occupations of the uncoupled modes; for identical modes this is
/// `√(δω g β t) (2(1 + 2n))^{1/4}`. Trivial: 0.
pub fn spin_boson_analytic_tqsl(
    p: &SpinBosonParams,
    kind: SpinBosonPerturbation,
    beta: f64,
    t: f64,
    mode: AnalyticMode,
) -> Result<Bound> {
    p.validate()?;
    if !(beta >= 0.0) || !beta.is_finite() || !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need finite beta, t ≥ 0, got beta={beta}, t={t}"
        )));
    }
    let raw = match kind {
        SpinBosonPerturbation::LocalSigmaX { epsilon } => {
            (2.0 * 2f64.sqrt() * (epsilon * p.omega_spin).abs() * beta * t).sqrt()
        }
        SpinBosonPerturbation::ModeShift { delta_omega } => {
            if beta == 0.0 {
                0.0
            } else {
                let weighted: f64 = (0..p.n_modes)
                    .map(|k| p.g[k] * p.g[k] * anticommutator_average(p.omega[k], beta, p.cutoff, mode))
                    .sum();
                let variance = delta_omega * delta_omega * weighted / p.n_modes as f64;
                (beta * t).sqrt() * (2.0 * variance).powf(0.25)
            }
        }
        SpinBosonPerturbation::Trivial { .. } => 0.0,
    };
    Ok(Bound::trace(raw))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImpurityParams {
    pub n_sites: usize,
    pub hopping: f64,
    pub force: f64,
    pub max_dim: usize,
}

impl ImpurityParams {
    pub fn new(n_sites: usize, hopping: f64, force: f64) -> Self {
        Self {
            n_sites,
            hopping,
            force,
            max_dim: DEFAULT_MAX_DIM,
        }
    }

    /// Lattice mass `1/(2J)` for unit site spacing.
    pub fn mass(&self) -> f64 {
        0.5 / self.hopping
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidArgument(format!(
                "impurity box needs at least 2 sites, got {}",
                self.n_sites
            )));
        }
        if self.n_sites > self.max_dim {
            return Err(Error::DimensionCap {
                dim: self.n_sites,
                cap: self.max_dim,
            });
        }
        if !(self.hopping > 0.0) || !self.hopping.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "hopping must be positive, got {}",
                self.hopping
            )));
        }
        if !self.force.is_finite() {
            return Err(Error::InvalidArgument("force must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ImpuritySystem {
    /// `−J Σ(|x⟩⟨x+1| + h.c.) + 2J`.
    pub h0: HermitianOperator,
    pub position: HermitianOperator,
    /// `F X`.
    pub v: HermitianOperator,
    /// `P²` with `P = m i[H0, X]`, so that `−[H0, X]² = P²/m²` holds exactly.
    pub p2: HermitianOperator,
    /// `2m H0`, the dispersion-based momentum square.
    pub kinetic_p2: HermitianOperator,
}

pub fn build_impurity(p: &ImpurityParams) -> Result<ImpuritySystem> {
    p.validate()?;
    let l = p.n_sites;
    let j = p.hopping;
    let mut kin = CMatrix::identity(l, l) * c(2.0 * j);
    for x in 0..l - 1 {
        kin[(x, x + 1)] = c(-j);
        kin[(x + 1, x)] = c(-j);
    }
    let h0 = HermitianOperator::new(kin)?;
    let position = HermitianOperator::from_real_diagonal(&(0..l).map(|x| x as f64).collect::<Vec<_>>())?;
    let m = p.mass();
    let velocity = crate::operator::commutator_raw(h0.matrix(), position.matrix()) * Complex64::i();
    let momentum = velocity * c(m);
    let p2 = HermitianOperator::from_derived(&momentum * &momentum)?;
    Ok(ImpuritySystem {
        v: position.scaled(p.force),
        kinetic_p2: h0.scaled(2.0 * m),
        h0,
        position,
        p2,
    })
}

/// Which lattice operator stands in for `P²` in the analytic impurity bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentumSquare {
    /// `(m i[H0, X])²`.
    Velocity,
    /// `2m H0`.
    Kinetic,
}

/// `√(βt) √((F/m) √(2⟨P²⟩_β))` with the thermal average taken numerically.
pub fn impurity_analytic_tqsl(p: &ImpurityParams, beta: f64, t: f64, momentum: MomentumSquare) -> Result<Bound> {
    let sys = build_impurity(p)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    let ctx = thermal_state(&sys.h0, beta)?;
    let p2 = match momentum {
        MomentumSquare::Velocity => &sys.p2,
        MomentumSquare::Kinetic => &sys.kinetic_p2,
    };
    let mean_p2 = ctx.average(p2)?.max(0.0);
    let raw = (beta * t).sqrt() * ((p.force.abs() / p.mass()) * (2.0 * mean_p2).sqrt()).sqrt();
    Ok(Bound::trace(raw))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinChainParams {
    pub n_sites: usize,
    /// Two-body couplings `J^{ab}_i` drawn from `U[−coupling, coupling]`.
    pub coupling: f64,
    /// Fields `h^a_i` drawn from `U[−field, field]`.
    pub field: f64,
    pub seed: u64,
    pub max_dim: usize,
}

impl SpinChainParams {
    pub fn new(n_sites: usize, seed: u64) -> Self {
        Self {
            n_sites,
            coupling: 1.0,
            field: 0.5,
            seed,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpinChain {
    pub h0: HermitianOperator,
    /// `σx` on site 0.
    pub local_v: HermitianOperator,
    /// `Σ_i σx_i`.
    pub nonlocal_v: HermitianOperator,
}

fn paulis() -> [HermitianOperator; 3] {
    [
        HermitianOperator::sigma_x(),
        HermitianOperator::sigma_y(),
        HermitianOperator::sigma_z(),
    ]
}

pub fn build_spin_chain(p: &SpinChainParams) -> Result<SpinChain> {
    if p.n_sites < 2 {
        return Err(Error::InvalidArgument(format!(
            "spin chain needs at least 2 sites, got {}",
            p.n_sites
        )));
    }
    if !(p.coupling >= 0.0 && p.field >= 0.0 && p.coupling.is_finite() && p.field.is_finite()) {
        return Err(Error::InvalidArgument(
            "coupling and field ranges must be finite and non-negative".into(),
        ));
    }
    let n = p.n_sites;
    let space = CompositeSpace::with_cap(vec![2; n], p.max_dim)?;
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut uniform = |half_width: f64| {
        if half_width == 0.0 {
            0.0
        } else {
            rng.random_range(-half_width..half_width)
        }
    };
    let sigma = paulis();
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..n - 1 {
        let mut bond = CMatrix::zeros(4, 4);
        for a in &sigma {
            for b in &sigma {
                bond += a.matrix().kronecker(b.matrix()) * c(uniform(p.coupling));
            }
        }
        // the bond acts on sites i and i+1, which are adjacent slots
        let bond_space = CompositeSpace::with_cap([vec![2; i], vec![4], vec![2; n - i - 2]].concat(), p.max_dim)?;
        h += embed(&HermitianOperator::from_trusted(bond), &bond_space, i)?.matrix();
    }
    let mut nonlocal = HermitianOperator::zeros(dim);
    for i in 0..n {
        for s in &sigma {
            h += embed(s, &space, i)?.matrix() * c(uniform(p.field));
        }
        nonlocal = nonlocal.add(&embed(&sigma[0], &space, i)?)?;
    }
    Ok(SpinChain {
        h0: HermitianOperator::from_derived(h)?,
        local_v: embed(&sigma[0], &space, 0)?,
        nonlocal_v: nonlocal,
    })
}

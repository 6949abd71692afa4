//! TOML run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::DEFAULT_QUADRATURE_TOL;
use crate::error::{Error, Result};
use crate::evolution::{DriveSchedule, Interpolation, DEFAULT_DT_MAX};
use crate::models::{
    build_impurity, build_spin_boson, build_spin_chain, spin_boson_perturbation, ImpurityParams, SpinBosonParams,
    SpinBosonPerturbation, SpinChainParams,
};
use crate::operator::{HermitianOperator, DEFAULT_MAX_DIM};
use crate::random::random_hermitian;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::config(
                "formats",
                format!("unknown format `{other}` (expected csv, json or svg)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub max_dim: usize,
    pub jobs: usize,
    pub beta: f64,
    pub model: ModelConfig,
    pub drive: DriveConfig,
    pub times: TimeGrid,
    pub evolution: EvolutionConfig,
    pub sweep: SweepConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            out_dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
            max_dim: DEFAULT_MAX_DIM,
            jobs: 1,
            beta: 1.0,
            model: ModelConfig::default(),
            drive: DriveConfig::default(),
            times: TimeGrid::default(),
            evolution: EvolutionConfig::default(),
            sweep: SweepConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Qubit(QubitConfig),
    SpinBoson(SpinBosonConfig),
    Impurity(ImpurityConfig),
    SpinChain(SpinChainConfig),
    Random(RandomConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Qubit(QubitConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitConfig {
    pub omega: f64,
    pub epsilon: f64,
}

impl Default for QubitConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            epsilon: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinBosonKind {
    Local,
    ModeShift,
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinBosonConfig {
    pub n_modes: usize,
    pub cutoff: usize,
    pub omega_spin: f64,
    /// Per-mode couplings; drawn from the seed when absent.
    pub g: Option<Vec<f64>>,
    /// Per-mode energies; drawn from the seed when absent.
    pub omega: Option<Vec<f64>>,
    pub perturbation: SpinBosonKind,
    pub epsilon: f64,
    pub delta_omega: f64,
    pub kappa: f64,
}

impl Default for SpinBosonConfig {
    fn default() -> Self {
        Self {
            n_modes: 2,
            cutoff: 2,
            omega_spin: 1.0,
            g: None,
            omega: None,
            perturbation: SpinBosonKind::Local,
            epsilon: 0.1,
            delta_omega: 0.1,
            kappa: 0.5,
        }
    }
}

impl SpinBosonConfig {
    pub fn perturbation_kind(&self) -> SpinBosonPerturbation {
        match self.perturbation {
            SpinBosonKind::Local => SpinBosonPerturbation::LocalSigmaX { epsilon: self.epsilon },
            SpinBosonKind::ModeShift => SpinBosonPerturbation::ModeShift {
                delta_omega: self.delta_omega,
            },
            SpinBosonKind::Trivial => SpinBosonPerturbation::Trivial { kappa: self.kappa },
        }
    }

    pub fn params(&self, n_modes: usize, seed: u64, max_dim: usize) -> Result<SpinBosonParams> {
        let mut p = SpinBosonParams::seeded(n_modes, self.cutoff, seed);
        p.omega_spin = self.omega_spin;
        p.max_dim = max_dim;
        for (field, given, target) in [
            ("model.g", &self.g, &mut p.g),
            ("model.omega", &self.omega, &mut p.omega),
        ] {
            if let Some(values) = given {
                if values.len() < n_modes {
                    return Err(Error::config(
                        field,
                        format!("needs at least {n_modes} entries, got {}", values.len()),
                    ));
                }
                *target = values[..n_modes].to_vec();
            }
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpurityConfig {
    pub n_sites: usize,
    pub hopping: f64,
    pub force: f64,
}

impl Default for ImpurityConfig {
    fn default() -> Self {
        Self {
            n_sites: 16,
            hopping: 1.0,
            force: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinChainKind {
    Local,
    Nonlocal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinChainConfig {
    pub n_sites: usize,
    pub coupling: f64,
    pub field: f64,
    pub perturbation: SpinChainKind,
}

impl Default for SpinChainConfig {
    fn default() -> Self {
        Self {
            n_sites: 4,
            coupling: 1.0,
            field: 0.5,
            perturbation: SpinChainKind::Local,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomConfig {
    pub dim: usize,
}

impl Default for RandomConfig {
    fn default() -> Self {
        Self { dim: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
#[derive(Default)]
pub enum DriveConfig {
    /// `V` switched on at `t = 0`.
    #[default]
    Quench,
    /// `V_t = min(t/T, 1) V`.
    Ramp { ramp_time: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeGrid {
    pub t_max: f64,
    pub points: usize,
    /// Explicit grid; overrides `t_max` and `points`.
    pub values: Option<Vec<f64>>,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_max: 2.0,
            points: 21,
            values: None,
        }
    }
}

impl TimeGrid {
    pub fn times(&self) -> Result<Vec<f64>> {
        let times = match &self.values {
            Some(v) => v.clone(),
            None => {
                if self.points == 0 {
                    return Err(Error::config("times.points", "must be at least 1"));
                }
                if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
                    return Err(Error::config("times.t_max", "must be finite and non-negative"));
                }
                if self.points == 1 {
                    vec![0.0]
                } else {
                    let step = self.t_max / (self.points - 1) as f64;
                    (0..self.points)
                        .map(|k| {
                            if k + 1 == self.points {
                                self.t_max
                            } else {
                                k as f64 * step
                            }
                        })
                        .collect()
                }
            }
        };
        if times.is_empty() {
            return Err(Error::config("times.values", "must not be empty"));
        }
        if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::config("times.values", "times must be finite and non-negative"));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("times.values", "times must be ascending"));
        }
        Ok(times)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub dt_max: f64,
    pub quadrature_tol: f64,
    /// Turn numerical-health warnings into errors.
    pub strict_health: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt_max: DEFAULT_DT_MAX,
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
            strict_health: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub t_star: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1, 2, 3, 4, 5],
            t_star: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Random instances in the certification battery.
    pub instances: usize,
    /// Random state pairs for the distance inequalities.
    pub pairs: usize,
    /// Bipartite pairs for the contractivity suite.
    pub bipartite_pairs: usize,
    pub instance_dim_min: usize,
    pub instance_dim_max: usize,
    pub beta_max: f64,
    pub t_max: f64,
    pub points: usize,
    /// Negates one inequality so the harness can prove it reports failures.
    pub inject_violation: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            pairs: 200,
            bipartite_pairs: 100,
            instance_dim_min: 2,
            instance_dim_max: 10,
            beta_max: 5.0,
            t_max: 2.0,
            points: 20,
            inject_violation: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = match e.span() {
                Some(span) => format!("line {}", text[..span.start].matches('\n').count() + 1),
                None => "<config>".to_string(),
            };
            Error::config(field, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::config("beta", "must be finite and non-negative"));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        if self.max_dim == 0 {
            return Err(Error::config("max_dim", "must be at least 1"));
        }
        if !(self.evolution.dt_max > 0.0) || !self.evolution.dt_max.is_finite() {
            return Err(Error::config("evolution.dt_max", "must be positive"));
        }
        if !(self.evolution.quadrature_tol > 0.0) || !self.evolution.quadrature_tol.is_finite() {
            return Err(Error::config("evolution.quadrature_tol", "must be positive"));
        }
        if let DriveConfig::Ramp { ramp_time } = self.drive {
            if !(ramp_time > 0.0) || !ramp_time.is_finite() {
                return Err(Error::config("drive.ramp_time", "must be positive"));
            }
        }
        if !(self.sweep.t_star > 0.0) || !self.sweep.t_star.is_finite() {
            return Err(Error::config("sweep.t_star", "must be positive"));
        }
        if self.sweep.sizes.windows(2).any(|w| w[1] <= w[0]) || self.sweep.sizes.contains(&0) {
            return Err(Error::config("sweep.sizes", "must be positive and strictly ascending"));
        }
        let v = &self.verify;
        if v.instance_dim_min < 2 || v.instance_dim_max < v.instance_dim_min {
            return Err(Error::config(
                "verify.instance_dim_min",
                "need 2 ≤ instance_dim_min ≤ instance_dim_max",
            ));
        }
        if !(v.beta_max >= 0.0) || !v.beta_max.is_finite() || !(v.t_max > 0.0) || !v.t_max.is_finite() || v.points < 2 {
            return Err(Error::config("verify", "need beta_max ≥ 0, t_max > 0 and points ≥ 2"));
        }
        self.times.times()?;
        Ok(())
    }

    /// Grid size along the sweep axis for this model, or a config error.
    pub fn model_size_field(&self) -> Result<&'static str> {
        match self.model {
            ModelConfig::SpinBoson(_) => Ok("n_modes"),
            ModelConfig::Impurity(_) | ModelConfig::SpinChain(_) => Ok("n_sites"),
            ModelConfig::Qubit(_) | ModelConfig::Random(_) => Err(Error::config(
                "model.kind",
                "sweeps need a model with a size axis (spin-boson, impurity or spin-chain)",
            )),
        }
    }

    /// `(H0, V)` for the configured model, with `size` replacing the model's
    /// size parameter when given.
    pub fn build_system(&self, size: Option<usize>) -> Result<System> {
        let seed = self.seed;
        match &self.model {
            ModelConfig::Qubit(q) => Ok(System {
                name: "qubit".into(),
                h0: HermitianOperator::sigma_z().scaled(q.omega),
                v: HermitianOperator::sigma_x().scaled(q.epsilon),
                parameters: vec![("omega".into(), q.omega), ("epsilon".into(), q.epsilon)],
            }),
            ModelConfig::SpinBoson(sb) => {
                let n = size.unwrap_or(sb.n_modes);
                let p = sb.params(n, seed, self.max_dim)?;
                let kind = sb.perturbation_kind();
                let mut parameters = vec![
                    ("n_modes".into(), n as f64),
                    ("cutoff".into(), p.cutoff as f64),
                    ("omega_spin".into(), p.omega_spin),
                ];
                parameters.extend(p.g.iter().enumerate().map(|(k, g)| (format!("g[{k}]"), *g)));
                parameters.extend(p.omega.iter().enumerate().map(|(k, w)| (format!("omega[{k}]"), *w)));
                match kind {
                    SpinBosonPerturbation::LocalSigmaX { epsilon } => parameters.push(("epsilon".into(), epsilon)),
                    SpinBosonPerturbation::ModeShift { delta_omega } => {
                        parameters.push(("delta_omega".into(), delta_omega))
                    }
                    SpinBosonPerturbation::Trivial { kappa } => parameters.push(("kappa".into(), kappa)),
                }
                Ok(System {
                    name: format!("spin-boson/{}", kind.name()),
                    h0: build_spin_boson(&p)?,
                    v: spin_boson_perturbation(&p, kind)?,
                    parameters,
                })
            }
            ModelConfig::Impurity(im) => {
                let mut p = ImpurityParams::new(size.unwrap_or(im.n_sites), im.hopping, im.force);
                p.max_dim = self.max_dim;
                let sys = build_impurity(&p)?;
                Ok(System {
                    name: "impurity".into(),
                    h0: sys.h0,
                    v: sys.v,
                    parameters: vec![
                        ("n_sites".into(), p.n_sites as f64),
                        ("hopping".into(), p.hopping),
                        ("force".into(), p.force),
                    ],
                })
            }
            ModelConfig::SpinChain(sc) => {
                let p = SpinChainParams {
                    n_sites: size.unwrap_or(sc.n_sites),
                    coupling: sc.coupling,
                    field: sc.field,
                    seed,
                    max_dim: self.max_dim,
                };
                let chain = build_spin_chain(&p)?;
                let (name, v) = match sc.perturbation {
                    SpinChainKind::Local => ("spin-chain/local", chain.local_v),
                    SpinChainKind::Nonlocal => ("spin-chain/nonlocal", chain.nonlocal_v),
                };
                Ok(System {
                    name: name.into(),
                    h0: chain.h0,
                    v,
                    parameters: vec![
                        ("n_sites".into(), p.n_sites as f64),
                        ("coupling".into(), p.coupling),
                        ("field".into(), p.field),
                    ],
                })
            }
            ModelConfig::Random(r) => {
                if r.dim == 0 {
                    return Err(Error::config("model.dim", "must be at least 1"));
                }
                if r.dim > self.max_dim {
                    return Err(Error::DimensionCap {
                        dim: r.dim,
                        cap: self.max_dim,
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(System {
                    name: "random".into(),
                    h0: random_hermitian(&mut rng, r.dim),
                    v: random_hermitian(&mut rng, r.dim),
                    parameters: vec![("dim".into(), r.dim as f64)],
                })
            }
        }
    }

    /// Drive schedule covering `[0, t_end]`.
    pub fn schedule(&self, v: HermitianOperator, t_end: f64) -> Result<DriveSchedule> {
        match self.drive {
            DriveConfig::Quench => Ok(DriveSchedule::constant(v)),
            DriveConfig::Ramp { ramp_time } if t_end <= ramp_time => DriveSchedule::linear_ramp(&v, ramp_time),
            DriveConfig::Ramp { ramp_time } => DriveSchedule::sampled(
                vec![0.0, ramp_time, t_end],
                vec![HermitianOperator::zeros(v.dim()), v.clone(), v],
                Interpolation::Linear,
            ),
        }
    }
}

/// A model instance ready for evolution.
#[derive(Clone, Debug)]
pub struct System {
    pub name: String,
    pub h0: HermitianOperator,
    pub v: HermitianOperator,
    pub parameters: Vec<(String, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.times.times().unwrap().len(), 21);
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
            schema_version = 1
            seed = 7
            out_dir = "results"
            formats = ["csv", "svg"]
            beta = 0.5
            jobs = 2

            [model]
            kind = "spin-boson"
            n_modes = 3
            cutoff = 3
            perturbation = "mode-shift"
            delta_omega = 0.2

            [drive]
            kind = "ramp"
            ramp_time = 1.5

            [times]
            values = [0.0, 0.5, 1.0]

            [sweep]
            sizes = [1, 2, 4]
            t_star = 0.05
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.formats, vec![Format::Csv, Format::Svg]);
        match &cfg.model {
            ModelConfig::SpinBoson(sb) => {
                assert_eq!(sb.n_modes, 3);
                assert_eq!(sb.perturbation, SpinBosonKind::ModeShift);
                assert_eq!(sb.epsilon, 0.1);
            }
            other => panic!("wrong model {other:?}"),
        }
        assert_eq!(cfg.drive, DriveConfig::Ramp { ramp_time: 1.5 });
        let again = RunConfig::from_toml_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "sed = 3",
            "[model]\nkind = \"qubit\"\nomegaa = 2.0",
            "[times]\npoint = 3",
            "[model]\nkind = \"pendulum\"",
        ] {
            let err = RunConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn invalid_values_name_the_field() {
        let cases = [
            ("schema_version = 9", "schema_version"),
            ("beta = -1.0", "beta"),
            ("jobs = 0", "jobs"),
            ("[sweep]\nsizes = [3, 2]", "sweep.sizes"),
            ("[times]\npoints = 0", "times.points"),
            ("[times]\nvalues = [0.5, 0.1]", "times.values"),
        ];
        for (text, field) in cases {
            match RunConfig::from_toml_str(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn single_point_grid_is_zero() {
        let grid = TimeGrid {
            t_max: 3.0,
            points: 1,
            values: None,
        };
        assert_eq!(grid.times().unwrap(), vec![0.0]);
        let grid = TimeGrid {
            t_max: 1.0,
            points: 3,
            values: None,
        };
        assert_eq!(grid.times().unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn builds_each_model() {
        for text in [
            "[model]\nkind = \"qubit\"",
            "[model]\nkind = \"spin-boson\"",
            "[model]\nkind = \"impurity\"\nn_sites = 6",
            "[model]\nkind = \"spin-chain\"\nperturbation = \"nonlocal\"",
            "[model]\nkind = \"random\"\ndim = 3",
        ] {
            let cfg = RunConfig::from_toml_str(text).unwrap();
            let sys = cfg.build_system(None).unwrap();
            assert_eq!(sys.h0.dim(), sys.v.dim());
        }
    }

    #[test]
    fn dimension_cap_is_a_resource_error() {
        let cfg = RunConfig::from_toml_str("max_dim = 8\n[model]\nkind = \"spin-boson\"\nn_modes = 3").unwrap();
        assert_eq!(cfg.build_system(None).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn explicit_couplings_must_cover_sizes() {
        let cfg = RunConfig::from_toml_str("[model]\nkind = \"spin-boson\"\nn_modes = 3\ng = [0.1, 0.2]").unwrap();
        assert!(matches!(cfg.build_system(None), Err(Error::Config { .. })));
    }
}

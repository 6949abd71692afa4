//! `verify`: seeded property suites over random instances.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{RunConfig, VerifyConfig, SCHEMA_VERSION};
use super::output::{json_string, write_file};
use crate::bounds::{
    bound_report, cauchy_schwarz_bracket, dtd_spectral_rhs, f_beta, thermal_state, ReportOptions, CERTIFICATION_SLACK,
};
use crate::distances::{
    audenaert_loose_rhs, audenaert_rhs, bures_angle_checked, d_measure, holevo_loose_rhs, holevo_rhs, trace_distance,
    wy_skew_information,
};
use crate::error::{Error, Result};
use crate::evolution::{dtd_identity_check, sqrt_evolution_check, DriveSchedule};
use crate::operator::{partial_trace, CompositeSpace, HermitianOperator};
use crate::random::{random_density, random_hermitian};

pub const INEQUALITY_SLACK: f64 = 1e-10;
pub const SQRT_EVOLUTION_TOL: f64 = 1e-8;
/// Allowed gap between the finite-difference and analytic `∂t D`.
pub const DTD_TOL: f64 = 1e-6;
/// Allowed gap between the two analytic routes to `∂t D`; each route
/// propagates separately, so this matches the evolution accuracy.
pub const DTD_ROUTE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub failures: usize,
    /// Smallest margin seen; negative beyond the suite's tolerance means failure.
    pub worst_slack: f64,
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub library_version: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub report: VerifyReport,
    pub files: Vec<PathBuf>,
}

/// Outcome of one case: its worst margin and, if it failed, why.
struct Case {
    slack: f64,
    failure: Option<String>,
}

impl Case {
    fn check(slack: f64, tolerance: f64, describe: impl FnOnce() -> String) -> Self {
        let failure = if slack < -tolerance || slack.is_nan() {
            Some(describe())
        } else {
            None
        };
        Case { slack, failure }
    }

    fn error(e: Error) -> Self {
        Case {
            slack: f64::NEG_INFINITY,
            failure: Some(e.to_string()),
        }
    }
}

/// One independent random stream per (suite, case).
fn case_rng(seed: u64, suite: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((suite << 32) | case as u64);
    rng
}

fn run_suite(name: &str, cases: usize, f: impl Fn(usize) -> Case + Sync + Send) -> SuiteReport {
    let results: Vec<Case> = (0..cases).into_par_iter().map(f).collect();
    let failures: Vec<(usize, &String)> = results
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.failure.as_ref().map(|f| (i, f)))
        .collect();
    SuiteReport {
        suite: name.to_string(),
        cases,
        failures: failures.len(),
        worst_slack: results.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min),
        first_failure: failures.first().map(|(i, f)| format!("case {i}: {f}")),
    }
}

/// Random density matrix of random rank.
fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> crate::operator::DensityMatrix {
    let rank = rng.random_range(1..=dim);
    random_density(rng, dim, rank)
}

fn min_slack(pairs: &[(&'static str, f64, f64)]) -> (&'static str, f64) {
    pairs
        .iter()
        .map(|&(name, rhs, lhs)| (name, rhs - lhs))
        .fold(("", f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

/// Bound ≥ actual for every bound on random quenches.
pub fn certification_suite(seed: u64, v: &VerifyConfig) -> SuiteReport {
    run_suite("certification", v.instances, |i| {
        let mut rng = case_rng(seed, 1, i);
        let dim = rng.random_range(v.instance_dim_min..=v.instance_dim_max);
        let beta = rng.random_range(0.0..=v.beta_max);
        let h0 = random_hermitian(&mut rng, dim);
        let pert = random_hermitian(&mut rng, dim);
        let times: Vec<f64> = (0..v.points)
            .map(|k| v.t_max * k as f64 / (v.points - 1) as f64)
            .collect();
        let report = thermal_state(&h0, beta)
            .and_then(|ctx| bound_report(&ctx, &DriveSchedule::constant(pert), &times, &ReportOptions::default()));
        match report {
            Ok(r) => {
                let (column, slack) = r
                    .slacks()
                    .into_iter()
                    .fold(("", f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                Case::check(slack, CERTIFICATION_SLACK, || {
                    format!("{column} below actual by {:e} (dim {dim}, beta {beta})", -slack)
                })
            }
            Err(e) => Case::error(e),
        }
    })
}

/// Holevo and Audenaert chains, tight and loose.
pub fn distance_chain_suite(seed: u64, v: &VerifyConfig) -> SuiteReport {
    run_suite("holevo-audenaert", v.pairs, |i| {
        let mut rng = case_rng(seed, 2, i);
        let dim = rng.random_range(2..=6);
        let r1 = random_state(&mut rng, dim);
        let r2 = random_state(&mut rng, dim);
        let eval = || -> Result<Case> {
            let dtr = trace_distance(&r1, &r2)?;
            let d = d_measure(&r1, &r2)?.clamp(0.0, 1.0);
            let l = bures_angle_checked(&r1, &r2)?.value;
            let (name, slack) = min_slack(&[
                ("holevo tight", holevo_rhs(d)?, dtr),
                ("holevo loose", holevo_loose_rhs(d)?, holevo_rhs(d)?),
                ("audenaert tight", audenaert_rhs(d)?, l),
                ("audenaert loose", audenaert_loose_rhs(d)?, audenaert_rhs(d)?),
            ]);
            Ok(Case::check(slack, INEQUALITY_SLACK, || {
                format!("{name} violated by {:e}", -slack)
            }))
        };
        eval().unwrap_or_else(Case::error)
    })
}

/// `−tr[√ρ, V]² ≤ 2⟨V²⟩`. With `inject` the inequality is reversed, which
/// must produce failures.
pub fn skew_information_suite(seed: u64, v: &VerifyConfig, inject: bool) -> SuiteReport {
    run_suite("skew-information", v.pairs, |i| {
        let mut rng = case_rng(seed, 3, i);
        let dim = rng.random_range(2..=6);
        let rho = random_state(&mut rng, dim);
        let pert = random_hermitian(&mut rng, dim);
        let eval = || -> Result<Case> {
            let skew = wy_skew_information(&rho, &pert)?;
            let v2 = crate::operator::expectation(&rho, &(pert.matrix() * pert.matrix()))?.re;
            let slack = if inject { skew - 2.0 * v2 } else { 2.0 * v2 - skew };
            Ok(Case::check(slack, INEQUALITY_SLACK, || {
                format!("skew {skew} vs 2<V^2> {}", 2.0 * v2)
            }))
        };
        eval().unwrap_or_else(Case::error)
    })
}

/// `f_β(E, E′)² ≤ e^{−βE} + e^{−βE′}` on a 61 × 61 × 11 grid.
pub fn f_beta_lemma_suite() -> SuiteReport {
    let energies: Vec<f64> = (0..61).map(|k| -6.0 + 0.2 * k as f64).collect();
    let betas: Vec<f64> = (0..11).map(|k| if k == 0 { 0.1 } else { 0.5 * k as f64 }).collect();
    run_suite("f-beta-lemma", 61 * 61 * 11, |idx| {
        let (e, ep, beta) = (energies[idx / (61 * 11)], energies[(idx / 11) % 61], betas[idx % 11]);
        match f_beta(e, ep, beta) {
            Ok(f) => {
                let rhs = (-beta * e).exp() + (-beta * ep).exp();
                let slack = (rhs - f * f) / rhs.max(1.0);
                Case::check(slack, 1e-12, || format!("E={e}, E'={ep}, beta={beta}"))
            }
            Err(e) => Case::error(e),
        }
    })
}

/// Trace distance and Bures angle do not grow under partial trace.
pub fn contractivity_suite(seed: u64, v: &VerifyConfig) -> SuiteReport {
    run_suite("contractivity", v.bipartite_pairs, |i| {
        let mut rng = case_rng(seed, 5, i);
        let (da, db) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let r1 = random_state(&mut rng, da * db);
        let r2 = random_state(&mut rng, da * db);
        let eval = || -> Result<Case> {
            let space = CompositeSpace::new(vec![da, db])?;
            let full_tr = trace_distance(&r1, &r2)?;
            let full_l = bures_angle_checked(&r1, &r2)?.value;
            let mut checks = Vec::new();
            for keep in [0usize, 1] {
                let (a, b) = (
                    partial_trace(&r1, &space, &[keep])?,
                    partial_trace(&r2, &space, &[keep])?,
                );
                checks.push(("trace distance", full_tr, trace_distance(&a, &b)?));
                checks.push(("bures angle", full_l, bures_angle_checked(&a, &b)?.value));
            }
            let (name, slack) = min_slack(&checks);
            Ok(Case::check(slack, INEQUALITY_SLACK, || {
                format!("{name} grew by {:e} ({da}x{db})", -slack)
            }))
        };
        eval().unwrap_or_else(Case::error)
    })
}

/// `∂t D` by finite differences against `i tr([√ρ0, V_t] √ρ_t)` and the
/// eigenbasis route, for quenches and ramps.
pub fn dtd_identity_suite(seed: u64) -> SuiteReport {
    run_suite("dtd-identity", 24, |i| {
        let mut rng = case_rng(seed, 6, i);
        let dim = rng.random_range(2..=5);
        let beta = rng.random_range(0.0..3.0);
        let t = rng.random_range(0.2..1.0);
        let h0 = random_hermitian(&mut rng, dim);
        let pert = random_hermitian(&mut rng, dim);
        let eval = || -> Result<Case> {
            let schedule = if i % 2 == 0 {
                DriveSchedule::constant(pert.clone())
            } else {
                DriveSchedule::linear_ramp(&pert, 1.0)?
            };
            let ctx = thermal_state(&h0, beta)?;
            let check = dtd_identity_check(ctx.rho0(), &h0, &schedule, t, 1e-4)?;
            let traj = crate::evolution::propagate(
                &[ctx.sqrt_rho0().matrix().clone()],
                &h0,
                &schedule,
                &[t],
                crate::evolution::DEFAULT_DT_MAX,
            )?;
            let root_t = HermitianOperator::from_trusted(traj.frames[0][0].clone());
            let spectral = dtd_spectral_rhs(&ctx, &schedule.perturbation_at(t)?, &root_t)?;
            let route_gap = (spectral.re - check.rhs).abs().max(spectral.im.abs());
            let slack = (DTD_TOL - check.defect()).min(DTD_ROUTE_TOL - route_gap);
            Ok(Case::check(slack, 0.0, || {
                format!("finite difference gap {:e}, route gap {:e}", check.defect(), route_gap)
            }))
        };
        eval().unwrap_or_else(Case::error)
    })
}

/// `(U √ρ0 U†)² = U ρ0 U†` to within `1e-8`.
pub fn sqrt_evolution_suite(seed: u64) -> SuiteReport {
    run_suite("sqrt-evolution", 24, |i| {
        let mut rng = case_rng(seed, 7, i);
        let dim = rng.random_range(2..=8);
        let beta = rng.random_range(0.0..5.0);
        let h0 = random_hermitian(&mut rng, dim);
        let pert = random_hermitian(&mut rng, dim);
        let eval = || -> Result<Case> {
            let schedule = if i % 2 == 0 {
                DriveSchedule::constant(pert.clone())
            } else {
                DriveSchedule::linear_ramp(&pert, 1.0)?
            };
            let ctx = thermal_state(&h0, beta)?;
            let defect = sqrt_evolution_check(ctx.rho0(), &h0, &schedule, 1.0, crate::evolution::DEFAULT_DT_MAX)?;
            Ok(Case::check(SQRT_EVOLUTION_TOL - defect, 0.0, || {
                format!("defect {defect:e}")
            }))
        };
        eval().unwrap_or_else(Case::error)
    })
}

/// `Σ Z⁻¹ f² |[H0,V]_{nk}|² ≤ −2⟨[H0,V]²⟩`.
pub fn cauchy_schwarz_suite(seed: u64, v: &VerifyConfig) -> SuiteReport {
    run_suite("cauchy-schwarz", v.pairs, |i| {
        let mut rng = case_rng(seed, 8, i);
        let dim = rng.random_range(v.instance_dim_min..=v.instance_dim_max);
        let beta = rng.random_range(0.0..=v.beta_max);
        let h0 = random_hermitian(&mut rng, dim);
        let pert = random_hermitian(&mut rng, dim);
        match thermal_state(&h0, beta).and_then(|ctx| cauchy_schwarz_bracket(&ctx, &pert)) {
            Ok((lhs, rhs)) => {
                let slack = (rhs - lhs) / rhs.max(1.0);
                Case::check(slack, 1e-12, || format!("bracket {lhs} exceeds {rhs}"))
            }
            Err(e) => Case::error(e),
        }
    })
}

pub fn compute_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let v = &cfg.verify;
    let seed = cfg.seed;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let suites = pool.install(|| {
        vec![
            certification_suite(seed, v),
            distance_chain_suite(seed, v),
            skew_information_suite(seed, v, v.inject_violation),
            f_beta_lemma_suite(),
            contractivity_suite(seed, v),
            dtd_identity_suite(seed),
            sqrt_evolution_suite(seed),
            cauchy_schwarz_suite(seed, v),
        ]
    });
    for s in &suites {
        log::info!("{}: {} cases, {} failures", s.suite, s.cases, s.failures);
    }
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION"),
        seed,
        passed: suites.iter().all(|s| s.failures == 0),
        suites,
    })
}

/// Runs every suite and writes `verify.json`.
pub fn run_verify(cfg: &RunConfig) -> Result<VerifyOutcome> {
    let report = compute_verify(cfg)?;
    let path = write_file(&cfg.out_dir, "verify.json", &json_string(&report)?)?;
    Ok(VerifyOutcome {
        report,
        files: vec![path],
    })
}

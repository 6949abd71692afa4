//! `sweep`: bound values at a fixed time across system sizes, with
//! growth-exponent fits.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DriveConfig, Format, RunConfig, SCHEMA_VERSION};
use super::fit::{fit_column, ColumnFit};
use super::output::{csv_string, fmt_f64, json_string, line_plot_svg, write_file, Series};
use super::quench::dedup;
use crate::bounds::{bound_report, thermal_state, ReportOptions};
use crate::error::{Error, Result};
use crate::evolution::DriveSchedule;

pub const SWEEP_COLUMNS: [&str; 8] = ["N", "dim", "D_tr", "tqsl", "mt", "ml", "mds_orig", "mds_simpl"];
/// Columns that receive an exponent fit.
pub const FITTED_COLUMNS: [&str; 6] = ["D_tr", "tqsl", "mt", "ml", "mds_orig", "mds_simpl"];

/// Values at `t*` for one size. Bound values are taken before clamping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub dim: usize,
    pub d_tr: f64,
    pub tqsl: f64,
    pub mt: f64,
    pub ml: f64,
    pub mds_orig: f64,
    pub mds_simpl: f64,
}

impl SweepRow {
    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "D_tr" => self.d_tr,
            "tqsl" => self.tqsl,
            "mt" => self.mt,
            "ml" => self.ml,
            "mds_orig" => self.mds_orig,
            "mds_simpl" => self.mds_simpl,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeFailure {
    pub n: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingResult {
    pub schema_version: u32,
    pub library_version: &'static str,
    pub model: String,
    pub size_parameter: &'static str,
    pub seed: u64,
    pub beta: f64,
    pub t_star: f64,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SizeFailure>,
    pub fits: Vec<ColumnFit>,
}

impl ScalingResult {
    pub fn fit(&self, column: &str) -> Option<&ColumnFit> {
        self.fits.iter().find(|f| f.column == column)
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub result: ScalingResult,
    pub files: Vec<PathBuf>,
}

/// Evaluates one size of the sweep.
pub fn sweep_point(cfg: &RunConfig, n: usize) -> Result<(String, SweepRow)> {
    let system = cfg.build_system(Some(n))?;
    let ctx = thermal_state(&system.h0, cfg.beta)?;
    log::info!("size {n}: dim {}", ctx.dim());
    let options = ReportOptions {
        dt_max: cfg.evolution.dt_max,
        quadrature_tol: cfg.evolution.quadrature_tol,
    };
    let t = cfg.sweep.t_star;
    let report = bound_report(&ctx, &DriveSchedule::constant(system.v), &[t], &options)?;
    let raw = |col: &Option<Vec<crate::bounds::Bound>>| col.as_ref().map(|c| c[0].raw).expect("quench columns present");
    let row = SweepRow {
        n,
        dim: ctx.dim(),
        d_tr: report.actual_trace_distance[0],
        tqsl: report.tqsl_trace[0].raw,
        mt: raw(&report.mt),
        ml: raw(&report.ml),
        mds_orig: report.mds_original.as_ref().expect("quench columns present")[0].trace_bound,
        mds_simpl: raw(&report.mds_simplified),
    };
    Ok((system.name, row))
}

pub fn fit_rows(rows: &[SweepRow]) -> Result<Vec<ColumnFit>> {
    let sizes: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    FITTED_COLUMNS
        .iter()
        .map(|&col| {
            let values: Vec<f64> = rows.iter().map(|r| r.column(col).expect("known column")).collect();
            fit_column(col, &sizes, &values)
        })
        .collect()
}

/// Runs every size on a pool of `cfg.jobs` threads; failed sizes are
/// recorded and skipped.
pub fn compute_sweep(cfg: &RunConfig) -> Result<ScalingResult> {
    cfg.validate()?;
    let size_parameter = cfg.model_size_field()?;
    if cfg.drive != DriveConfig::Quench {
        return Err(Error::config("drive.kind", "sweeps evaluate quenches only"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let results: Vec<(usize, Result<(String, SweepRow)>)> =
        pool.install(|| cfg.sweep.sizes.par_iter().map(|&n| (n, sweep_point(cfg, n))).collect());

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut model = None;
    let mut first_error = None;
    for (n, r) in results {
        match r {
            Ok((name, row)) => {
                model.get_or_insert(name);
                rows.push(row);
            }
            Err(e) => {
                log::warn!("size {n} failed: {e}");
                failures.push(SizeFailure {
                    n,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    rows.sort_by_key(|r| r.n);
    if rows.len() < 3 {
        return Err(match first_error {
            Some(e @ Error::DimensionCap { .. }) => e,
            _ => Error::InvalidArgument(format!("sweep needs at least 3 feasible sizes, got {}", rows.len())),
        });
    }
    let fits = fit_rows(&rows)?;
    Ok(ScalingResult {
        schema_version: SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION"),
        model: model.expect("at least one row"),
        size_parameter,
        seed: cfg.seed,
        beta: cfg.beta,
        t_star: cfg.sweep.t_star,
        rows,
        failures,
        fits,
    })
}

pub fn run_sweep(cfg: &RunConfig) -> Result<SweepOutcome> {
    let result = compute_sweep(cfg)?;
    let mut files = Vec::new();
    for format in dedup(&cfg.formats) {
        let (name, contents) = match format {
            Format::Csv => ("sweep.csv", sweep_csv(&result.rows)?),
            Format::Json => ("sweep.json", json_string(&result)?),
            Format::Svg => ("sweep.svg", sweep_svg(&result)),
        };
        files.push(write_file(&cfg.out_dir, name, &contents)?);
    }
    Ok(SweepOutcome { result, files })
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.dim.to_string(),
                fmt_f64(r.d_tr),
                fmt_f64(r.tqsl),
                fmt_f64(r.mt),
                fmt_f64(r.ml),
                fmt_f64(r.mds_orig),
                fmt_f64(r.mds_simpl),
            ]
        })
        .collect();
    csv_string(&SWEEP_COLUMNS, &records)
}

/// Reads rows back from [`sweep_csv`] output so fits can be recomputed.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != SWEEP_COLUMNS {
        return Err(Error::InvalidArgument(format!(
            "unexpected sweep CSV header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |col: &str, v: &str| Error::InvalidArgument(format!("row {}: cannot parse {col} = {v:?}", line + 1));
        let int = |i: usize| {
            record[i]
                .parse::<usize>()
                .map_err(|_| bad(SWEEP_COLUMNS[i], &record[i]))
        };
        let float = |i: usize| record[i].parse::<f64>().map_err(|_| bad(SWEEP_COLUMNS[i], &record[i]));
        rows.push(SweepRow {
            n: int(0)?,
            dim: int(1)?,
            d_tr: float(2)?,
            tqsl: float(3)?,
            mt: float(4)?,
            ml: float(5)?,
            mds_orig: float(6)?,
            mds_simpl: float(7)?,
        });
    }
    Ok(rows)
}

pub fn sweep_svg(result: &ScalingResult) -> String {
    let series: Vec<Series<'_>> = FITTED_COLUMNS
        .iter()
        .map(|&col| Series {
            name: col,
            points: result
                .rows
                .iter()
                .map(|r| (r.n as f64, r.column(col).expect("known column")))
                .collect(),
        })
        .collect();
    line_plot_svg(
        &format!("{} at t = {}", result.model, result.t_star),
        result.size_parameter,
        "value",
        &series,
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fit::Classification;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_toml_str(text).unwrap()
    }

    #[test]
    fn trivial_sweep_is_exact() {
        let c = cfg("[model]\nkind = \"spin-boson\"\nperturbation = \"trivial\"\n[sweep]\nsizes = [1, 2, 3]");
        let r = compute_sweep(&c).unwrap();
        for col in ["tqsl", "mds_orig", "D_tr"] {
            assert_eq!(r.fit(col).unwrap().classification, Classification::Exact, "{col}");
        }
        // t √(2⟨V²⟩) does not see that V commutes with H0
        assert_ne!(r.fit("mds_simpl").unwrap().classification, Classification::Exact);
        assert!(r.rows.iter().all(|row| row.mt > 0.0 && row.ml > 0.0));
    }

    #[test]
    fn local_tqsl_is_flat() {
        let c = cfg("[model]\nkind = \"spin-boson\"\nperturbation = \"local\"\n[sweep]\nsizes = [1, 2, 3, 4]");
        let r = compute_sweep(&c).unwrap();
        let tqsl = r.fit("tqsl").unwrap();
        assert!(tqsl.exponent.unwrap().abs() < 1e-10);
        assert_eq!(tqsl.classification, Classification::Tight);
    }

    #[test]
    fn csv_round_trip_reproduces_fits() {
        let c = cfg("[model]\nkind = \"spin-boson\"\nperturbation = \"mode-shift\"\n[sweep]\nsizes = [1, 2, 3]");
        let r = compute_sweep(&c).unwrap();
        let parsed = parse_sweep_csv(&sweep_csv(&r.rows).unwrap()).unwrap();
        assert_eq!(parsed, r.rows);
        assert_eq!(fit_rows(&parsed).unwrap(), r.fits);
    }

    #[test]
    fn job_count_does_not_change_results() {
        let mut c = cfg("[model]\nkind = \"spin-boson\"\nperturbation = \"mode-shift\"\n[sweep]\nsizes = [1, 2, 3]");
        let serial = compute_sweep(&c).unwrap();
        c.jobs = 3;
        assert_eq!(serial, compute_sweep(&c).unwrap());
    }

    #[test]
    fn infeasible_sizes_are_recorded() {
        let c = cfg("max_dim = 32\n[model]\nkind = \"spin-boson\"\n[sweep]\nsizes = [1, 2, 3, 4, 5]");
        let r = compute_sweep(&c).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].n, 5);

        let too_small = cfg("max_dim = 8\n[model]\nkind = \"spin-boson\"\n[sweep]\nsizes = [1, 2, 3, 4]");
        assert_eq!(compute_sweep(&too_small).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn models_without_size_axis_are_rejected() {
        let c = cfg("[model]\nkind = \"qubit\"");
        assert_eq!(compute_sweep(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn parse_rejects_malformed_csv() {
        assert!(parse_sweep_csv("a,b\n1,2\n").is_err());
        let header = SWEEP_COLUMNS.join(",");
        assert!(parse_sweep_csv(&format!("{header}\n1,2,x,0,0,0,0,0\n")).is_err());
        assert!(parse_sweep_csv(&format!("{header}\n1,2,0,0\n")).is_err());
        assert_eq!(parse_sweep_csv(&format!("{header}\n")).unwrap(), vec![]);
    }
}

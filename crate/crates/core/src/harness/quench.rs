//! `quench`: one bound report on a time grid.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use super::config::{DriveConfig, Format, RunConfig, SCHEMA_VERSION};
use super::output::{csv_string, fmt_f64, json_string, line_plot_svg, write_file, Series};
use crate::bounds::{bound_report, thermal_state, BoundReport, ReportOptions, Violation, CERTIFICATION_SLACK};
use crate::distances::BURES_SYMMETRY_TOL;
use crate::error::{Error, Result};
use crate::evolution::UNITARITY_TOL;

pub const QUENCH_COLUMNS: [&str; 10] = [
    "t",
    "D_tr",
    "L",
    "tqsl",
    "tqsl_bures",
    "mt",
    "ml",
    "mds_orig",
    "mds_orig_domain_ok",
    "mds_simpl",
];

#[derive(Debug)]
pub struct QuenchOutcome {
    pub report: BoundReport,
    pub violations: Vec<Violation>,
    pub health_warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl QuenchOutcome {
    pub fn certified(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Serialize)]
struct QuenchMetadata<'a> {
    schema_version: u32,
    library_version: &'static str,
    command: &'static str,
    seed: u64,
    model: &'a str,
    parameters: BTreeMap<&'a str, f64>,
    beta: f64,
    drive: &'a DriveConfig,
    time_points: usize,
    t_max: f64,
    health: &'a crate::bounds::NumericalHealth,
    health_warnings: &'a [String],
    worst_slack: BTreeMap<&'static str, f64>,
    violations: &'a [Violation],
    certified: bool,
}

/// Builds the model, evaluates the report and writes the requested files.
pub fn run_quench(cfg: &RunConfig) -> Result<QuenchOutcome> {
    let outcome = compute_quench(cfg)?;
    let files = emit_quench(cfg, &outcome)?;
    Ok(QuenchOutcome { files, ..outcome })
}

pub fn compute_quench(cfg: &RunConfig) -> Result<QuenchOutcome> {
    cfg.validate()?;
    let system = cfg.build_system(None)?;
    let times = cfg.times.times()?;
    let t_end = *times.last().expect("time grid is non-empty");
    let schedule = cfg.schedule(system.v.clone(), t_end)?;
    let ctx = thermal_state(&system.h0, cfg.beta)?;
    log::info!("{}: dim {}, {} time points", system.name, ctx.dim(), times.len());
    let options = ReportOptions {
        dt_max: cfg.evolution.dt_max,
        quadrature_tol: cfg.evolution.quadrature_tol,
    };
    let mut report = bound_report(&ctx, &schedule, &times, &options)?;
    report.metadata.model = system.name.clone();
    report.metadata.parameters = system.parameters.clone();
    report.metadata.seed = Some(cfg.seed);

    let mut health_warnings = Vec::new();
    if report.health.max_unitarity_defect > UNITARITY_TOL {
        health_warnings.push(format!(
            "propagator unitarity defect {:e} exceeds {UNITARITY_TOL:e}",
            report.health.max_unitarity_defect
        ));
    }
    if report.health.max_bures_asymmetry > BURES_SYMMETRY_TOL {
        health_warnings.push(format!(
            "Bures angle asymmetry {:e} exceeds {BURES_SYMMETRY_TOL:e}",
            report.health.max_bures_asymmetry
        ));
    }
    for w in &health_warnings {
        log::warn!("{w}");
    }
    if cfg.evolution.strict_health && !health_warnings.is_empty() {
        return Err(Error::Domain(format!(
            "numerical health check failed: {}",
            health_warnings.join("; ")
        )));
    }
    let violations = report.violations(CERTIFICATION_SLACK);
    Ok(QuenchOutcome {
        report,
        violations,
        health_warnings,
        files: Vec::new(),
    })
}

fn optional(col: &Option<Vec<crate::bounds::Bound>>, i: usize) -> String {
    col.as_ref().map(|c| fmt_f64(c[i].value)).unwrap_or_default()
}

/// One row per time point; bound columns hold clamped values. Columns that
/// do not apply to driven schedules are left empty.
pub fn quench_csv(report: &BoundReport) -> Result<String> {
    let rows: Vec<Vec<String>> = (0..report.times.len())
        .map(|i| {
            let mds = report.mds_original.as_ref().map(|m| m[i]);
            vec![
                fmt_f64(report.times[i]),
                fmt_f64(report.actual_trace_distance[i]),
                fmt_f64(report.actual_bures_angle[i]),
                fmt_f64(report.tqsl_trace[i].value),
                fmt_f64(report.tqsl_bures[i].value),
                optional(&report.mt, i),
                optional(&report.ml, i),
                mds.map(|m| fmt_f64(m.trace_bound)).unwrap_or_default(),
                mds.map(|m| m.domain_ok.to_string()).unwrap_or_default(),
                optional(&report.mds_simplified, i),
            ]
        })
        .collect();
    csv_string(&QUENCH_COLUMNS, &rows)
}

pub fn quench_metadata_json(cfg: &RunConfig, outcome: &QuenchOutcome) -> Result<String> {
    let report = &outcome.report;
    let meta = QuenchMetadata {
        schema_version: SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION"),
        command: "quench",
        seed: cfg.seed,
        model: &report.metadata.model,
        parameters: report
            .metadata
            .parameters
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .collect(),
        beta: cfg.beta,
        drive: &cfg.drive,
        time_points: report.times.len(),
        t_max: report.times.last().copied().unwrap_or(0.0),
        health: &report.health,
        health_warnings: &outcome.health_warnings,
        worst_slack: report.slacks().into_iter().collect(),
        violations: &outcome.violations,
        certified: outcome.certified(),
    };
    json_string(&meta)
}

pub fn quench_svg(report: &BoundReport) -> String {
    let at = |v: &[f64]| report.times.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let values = |b: &[crate::bounds::Bound]| b.iter().map(|x| x.value).collect::<Vec<_>>();
    let mut series = vec![
        Series {
            name: "D_tr",
            points: at(&report.actual_trace_distance),
        },
        Series {
            name: "tqsl",
            points: at(&values(&report.tqsl_trace)),
        },
    ];
    if let Some(mt) = &report.mt {
        series.push(Series {
            name: "mt",
            points: at(&values(mt)),
        });
    }
    if let Some(ml) = &report.ml {
        series.push(Series {
            name: "ml",
            points: at(&values(ml)),
        });
    }
    if let Some(mds) = &report.mds_original {
        series.push(Series {
            name: "mds_orig",
            points: at(&mds.iter().map(|m| m.trace_bound).collect::<Vec<_>>()),
        });
    }
    if let Some(mds) = &report.mds_simplified {
        series.push(Series {
            name: "mds_simpl",
            points: at(&values(mds)),
        });
    }
    line_plot_svg(
        &format!("bounds on D_tr ({})", report.metadata.model),
        "t",
        "distance",
        &series,
        false,
    )
}

fn emit_quench(cfg: &RunConfig, outcome: &QuenchOutcome) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for format in dedup(&cfg.formats) {
        let (name, contents) = match format {
            Format::Csv => ("quench.csv", quench_csv(&outcome.report)?),
            Format::Json => ("quench.json", quench_metadata_json(cfg, outcome)?),
            Format::Svg => ("quench.svg", quench_svg(&outcome.report)),
        };
        files.push(write_file(&cfg.out_dir, name, &contents)?);
    }
    Ok(files)
}

pub(crate) fn dedup(formats: &[Format]) -> Vec<Format> {
    let mut out: Vec<Format> = Vec::new();
    for f in formats {
        if !out.contains(f) {
            out.push(*f);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_rows(csv_text: &str) -> Vec<Vec<String>> {
        let mut r = csv::Reader::from_reader(csv_text.as_bytes());
        assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), QUENCH_COLUMNS);
        r.records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect())
            .collect()
    }

    #[test]
    fn qubit_quench_is_certified() {
        let cfg = RunConfig::from_toml_str("[model]\nkind = \"qubit\"").unwrap();
        let out = compute_quench(&cfg).unwrap();
        assert!(out.certified());
        let rows = parse_rows(&quench_csv(&out.report).unwrap());
        assert_eq!(rows.len(), 21);
        for row in &rows {
            let d: f64 = row[1].parse().unwrap();
            for col in [3, 5, 6, 7, 9] {
                let b: f64 = row[col].parse().unwrap();
                assert!(b >= d - 1e-9, "column {} at t={}", QUENCH_COLUMNS[col], row[0]);
            }
            let l: f64 = row[2].parse().unwrap();
            assert!(row[4].parse::<f64>().unwrap() >= l - 1e-9);
        }
    }

    #[test]
    fn trivial_perturbation_rows() {
        let cfg = RunConfig::from_toml_str("[model]\nkind = \"spin-boson\"\nperturbation = \"trivial\"").unwrap();
        let out = compute_quench(&cfg).unwrap();
        for row in parse_rows(&quench_csv(&out.report).unwrap()) {
            assert!(row[1].parse::<f64>().unwrap().abs() < 1e-12);
            assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn single_zero_time_row() {
        let cfg = RunConfig::from_toml_str("[times]\nvalues = [0.0]").unwrap();
        let out = compute_quench(&cfg).unwrap();
        let rows = parse_rows(&quench_csv(&out.report).unwrap());
        assert_eq!(rows.len(), 1);
        for (i, v) in rows[0].iter().enumerate() {
            if QUENCH_COLUMNS[i] == "mds_orig_domain_ok" {
                assert_eq!(v, "true");
            } else {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{}", QUENCH_COLUMNS[i]);
            }
        }
    }

    #[test]
    fn ramp_leaves_quench_only_columns_empty() {
        let cfg =
            RunConfig::from_toml_str("[drive]\nkind = \"ramp\"\nramp_time = 0.5\n[times]\nt_max = 1.0\npoints = 5")
                .unwrap();
        let out = compute_quench(&cfg).unwrap();
        assert!(out.certified());
        let rows = parse_rows(&quench_csv(&out.report).unwrap());
        assert!(rows.iter().all(|r| r[5].is_empty() && r[9].is_empty()));
    }

    #[test]
    fn metadata_carries_schema_version() {
        let cfg = RunConfig::default();
        let out = compute_quench(&cfg).unwrap();
        let json: serde_json::Value = serde_json::from_str(&quench_metadata_json(&cfg, &out).unwrap()).unwrap();
        assert_eq!(json["schema_version"], SCHEMA_VERSION);
        assert_eq!(json["certified"], true);
        assert_eq!(json["parameters"]["epsilon"], 1.0);
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.out_dir = dir.path().to_path_buf();
        cfg.formats = vec![Format::Csv, Format::Json, Format::Svg, Format::Csv];
        let out = run_quench(&cfg).unwrap();
        assert_eq!(out.files.len(), 3);
        assert!(out.files.iter().all(|f| f.exists()));
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tqsl::harness::{run_quench, run_sweep, run_verify, Format, RunConfig};
use tqsl::models::MODELS;
use tqsl::Result;

const EXIT_FAILURE: u8 = 1;

#[derive(Parser)]
#[command(
    name = "tqsl",
    version,
    about = "Thermal quantum speed limit bounds and their certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound report on a time grid for one model and drive
    Quench(RunArgs),
    /// Bounds at a fixed time across system sizes, with growth-exponent fits
    Sweep(SweepArgs),
    /// Randomized inequality suites
    Verify(VerifyArgs),
    /// Built-in models
    Models {
        #[command(subcommand)]
        command: ModelsCommand,
    },
}

#[derive(Subcommand)]
enum ModelsCommand {
    /// Print the available model ids
    List,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; omitted keys take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated list of csv, json, svg
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Largest Hilbert-space dimension a model may build
    #[arg(long)]
    max_dim: Option<usize>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// Inverse temperature
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated system sizes
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, allow_negative_numbers = true)]
    t_star: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Reverse one inequality so the suite must fail
    #[arg(long)]
    inject_violation: bool,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        if let Some(formats) = &self.format {
            cfg.formats = formats.clone();
        }
        if let Some(max_dim) = self.max_dim {
            cfg.max_dim = max_dim;
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = jobs;
        }
        if let Some(beta) = self.beta {
            cfg.beta = beta;
        }
        if let Some(t_max) = self.t_max {
            cfg.times.t_max = t_max;
            cfg.times.values = None;
        }
        if let Some(points) = self.points {
            cfg.times.points = points;
            cfg.times.values = None;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Quench(args) => {
            let cfg = args.load()?;
            let out = run_quench(&cfg)?;
            for f in &out.files {
                println!("{}", f.display());
            }
            if out.certified() {
                Ok(0)
            } else {
                for v in &out.violations {
                    eprintln!(
                        "violation: {} at t = {}: actual {} exceeds bound {}",
                        v.column, v.time, v.actual, v.bound
                    );
                }
                Ok(EXIT_FAILURE)
            }
        }
        Command::Sweep(args) => {
            let mut cfg = args.run.load()?;
            if let Some(sizes) = args.sizes {
                cfg.sweep.sizes = sizes;
            }
            if let Some(t_star) = args.t_star {
                cfg.sweep.t_star = t_star;
            }
            let out = run_sweep(&cfg)?;
            for fit in &out.result.fits {
                match fit.exponent {
                    Some(e) => println!("{:<10} exponent {e:+.4}  {:?}", fit.column, fit.classification),
                    None => println!("{:<10} {:?}", fit.column, fit.classification),
                }
            }
            for f in &out.files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Verify(args) => {
            let mut cfg = args.run.load()?;
            cfg.verify.inject_violation |= args.inject_violation;
            let out = run_verify(&cfg)?;
            for s in &out.report.suites {
                let status = if s.failures == 0 { "ok" } else { "FAIL" };
                println!(
                    "{status:<4} {:<24} {} cases, {} failures, worst slack {:e}",
                    s.suite, s.cases, s.failures, s.worst_slack
                );
                if let Some(first) = &s.first_failure {
                    eprintln!("  first failure: {first}");
                }
            }
            for f in &out.files {
                println!("{}", f.display());
            }
            Ok(if out.report.passed { 0 } else { EXIT_FAILURE })
        }
        Command::Models {
            command: ModelsCommand::List,
        } => {
            for m in MODELS {
                println!("{:<12} {}", m.id, m.summary);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

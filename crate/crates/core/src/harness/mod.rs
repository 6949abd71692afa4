//! Configuration, runners for the `quench`, `sweep` and `verify`
//! subcommands, exponent fitting and report emission.

pub mod config;
pub mod fit;
pub mod output;
pub mod quench;
pub mod sweep;
pub mod verify;

pub use config::{Format, RunConfig, SCHEMA_VERSION};
pub use fit::{classify_exponent, fit_exponent, Classification, ColumnFit, ExponentFit};
pub use quench::{run_quench, QuenchOutcome};
pub use sweep::{parse_sweep_csv, run_sweep, ScalingResult, SweepOutcome, SweepRow};
pub use verify::{run_verify, VerifyOutcome, VerifyReport};

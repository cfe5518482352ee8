//! End-to-end experiment driver: configuration, runs, table reproduction,
//! parameter sweeps, plot data and validation.

pub mod config;
pub mod plotdata;
pub mod reproduce;
pub mod run;
pub mod sweep;
pub mod validate;

pub use config::{CustomSystem, ResolvedSystem, RunConfig, SafetySpec, SamplingSpec, SystemSpec, TruthSpec};
pub use plotdata::plotdata;
pub use reproduce::{percent_change, reproduce, Reproduction};
pub use run::{cmd_run, run_pipeline, write_artifacts, RunOutcome, RunReport, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};
pub use sweep::{sweep, SweepParameter, SweepRow};
pub use validate::{validate, validate_files, ValidationReport};

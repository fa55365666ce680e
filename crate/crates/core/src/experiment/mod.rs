//! Configuration, orchestration and reporting of the verification pipeline.

pub mod config;
pub mod report;
pub mod run;
pub mod svg;

pub use config::{resolve, ConfigPatch, ExperimentConfig, Format, ProbeConfig, ProbePatch, Profile, OUT_DIR_ENV};
pub use report::{CheckRecord, Comparison, RunReport, Timing};
pub use run::{run, Command, RunOutcome};

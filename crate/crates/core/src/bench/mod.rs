//! Benchmark sweeps over qubit count, depth, shot budget and method.

mod config;
mod oracle;
mod report;
mod run;

pub use config::{Budget, ExperimentConfig, MethodGrids};
pub use oracle::{damping_factor_check, oracle_check, OracleCheck, OracleConfig, OracleReport};
pub use report::{
    aggregate, std_error, Aggregate, CopyAggregate, CopyRow, CopySweepReport, MitigationReport,
    ResultRow, SkippedRun, Summary,
};
pub use run::{copy_sweep, instance_seed, run_experiment, Instance, MAX_SWEEP_COPIES};

//! Scenario configuration, the Monte Carlo engine, parameter sweeps and
//! result files.

mod config;
mod engine;
mod output;
mod sweep;

pub use config::*;
pub use engine::{
    run_bi, run_once, run_scenario, run_scenario_with, BiRecord, PolicySummary, RunContext,
    RunMetadata, Scenario, SimResult,
};
pub use output::{write_csv_header, write_records_csv_header, write_summary_json, write_sweep_csv, RecordWriter, SCHEMA_VERSION};
pub use sweep::{sweep, SweepAxis, SweepPoint};

//! Experiment configs, run orchestration and the report and CSV formats behind the command-line tool.

pub mod config;
pub mod matrix_file;
pub mod report;
pub mod run;
pub mod text;

pub use config::{parse_config, ExperimentConfig};
pub use report::{RunReport, REPORT_HEADER};
pub use run::{execute, execute_with_workers, Command, Experiment, HarnessError, Outputs, RunOptions};

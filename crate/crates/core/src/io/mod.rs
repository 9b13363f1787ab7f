//! Configuration parsing and file outputs.

pub mod config;
pub mod report;
pub mod svg;
pub mod tables;

pub use config::{load_config, parse_config, Config, NetworkFile, NetworkSource};
pub use report::{design_report, write_design_csv, write_json, DesignRow, RunManifest};
pub use tables::{read_branch_csv, write_branch_csv, write_events_csv, write_trace_csv, BranchRow};

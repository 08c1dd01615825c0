//! Scenario files, experiment execution and CSV reports.

pub mod compare;
pub mod config;
pub mod report;
pub mod sweep;

pub use compare::{compare, compare_reports, Comparison, ComparisonSummary, JobDelta};
pub use config::{ClusterConfig, ScenarioConfig, WorkloadConfig};
pub use report::{run, JobRow, RunReport, Summary, TimelineSample};
pub use sweep::{sweep, write_sweep, Grid, SweepRow};

//! Simulation grid: configuration, replication loop, aggregation, output
//! and summaries.

pub mod config;
pub mod output;
pub mod report;
pub mod run;

pub use config::{CellSpec, ExperimentPlan, GridConfig};
pub use output::{emit_results, load_results, read_results, write_results};
pub use report::{compare_methods, meets_threshold, outperformance_table, summary_table, Metric, Verdict};
pub use run::{aggregate, run_cell, run_plan, AggregateRecord, CellRun, Outcome, ReplicationRecord, RowKey, Side};

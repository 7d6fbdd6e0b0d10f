//! Replication-study driver: configuration, execution and result files.

pub mod config;
pub mod study;
pub mod summary;

pub use config::{Example, MethodSpec, StudyConfig, TruthSpec};
pub use study::{bundled_hier_data, run_study, study_source, ReplicationRow, StudyOutput, BUNDLED_DATA_SEED};
pub use summary::{format_table, summarize, write_results, MethodSummary, Stat};

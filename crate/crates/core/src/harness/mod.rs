//! Experiment orchestration: configuration files, seeded runs, metrics
//! files, plots and the command implementations behind the CLI.

pub mod commands;
pub mod config;
pub mod metrics;
pub mod plot;
pub mod run;

pub use commands::{
    cmd_evaluate_advisor, cmd_oracle, cmd_pipeline, cmd_plot, cmd_train, exploration_adjusted_mcr,
    EvaluationReport, EvaluationRow, OracleReport, PipelineReport, RunRecord, TrainReport,
};
pub use config::{AdvisorSpec, Command, EnvSpec, ExperimentConfig, LearnerKind, LearnerSpec, CONFIG_FORMAT_VERSION};
pub use metrics::{read_csv, CsvRow, RunMetrics, CSV_HEADER};
pub use plot::emit_plot;
pub use run::{compute_oracle, run_seed, run_seeds, Model, RunPlan, RunResult, Tracking};

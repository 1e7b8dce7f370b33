//! Simulation study, cross-validation and exact oracles.

mod crossval;
mod data;
mod metrics;
pub mod oracle;
mod study;

pub use crossval::{cross_validate, holdout_mae, CvResult, CvRow, CV_CSV_HEADER};
pub use data::{generate_dataset, generate_on, ObsScheme, SimConfig};
pub use metrics::{
    bootstrap_ci, posterior_mean_accuracy, posterior_rmse_t, BootstrapCI, MetricsRecord,
    BOOTSTRAP_LEVEL, BOOTSTRAP_RESAMPLES,
};
pub use oracle::{beta_posterior_grid, exact_posterior_oracle, BetaPosteriorGrid, OracleResult};
pub use study::{run_simulation_study, write_study_csv, StudyRow, STUDY_CSV_HEADER};

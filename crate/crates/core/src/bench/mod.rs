//! Metrics, experiment configuration and the Monte Carlo runner.

mod config;
mod metrics;
mod runner;

pub use config::{
    ChannelConfig, ContaminationConfig, EstimatorConfig, EstimatorKind, EstimatorParams, EstimatorSpec,
    ExperimentConfig, GridConfig, NoiseConfig, OneOrMany, ResolvedEstimator, RunConfig, SeConfig, DEFAULT_TRAINING,
};
pub use metrics::{
    nmse, nmse_grid, noise_suppression_ratio, sinr_and_se, spectral_efficiency, Combiner, SeOutcome, SePrefactor,
};
pub use runner::{
    dce_stream, noise_var_for_snr, run_experiment, run_experiment_with_progress, summarize, trial_grid, ResultRecord,
    SummaryRow,
};

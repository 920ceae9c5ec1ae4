//! Simulation and estimation toolkit for container-based cloud-to-fog
//! offloading: generate five-step save-and-load traces under configurable
//! system and network conditions, assemble the 21-parameter dataset, and
//! train/evaluate collective and per-step offload-time predictors with
//! four regression families.

pub mod catalog;
pub mod config;
pub mod dataset;
pub mod estimators;
pub mod evaluation;
pub mod seeding;
pub mod simulator;

pub use catalog::{
    make_feature_mask, total_offload_time, validate_parameter_vector, FeatureMask, MaskKind,
    NetworkProfile, OffloadTiming, ParameterVector, PlatformSpec, StressProfile,
};
pub use config::ExperimentConfig;
pub use dataset::{aggregate_trace, build_dataset, read_dataset, write_dataset, Dataset};
pub use estimators::{fit_mlr, fit_pmr, fit_rfr, fit_svr, FitParams, Model, ModelKind};
pub use evaluation::{
    accuracy, cross_validate, holdout_evaluate, kfold_split, mae, train_collective,
    train_individual, AccuracyMode, CollectiveEstimator, EvalData, EvalReport,
    IndividualEstimator, Method, OffloadEstimator, TrainOptions,
};
pub use simulator::{
    run_experiment_grid, simulate_offload, step_duration, GridConfig, GroundTruthModel,
    OffloadTrace, StepKind,
};

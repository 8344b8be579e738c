//! Semi-synthetic experiments for learned breaking policies: data ingestion,
//! split protocol, pipeline, baselines, replication and reporting.

pub mod config;
pub mod error;
pub mod experiment;
pub mod results;
pub mod seeds;
pub mod splits;
pub mod stats;
pub mod synthetic;

pub use config::{
    AdaptiveConfig, BehaviorModel, BetaMode, DataSource, ExperimentConfig, PredictorMode, SafetyConfig, Scale, SplitConfig,
};
pub use error::{HarnessError, Result};
pub use experiment::{
    cf_stage, load_dataset, mean_by_policy, CfStage, run_experiment, run_experiment_on, sweep_p1, sweep_p1_on, DEFAULT_P1_GRID,
};
pub use lvbreak_recsys::{load_ratings, RatingsTable};
pub use results::{report, ReportFormat, ResultsTable};
pub use seeds::{rng_for, sub_seed};
pub use splits::{make_splits, SplitPlan, SplitSizes};
pub use synthetic::{generate_ratings, SyntheticConfig};

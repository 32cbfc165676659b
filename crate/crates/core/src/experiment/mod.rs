//! Evaluation protocol: balancing, splitting, repeated runs and metrics.

mod metrics;
mod protocol;
mod runner;

pub use metrics::{evaluate, f1, metrics, ConfusionMatrix, MetricsReport};
pub use protocol::{random_split, undersample, Labeled};
pub use runner::{
    compare_architectures, run_inter, run_intra, Aggregate, ComparisonReport, ExperimentConfig,
    ExperimentReport, Mode, RepetitionRecord, RepetitionSeeds, Stat, TrialId,
};

//! Corpus activity statistics and stratified train/eval/test splitting.

mod split;
mod stats;

pub use split::{balance_report, max_deviation, stratified_split, LabelBalance, Split, SplitAssignment, SplitRatios};
pub use stats::{activity_time, compute_stats, polyphony_histogram, ActivityStats, StatsReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("split ratios {0:?} must be non-negative and sum to 1")]
    InvalidRatios([f64; 3]),
}

//! Tracking metrics, the multi-run protocol and significance ranking.

mod anova;
mod benchmark;
mod metrics;
mod qtable;
mod ranking;
mod tukey;

use thiserror::Error;

pub use anova::{anova_from_summary, anova_oneway, AnovaResult, GroupSummary};
pub use benchmark::{
    benchmark, threads_from_env, AggregateRow, BenchmarkOptions, BenchmarkReport, CellSummary, RunRecord,
    SequenceInput, SequenceReport, THREADS_ENV,
};
pub use metrics::{cle, overlap, run_metrics, RunMetrics, DEFAULT_SUCCESS_THRESHOLD};
pub use qtable::{studentized_range_quantile, SUPPORTED_ALPHA};
pub use ranking::{assign_ranks, Direction, RankTable, RankedGroup};
pub use tukey::{pairwise_significant, tukey_hsd, TukeyResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {results} results vs {ground_truth} ground-truth boxes")]
    LengthMismatch { results: usize, ground_truth: usize },
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group '{label}' has {n} samples, need at least 2")]
    TooFewSamples { label: String, n: usize },
    #[error("invalid summary for '{label}': {reason}")]
    InvalidSummary { label: String, reason: String },
    #[error("alpha {0} is not covered by the studentized-range table (only 0.05)")]
    UnsupportedAlpha(f64),
    #[error("{0} groups exceed the studentized-range table (2..=10)")]
    UnsupportedGroupCount(usize),
    #[error("{0} within-group degrees of freedom is below the table range (>= 2)")]
    UnsupportedDegreesOfFreedom(usize),
    #[error("significance matrix is {got}x{got}, expected {expected}x{expected} and symmetric")]
    BadSignificanceMatrix { got: usize, expected: usize },
    #[error("benchmark needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("benchmark needs at least one tracker and one sequence")]
    EmptyBenchmark,
    #[error("duplicate label '{0}'")]
    DuplicateLabel(String),
    #[error("sequence '{name}': {frames} frames but {ground_truth} ground-truth boxes")]
    SequenceMismatch { name: String, frames: usize, ground_truth: usize },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

//! Offline oracles, composability (α) evaluation, and the timing /
//! regression / extrapolation harness.

mod harness;
mod oracle;
mod regression;
pub mod report;

use thiserror::Error;

pub use harness::{
    evaluate, measure, summarize_bench, Baseline, BenchReport, EvalReport, ExtrapolationRow, Measurement, Phase,
    PhaseFits, ReplacementCount, TimingSample, DEFAULT_K_VALUES, DEFAULT_STREAMS,
};
pub use oracle::{alpha_ratio, exhaustive_max_min, gmm_greedy, Subset, EXHAUSTIVE_MAX_POINTS};
pub use regression::{
    better_fit, extrapolate_total, fit, Basis, Extrapolation, RegressionFit, DEFAULT_REPLACE_FRACTION,
};

use crate::engine::EngineError;
use crate::streams::StreamError;
use crate::vecspace::VectorError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("exhaustive search refuses {n} points (limit {limit}); use the greedy baseline", limit = EXHAUSTIVE_MAX_POINTS)]
    ExhaustiveTooLarge { n: usize },
    #[error("subset size {k} invalid for {n} points")]
    InvalidSubsetSize { k: usize, n: usize },
    #[error("regression needs {required} distinct k values, got {distinct}")]
    SingularDesign { distinct: usize, required: usize },
    #[error("replace fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("k = {k} does not leave room for replacements in a stream of {stream_len}")]
    SizeExceedsStream { k: usize, stream_len: usize },
    #[error("no core-set sizes to measure")]
    NoSizes,
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

//! Vehicle stroke time series: ingestion, resampling, autoregressive
//! modelling, synthesis and prediction.

mod ar;
mod interpolate;
mod trace;

pub use ar::{fit_ar, predict, synthesize, ArModel};
pub use interpolate::{interpolate, interpolate_with, InterpolationKind};
pub use trace::{read_trace_csv, write_trace_csv, StrokeTrace, TraceOrigin, DEFAULT_SANITY_LIMIT_M};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("sample {index} deviates {deviation:.4} m from the trace mean (limit {limit} m)")]
    SanityLimitExceeded {
        index: usize,
        deviation: f64,
        limit: f64,
    },
    #[error("trace too short: need at least {required} samples, got {actual}")]
    TraceTooShort { required: usize, actual: usize },
    #[error("degenerate trace: zero variance")]
    DegenerateTrace,
    #[error("model order must be at least 1")]
    InvalidOrder,
    #[error("coefficient count {coefficients} does not match order {order}")]
    OrderMismatch { order: usize, coefficients: usize },
    #[error("innovation variance must be finite and non-negative, got {0}")]
    InvalidVariance(f64),
    #[error("history too short: need {required} samples, got {actual}")]
    HistoryTooShort { required: usize, actual: usize },
    #[error("autoregressive model is not stationary")]
    UnstableModel,
    #[error("interpolation factor must be at least 1")]
    InvalidFactor,
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error enumeration.
///
/// Numerical routines return structured variants so callers (and the CLI)
/// can distinguish a misconfigured problem from a solver that genuinely
/// failed to meet its tolerances.
#[derive(Debug, Error)]
pub enum Error {
    /// A time argument fell outside the domain's horizon `[0, T]`.
    #[error("time {t} outside horizon [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    /// A constructor or evaluator was handed an inconsistent parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point or coefficient block had the wrong dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An input path starts outside the closed section at its initial time.
    #[error("initial point lies outside the domain closure at t = {t} (distance {distance:.6e})")]
    StartsOutside { t: f64, distance: f64 },

    /// The penalty flow left the admissible region and kept growing.
    #[error(
        "penalty flow unstable at t = {t:.6} (|state| = {magnitude:.3e}, eps = {eps:.3e}); \
         decrease eps or increase the stiffness factor"
    )]
    PenaltyUnstable { t: f64, magnitude: f64, eps: f64 },

    /// Every entry of the continuation schedule failed validation;
    /// the trace carries `(eps, worst boundary residual)` pairs.
    #[error("continuation schedule exhausted without meeting tolerance; trace (eps, residual): {trace:?}")]
    ScheduleExhausted { trace: Vec<(f64, f64)> },

    /// A fixed-point iteration stopped contracting.
    #[error("fixed-point iteration diverged; sup-gap trace: {gaps:?}")]
    IterationDiverged { gaps: Vec<f64> },

    /// An explicit time step exceeded the monotonicity bound.
    #[error("time step {dt:.6e} violates the stability bound; use dt <= {max_dt:.6e}")]
    CflViolation { dt: f64, max_dt: f64 },

    /// The scalar boundary solve could not trap a sign change.
    #[error("boundary solve could not bracket a root in [{lo:.6e}, {hi:.6e}]")]
    BracketFailure { lo: f64, hi: f64 },

    /// Every simulated path was excluded; there is nothing to average.
    #[error("all {paths} paths were excluded; nothing to average")]
    EmptyEnsemble { paths: usize },

    /// A field or kernel was evaluated where it is genuinely undefined
    /// (e.g. the balance point of a smoothed normal deep inside a section).
    #[error("outside the admissible evaluation region: {0}")]
    Region(String),

    /// A combination of options that the toolkit deliberately does not cover.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Malformed external data (CSV import, table layout, …).
    #[error("malformed data: {0}")]
    Parse(String),

    /// Plumbing.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Convenience constructor for `InvalidParameter`.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

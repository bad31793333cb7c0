//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("linewidth must be positive and finite, got {0}")]
    NonPositiveLinewidth(f64),

    #[error("energy splitting must be nonnegative and finite, got {0}")]
    NegativeSplitting(f64),

    #[error("post-selection parameter must be real with |delta| <= 1, got {0}")]
    DeltaOutOfRange(f64),

    #[error("energy grid needs an odd point count >= 3, got {0}")]
    EvenGridPoints(usize),

    #[error("energy grid half-width must be positive and finite, got {0}")]
    NonPositiveHalfWidth(f64),

    #[error("grid center {grid_center} does not match the line center {line_center}")]
    GridOffCenter { grid_center: f64, line_center: f64 },

    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("quadrature spec invalid: {0}")]
    InvalidQuadratureSpec(&'static str),

    #[error("integrand is not finite at x = {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("optimizer bracket invalid: lo = {lo}, hi = {hi}")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("optimizer exceeded {max_iter} iterations without reaching tolerance")]
    OptimizerDidNotConverge { max_iter: usize },

    #[error(
        "degenerate post-selection: success probability {probability} is below the floor {floor}"
    )]
    DegeneratePostselection { probability: f64, floor: f64 },

    #[error("no optimum exists for zero splitting")]
    NoOptimum,

    #[error("noise width is zero; use the pure (noise-free) path instead of the pdf")]
    DegenerateNoise,

    #[error("dephasing cutoff {cutoff} is below the required minimum {required}")]
    CutoffTooSmall { cutoff: f64, required: f64 },

    #[error("paired-tail residual {estimate} exceeds the tolerance {tolerance}")]
    TailResidual { estimate: f64, tolerance: f64 },

    #[error("pump rate {rate} exceeds the lifetime ceiling {ceiling}")]
    PumpRateAboveCeiling { rate: f64, ceiling: f64 },

    #[error("no events fit in the run: rate {rate} x total time {total_time} < 1")]
    NoEvents { rate: f64, total_time: f64 },

    #[error("trial {trial} retained zero events")]
    EmptyTrial { trial: u64 },

    #[error("need at least 2 trials for a spread estimate, got {0}")]
    TooFewTrials(u32),
}

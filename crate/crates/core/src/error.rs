//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Everything that can go wrong while assembling or evaluating a model.
///
/// Configuration problems (grids too coarse, passbands outside the grid,
/// mismatched grids, non-physical parameters) are reported eagerly by
/// constructors and validators so that evaluation code can assume its
/// preconditions hold.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A frequency grid was requested with a non-positive span or too few points.
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    /// Fewer than the minimum number of grid points fall across a requested
    /// spectral feature, so the feature cannot be resolved.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// A filter passband (or other spectral feature) extends beyond the grid.
    #[error("feature outside grid: {0}")]
    OutsideGrid(String),

    /// Two profiles that must share a grid were built on different grids.
    #[error("frequency grids do not match: {0}")]
    GridMismatch(String),

    /// An operation that normalizes by a spectral integral received a profile
    /// with (numerically) zero intensity.
    #[error("profile carries no intensity: {0}")]
    ZeroProfile(String),

    /// A general Jones matrix failed the unitarity check.
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    /// A parameter that must be finite (angle, phase, delay) was NaN or infinite.
    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),

    /// A scalar parameter is outside its allowed range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A least-squares fit did not converge; diagnostics attached.
    #[error("fit did not converge: {0}")]
    FitFailed(String),

    /// CSV or report content could not be parsed back.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure while reading or writing an artifact.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;

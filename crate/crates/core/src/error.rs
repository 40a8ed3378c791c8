//! Error types shared by the library.
//!
//! Every fallible operation returns [`CoreError`]. Variants are grouped so a
//! caller (notably the CLI) can map them onto coarse failure classes:
//! configuration/parameter problems, I/O and file-format problems, and
//! numeric non-convergence.

use crate::coincidence::PeakFit;
use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A parameter failed domain validation (wrong sign, out of range, ...).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `car_ideal` was asked for a zero-width window. The limit is not
    /// evaluated; the caller should use the small-window asymptote
    /// `2*sqrt(ln 2) / (sqrt(pi) * sigma_m * B)` instead.
    #[error(
        "coincidence window tau = 0 has no finite CAR; use the small-window asymptote \
         2*sqrt(ln2)/(sqrt(pi)*sigma_m*B) = {asymptote:.6e}"
    )]
    DegenerateWindow { asymptote: f64 },

    /// `excess_jitter` with total smaller than the base: the quadrature
    /// decomposition would be imaginary.
    #[error("non-physical jitter decomposition: total {total_ps} ps < base {base_ps} ps")]
    JitterDecomposition { total_ps: f64, base_ps: f64 },

    /// Capture-constrained window optimization with an unreachable target
    /// fraction (erf never reaches 1).
    #[error("capture fraction target f_min = {f_min} is unreachable (must be < 1)")]
    CaptureTargetUnreachable { f_min: f64 },

    /// A rate expression evaluated to a zero denominator.
    #[error("zero denominator while evaluating {what}")]
    ZeroDenominator { what: &'static str },

    /// The Franson condition on coherence times is violated.
    #[error("franson condition violated: {0}")]
    FransonCondition(FransonViolation),

    /// Timestamp input that must be sorted ascending is not.
    #[error("timestamps not sorted ascending (first violation at index {index})")]
    UnsortedTimestamps { index: usize },

    /// Histogram construction with inconsistent geometry.
    #[error("invalid histogram geometry: {reason}")]
    HistogramGeometry { reason: String },

    /// Three-peak decomposition on a histogram that does not cover the
    /// required span around the side peaks.
    #[error(
        "histogram range [{min_ps}, {max_ps}) ps does not cover +/-{needed_ps} ps \
         required for three-peak decomposition"
    )]
    RangeNotCovering { min_ps: i64, max_ps: i64, needed_ps: f64 },

    /// Not enough data to run an estimator.
    #[error("insufficient data for {what}: need {needed}, got {got}")]
    InsufficientData { what: &'static str, needed: usize, got: usize },

    /// Iterative fit failed to converge. Carries the moment-based fallback
    /// estimate so the caller can still report something.
    #[error(
        "gaussian fit did not converge after {iterations} iterations \
         (moment fallback: center {} ps, sigma {} ps)", fallback.center_ps, fallback.sigma_ps
    )]
    NonConvergence { iterations: usize, fallback: PeakFit },

    /// A fringe scan with no usable modulation (all counts zero).
    #[error("degenerate fringe scan: all counts are zero")]
    DegenerateScan,

    /// A delay trace does not cover the time span of the stream it should
    /// retime.
    #[error("delay trace covers {covered_s} s but the stream requires {needed_s} s")]
    TraceCoverage { needed_s: f64, covered_s: f64 },

    /// Two delay traces that must share a sampling grid do not.
    #[error("delay traces incompatible: {reason}")]
    TraceMismatch { reason: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A stream or other artifact file violates its format contract.
    #[error("stream format error in `{path}`: {reason}")]
    StreamFormat { path: String, reason: String },

    /// Configuration file could not be parsed or failed validation.
    #[error("configuration error: {reason}")]
    Config { reason: String },
}

impl CoreError {
    /// Wrap a raw I/O error with the path it occurred on, which the standard
    /// library errors do not carry.
    pub fn io_at(path: &std::path::Path, err: std::io::Error) -> CoreError {
        CoreError::Io(std::io::Error::new(err.kind(), format!("{}: {err}", path.display())))
    }
}

/// Which bound of the Franson condition failed.
///
/// The condition requires the interferometer path imbalance to exceed the
/// single-photon coherence time (so single-photon interference cannot occur)
/// while staying strictly below the pump coherence time (so the early/late
/// pair amplitudes stay coherent).
#[derive(Debug, Clone, PartialEq)]
pub enum FransonViolation {
    /// `dT <= photon_coherence`: single-photon interference would survive.
    BelowPhotonCoherence { imbalance_ps: f64, photon_coherence_ps: f64 },
    /// `dT >= pump_coherence`: pair amplitudes would decohere.
    AtOrAbovePumpCoherence { imbalance_ps: f64, pump_coherence_ps: f64 },
}

impl std::fmt::Display for FransonViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FransonViolation::BelowPhotonCoherence { imbalance_ps, photon_coherence_ps } => {
                write!(
                    f,
                    "path imbalance {imbalance_ps} ps must exceed the single-photon \
                     coherence time {photon_coherence_ps} ps"
                )
            }
            FransonViolation::AtOrAbovePumpCoherence { imbalance_ps, pump_coherence_ps } => {
                write!(
                    f,
                    "path imbalance {imbalance_ps} ps must stay below the pump \
                     coherence time {pump_coherence_ps} ps"
                )
            }
        }
    }
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;

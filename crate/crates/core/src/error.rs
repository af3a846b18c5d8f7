//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the library.
///
/// Each variant names the condition that was detected rather than the
/// operation that detected it, so the same variant can be raised from
/// several modules (for example a singular covariance can appear while
/// building a control bound or while sampling a Monte Carlo ensemble).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A spectral quantity was requested for a model without a spectrum.
    #[error("spectrum undefined: {0}")]
    SpectrumUndefined(String),

    /// A correlation or spectral integral did not reach the requested tolerance.
    #[error("integral did not converge: {0}")]
    NonIntegrableCorrelation(String),

    /// A spectral moment needed by a computation diverges.
    #[error("spectral moment of order {order} diverges for this model")]
    DivergentMoment {
        /// Order n of the moment (1/4pi) int S(w) w^(2n) dw.
        order: usize,
    },

    /// A short-time power-law fit failed its quality checks.
    #[error("short-time power-law fit failed: {0}")]
    PoorFit(String),

    /// A matrix is not a valid density matrix.
    #[error("not a density matrix: {0}")]
    NotAState(String),

    /// An iterative linear-algebra routine failed to converge.
    #[error("numerical routine did not converge: {0}")]
    NonConvergent(String),

    /// The signal derivative of an observable vanishes at the working point.
    #[error("observable expectation has zero slope at the working point")]
    ZeroSlope,

    /// A covariance matrix that must be invertible is singular.
    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    /// A covariance matrix that must be positive semidefinite is not.
    #[error("covariance is not positive semidefinite (min eigenvalue {0:e})")]
    CovarianceNotPsd(f64),

    /// A matrix is too ill-conditioned for a reliable solve in `f64`.
    #[error("ill-conditioned matrix (condition number {condition:e})")]
    IllConditioned {
        /// Estimated 2-norm condition number.
        condition: f64,
    },

    /// A compression matrix does not have full row rank.
    #[error("rank-deficient compression: {0}")]
    RankDeficient(String),

    /// An exhaustive enumeration exceeds its configured size cap.
    #[error("enumeration over {size} indices exceeds the cap of {cap}")]
    CombinatorialOverflow {
        /// Requested size.
        size: usize,
        /// Configured maximum.
        cap: usize,
    },

    /// A short-time extrapolation does not settle.
    #[error("extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),

    /// A Monte Carlo request exceeds the sampling budget.
    #[error("sampling budget exceeded: {0}")]
    SamplingBudgetExceeded(String),

    /// A pulse sequence violates its invariants.
    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),

    /// A pulse cannot be analysed by the requested routine.
    #[error("unsupported pulse: {0}")]
    UnsupportedPulse(String),

    /// A state leaves the low-excitation regime of the bosonic approximation.
    #[error("bosonic approximation violated: {0}")]
    HpViolation(String),

    /// Squeezing parameters give a non-positive generator variance.
    #[error("degenerate squeezing: {0}")]
    DegenerateSqueezing(String),

    /// A scaling fit is not well determined by its data.
    #[error("ambiguous scaling fit: {0}")]
    FitAmbiguous(String),

    /// Input data could not be parsed.
    #[error("malformed input: {0}")]
    Parse(String),
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

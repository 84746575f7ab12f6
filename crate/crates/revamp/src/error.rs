use thiserror::Error;

/// Errors surfaced by the estimator library.
///
/// Improper *messages* (negative variance / non-positive precision) are legal
/// values and never errors; these variants fire when a *belief* stops being a
/// proper distribution, when parameters are malformed, or when an exact
/// degeneracy makes an update undefined.
#[derive(Debug, Error)]
pub enum RevampError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("improper belief: {0}")]
    ImproperBelief(String),

    /// The belief marginal precision at `index` cancels the incoming message
    /// precision exactly, so the extrinsic variance is infinite.
    #[error("singular extrinsic at symbol {index}: belief and message precisions cancel exactly")]
    SingularExtrinsic { index: usize },

    #[error("singular rank-one update: zero denominator")]
    SingularUpdate,

    #[error("problem too large to enumerate: {assignments} component assignments exceed the limit of {limit}")]
    TooLarge { assignments: u128, limit: u128 },

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
}

pub type Result<T> = std::result::Result<T, RevampError>;

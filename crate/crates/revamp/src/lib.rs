//! Expectation propagation on linear Gaussian measurement models.
//!
//! The crate implements a sequential message-passing estimator for
//! `y = A x + v` with independent per-symbol Gaussian-mixture priors,
//! together with interchangeable strategies for handling candidate message
//! updates whose precision is non-positive ("negative-variance" messages):
//!
//! * `ideal` — apply every update unconditionally (may block later),
//! * `clip` — reset non-positive precisions to a flat message,
//! * `persistent-strict` / `persistent-relaxed` — freeze the message unless
//!   the current tilted belief is integrable (strict) or the extrinsic
//!   variance is positive (relaxed),
//! * `nonpersistent-strict` / `nonpersistent-relaxed` — accept only when a
//!   one-step look-ahead keeps every tilted belief integrable (strict) or
//!   every extrinsic variance positive (relaxed),
//! * `acrevamp` — constrained moment matching that clamps non-positive
//!   candidate precisions to zero, so message precisions never go negative.
//!
//! Ground-truth references for desk-scale validation live in [`oracle`]: an
//! exact MMSE estimator by mixture-component enumeration and the LMMSE
//! baseline.

pub mod engine;
pub mod error;
pub mod gaussian;
pub mod oracle;
pub mod prior;
pub mod strategy;

pub use engine::{
    compute_belief, compute_extrinsics, extrinsic_leave_one_out, init_state, run, EpRun, EpState,
    EstimateReport, LinearProblem, LookaheadView, RunOptions,
};
pub use error::{Result, RevampError};
pub use gaussian::{
    log_gaussian_pdf, rank_one_downdate, reproduce, CombineSign, Gaussian1D, GaussianND,
    GaussianNatural1D,
};
pub use oracle::{brute_force_mmse, lmmse, OracleEstimate};
pub use prior::{
    is_belief_proper, posterior_moments, quadrature_moments, MixturePrior, PriorMoments,
};
pub use strategy::{
    acrevamp_decide, clipping_decide, ideal_decide, nonpersistent_decide, persistent_decide,
    CandidateUpdate, Decision, StepOutcome, Strategy,
};

//! Decision rules for candidate message updates whose precision may be
//! non-positive.
//!
//! Each rule receives the candidate natural-parameter update for the selected
//! symbol and decides whether the engine applies it as-is, applies a modified
//! message, or leaves the message frozen for this step. The persistent family
//! is consulted *before* tilted moments are computed, so its rule takes only
//! the extrinsic and the prior.

use std::fmt;
use std::str::FromStr;

use crate::engine::LookaheadView;
use crate::error::{Result, RevampError};
use crate::gaussian::Gaussian1D;
use crate::prior::{is_belief_proper, proper_for_tau, MixturePrior};

/// Available strategies, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Apply every candidate unchanged, even with non-positive precision.
    /// Later steps may then fail on non-integrable tilted beliefs; this
    /// baseline exists to expose that blocking behavior.
    Ideal,
    /// Reset non-positive candidate precisions to the flat message (ν=0, ξ=0).
    Clip,
    /// Freeze the message unless the current tilted belief is integrable
    /// (`strict`) or the extrinsic variance is positive (`relaxed`).
    /// No look-ahead: improper messages may persist in the state.
    Persistent { strict: bool },
    /// Tentatively apply the candidate, recompute every extrinsic, and accept
    /// only when all resulting tilted beliefs stay integrable (`strict`) or
    /// all extrinsic variances stay positive (`relaxed`).
    NonPersistent { strict: bool },
    /// Constrained moment matching: accept positive candidate precisions,
    /// otherwise clamp to zero precision with the mean-matching coefficient.
    /// Message precisions never go negative under this rule.
    AcRevamp,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Ideal,
        Strategy::Clip,
        Strategy::Persistent { strict: true },
        Strategy::Persistent { strict: false },
        Strategy::NonPersistent { strict: true },
        Strategy::NonPersistent { strict: false },
        Strategy::AcRevamp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Ideal => "ideal",
            Strategy::Clip => "clip",
            Strategy::Persistent { strict: true } => "persistent-strict",
            Strategy::Persistent { strict: false } => "persistent-relaxed",
            Strategy::NonPersistent { strict: true } => "nonpersistent-strict",
            Strategy::NonPersistent { strict: false } => "nonpersistent-relaxed",
            Strategy::AcRevamp => "acrevamp",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = RevampError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|st| st.name()).collect();
                RevampError::InvalidParameter(format!(
                    "unknown strategy `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Candidate natural-parameter update for symbol `n`, together with the
/// tilted moments and the extrinsic it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateUpdate {
    pub n: usize,
    /// Candidate message precision `ξ̂ = 1/τ_tilted − 1/τ_r`.
    pub xi_hat_p: f64,
    /// Candidate precision-mean `ν̂ = μ_tilted/τ_tilted − μ_r/τ_r`.
    pub nu_hat_p: f64,
    pub tilted_mean: f64,
    pub tilted_var: f64,
    pub extrinsic: Gaussian1D,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Accepted,
    Modified { nu_p: f64, xi_p: f64 },
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub decision: Decision,
    pub reason: String,
}

impl StepOutcome {
    pub fn accepted(reason: impl Into<String>) -> Self {
        Self {
            decision: Decision::Accepted,
            reason: reason.into(),
        }
    }

    pub fn modified(nu_p: f64, xi_p: f64, reason: impl Into<String>) -> Self {
        Self {
            decision: Decision::Modified { nu_p, xi_p },
            reason: reason.into(),
        }
    }

    pub fn rejected(reason: impl Into<String>) -> Self {
        Self {
            decision: Decision::Rejected,
            reason: reason.into(),
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.decision == Decision::Accepted
    }

    pub fn is_rejected(&self) -> bool {
        self.decision == Decision::Rejected
    }

    pub fn is_modified(&self) -> bool {
        matches!(self.decision, Decision::Modified { .. })
    }
}

/// Unconditional acceptance.
pub fn ideal_decide(_candidate: &CandidateUpdate) -> StepOutcome {
    StepOutcome::accepted("candidate applied unconditionally")
}

/// Accept positive candidate precisions; reset anything else to the flat
/// message (ν = 0, ξ = 0). The zero boundary counts as non-positive.
pub fn clipping_decide(candidate: &CandidateUpdate) -> StepOutcome {
    if candidate.xi_hat_p > 0.0 {
        StepOutcome::accepted("candidate precision positive")
    } else {
        StepOutcome::modified(
            0.0,
            0.0,
            "non-positive candidate precision reset to flat message",
        )
    }
}

/// Accept iff the current tilted belief is integrable (`strict`) or the
/// extrinsic variance is positive (`relaxed`); otherwise freeze the message.
/// The strict test is analytic — no integral is ever attempted.
pub fn persistent_decide(
    extrinsic: &Gaussian1D,
    strict: bool,
    prior: &MixturePrior,
) -> StepOutcome {
    if strict {
        if is_belief_proper(prior, extrinsic) {
            StepOutcome::accepted("tilted belief integrable")
        } else {
            StepOutcome::rejected("tilted belief not integrable; message frozen")
        }
    } else if extrinsic.var > 0.0 {
        StepOutcome::accepted("extrinsic variance positive")
    } else {
        StepOutcome::rejected("extrinsic variance non-positive; message frozen")
    }
}

/// One-step look-ahead: tentatively apply the candidate, recompute every
/// extrinsic, and accept only when all resulting tilted beliefs stay
/// integrable (`strict`) or all extrinsic variances stay positive (`relaxed`).
/// The tentative update is discarded either way; the engine re-applies it on
/// acceptance.
pub fn nonpersistent_decide(
    candidate: &CandidateUpdate,
    strict: bool,
    view: &LookaheadView<'_>,
) -> StepOutcome {
    let Some((_mu_dot, tau_dot)) =
        view.tentative_extrinsics(candidate.n, candidate.nu_hat_p, candidate.xi_hat_p)
    else {
        return StepOutcome::rejected("tentative belief precision is not positive definite");
    };
    let priors = view.priors();
    let all_ok = tau_dot.iter().zip(priors).all(|(&tau, prior)| {
        if strict {
            proper_for_tau(prior, tau)
        } else {
            tau > 0.0
        }
    });
    if all_ok {
        StepOutcome::accepted(if strict {
            "all look-ahead tilted beliefs integrable"
        } else {
            "all look-ahead extrinsic variances positive"
        })
    } else {
        StepOutcome::rejected(if strict {
            "a look-ahead tilted belief would not integrate; message frozen"
        } else {
            "a look-ahead extrinsic variance would go non-positive; message frozen"
        })
    }
}

/// Constrained moment matching. Requires a positive extrinsic variance (which
/// the non-negative-precision invariant guarantees inductively); accepts
/// positive candidate precisions and clamps everything else to
/// `ξ = 0, ν = (μ_tilted − μ_r)/τ_r`.
pub fn acrevamp_decide(candidate: &CandidateUpdate) -> Result<StepOutcome> {
    if !(candidate.extrinsic.var > 0.0) {
        return Err(RevampError::InternalInvariant(format!(
            "extrinsic variance {} at symbol {} must be positive when all message precisions are non-negative",
            candidate.extrinsic.var, candidate.n
        )));
    }
    if candidate.xi_hat_p > 0.0 {
        Ok(StepOutcome::accepted("candidate precision positive"))
    } else {
        let nu_p = (candidate.tilted_mean - candidate.extrinsic.mean) / candidate.extrinsic.var;
        Ok(StepOutcome::modified(
            nu_p,
            0.0,
            "non-positive candidate precision clamped to zero with mean-matched coefficient",
        ))
    }
}

/// Constrained projection objective of the clamped branch, evaluated at
/// message precision `xi_p` with the combined mean matched to the tilted
/// mean: `L(ξ_p) = ½ ln τ̌ + τ_tilted/(2 τ̌)` where `τ̌ = τ_r/(1 + ξ_p τ_r)`.
///
/// For candidates with `ξ̂ ≤ 0` this is strictly decreasing as `ξ_p ↓ 0`,
/// which is what justifies the clamp; tests verify that numerically.
pub fn clamped_kld_objective(candidate: &CandidateUpdate, xi_p: f64) -> f64 {
    let tau_r = candidate.extrinsic.var;
    let tau_check = tau_r / (1.0 + xi_p * tau_r);
    0.5 * tau_check.ln() + candidate.tilted_var / (2.0 * tau_check)
}

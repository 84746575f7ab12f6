//! Sequential expectation-propagation engine for `y = A x + v` with
//! independent per-symbol priors.
//!
//! Message state is kept in natural parameters `(ν_p, ξ_p)` for every
//! strategy, so zero and negative precisions are first-class values. The
//! belief at the likelihood factor is maintained incrementally through
//! rank-one covariance updates; extrinsic (cavity) pairs are refreshed from
//! the belief marginals in O(N) after each applied update.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Result, RevampError};
use crate::gaussian::{self, Gaussian1D, GaussianND};
use crate::prior::{posterior_moments, MixturePrior};
use crate::strategy::{
    acrevamp_decide, clipping_decide, ideal_decide, nonpersistent_decide, persistent_decide,
    CandidateUpdate, Decision, StepOutcome, Strategy,
};

/// Linear Gaussian measurement problem `y = A x + v`, `v ~ N(0, σ² I)`, with
/// an independent mixture prior per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProblem {
    a: DMatrix<f64>,
    y: DVector<f64>,
    noise_var: f64,
    priors: Vec<MixturePrior>,
}

impl LinearProblem {
    pub fn new(
        a: DMatrix<f64>,
        y: DVector<f64>,
        noise_var: f64,
        priors: Vec<MixturePrior>,
    ) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        if m == 0 || n == 0 {
            return Err(RevampError::InvalidParameter(
                "measurement matrix must be non-empty".into(),
            ));
        }
        if y.len() != m {
            return Err(RevampError::InvalidParameter(format!(
                "observation length {} does not match {m} measurement rows",
                y.len()
            )));
        }
        if priors.len() != n {
            return Err(RevampError::InvalidParameter(format!(
                "{} priors for {n} symbols",
                priors.len()
            )));
        }
        if !(noise_var > 0.0) || !noise_var.is_finite() {
            return Err(RevampError::InvalidParameter(format!(
                "noise variance must be positive and finite, got {noise_var}"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(RevampError::InvalidParameter(
                "non-finite entries in measurement data".into(),
            ));
        }
        Ok(Self {
            a,
            y,
            noise_var,
            priors,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn priors(&self) -> &[MixturePrior] {
        &self.priors
    }

    pub fn num_measurements(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_symbols(&self) -> usize {
        self.a.ncols()
    }
}

/// Message and belief state of one sequential run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpState {
    /// Precision-mean of each symbol's incoming message.
    pub nu_p: DVector<f64>,
    /// Precision of each symbol's incoming message; zero or negative entries
    /// are legal depending on the active strategy.
    pub xi_p: DVector<f64>,
    /// Belief covariance at the likelihood factor, maintained by rank-one
    /// updates.
    pub belief_cov: DMatrix<f64>,
    /// Belief mean at the likelihood factor.
    pub belief_mean: DVector<f64>,
    /// Extrinsic means, refreshed after each applied update.
    pub mu_r: DVector<f64>,
    /// Extrinsic variances; entries may be negative (improper messages) and
    /// become infinite where belief and message precisions cancel exactly.
    pub tau_r: DVector<f64>,
    /// Completed sweeps.
    pub sweep: usize,
    /// Attempted per-symbol steps, counting frozen ones.
    pub t: usize,
}

impl EpState {
    /// Verifies that the incrementally maintained belief matches a fresh
    /// recompute from `(ν_p, ξ_p)` to relative accuracy `rtol`.
    pub fn check_consistency(&self, problem: &LinearProblem, rtol: f64) -> Result<()> {
        let fresh = compute_belief(problem, &self.nu_p, &self.xi_p)?;
        let dc = (&self.belief_cov - fresh.cov()).norm() / fresh.cov().norm();
        let dm = (&self.belief_mean - fresh.mean()).norm() / fresh.mean().norm().max(1e-300);
        if dc > rtol || dm > rtol {
            return Err(RevampError::InternalInvariant(format!(
                "maintained belief drifted from recompute (cov {dc:.3e}, mean {dm:.3e}, rtol {rtol:.1e})"
            )));
        }
        Ok(())
    }
}

/// Final estimate of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Posterior-mean estimate (belief mean at termination).
    pub x_hat: DVector<f64>,
    /// Belief covariance diagonal at termination.
    pub per_symbol_var: DVector<f64>,
    pub sweeps_run: usize,
    pub converged: bool,
    /// Steps the strategy refused (message frozen).
    pub rejected_updates: usize,
}

/// Iteration controls: sequential round-robin sweeps until the belief mean
/// moves less than `tol` (max-abs) over a full sweep, capped at `max_sweeps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            tol: 1e-8,
        }
    }
}

/// Belief moments at the likelihood factor for message state `(ν_p, ξ_p)`:
/// covariance `(Aᵀ C_v⁻¹ A + Diag(ξ_p))⁻¹` with the matching mean. Fails when
/// the combined precision is not positive definite, which signals a strategy
/// violation.
pub fn compute_belief(
    problem: &LinearProblem,
    nu_p: &DVector<f64>,
    xi_p: &DVector<f64>,
) -> Result<GaussianND> {
    let n = problem.num_symbols();
    if nu_p.len() != n || xi_p.len() != n {
        return Err(RevampError::InvalidParameter(format!(
            "message vectors of length {}/{} for {n} symbols",
            nu_p.len(),
            xi_p.len()
        )));
    }
    let mut prec = problem.a.transpose() * &problem.a / problem.noise_var;
    for i in 0..n {
        prec[(i, i)] += xi_p[i];
    }
    gaussian::symmetrize(&mut prec);
    belief_from_precision(
        prec,
        &(problem.a.transpose() * &problem.y / problem.noise_var + nu_p),
    )
}

fn belief_from_precision(prec: DMatrix<f64>, h: &DVector<f64>) -> Result<GaussianND> {
    let chol = Cholesky::new(prec).ok_or_else(|| {
        RevampError::ImproperBelief("belief precision is not positive definite".into())
    })?;
    let mean = chol.solve(h);
    let mut cov = chol.inverse();
    gaussian::symmetrize(&mut cov);
    GaussianND::new(mean, cov)
}

/// Extrinsic pairs for every symbol from the belief marginals:
/// `τ_r = (1/τ_x̂ − ξ_p)⁻¹`, `μ_r = τ_r (μ_x̂/τ_x̂ − ν_p)`.
///
/// The variances may come out negative — improper extrinsics are reported,
/// not rejected. Fails only if some marginal precision cancels its message
/// precision exactly (infinite extrinsic variance).
pub fn compute_extrinsics(
    belief: &GaussianND,
    nu_p: &DVector<f64>,
    xi_p: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = belief.dim();
    let mut mu_r = DVector::zeros(n);
    let mut tau_r = DVector::zeros(n);
    for i in 0..n {
        let c_ii = belief.cov()[(i, i)];
        let d = 1.0 / c_ii - xi_p[i];
        if d == 0.0 {
            return Err(RevampError::SingularExtrinsic { index: i });
        }
        tau_r[i] = 1.0 / d;
        mu_r[i] = (belief.mean()[i] / c_ii - nu_p[i]) / d;
    }
    Ok((mu_r, tau_r))
}

/// Same arithmetic as [`compute_extrinsics`] but tolerant of exact precision
/// cancellations: those entries come out infinite (or NaN) instead of failing
/// the whole refresh. Used for state bookkeeping and look-aheads.
fn lenient_extrinsics(
    cov: &DMatrix<f64>,
    mean: &DVector<f64>,
    nu_p: &DVector<f64>,
    xi_p: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let n = mean.len();
    let mut mu_r = DVector::zeros(n);
    let mut tau_r = DVector::zeros(n);
    for i in 0..n {
        let c_ii = cov[(i, i)];
        let d = 1.0 / c_ii - xi_p[i];
        tau_r[i] = 1.0 / d;
        mu_r[i] = (mean[i] / c_ii - nu_p[i]) / d;
    }
    (mu_r, tau_r)
}

/// Extrinsic of symbol `n` computed through the leave-one-out system instead
/// of the full belief marginal.
///
/// With every other message precision positive this uses the moment form via
/// the M×M observation-space covariance `C_v + A_ñ C_p_ñ A_ñᵀ`; otherwise it
/// falls back to the natural form — the belief of the system with message `n`
/// zeroed out — whose precision must then be positive definite.
pub fn extrinsic_leave_one_out(
    problem: &LinearProblem,
    nu_p: &DVector<f64>,
    xi_p: &DVector<f64>,
    n: usize,
) -> Result<Gaussian1D> {
    let num = problem.num_symbols();
    if n >= num || nu_p.len() != num || xi_p.len() != num {
        return Err(RevampError::InvalidParameter(format!(
            "leave-one-out index {n} with message vectors {}/{} for {num} symbols",
            nu_p.len(),
            xi_p.len()
        )));
    }
    let others_positive = (0..num).filter(|&j| j != n).all(|j| xi_p[j] > 0.0);
    if others_positive {
        let m = problem.num_measurements();
        let mut b = DMatrix::<f64>::identity(m, m) * problem.noise_var;
        let mut shifted = problem.y.clone();
        for j in 0..num {
            if j == n {
                continue;
            }
            let tau_j = 1.0 / xi_p[j];
            let mu_j = nu_p[j] / xi_p[j];
            let col = problem.a.column(j);
            b.ger(tau_j, &col, &col, 1.0);
            shifted -= mu_j * col;
        }
        gaussian::symmetrize(&mut b);
        let chol = Cholesky::new(b).ok_or_else(|| {
            RevampError::InternalInvariant(
                "leave-one-out observation covariance must be positive definite".into(),
            )
        })?;
        let a_n = problem.a.column(n).clone_owned();
        let w = chol.solve(&a_n);
        let prec = a_n.dot(&w);
        if prec == 0.0 {
            return Err(RevampError::SingularExtrinsic { index: n });
        }
        let tau = 1.0 / prec;
        Gaussian1D::new(tau * w.dot(&shifted), tau)
    } else {
        let mut nu0 = nu_p.clone();
        let mut xi0 = xi_p.clone();
        nu0[n] = 0.0;
        xi0[n] = 0.0;
        let belief = compute_belief(problem, &nu0, &xi0)?;
        belief.marginal(n)
    }
}

/// One problem instance prepared for sequential runs; caches `Aᵀ C_v⁻¹ A`
/// and `Aᵀ C_v⁻¹ y`.
pub struct EpRun<'a> {
    problem: &'a LinearProblem,
    gram: DMatrix<f64>,
    obs_info: DVector<f64>,
}

impl<'a> EpRun<'a> {
    pub fn new(problem: &'a LinearProblem) -> Self {
        let at = problem.a.transpose();
        let mut gram = &at * &problem.a / problem.noise_var;
        gaussian::symmetrize(&mut gram);
        let obs_info = &at * &problem.y / problem.noise_var;
        Self {
            problem,
            gram,
            obs_info,
        }
    }

    pub fn problem(&self) -> &'a LinearProblem {
        self.problem
    }

    /// Initial state: every message carries its prior's marginal moments, so
    /// all precisions start positive.
    pub fn init_state(&self) -> Result<EpState> {
        let n = self.problem.num_symbols();
        let mut nu_p = DVector::zeros(n);
        let mut xi_p = DVector::zeros(n);
        for j in 0..n {
            let pm = self.problem.priors[j].prior_moments();
            if !(pm.var > 0.0) || !pm.var.is_finite() {
                return Err(RevampError::InvalidParameter(format!(
                    "prior for symbol {j} has non-positive marginal variance {}",
                    pm.var
                )));
            }
            xi_p[j] = 1.0 / pm.var;
            nu_p[j] = pm.mean * xi_p[j];
        }
        let belief = self.belief(&nu_p, &xi_p)?;
        let (mean, cov) = belief.into_parts();
        let (mu_r, tau_r) = lenient_extrinsics(&cov, &mean, &nu_p, &xi_p);
        Ok(EpState {
            nu_p,
            xi_p,
            belief_cov: cov,
            belief_mean: mean,
            mu_r,
            tau_r,
            sweep: 0,
            t: 0,
        })
    }

    fn belief(&self, nu_p: &DVector<f64>, xi_p: &DVector<f64>) -> Result<GaussianND> {
        let mut prec = self.gram.clone();
        for i in 0..xi_p.len() {
            prec[(i, i)] += xi_p[i];
        }
        belief_from_precision(prec, &(&self.obs_info + nu_p))
    }

    /// Strict extrinsic of symbol `n` from the current belief marginal.
    pub fn extrinsic_at(&self, state: &EpState, n: usize) -> Result<Gaussian1D> {
        let c_nn = state.belief_cov[(n, n)];
        let d = 1.0 / c_nn - state.xi_p[n];
        if d == 0.0 {
            return Err(RevampError::SingularExtrinsic { index: n });
        }
        Gaussian1D::new((state.belief_mean[n] / c_nn - state.nu_p[n]) / d, 1.0 / d)
    }

    /// Candidate natural-parameter update for symbol `n` from its current
    /// extrinsic and the tilted moments it induces.
    pub fn candidate(&self, state: &EpState, n: usize) -> Result<CandidateUpdate> {
        let extrinsic = self.extrinsic_at(state, n)?;
        self.candidate_from(n, extrinsic)
    }

    fn candidate_from(&self, n: usize, extrinsic: Gaussian1D) -> Result<CandidateUpdate> {
        let tilted = posterior_moments(&self.problem.priors[n], &extrinsic)?;
        Ok(CandidateUpdate {
            n,
            xi_hat_p: 1.0 / tilted.var - 1.0 / extrinsic.var,
            nu_hat_p: tilted.mean / tilted.var - extrinsic.mean / extrinsic.var,
            tilted_mean: tilted.mean,
            tilted_var: tilted.var,
            extrinsic,
        })
    }

    /// Applies message `(ν, ξ)` at symbol `n`: rank-one covariance update
    /// with denominator `1/Δξ + τ_x̂_n`, fresh mean, refreshed extrinsics.
    pub fn apply(&self, state: &mut EpState, n: usize, nu_new: f64, xi_new: f64) -> Result<()> {
        let delta_xi = xi_new - state.xi_p[n];
        if delta_xi != 0.0 {
            let denom = delta_xi.recip() + state.belief_cov[(n, n)];
            state.belief_cov = gaussian::rank_one_downdate(&state.belief_cov, n, denom)?;
        }
        state.nu_p[n] = nu_new;
        state.xi_p[n] = xi_new;
        state.belief_mean = &state.belief_cov * (&self.obs_info + &state.nu_p);
        let (mu_r, tau_r) = lenient_extrinsics(
            &state.belief_cov,
            &state.belief_mean,
            &state.nu_p,
            &state.xi_p,
        );
        state.mu_r = mu_r;
        state.tau_r = tau_r;
        Ok(())
    }

    /// Read-only view for tentative one-step look-aheads.
    pub fn lookahead_view<'s>(&'s self, state: &'s EpState) -> LookaheadView<'s> {
        LookaheadView { run: self, state }
    }

    /// One sequential update attempt at symbol `n` under `strategy`.
    ///
    /// An exact extrinsic precision cancellation skips the step with a logged
    /// rejection. Persistent strategies are consulted before tilted moments
    /// are evaluated; a non-integrable tilted belief is a hard error — the
    /// expected blocking failure under `ideal`, an invariant violation under
    /// every other strategy.
    pub fn step(&self, state: &mut EpState, n: usize, strategy: Strategy) -> Result<StepOutcome> {
        state.t += 1;
        let extrinsic = match self.extrinsic_at(state, n) {
            Ok(e) => e,
            Err(RevampError::SingularExtrinsic { .. }) => {
                return Ok(StepOutcome::rejected(
                    "extrinsic precision cancels exactly; step skipped",
                ))
            }
            Err(other) => return Err(other),
        };

        if let Strategy::Persistent { strict } = strategy {
            let outcome = persistent_decide(&extrinsic, strict, &self.problem.priors[n]);
            if outcome.is_rejected() {
                return Ok(outcome);
            }
        }

        let candidate = match self.candidate_from(n, extrinsic) {
            Ok(c) => c,
            Err(err @ RevampError::ImproperBelief(_)) => {
                return Err(if strategy == Strategy::Ideal {
                    err
                } else {
                    RevampError::InternalInvariant(format!(
                        "strategy {strategy} promised a proper tilted belief at symbol {n}: {err}"
                    ))
                });
            }
            Err(other) => return Err(other),
        };

        let outcome = match strategy {
            Strategy::Ideal => ideal_decide(&candidate),
            Strategy::Clip => clipping_decide(&candidate),
            Strategy::Persistent { strict } => {
                persistent_decide(&candidate.extrinsic, strict, &self.problem.priors[n])
            }
            Strategy::NonPersistent { strict } => {
                nonpersistent_decide(&candidate, strict, &self.lookahead_view(state))
            }
            Strategy::AcRevamp => acrevamp_decide(&candidate)?,
        };

        match outcome.decision {
            Decision::Accepted => self.apply(state, n, candidate.nu_hat_p, candidate.xi_hat_p)?,
            Decision::Modified { nu_p, xi_p } => self.apply(state, n, nu_p, xi_p)?,
            Decision::Rejected => {}
        }
        Ok(outcome)
    }

    /// Round-robin sweeps until the belief mean settles or `max_sweeps` is
    /// reached. Non-convergence is reported, not an error.
    pub fn run(&self, strategy: Strategy, opts: &RunOptions) -> Result<EstimateReport> {
        let n = self.problem.num_symbols();
        let mut state = self.init_state()?;
        let mut rejected = 0usize;
        let mut converged = false;
        for sweep in 1..=opts.max_sweeps {
            let before = state.belief_mean.clone();
            for idx in 0..n {
                if self.step(&mut state, idx, strategy)?.is_rejected() {
                    rejected += 1;
                }
            }
            state.sweep = sweep;
            if (&state.belief_mean - &before).amax() < opts.tol {
                converged = true;
                break;
            }
        }
        Ok(EstimateReport {
            x_hat: state.belief_mean.clone(),
            per_symbol_var: state.belief_cov.diagonal(),
            sweeps_run: state.sweep,
            converged,
            rejected_updates: rejected,
        })
    }
}

/// Borrowed engine state for tentative one-step look-aheads.
pub struct LookaheadView<'a> {
    run: &'a EpRun<'a>,
    state: &'a EpState,
}

impl LookaheadView<'_> {
    pub fn priors(&self) -> &[MixturePrior] {
        self.run.problem.priors()
    }

    /// Applies `(ν, ξ)` at symbol `n` to a scratch copy of the belief and
    /// returns the extrinsic pairs it would induce, or `None` when the
    /// tentative precision is no longer positive definite.
    pub fn tentative_extrinsics(
        &self,
        n: usize,
        nu_new: f64,
        xi_new: f64,
    ) -> Option<(DVector<f64>, DVector<f64>)> {
        let s = self.state;
        let delta_xi = xi_new - s.xi_p[n];
        let c_nn = s.belief_cov[(n, n)];
        // Rank-one precision bump keeps the belief PD iff 1 + Δξ τ_x̂_n > 0.
        if !(1.0 + delta_xi * c_nn > 0.0) {
            return None;
        }
        let cov = if delta_xi == 0.0 {
            s.belief_cov.clone()
        } else {
            gaussian::rank_one_downdate(&s.belief_cov, n, delta_xi.recip() + c_nn).ok()?
        };
        let mut nu = s.nu_p.clone();
        let mut xi = s.xi_p.clone();
        nu[n] = nu_new;
        xi[n] = xi_new;
        let mean = &cov * (&self.run.obs_info + &nu);
        Some(lenient_extrinsics(&cov, &mean, &nu, &xi))
    }
}

/// Initial state for `problem` (see [`EpRun::init_state`]).
pub fn init_state(problem: &LinearProblem) -> Result<EpState> {
    EpRun::new(problem).init_state()
}

/// Full sequential run over `problem` (see [`EpRun::run`]).
pub fn run(
    problem: &LinearProblem,
    strategy: Strategy,
    opts: &RunOptions,
) -> Result<EstimateReport> {
    EpRun::new(problem).run(strategy, opts)
}

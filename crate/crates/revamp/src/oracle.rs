//! Ground-truth estimators for desk-scale validation: exact MMSE by
//! mixture-component enumeration and the LMMSE baseline.
//!
//! These paths share only the Gaussian fusion primitive with the engine,
//! nothing else, so they can serve as independent references.

use nalgebra::{DMatrix, DVector};

use crate::engine::LinearProblem;
use crate::error::{Result, RevampError};
use crate::gaussian::{self, reproduce, GaussianND};

/// Hard cap on enumerable component assignments.
pub const MAX_ASSIGNMENTS: u128 = 1 << 20;

/// Reference posterior estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Marginal log-likelihood `log p(y)` of the model the estimate is exact
    /// for (the full mixture model for the enumeration oracle, the
    /// Gaussianized model for LMMSE).
    pub log_evidence: f64,
}

/// Exact MMSE posterior by enumerating every mixture-component assignment.
///
/// Each assignment yields a jointly Gaussian model whose posterior and
/// evidence come from the fusion primitive; assignments are combined with
/// evidence weights accumulated in log space (the evidence spread across
/// assignments far exceeds the linear double range).
pub fn brute_force_mmse(problem: &LinearProblem) -> Result<OracleEstimate> {
    let n = problem.num_symbols();
    let mut total: u128 = 1;
    for prior in problem.priors() {
        total = total.saturating_mul(prior.num_components() as u128);
    }
    if total > MAX_ASSIGNMENTS {
        return Err(RevampError::TooLarge {
            assignments: total,
            limit: MAX_ASSIGNMENTS,
        });
    }

    let m = problem.num_measurements();
    let obs_cov = DMatrix::<f64>::identity(m, m) * problem.noise_var();

    // Streaming log-sum-exp accumulation over assignments.
    let mut max_lw = f64::NEG_INFINITY;
    let mut z = 0.0f64;
    let mut m1 = DVector::<f64>::zeros(n);
    let mut m2 = DMatrix::<f64>::zeros(n, n);

    let mut digits = vec![0usize; n];
    loop {
        let mut log_weight = 0.0;
        let mut mean = DVector::<f64>::zeros(n);
        let mut cov = DMatrix::<f64>::zeros(n, n);
        for (j, &k) in digits.iter().enumerate() {
            let prior = &problem.priors()[j];
            log_weight += prior.weights()[k].ln();
            mean[j] = prior.means()[k];
            cov[(j, j)] = prior.vars()[k];
        }
        if log_weight > f64::NEG_INFINITY {
            let assignment_prior = GaussianND::new(mean, cov)?;
            let (log_ev, post) = reproduce(&assignment_prior, problem.a(), problem.y(), &obs_cov)?;
            let lw = log_weight + log_ev;
            if lw > max_lw {
                let scale = (max_lw - lw).exp();
                z *= scale;
                m1 *= scale;
                m2 *= scale;
                max_lw = lw;
            }
            let r = (lw - max_lw).exp();
            let (pm, pc) = post.into_parts();
            z += r;
            m2 += r * (&pc + &pm * pm.transpose());
            m1 += r * pm;
        }

        // Mixed-radix increment over component indices.
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            digits[pos] += 1;
            if digits[pos] < problem.priors()[pos].num_components() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }

    let mean = &m1 / z;
    let mut cov = &m2 / z - &mean * mean.transpose();
    gaussian::symmetrize(&mut cov);
    Ok(OracleEstimate {
        mean,
        cov,
        log_evidence: max_lw + z.ln(),
    })
}

/// LMMSE baseline: every prior replaced by a Gaussian with its marginal
/// moments, solved in one fusion step.
pub fn lmmse(problem: &LinearProblem) -> Result<OracleEstimate> {
    let n = problem.num_symbols();
    let mut mean = DVector::<f64>::zeros(n);
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for (j, prior) in problem.priors().iter().enumerate() {
        let pm = prior.prior_moments();
        mean[j] = pm.mean;
        cov[(j, j)] = pm.var;
    }
    let m = problem.num_measurements();
    let obs_cov = DMatrix::<f64>::identity(m, m) * problem.noise_var();
    let (log_evidence, post) = reproduce(
        &GaussianND::new(mean, cov)?,
        problem.a(),
        problem.y(),
        &obs_cov,
    )?;
    let (mean, cov) = post.into_parts();
    Ok(OracleEstimate {
        mean,
        cov,
        log_evidence,
    })
}

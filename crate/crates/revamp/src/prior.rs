//! Per-symbol prior models: Gaussian mixtures, their exact moments under a
//! scalar Gaussian pseudo-observation, properness checks, and a numerical
//! quadrature fallback.
//!
//! The pseudo-observation is the unnormalized kernel
//! `exp(-(x - μ_r)² / (2 τ_r))` and may carry a negative variance `τ_r`; the
//! tilted product is still integrable whenever every combined component
//! precision `1/s_k + 1/τ_r` stays positive.

use crate::error::{Result, RevampError};
use crate::gaussian::{Gaussian1D, LN_2PI};

/// Gaussian-mixture prior for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePrior {
    weights: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
}

/// Marginal mean and variance of a mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorMoments {
    pub mean: f64,
    pub var: f64,
}

impl MixturePrior {
    const WEIGHT_SUM_TOL: f64 = 1e-12;

    pub fn new(weights: Vec<f64>, means: Vec<f64>, vars: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || vars.len() != k {
            return Err(RevampError::InvalidParameter(format!(
                "mixture component lists must be non-empty and equally long (got {k}, {}, {})",
                means.len(),
                vars.len()
            )));
        }
        for (i, ((&w, &m), &s)) in weights.iter().zip(&means).zip(&vars).enumerate() {
            if !w.is_finite() || !m.is_finite() || !s.is_finite() {
                return Err(RevampError::InvalidParameter(format!(
                    "non-finite mixture component {i}"
                )));
            }
            if w < 0.0 {
                return Err(RevampError::InvalidParameter(format!(
                    "negative mixture weight {w} at component {i}"
                )));
            }
            if s <= 0.0 {
                return Err(RevampError::InvalidParameter(format!(
                    "non-positive component variance {s} at component {i}"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::WEIGHT_SUM_TOL {
            return Err(RevampError::InvalidParameter(format!(
                "mixture weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            weights,
            means,
            vars,
        })
    }

    /// Single-component prior.
    pub fn single(mean: f64, var: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![var])
    }

    /// Equal-weight components at ±1 with variance 0.01 — the
    /// Gaussian-mixture stand-in for a binary antipodal symbol.
    pub fn bpsk() -> Self {
        Self::new(vec![0.5, 0.5], vec![-1.0, 1.0], vec![0.01, 0.01])
            .expect("fixed mixture is valid")
    }

    /// Exponentially decaying two-component prior for zero-based symbol
    /// index `n`: components at `±3.2⁻ⁿ` with variance `0.1 · 3.2⁻²ⁿ`.
    pub fn sparse_symbol(n: usize) -> Self {
        let amp = 3.2f64.powi(-(n as i32));
        let var = 0.1 * amp * amp;
        Self::new(vec![0.5, 0.5], vec![-amp, amp], vec![var, var]).expect("fixed mixture is valid")
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn vars(&self) -> &[f64] {
        &self.vars
    }

    pub fn max_var(&self) -> f64 {
        self.vars.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Marginal mean and variance of the mixture itself.
    pub fn prior_moments(&self) -> PriorMoments {
        let mean: f64 = self
            .weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum();
        let second = self.second_moment();
        PriorMoments {
            mean,
            var: second - mean * mean,
        }
    }

    /// Marginal second moment `E[x²]`.
    pub fn second_moment(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.vars)
            .map(|((w, m), s)| w * (s + m * m))
            .sum()
    }
}

/// Exact integrability of `prior(x) · exp(-(x-μ_r)²/(2 τ_r))`.
pub fn is_belief_proper(prior: &MixturePrior, pseudo_obs: &Gaussian1D) -> bool {
    proper_for_tau(prior, pseudo_obs.var)
}

/// Integrability decided from the pseudo-observation variance alone: every
/// combined component precision `1/s_k + 1/τ_r` must be strictly positive.
/// Accepts infinite `τ_r` (a flat message tilts nothing).
pub(crate) fn proper_for_tau(prior: &MixturePrior, tau_r: f64) -> bool {
    if tau_r.is_nan() || tau_r == 0.0 {
        return false;
    }
    prior.vars.iter().all(|&s| 1.0 / s + 1.0 / tau_r > 0.0)
}

/// Mean and variance of the tilted distribution
/// `prior(x) · exp(-(x-μ_r)²/(2 τ_r))`, in closed form.
///
/// Per component the conjugate update gives precision `1/s_k + 1/τ_r`;
/// responsibilities come from the per-component marginal mass of the product,
/// evaluated in log space so that negative `τ_r` (where `s_k + τ_r` may be
/// negative while the product is still proper) never takes a square root of
/// a negative number.
pub fn posterior_moments(prior: &MixturePrior, pseudo_obs: &Gaussian1D) -> Result<Gaussian1D> {
    let (mu_r, tau_r) = (pseudo_obs.mean, pseudo_obs.var);
    if !proper_for_tau(prior, tau_r) {
        return Err(improper(prior, tau_r));
    }
    let k = prior.num_components();
    let mut log_mass = vec![0.0f64; k];
    let mut comp_mean = vec![0.0f64; k];
    let mut comp_var = vec![0.0f64; k];
    for i in 0..k {
        let (w, m, s) = (prior.weights[i], prior.means[i], prior.vars[i]);
        let q = 1.0 / s + 1.0 / tau_r;
        comp_var[i] = 1.0 / q;
        comp_mean[i] = (m / s + mu_r / tau_r) / q;
        // Marginal mass of w · N(x|m,s) · kernel, up to a component-independent
        // factor: s·q > 0 whenever the product is proper, and the exponent
        // keeps the sign of s + τ_r.
        log_mass[i] = w.ln() - 0.5 * (s * q).ln() - 0.5 * (mu_r - m).powi(2) / (s + tau_r);
    }
    let max = log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm: f64 = log_mass.iter().map(|lw| (lw - max).exp()).sum();
    let mut mean = 0.0;
    let mut second = 0.0;
    for i in 0..k {
        let r = (log_mass[i] - max).exp() / norm;
        mean += r * comp_mean[i];
        second += r * (comp_var[i] + comp_mean[i] * comp_mean[i]);
    }
    Gaussian1D::new(mean, second - mean * mean)
}

/// Numerically integrated mean and variance of the same tilted distribution.
///
/// Composite Simpson quadrature on uniform grids spanning ±8 effective
/// standard deviations of every component-product, refined until mean and
/// variance settle. The integrand is evaluated through its log-density and
/// shares no code with [`posterior_moments`], so the two paths can
/// cross-validate each other.
pub fn quadrature_moments(prior: &MixturePrior, pseudo_obs: &Gaussian1D) -> Result<Gaussian1D> {
    let (mu_r, tau_r) = (pseudo_obs.mean, pseudo_obs.var);
    if !proper_for_tau(prior, tau_r) {
        return Err(improper(prior, tau_r));
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..prior.num_components() {
        let (m, s) = (prior.means[i], prior.vars[i]);
        let q = 1.0 / s + 1.0 / tau_r;
        let center = (m / s + mu_r / tau_r) / q;
        let sd = q.recip().sqrt();
        lo = lo.min(center - 8.0 * sd);
        hi = hi.max(center + 8.0 * sd);
    }

    let log_f = |x: f64| -> f64 {
        // log prior density via log-sum-exp over components, plus the kernel.
        let mut best = f64::NEG_INFINITY;
        let mut terms = [0.0f64; 16];
        let k = prior.num_components();
        debug_assert!(k <= 16, "quadrature supports up to 16 components");
        for (term, ((&w, &m), &s)) in terms[..k]
            .iter_mut()
            .zip(prior.weights.iter().zip(&prior.means).zip(&prior.vars))
        {
            *term = w.ln() - 0.5 * (LN_2PI + s.ln()) - 0.5 * (x - m) * (x - m) / s;
            best = best.max(*term);
        }
        let sum: f64 = terms[..k].iter().map(|t| (t - best).exp()).sum();
        best + sum.ln() - 0.5 * (x - mu_r) * (x - mu_r) / tau_r
    };

    let mut prev: Option<(f64, f64)> = None;
    let mut points = 513;
    loop {
        let (mean, var) = simpson_moments(lo, hi, points, &log_f);
        if let Some((pm, pv)) = prev {
            let mean_ok = (mean - pm).abs() <= 1e-10 * (1.0 + mean.abs());
            let var_ok = (var - pv).abs() <= 1e-10 * var.abs().max(1e-300);
            if mean_ok && var_ok {
                return Gaussian1D::new(mean, var);
            }
        }
        prev = Some((mean, var));
        if points >= 131_073 {
            return Gaussian1D::new(mean, var);
        }
        points = 2 * points - 1;
    }
}

/// Simpson moments of `exp(log_f)` on `[lo, hi]` with an odd point count.
/// The common scale and step factors cancel in the moment ratios.
fn simpson_moments(lo: f64, hi: f64, points: usize, log_f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let h = (hi - lo) / (points - 1) as f64;
    let mut logs = Vec::with_capacity(points);
    let mut max = f64::NEG_INFINITY;
    for i in 0..points {
        let lf = log_f(lo + h * i as f64);
        max = max.max(lf);
        logs.push(lf);
    }
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (i, lf) in logs.iter().enumerate() {
        let x = lo + h * i as f64;
        let w = if i == 0 || i == points - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = w * (lf - max).exp();
        s0 += f;
        s1 += f * x;
        s2 += f * x * x;
    }
    let mean = s1 / s0;
    (mean, s2 / s0 - mean * mean)
}

fn improper(prior: &MixturePrior, tau_r: f64) -> RevampError {
    RevampError::ImproperBelief(format!(
        "tilted belief does not integrate: pseudo-observation variance {tau_r} \
         against component variances up to {}",
        prior.max_var()
    ))
}

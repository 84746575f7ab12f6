//! Scalar and small dense-matrix Gaussian algebra.
//!
//! Moment-form pairs carry `(mean, var)` and reject zero variance; infinite
//! variance is representable only as zero precision in natural form. Negative
//! variances and precisions are legal message values throughout — only
//! beliefs are required to be proper.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, RevampError};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Moment-form scalar Gaussian parameters.
///
/// `var < 0` parameterizes an improper message kernel
/// `exp(-(x - mean)² / (2 var))` rather than a distribution; beliefs require
/// `var > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    pub mean: f64,
    pub var: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, var: f64) -> Result<Self> {
        if !mean.is_finite() || !var.is_finite() {
            return Err(RevampError::InvalidParameter(format!(
                "non-finite gaussian moments (mean={mean}, var={var})"
            )));
        }
        if var == 0.0 {
            return Err(RevampError::InvalidParameter(
                "zero variance has no moment-form representation".into(),
            ));
        }
        Ok(Self { mean, var })
    }

    /// Whether this pair is a proper distribution (usable as a belief).
    pub fn is_proper(&self) -> bool {
        self.var > 0.0
    }

    /// Natural-parameter view `(ν, ξ) = (mean/var, 1/var)`.
    pub fn to_natural(&self) -> Result<GaussianNatural1D> {
        if self.var == 0.0 {
            return Err(RevampError::InvalidParameter(
                "zero variance cannot be converted to natural parameters".into(),
            ));
        }
        Ok(GaussianNatural1D {
            nu: self.mean / self.var,
            xi: 1.0 / self.var,
        })
    }
}

/// Natural-form scalar Gaussian parameters: precision-mean `ν = μ/τ` and
/// precision `ξ = 1/τ`.
///
/// `ξ = 0` encodes infinite variance (the flat message) and `ξ < 0` an
/// improper message; both are legal values here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianNatural1D {
    pub nu: f64,
    pub xi: f64,
}

/// Whether [`GaussianNatural1D::combine`] multiplies or divides kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineSign {
    Product,
    Quotient,
}

impl GaussianNatural1D {
    pub fn new(nu: f64, xi: f64) -> Result<Self> {
        if !nu.is_finite() || !xi.is_finite() {
            return Err(RevampError::InvalidParameter(format!(
                "non-finite natural parameters (nu={nu}, xi={xi})"
            )));
        }
        Ok(Self { nu, xi })
    }

    /// The flat (zero-precision) message.
    pub const fn flat() -> Self {
        Self { nu: 0.0, xi: 0.0 }
    }

    /// Kernel product adds natural parameters, quotient subtracts them.
    /// The result may have non-positive precision; that is a legal message.
    pub fn combine(&self, other: &Self, sign: CombineSign) -> Self {
        match sign {
            CombineSign::Product => Self {
                nu: self.nu + other.nu,
                xi: self.xi + other.xi,
            },
            CombineSign::Quotient => Self {
                nu: self.nu - other.nu,
                xi: self.xi - other.xi,
            },
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        self.combine(other, CombineSign::Product)
    }

    pub fn quotient(&self, other: &Self) -> Self {
        self.combine(other, CombineSign::Quotient)
    }

    /// Moment-form view; fails at `ξ = 0` (infinite variance).
    pub fn to_moments(&self) -> Result<Gaussian1D> {
        if self.xi == 0.0 {
            return Err(RevampError::InvalidParameter(
                "zero precision has no moment-form representation".into(),
            ));
        }
        Ok(Gaussian1D {
            mean: self.nu / self.xi,
            var: 1.0 / self.xi,
        })
    }
}

/// Dense multivariate Gaussian moments.
///
/// The covariance is validated to be symmetric on construction; positive
/// definiteness is required only of beliefs and is checked where beliefs are
/// formed.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianND {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianND {
    /// Relative symmetry tolerance for covariance inputs.
    const SYM_RTOL: f64 = 1e-12;

    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(RevampError::InvalidParameter(format!(
                "covariance shape {}x{} does not match mean length {n}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) || cov.iter().any(|v| !v.is_finite()) {
            return Err(RevampError::InvalidParameter(
                "non-finite entries in gaussian moments".into(),
            ));
        }
        let scale = cov.amax();
        for i in 0..n {
            for j in (i + 1)..n {
                if (cov[(i, j)] - cov[(j, i)]).abs() > Self::SYM_RTOL * scale {
                    return Err(RevampError::InvalidParameter(format!(
                        "covariance is not symmetric at ({i}, {j}): {} vs {}",
                        cov[(i, j)],
                        cov[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.mean, self.cov)
    }

    /// Marginal moment pair of coordinate `n`.
    pub fn marginal(&self, n: usize) -> Result<Gaussian1D> {
        Gaussian1D::new(self.mean[n], self.cov[(n, n)])
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.cov.clone()).is_some()
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_cov_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.cov)
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Symmetrizes a square matrix in place as `(C + Cᵀ)/2`.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `log N(x | mean, cov)` for positive definite `cov`.
pub fn log_gaussian_pdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(cov.clone()).ok_or_else(|| {
        RevampError::InvalidParameter(
            "covariance in density evaluation is not positive definite".into(),
        )
    })?;
    let half_log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum();
    let resid = x - mean;
    let solved = chol.solve(&resid);
    Ok(-0.5 * (x.len() as f64) * LN_2PI - half_log_det - 0.5 * resid.dot(&solved))
}

/// Fuses a Gaussian prior over `x` with a Gaussian observation of `A x`.
///
/// Returns the observation log-evidence `log N(obs_mean | A μ₁, A C₁ Aᵀ + C₂)`
/// and the posterior with covariance `(C₁⁻¹ + Aᵀ C₂⁻¹ A)⁻¹` and matching
/// mean. Both input covariances must be positive definite.
pub fn reproduce(
    prior: &GaussianND,
    a: &DMatrix<f64>,
    obs_mean: &DVector<f64>,
    obs_cov: &DMatrix<f64>,
) -> Result<(f64, GaussianND)> {
    let (m, n) = (a.nrows(), a.ncols());
    if prior.dim() != n || obs_mean.len() != m || obs_cov.nrows() != m || obs_cov.ncols() != m {
        return Err(RevampError::InvalidParameter(format!(
            "inconsistent dimensions: A is {m}x{n}, prior dim {}, observation dim {}",
            prior.dim(),
            obs_mean.len()
        )));
    }
    let prior_prec = Cholesky::new(prior.cov.clone())
        .ok_or_else(|| {
            RevampError::InvalidParameter("prior covariance is not positive definite".into())
        })?
        .inverse();
    let obs_prec = Cholesky::new(obs_cov.clone())
        .ok_or_else(|| {
            RevampError::InvalidParameter("observation covariance is not positive definite".into())
        })?
        .inverse();

    let mut post_prec = &prior_prec + a.transpose() * &obs_prec * a;
    symmetrize(&mut post_prec);
    let chol = Cholesky::new(post_prec).ok_or_else(|| {
        RevampError::InvalidParameter("posterior precision is not positive definite".into())
    })?;
    let h = &prior_prec * &prior.mean + a.transpose() * (&obs_prec * obs_mean);
    let post_mean = chol.solve(&h);
    let mut post_cov = chol.inverse();
    symmetrize(&mut post_cov);

    let mut marg_cov = a * &prior.cov * a.transpose() + obs_cov;
    symmetrize(&mut marg_cov);
    let log_evidence = log_gaussian_pdf(obs_mean, &(a * &prior.mean), &marg_cov)?;

    Ok((log_evidence, GaussianND::new(post_mean, post_cov)?))
}

/// Downdates `C ← C − C[:,n] · denom⁻¹ · C[:,n]ᵀ` and symmetrizes the result.
///
/// An infinite denominator leaves `C` unchanged (the no-op update); an exact
/// zero denominator is a singular update.
pub fn rank_one_downdate(c: &DMatrix<f64>, n: usize, denom: f64) -> Result<DMatrix<f64>> {
    if c.nrows() != c.ncols() || n >= c.nrows() {
        return Err(RevampError::InvalidParameter(format!(
            "rank-one update index {n} out of range for {}x{} matrix",
            c.nrows(),
            c.ncols()
        )));
    }
    if denom == 0.0 {
        return Err(RevampError::SingularUpdate);
    }
    if denom.is_nan() {
        return Err(RevampError::InvalidParameter(
            "rank-one update denominator is NaN".into(),
        ));
    }
    if denom.is_infinite() {
        return Ok(c.clone());
    }
    let col = c.column(n).clone_owned();
    let mut out = c.clone();
    out.ger(-denom.recip(), &col, &col, 1.0);
    symmetrize(&mut out);
    Ok(out)
}

use crate::error::{Error, Result};
use crate::expcorr::{build_expcorr, build_expcorr_inverse, ExpCorrSpec};
use crate::linalg::{cholesky_lower, invert_spd, ConditionalParams, SymMatrix};
use crate::univariate::TruncationBound;

/// Where the covariance of the untruncated normal comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Covariance {
    /// Covariance matrix `Sigma`.
    Dense(SymMatrix),
    /// Precision matrix `Sigma^-1`, used without inversion.
    Precision(SymMatrix),
    /// `rho^|i-j|`, handled through its tridiagonal inverse.
    ExpCorr(ExpCorrSpec),
}

impl Covariance {
    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) | Self::Precision(m) => m.dim(),
            Self::ExpCorr(s) => s.n,
        }
    }
}

/// A one-sided truncated multivariate normal: mean, covariance and one
/// bound per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    mu: Vec<f64>,
    covariance: Covariance,
    bounds: Vec<TruncationBound>,
}

impl Problem {
    /// Validates dimensions and finiteness, and checks positive definiteness
    /// of dense matrices by factorization.
    pub fn new(mu: Vec<f64>, covariance: Covariance, bounds: Vec<TruncationBound>) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::InvalidArgument("problem has no coordinates".into()));
        }
        if covariance.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "mean has {n} entries, covariance has dimension {}",
                covariance.dim()
            )));
        }
        if bounds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "mean has {n} entries but {} bounds were given",
                bounds.len()
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) || bounds.iter().any(|b| !b.cut().is_finite()) {
            return Err(Error::InvalidArgument("means and cuts must be finite".into()));
        }
        match &covariance {
            Covariance::Dense(m) | Covariance::Precision(m) => {
                cholesky_lower(m)?;
            }
            Covariance::ExpCorr(spec) => spec.validate()?,
        }
        Ok(Self {
            mu,
            covariance,
            bounds,
        })
    }

    /// Zero-mean exponential-correlation problem with the same lower cut on
    /// every coordinate.
    pub fn expcorr_left(n: usize, rho: f64, cut: f64) -> Result<Self> {
        Self::new(
            vec![0.0; n],
            Covariance::ExpCorr(ExpCorrSpec::new(n, rho)?),
            vec![TruncationBound::left(cut); n],
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    pub fn bounds(&self) -> &[TruncationBound] {
        &self.bounds
    }

    /// Conditional parameters. Dense covariances cost one Cholesky
    /// inversion; precision and exponential-correlation inputs need none.
    pub fn conditional_params(&self) -> Result<ConditionalParams> {
        match &self.covariance {
            Covariance::Dense(sigma) => {
                ConditionalParams::from_precision(self.mu.clone(), &invert_spd(sigma)?)
            }
            Covariance::Precision(p) => ConditionalParams::from_precision(self.mu.clone(), p),
            Covariance::ExpCorr(spec) => {
                build_expcorr_inverse(*spec).conditional_params(self.mu.clone())
            }
        }
    }

    /// Dense covariance matrix.
    pub fn covariance_matrix(&self) -> Result<SymMatrix> {
        match &self.covariance {
            Covariance::Dense(sigma) => Ok(sigma.clone()),
            Covariance::Precision(p) => invert_spd(p),
            Covariance::ExpCorr(spec) => Ok(build_expcorr(*spec)),
        }
    }

    /// Dense precision matrix.
    pub fn precision_matrix(&self) -> Result<SymMatrix> {
        match &self.covariance {
            Covariance::Dense(sigma) => invert_spd(sigma),
            Covariance::Precision(p) => Ok(p.clone()),
            Covariance::ExpCorr(spec) => Ok(build_expcorr_inverse(*spec).to_dense()),
        }
    }

    /// Starting point one conditional standard deviation inside each cut.
    pub fn default_start(&self, params: &ConditionalParams) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(params.sigma_star())
            .map(|(b, &s)| b.inset(s))
            .collect()
    }

    /// Whether `x` lies in the truncation region.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.bounds.iter().zip(x).all(|(b, &v)| b.contains(v))
    }
}

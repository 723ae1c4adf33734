//! Exponential correlation covariance `Sigma_ij = rho^|i-j|` and its
//! tridiagonal inverse.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ConditionalParams, DominanceReport, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpCorrSpec {
    pub n: usize,
    pub rho: f64,
}

impl ExpCorrSpec {
    pub fn new(n: usize, rho: f64) -> Result<Self> {
        let spec = Self { n, rho };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Dense `rho^|i-j|`.
pub fn build_expcorr(spec: ExpCorrSpec) -> SymMatrix {
    let m = DMatrix::from_fn(spec.n, spec.n, |i, j| spec.rho.powi(i.abs_diff(j) as i32));
    SymMatrix::from_symmetric_unchecked(m)
}

/// Symmetric tridiagonal matrix in band storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` is entry `(i, i+1)`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> SymMatrix {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &v) in self.off.iter().enumerate() {
            m[(i, i + 1)] = v;
            m[(i + 1, i)] = v;
        }
        SymMatrix::from_symmetric_unchecked(m)
    }

    /// Off-diagonal entries `(j, s_ij)` of row `i`.
    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let below = (i > 0).then(|| (i - 1, self.off[i - 1]));
        let above = (i + 1 < self.dim()).then(|| (i + 1, self.off[i]));
        below.into_iter().chain(above)
    }

    /// Conditional parameters in `O(n)`, treating `self` as the precision
    /// matrix.
    pub fn conditional_params(&self, mu: Vec<f64>) -> Result<ConditionalParams> {
        ConditionalParams::from_precision_rows(mu, &self.diag, |i| self.row(i))
    }

    pub fn dominance(&self) -> Result<DominanceReport> {
        self.conditional_params(vec![0.0; self.dim()]).map(|p| p.dominance())
    }
}

/// Closed-form inverse of [`build_expcorr`]: corner diagonals
/// `1/(1-rho^2)`, interior diagonals `(1+rho^2)/(1-rho^2)`, off-diagonals
/// `-rho/(1-rho^2)`.
pub fn build_expcorr_inverse(spec: ExpCorrSpec) -> SymTridiagonal {
    let n = spec.n;
    let rho = spec.rho;
    if n == 1 {
        return SymTridiagonal {
            diag: vec![1.0],
            off: Vec::new(),
        };
    }
    let scale = 1.0 / (1.0 - rho * rho);
    let interior = (1.0 + rho * rho) * scale;
    let mut diag = vec![interior; n];
    diag[0] = scale;
    diag[n - 1] = scale;
    SymTridiagonal {
        diag,
        off: vec![-rho * scale; n - 1],
    }
}

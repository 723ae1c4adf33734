//! Dense symmetric matrices, conditional parameters and dominance diagnostics.
//!
//! Conditional parameters are read off the rows of the precision matrix
//! `S = Sigma^-1`: the conditional variance of coordinate `i` given the rest is
//! `1 / s_ii`, and the regression coefficients of `x_i` on `x_{-i}` are
//! `-s_ij / s_ii`. One factorization therefore yields every conditional,
//! instead of one `(n-1)x(n-1)` inversion per coordinate.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_RTOL: f64 = 1e-12;

/// A dense, square, symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates squareness and symmetry (to `1e-12` relative to the largest
    /// entry), then stores the exactly symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    /// Wraps a matrix that is symmetric by construction.
    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }
}

/// Lower Cholesky factor `L` with `L L^T = sigma`.
pub fn cholesky_lower(sigma: &SymMatrix) -> Result<DMatrix<f64>> {
    Cholesky::new(sigma.0.clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn invert_spd(sigma: &SymMatrix) -> Result<SymMatrix> {
    let chol = Cholesky::new(sigma.0.clone()).ok_or(Error::NotPositiveDefinite)?;
    if chol.l_dirty().diagonal().iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    let inv = chol.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    // Cholesky inverses are symmetric only up to rounding.
    let inv = (&inv + inv.transpose()) * 0.5;
    Ok(SymMatrix(inv))
}

/// Row-compressed storage of the coupling coefficients `-s_ij / s_ii`.
#[derive(Clone, Debug, PartialEq)]
struct CouplingRows {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CouplingRows {
    #[inline]
    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }
}

/// Per-coordinate conditional parameters of an untruncated normal.
///
/// For coordinate `i`, `x_i | x_{-i}` is normal with standard deviation
/// `sigma_star[i]` and mean `mu_i + sum_j c_ij (x_j - mu_j)`, where the
/// coupling coefficients `c_ij` are stored sparsely (exact zeros dropped).
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalParams {
    mu: Vec<f64>,
    sigma_star: Vec<f64>,
    coupling: CouplingRows,
}

impl ConditionalParams {
    /// Builds the parameters from the diagonal of the precision matrix and an
    /// accessor yielding the off-diagonal entries `(j, s_ij)` of each row.
    pub fn from_precision_rows<F, I>(mu: Vec<f64>, diag: &[f64], mut row: F) -> Result<Self>
    where
        F: FnMut(usize) -> I,
        I: IntoIterator<Item = (usize, f64)>,
    {
        let n = mu.len();
        if diag.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "mean has {n} entries, precision has dimension {}",
                diag.len()
            )));
        }
        let mut sigma_star = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for (i, &s_ii) in diag.iter().enumerate() {
            if s_ii == 0.0 {
                return Err(Error::ZeroDiagonal { row: i });
            }
            if !(s_ii > 0.0 && s_ii.is_finite()) {
                return Err(Error::NotPositiveDefinite);
            }
            sigma_star.push((1.0 / s_ii).sqrt());
            for (j, s_ij) in row(i) {
                if j != i && s_ij != 0.0 {
                    cols.push(j);
                    vals.push(-s_ij / s_ii);
                }
            }
            offsets.push(cols.len());
        }
        Ok(Self {
            mu,
            sigma_star,
            coupling: CouplingRows { offsets, cols, vals },
        })
    }

    /// Parameters from a dense precision matrix (no inversion performed).
    pub fn from_precision(mu: Vec<f64>, sigma_inv: &SymMatrix) -> Result<Self> {
        let n = sigma_inv.dim();
        let m = sigma_inv.as_matrix();
        let diag = sigma_inv.diagonal();
        Self::from_precision_rows(mu, &diag, |i| (0..n).map(move |j| (j, m[(i, j)])))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma_star(&self) -> &[f64] {
        &self.sigma_star
    }

    /// Non-zero coupling coefficients of row `i` as `(columns, values)`.
    pub fn coupling_entries(&self, i: usize) -> (&[usize], &[f64]) {
        self.coupling.row(i)
    }

    /// Row `i` of the coupling as a dense `(n-1)`-vector, coordinate `i`
    /// removed.
    pub fn coupling_row(&self, i: usize) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n.saturating_sub(1)];
        let (cols, vals) = self.coupling.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            out[if j < i { j } else { j - 1 }] = v;
        }
        out
    }

    /// l1 norm of coupling row `i`.
    pub fn coupling_norm(&self, i: usize) -> f64 {
        self.coupling.row(i).1.iter().map(|v| v.abs()).sum()
    }

    /// Conditional mean of coordinate `i` given the other entries of `x`
    /// (`x[i]` itself is ignored).
    #[inline]
    pub fn conditional_mean(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.coupling.row(i);
        let mut acc = 0.0;
        for (&j, &c) in cols.iter().zip(vals) {
            acc += c * (x[j] - self.mu[j]);
        }
        self.mu[i] + acc
    }

    /// True when every coupling row is empty, i.e. the coordinates are
    /// independent.
    pub fn is_decoupled(&self) -> bool {
        self.coupling.cols.is_empty()
    }

    /// Dominance diagnostics computed from the coupling rows.
    pub fn dominance(&self) -> DominanceReport {
        DominanceReport::from_row_moduli((0..self.dim()).map(|i| self.coupling_norm(i)))
    }
}

/// Conditional parameters from a covariance matrix (one SPD inversion).
pub fn conditional_params(mu: &[f64], sigma: &SymMatrix) -> Result<ConditionalParams> {
    if mu.len() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mean has {} entries, covariance is {}x{}",
            mu.len(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    let inv = invert_spd(sigma)?;
    ConditionalParams::from_precision(mu.to_vec(), &inv)
}

/// Diagonal dominance of a precision matrix.
///
/// `modulus` is `max_i sum_{j != i} |s_ij| / |s_ii|`; the Gauss–Seidel sweep is
/// an l-infinity contraction with this modulus whenever it is below one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub is_dominant: bool,
    pub modulus: f64,
    pub worst_row: usize,
    /// Rows whose own ratio is `>= 1`.
    pub violating_rows: Vec<usize>,
}

impl DominanceReport {
    fn from_row_moduli(rows: impl Iterator<Item = f64>) -> Self {
        let mut modulus = 0.0;
        let mut worst_row = 0;
        let mut violating_rows = Vec::new();
        for (i, r) in rows.enumerate() {
            if r > modulus {
                modulus = r;
                worst_row = i;
            }
            if r >= 1.0 {
                violating_rows.push(i);
            }
        }
        Self {
            is_dominant: modulus < 1.0,
            modulus,
            worst_row,
            violating_rows,
        }
    }
}

pub fn dominance_report(sigma_inv: &SymMatrix) -> Result<DominanceReport> {
    let n = sigma_inv.dim();
    let m = sigma_inv.as_matrix();
    let mut ratios = Vec::with_capacity(n);
    for i in 0..n {
        let d = m[(i, i)];
        if d == 0.0 {
            return Err(Error::ZeroDiagonal { row: i });
        }
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        ratios.push(off / d.abs());
    }
    Ok(DominanceReport::from_row_moduli(ratios.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_spd(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let m = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
        SymMatrix::new(m).unwrap()
    }

    fn remove_index(v: &[f64], i: usize) -> Vec<f64> {
        v.iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, x)| *x)
            .collect()
    }

    #[test]
    fn identity_round_trips() {
        let inv = invert_spd(&SymMatrix::identity(4)).unwrap();
        assert_eq!(inv, SymMatrix::identity(4));
        let rep = dominance_report(&inv).unwrap();
        assert!(rep.is_dominant);
        assert_eq!(rep.modulus, 0.0);
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_spd(6, &mut rng);
        let inv = invert_spd(&s).unwrap();
        let r = s.as_matrix() * inv.as_matrix() - DMatrix::identity(6, 6);
        assert!(r.amax() < 1e-8);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(invert_spd(&m), Err(Error::NotPositiveDefinite));
        assert!(SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 0.5]]).is_err());
        assert!(matches!(
            conditional_params(&[0.0, 0.0], &m),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn zero_diagonal_is_reported() {
        let m = SymMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 0.0]]).unwrap();
        assert_eq!(dominance_report(&m), Err(Error::ZeroDiagonal { row: 1 }));
    }

    #[test]
    fn diagonal_covariance_has_no_coupling() {
        let v = [0.5, 2.0, 9.0];
        let p = conditional_params(&[1.0, 2.0, 3.0], &SymMatrix::from_diagonal(&v)).unwrap();
        assert!(p.is_decoupled());
        for i in 0..3 {
            assert!((p.sigma_star()[i] - v[i].sqrt()).abs() < 1e-15);
            assert!(p.coupling_row(i).iter().all(|c| *c == 0.0));
        }
    }

    #[test]
    fn two_by_two_by_hand() {
        let rho = 0.5;
        let s = SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        let p = conditional_params(&[0.0, 0.0], &s).unwrap();
        for i in 0..2 {
            assert!((p.sigma_star()[i] - (1.0 - rho * rho).sqrt()).abs() < 1e-14);
            assert!((p.coupling_row(i)[0] - rho).abs() < 1e-14);
        }
        // mu_1* at x = (0, 1) is rho * 1.
        assert!((p.conditional_mean(0, &[0.0, 1.0]) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn schur_complement_matches_explicit_submatrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_spd(3, &mut rng);
        let p = conditional_params(&[0.0; 3], &s).unwrap();
        let m = s.as_matrix();
        for i in 0..3 {
            let sub = m.clone().remove_row(i).remove_column(i);
            let col: Vec<f64> = remove_index(&m.column(i).iter().copied().collect::<Vec<_>>(), i);
            let col = nalgebra::DVector::from_vec(col);
            let sub_inv = sub.try_inverse().unwrap();
            let schur = m[(i, i)] - (col.transpose() * &sub_inv * &col)[(0, 0)];
            assert!((p.sigma_star()[i].powi(2) - schur).abs() < 1e-12 * schur.abs().max(1.0));
        }
    }

    #[test]
    fn dominance_modulus_equals_max_coupling_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..8 {
            let s = random_spd(n, &mut rng);
            let inv = invert_spd(&s).unwrap();
            let direct = dominance_report(&inv).unwrap();
            let via = ConditionalParams::from_precision(vec![0.0; n], &inv)
                .unwrap()
                .dominance();
            assert!((direct.modulus - via.modulus).abs() < 1e-12);
            assert_eq!(direct.is_dominant, via.is_dominant);
        }
    }

    #[test]
    fn nondominant_rows_listed() {
        // Inverse covariance as printed for the strongly violated 3x3 example.
        let s_inv = SymMatrix::from_rows(&[
            vec![7.904, 3.365, -4.116],
            vec![3.365, 2.352, -1.735],
            vec![-4.116, -1.735, 2.513],
        ])
        .unwrap();
        let rep = dominance_report(&s_inv).unwrap();
        assert!(!rep.is_dominant);
        assert_eq!(rep.violating_rows, vec![1, 2]);
        assert!(rep.modulus >= 1.0);
    }
}

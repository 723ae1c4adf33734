//! Independent reference values for the truncated mean.
//!
//! Neither oracle shares code with the fixed-point path beyond reading the
//! problem definition: quadrature integrates the joint density directly, and
//! rejection sampling draws from the untruncated normal through a Cholesky
//! factor of the covariance.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::cholesky_lower;
use crate::par::{map_indexed, Execution};
use crate::problem::Problem;
use crate::rng::stream_rng;
use crate::univariate::TruncationBound;

/// Refinement disagreement above which quadrature reports failure.
pub const QUADRATURE_TOL: f64 = 1e-4;

const MIN_PROPOSALS: u64 = 1_000_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureMean {
    pub mean: Vec<f64>,
    /// Max-norm change of the mean between the grid with spacing `2h` and
    /// the returned one with spacing `h`.
    pub error_estimate: f64,
}

/// Default grid size: 512 points per axis up to two dimensions, 160 in three.
pub fn default_grid_points(n: usize) -> usize {
    if n <= 2 {
        512
    } else {
        160
    }
}

pub const DEFAULT_EXTENT_SIGMAS: f64 = 10.0;

/// Integration range of one axis: from the cut to `extent` marginal sds
/// past the farther of the cut and the untruncated mean.
fn axis_range(bound: TruncationBound, mu: f64, sd: f64, extent: f64) -> (f64, f64) {
    match bound {
        TruncationBound::Left { cut } => (cut, cut.max(mu) + extent * sd),
        TruncationBound::Right { cut } => (cut.min(mu) - extent * sd, cut),
    }
}

/// Composite Simpson nodes and weights with `points` (odd) nodes.
fn simpson(lo: f64, hi: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(points % 2 == 1 && points >= 3);
    let h = (hi - lo) / (points - 1) as f64;
    let nodes = (0..points).map(|k| lo + k as f64 * h).collect();
    let weights = (0..points)
        .map(|k| {
            let c = if k == 0 || k == points - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    (nodes, weights)
}

struct Grid {
    nodes: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

impl Grid {
    fn new(ranges: &[(f64, f64)], points: usize) -> Self {
        let (nodes, weights) = ranges.iter().map(|&(lo, hi)| simpson(lo, hi, points)).unzip();
        Self { nodes, weights }
    }

    fn points(&self) -> usize {
        self.nodes[0].len()
    }

    /// Calls `visit(x, weight)` for every grid point whose first coordinate
    /// is node `i0`.
    fn for_slice(&self, i0: usize, mut visit: impl FnMut(&[f64], f64)) {
        let n = self.nodes.len();
        let p = self.points();
        let mut x = vec![0.0; n];
        x[0] = self.nodes[0][i0];
        let w0 = self.weights[0][i0];
        let inner = p.pow(n as u32 - 1);
        let mut idx = vec![0usize; n];
        for flat in 0..inner {
            let mut rem = flat;
            let mut w = w0;
            for d in (1..n).rev() {
                idx[d] = rem % p;
                rem /= p;
                x[d] = self.nodes[d][idx[d]];
                w *= self.weights[d][idx[d]];
            }
            visit(&x, w);
        }
    }
}

fn quad_form(prec: &[f64], mu: &[f64], x: &[f64]) -> f64 {
    let n = mu.len();
    let mut q = 0.0;
    for i in 0..n {
        let di = x[i] - mu[i];
        let mut row = 0.0;
        for j in 0..n {
            row += prec[i * n + j] * (x[j] - mu[j]);
        }
        q += di * row;
    }
    q
}

fn integrate_mean(grid: &Grid, prec: &[f64], mu: &[f64], offset: f64, exec: Execution) -> Result<Vec<f64>> {
    let n = mu.len();
    let partials = map_indexed(exec, grid.points(), |i0| {
        let mut acc = vec![0.0; n + 1];
        grid.for_slice(i0, |x, w| {
            let d = w * (-0.5 * (quad_form(prec, mu, x) - offset)).exp();
            acc[0] += d;
            for k in 0..n {
                acc[k + 1] += d * x[k];
            }
        });
        acc
    });
    let mut total = vec![0.0; n + 1];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    if !(total[0] > 0.0 && total[0].is_finite()) {
        return Err(Error::NotConverged {
            disagreement: f64::INFINITY,
        });
    }
    Ok(total[1..].iter().map(|m| m / total[0]).collect())
}

/// Tensor-grid Simpson quadrature of the truncated mean for `n <= 3`.
pub fn quadrature_mean(problem: &Problem, grid_points_per_dim: usize, extent_sigmas: f64) -> Result<QuadratureMean> {
    quadrature_mean_with(problem, grid_points_per_dim, extent_sigmas, Execution::default())
}

pub fn quadrature_mean_with(
    problem: &Problem,
    grid_points_per_dim: usize,
    extent_sigmas: f64,
    exec: Execution,
) -> Result<QuadratureMean> {
    let n = problem.dim();
    if n > 3 {
        return Err(Error::DimensionTooLarge(n));
    }
    if grid_points_per_dim < 64 {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs at least 64 points per axis, got {grid_points_per_dim}"
        )));
    }
    if !(extent_sigmas > 0.0) {
        return Err(Error::InvalidArgument("extent must be positive".into()));
    }
    let sigma = problem.covariance_matrix()?;
    let prec = problem.precision_matrix()?;
    let prec: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| prec.get(i, j)).collect();
    let mu = problem.mu();
    let ranges: Vec<(f64, f64)> = (0..n)
        .map(|i| axis_range(problem.bounds()[i], mu[i], sigma.get(i, i).sqrt(), extent_sigmas))
        .collect();

    let fine_points = grid_points_per_dim | 1;
    let coarse_points = (fine_points - 1) / 2 + 1;
    let coarse = Grid::new(&ranges, coarse_points);
    let fine = Grid::new(&ranges, fine_points);

    // Scale the density by its largest value on the coarse grid.
    let mins = map_indexed(exec, coarse.points(), |i0| {
        let mut m = f64::INFINITY;
        coarse.for_slice(i0, |x, _| m = m.min(quad_form(&prec, mu, x)));
        m
    });
    let offset = mins.into_iter().fold(f64::INFINITY, f64::min);

    let coarse_mean = integrate_mean(&coarse, &prec, mu, offset, exec)?;
    let fine_mean = integrate_mean(&fine, &prec, mu, offset, exec)?;
    let error_estimate = coarse_mean
        .iter()
        .zip(&fine_mean)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if !(error_estimate <= QUADRATURE_TOL) {
        return Err(Error::NotConverged {
            disagreement: error_estimate,
        });
    }
    Ok(QuadratureMean {
        mean: fine_mean,
        error_estimate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectionMean {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub accepted: u64,
    pub proposals: u64,
}

/// Plain rejection sampling from the untruncated normal.
pub fn rejection_mean(problem: &Problem, target_accepts: u64, seed: u64) -> Result<RejectionMean> {
    if target_accepts < 2 {
        return Err(Error::InvalidArgument("need at least two accepted draws".into()));
    }
    let n = problem.dim();
    let l = cholesky_lower(&problem.covariance_matrix()?)?;
    let mu = DVector::from_column_slice(problem.mu());
    let mut rng = stream_rng(seed, 0);

    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut accepted = 0u64;
    let mut proposals = 0u64;
    let mut z = DVector::<f64>::zeros(n);
    while accepted < target_accepts {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let x = &mu + &l * &z;
        proposals += 1;
        if problem.contains(x.as_slice()) {
            accepted += 1;
            for i in 0..n {
                let d = x[i] - mean[i];
                mean[i] += d / accepted as f64;
                m2[i] += d * (x[i] - mean[i]);
            }
        }
        if proposals >= MIN_PROPOSALS && proposals.is_multiple_of(MIN_PROPOSALS) {
            let rate = accepted as f64 / proposals as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::AcceptanceTooLow { rate, proposals });
            }
        }
    }
    let std_error = m2
        .iter()
        .map(|s| (s / (accepted - 1) as f64 / accepted as f64).sqrt())
        .collect();
    Ok(RejectionMean {
        mean,
        std_error,
        accepted,
        proposals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::problem::Covariance;
    use crate::univariate::truncated_mean_one_sided;

    fn independent(n: usize, cuts: &[f64]) -> Problem {
        Problem::new(
            vec![0.0; n],
            Covariance::Dense(SymMatrix::identity(n)),
            cuts.iter().map(|&c| TruncationBound::left(c)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn half_normal_by_quadrature() {
        let q = quadrature_mean(&independent(1, &[0.0]), 512, 10.0).unwrap();
        assert!((q.mean[0] - 0.797_884_56).abs() < 1e-5);
        assert!(q.error_estimate < 1e-4);
    }

    #[test]
    fn independent_coordinates_factor() {
        let q = quadrature_mean(&independent(2, &[-0.5, 1.0]), 512, 10.0).unwrap();
        for (i, c) in [-0.5, 1.0].into_iter().enumerate() {
            let want = truncated_mean_one_sided(0.0, 1.0, TruncationBound::left(c));
            assert!((q.mean[i] - want).abs() < 1e-6);
        }
    }

    #[test]
    fn right_bounds_mirror() {
        let p = Problem::new(
            vec![0.0, 0.0],
            Covariance::Dense(SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap()),
            vec![TruncationBound::right(0.5), TruncationBound::left(-0.2)],
        )
        .unwrap();
        let mirrored = Problem::new(
            vec![0.0, 0.0],
            Covariance::Dense(SymMatrix::from_rows(&[vec![1.0, -0.3], vec![-0.3, 1.0]]).unwrap()),
            vec![TruncationBound::left(-0.5), TruncationBound::left(-0.2)],
        )
        .unwrap();
        let a = quadrature_mean(&p, 256, 10.0).unwrap();
        let b = quadrature_mean(&mirrored, 256, 10.0).unwrap();
        assert!((a.mean[0] + b.mean[0]).abs() < 1e-9);
        assert!((a.mean[1] - b.mean[1]).abs() < 1e-9);
    }

    #[test]
    fn quadrature_errors() {
        let p4 = independent(4, &[0.0; 4]);
        assert_eq!(quadrature_mean(&p4, 128, 10.0), Err(Error::DimensionTooLarge(4)));
        assert!(matches!(
            quadrature_mean(&independent(1, &[0.0]), 10, 10.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sequential_and_parallel_quadrature_agree_exactly() {
        let p = Problem::expcorr_left(3, 0.4, -0.3).unwrap();
        let a = quadrature_mean_with(&p, 96, 10.0, Execution::Sequential).unwrap();
        let b = quadrature_mean_with(&p, 96, 10.0, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejection_half_normals() {
        let p = independent(3, &[0.0; 3]);
        let r = rejection_mean(&p, 100_000, 4).unwrap();
        for i in 0..3 {
            assert!((r.mean[i] - 0.797_884_56).abs() < 3.0 * r.std_error[i]);
        }
        assert_eq!(r, rejection_mean(&p, 100_000, 4).unwrap());
    }

    #[test]
    fn rejection_gives_up_on_tiny_regions() {
        let p = independent(2, &[3.5, 3.5]);
        assert!(matches!(
            rejection_mean(&p, 1_000_000, 0),
            Err(Error::AcceptanceTooLow { .. })
        ));
    }

    #[test]
    fn oracles_agree_on_correlated_pair() {
        let p = Problem::expcorr_left(2, 0.5, 0.0).unwrap();
        let q = quadrature_mean(&p, 512, 10.0).unwrap();
        let r = rejection_mean(&p, 200_000, 8).unwrap();
        for i in 0..2 {
            assert!((q.mean[i] - r.mean[i]).abs() < 3.0 * r.std_error[i]);
        }
    }
}

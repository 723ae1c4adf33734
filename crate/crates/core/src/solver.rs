//! Gauss–Seidel fixed-point iteration for the truncated mean.
//!
//! Coordinate `i` is mapped to the mean of its conditional distribution,
//! truncated by its own bound, with the conditional mean evaluated at the
//! current estimate of the other coordinates:
//!
//! ```text
//! T_i(x) = m_i(x) +/- sqrt(2/pi) f(A_i(x)) sigma*_i
//! m_i(x) = mu_i + sum_{j != i} c_ij (x_j - mu_j)
//! ```
//!
//! A sweep applies `T_1, ..., T_n` in order, each update visible to the next.
//! If the precision matrix is diagonally dominant with modulus `alpha < 1`,
//! each `T_i` is Lipschitz in the l-infinity norm with constant
//! `||c_i||_1 <= alpha` (because `-sqrt(pi) <= f' <= 0`), so the sweep is a
//! contraction and the iteration converges geometrically from any start.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ConditionalParams, DominanceReport};
use crate::problem::Problem;
use crate::univariate::{truncated_mean_one_sided, TruncationBound};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop once `||w(t) - w(t-1)||_1 / n <= tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// Starting iterate; defaults to one conditional sd inside each cut.
    pub initial: Option<Vec<f64>>,
    /// Refuse to iterate when the precision matrix is not diagonally
    /// dominant.
    pub enforce_dominance: bool,
    /// Keep every iterate in the trace. When off, only the first and last
    /// are kept.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 500,
            initial: None,
            enforce_dominance: false,
            record_iterates: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if let Some(init) = &self.initial {
            if init.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "initial iterate has {} entries, problem has {n}",
                    init.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverTrace {
    /// `w(0), w(1), ...`; only endpoints unless iterates were recorded.
    pub iterates: Vec<Vec<f64>>,
    /// `||w(t) - w(t-1)||_1 / n` for `t = 1..=iterations_used`.
    pub deltas: Vec<f64>,
    /// `||w(t) - w(t-1)||_inf`, same indexing as `deltas`.
    pub steps_inf: Vec<f64>,
    pub modulus: DominanceReport,
    pub converged: bool,
    pub iterations_used: usize,
    /// The coordinates are independent, so the first sweep is exact.
    pub decoupled: bool,
    pub warnings: Vec<String>,
}

impl SolverTrace {
    pub fn fixed_point(&self) -> &[f64] {
        self.iterates.last().expect("trace always holds the starting iterate")
    }

    pub fn final_delta(&self) -> Option<f64> {
        self.deltas.last().copied()
    }
}

/// `T_i(x)`: the truncated conditional mean of coordinate `i` at `x`.
#[inline]
pub fn apply_t_i(i: usize, x: &[f64], params: &ConditionalParams, bound: TruncationBound) -> f64 {
    let m = params.conditional_mean(i, x);
    truncated_mean_one_sided(m, params.sigma_star()[i], bound)
}

/// One in-place Gauss–Seidel sweep. Returns `(l1 step, l-inf step)`.
pub fn sweep_in_place(w: &mut [f64], params: &ConditionalParams, bounds: &[TruncationBound]) -> (f64, f64) {
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    for i in 0..w.len() {
        let new = apply_t_i(i, w, params, bounds[i]);
        let d = (new - w[i]).abs();
        l1 += d;
        linf = linf.max(d);
        w[i] = new;
    }
    (l1, linf)
}

/// The Gauss–Seidel map `S(w)`.
pub fn gauss_seidel_sweep(w: &[f64], params: &ConditionalParams, bounds: &[TruncationBound]) -> Vec<f64> {
    let mut out = w.to_vec();
    sweep_in_place(&mut out, params, bounds);
    out
}

/// Run sweeps until the mean absolute step drops to `config.tol` or the
/// budget runs out (`converged == false`, not an error).
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolverTrace> {
    let params = problem.conditional_params()?;
    solve_with_params(&params, problem.bounds(), config)
}

pub fn solve_with_params(
    params: &ConditionalParams,
    bounds: &[TruncationBound],
    config: &SolverConfig,
) -> Result<SolverTrace> {
    let n = params.dim();
    if bounds.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} bounds for a {n}-dimensional problem",
            bounds.len()
        )));
    }
    config.validate(n)?;
    let modulus = params.dominance();
    if config.enforce_dominance && !modulus.is_dominant {
        return Err(Error::NotDominant {
            modulus: modulus.modulus,
            worst_row: modulus.worst_row,
        });
    }
    let mut warnings = Vec::new();
    if !modulus.is_dominant {
        warnings.push(format!(
            "inverse covariance is not diagonally dominant (modulus {:.4}, rows {:?}); convergence is not guaranteed",
            modulus.modulus, modulus.violating_rows
        ));
    }

    let mut w = match &config.initial {
        Some(init) => init.clone(),
        None => bounds
            .iter()
            .zip(params.sigma_star())
            .map(|(b, &s)| b.inset(s))
            .collect(),
    };
    let decoupled = params.is_decoupled();
    let mut iterates = vec![w.clone()];
    let mut deltas = Vec::new();
    let mut steps_inf = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iters {
        let (l1, linf) = sweep_in_place(&mut w, params, bounds);
        let delta = l1 / n as f64;
        deltas.push(delta);
        steps_inf.push(linf);
        if config.record_iterates {
            iterates.push(w.clone());
        }
        if !delta.is_finite() {
            warnings.push("iterate became non-finite; stopping".into());
            break;
        }
        // With no coupling the sweep output does not depend on its input.
        if decoupled || delta <= config.tol {
            converged = true;
            break;
        }
    }
    if !config.record_iterates {
        iterates.push(w);
    }

    Ok(SolverTrace {
        iterations_used: deltas.len(),
        iterates,
        deltas,
        steps_inf,
        modulus,
        converged,
        decoupled,
        warnings,
    })
}

/// Largest observed ratio of successive l-infinity steps, an empirical
/// estimate of the contraction modulus of the sweep.
///
/// Steps at rounding level (below `1e3 * eps * max(1, ||w||_inf)`) are
/// skipped as denominators.
pub fn contraction_ratio(trace: &SolverTrace) -> Result<f64> {
    if trace.decoupled {
        return Ok(0.0);
    }
    if trace.steps_inf.len() < 2 {
        return Err(Error::InsufficientTrace {
            iterates: trace.steps_inf.len() + 1,
        });
    }
    let scale = trace
        .fixed_point()
        .iter()
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    let floor = 1e3 * f64::EPSILON * scale;
    Ok(trace
        .steps_inf
        .windows(2)
        .filter(|p| p[0] > floor)
        .map(|p| p[1] / p[0])
        .fold(0.0, f64::max))
}

//! Approximate means of one-sided truncated multivariate normal distributions.
//!
//! The central routine is a deterministic Gauss–Seidel fixed-point iteration
//! ([`solver::solve`]): each coordinate is replaced in turn by the exact mean
//! of its one-dimensional conditional, truncated on one side, given the most
//! recent values of all other coordinates. When the inverse covariance is
//! diagonally dominant the sweep is an l-infinity contraction and the
//! iteration converges geometrically.
//!
//! Alongside it the crate ships the reference estimators used to judge it:
//! a Gibbs sampler ([`gibbs`]), tensor-grid quadrature and rejection sampling
//! ([`oracles`]), plus the experiment drivers behind the `truncmean` binary
//! ([`experiments`]).

pub mod error;
pub mod expcorr;
pub mod experiments;
pub mod gibbs;
pub mod linalg;
pub mod oracles;
pub mod par;
pub mod problem;
pub mod problem_file;
pub mod rng;
pub mod solver;
pub mod special;
pub mod univariate;

pub use error::{Error, Result};
pub use linalg::{ConditionalParams, DominanceReport, SymMatrix};
pub use problem::{Covariance, Problem};
pub use solver::{solve, SolverConfig, SolverTrace};
pub use univariate::TruncationBound;

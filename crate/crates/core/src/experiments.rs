//! Experiment drivers: accuracy sweeps over the exponential-correlation
//! family, random-problem comparisons against the Gibbs baseline, the large-n
//! timing run and the five-dimensional convergence trace.
//!
//! Every random quantity is derived from the user seed plus the cell or trial
//! coordinates, and rows are emitted in grid order, so output is identical
//! whether cells run sequentially or on the thread pool.

use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{gibbs_estimate, gibbs_with_params, ChainConfig};
use crate::linalg::{invert_spd, SymMatrix};
use crate::par::{map_indexed, Execution};
use crate::problem::{Covariance, Problem};
use crate::problem_file::load_bundled;
use crate::rng::{derive_seed, stream_rng};
use crate::solver::{solve, solve_with_params, SolverConfig, SolverTrace};
use crate::univariate::TruncationBound;

pub const SWEEP_CSV_VERSION: &str = "# truncmean sweep v1";
pub const COMPARE_CSV_VERSION: &str = "# truncmean compare v1";

const GENERATOR_RETRIES: u64 = 16;

/// `||a - b||_2 / n`.
pub fn per_coordinate_difference(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    ss.sqrt() / a.len() as f64
}

/// Random problem whose inverse covariance is strictly diagonally dominant.
///
/// Off-diagonal precision entries are uniform on `[-1, 1]`; each diagonal is
/// set to its row's absolute off-diagonal sum divided by a target modulus
/// drawn from `[0.3, 0.9]`. The matrix is then rescaled so the average
/// marginal variance is one. Means are uniform on `[-5, 5]` and every
/// coordinate gets a lower cut `u` marginal sds below its mean, `u` uniform
/// on `[0, 1.5]`.
pub fn generate_dominant_problem(n: usize, seed: u64) -> Result<Problem> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let mut prec = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(-1.0..=1.0);
            prec[(i, j)] = v;
            prec[(j, i)] = v;
        }
    }
    let target = rng.random_range(0.3..=0.9);
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| prec[(i, j)].abs()).sum();
        prec[(i, i)] = if off > 0.0 { off / target } else { 1.0 };
    }
    let sigma = invert_spd(&SymMatrix::new(prec)?)?;
    let scale = sigma.diagonal().iter().sum::<f64>() / n as f64;
    let sigma = SymMatrix::new(sigma.into_matrix() / scale)?;

    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..=5.0)).collect();
    let bounds = (0..n)
        .map(|i| {
            let u = rng.random_range(0.0..=1.5);
            TruncationBound::left(mu[i] - u * sigma.get(i, i).sqrt())
        })
        .collect();
    Problem::new(mu, Covariance::Dense(sigma), bounds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub n: usize,
    pub rho_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub chain: ChainConfig,
    pub solver: SolverConfig,
}

impl SweepOptions {
    /// Default grids: `rho` from 0.1 to 0.9 step 0.05, `a` from -2 to 2 step
    /// 0.25.
    pub fn default_rho_grid() -> Vec<f64> {
        (0..=16).map(|k| round_grid(0.1 + 0.05 * k as f64)).collect()
    }

    pub fn default_a_grid() -> Vec<f64> {
        (0..=16).map(|k| round_grid(-2.0 + 0.25 * k as f64)).collect()
    }
}

fn round_grid(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub a: f64,
    pub n: usize,
    /// `||w_fixed - w_gibbs||_2 / n`; `None` when the cell failed.
    pub delta: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub solver_ms: f64,
    pub mcmc_ms: f64,
    pub error: Option<String>,
}

/// Fixed point vs. Gibbs over a `(rho, a)` grid with zero mean and a common
/// lower cut. Cell `k` (row-major, `rho` outer) uses chain stream `k`.
pub fn sweep(opts: &SweepOptions, exec: Execution) -> Result<Vec<SweepRow>> {
    if opts.rho_grid.is_empty() || opts.a_grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be non-empty".into()));
    }
    if let Some(r) = opts.rho_grid.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(Error::InvalidArgument(format!("rho must lie in [0, 1), got {r}")));
    }
    opts.chain.validate()?;
    let cols = opts.a_grid.len();
    let cells = opts.rho_grid.len() * cols;
    Ok(map_indexed(exec, cells, |k| {
        let rho = opts.rho_grid[k / cols];
        let a = opts.a_grid[k % cols];
        sweep_cell(opts, rho, a, k as u64)
    }))
}

fn sweep_cell(opts: &SweepOptions, rho: f64, a: f64, stream: u64) -> SweepRow {
    let mut row = SweepRow {
        rho,
        a,
        n: opts.n,
        delta: None,
        iterations: 0,
        converged: false,
        solver_ms: 0.0,
        mcmc_ms: 0.0,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let problem = Problem::expcorr_left(opts.n, rho, a)?;
        let params = problem.conditional_params()?;
        let t0 = Instant::now();
        let trace = solve_with_params(&params, problem.bounds(), &opts.solver)?;
        row.solver_ms = t0.elapsed().as_secs_f64() * 1e3;
        row.iterations = trace.iterations_used;
        row.converged = trace.converged;
        let chain = ChainConfig {
            stream,
            ..opts.chain.clone()
        };
        let t1 = Instant::now();
        let stats = gibbs_with_params(&params, problem.bounds(), &chain)?;
        row.mcmc_ms = t1.elapsed().as_secs_f64() * 1e3;
        row.delta = Some(per_coordinate_difference(trace.fixed_point(), &stats.mean_estimate));
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write sweep rows as CSV, preceded by a version comment line. Timing
/// columns are only written when asked for, since they vary run to run.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W, timing: bool) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_VERSION}")?;
    let mut w = csv_writer(out);
    let mut header = vec!["rho", "a", "n", "delta", "iterations", "converged", "error"];
    if timing {
        header.extend(["solver_ms", "mcmc_ms"]);
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.rho.to_string(),
            r.a.to_string(),
            r.n.to_string(),
            opt_num(r.delta),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
        ];
        if timing {
            rec.push(format!("{:.3}", r.solver_ms));
            rec.push(format!("{:.3}", r.mcmc_ms));
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareOptions {
    pub dims: RangeInclusive<usize>,
    pub trials: usize,
    pub chain: ChainConfig,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub n: usize,
    pub trials: usize,
    /// Average over trials of `||w_fixed - w_gibbs||_2 / n`.
    pub delta_mean: f64,
    pub delta_max: f64,
    /// Trials where the solver hit its iteration budget.
    pub unconverged: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct TrialOutcome {
    delta: f64,
    converged: bool,
}

fn dominant_problem_for(seed: u64, n: usize, trial: usize) -> Result<Problem> {
    let mut last = None;
    for attempt in 0..GENERATOR_RETRIES {
        let s = derive_seed(seed, &[n as u64, trial as u64, attempt]);
        let p = generate_dominant_problem(n, s)?;
        let rep = p.conditional_params()?.dominance();
        if rep.is_dominant {
            return Ok(p);
        }
        last = Some(Error::NotDominant {
            modulus: rep.modulus,
            worst_row: rep.worst_row,
        });
    }
    Err(last.expect("at least one attempt"))
}

fn compare_trial(opts: &CompareOptions, n: usize, trial: usize) -> Result<TrialOutcome> {
    let problem = dominant_problem_for(opts.chain.seed, n, trial)?;
    let params = problem.conditional_params()?;
    let trace = solve_with_params(&params, problem.bounds(), &opts.solver)?;
    let chain = ChainConfig {
        seed: derive_seed(opts.chain.seed, &[n as u64, trial as u64]),
        stream: 1,
        ..opts.chain.clone()
    };
    let stats = gibbs_with_params(&params, problem.bounds(), &chain)?;
    Ok(TrialOutcome {
        delta: per_coordinate_difference(trace.fixed_point(), &stats.mean_estimate),
        converged: trace.converged,
    })
}

/// Average fixed-point vs. Gibbs difference over random dominant problems,
/// per dimension.
pub fn compare(opts: &CompareOptions, exec: Execution) -> Result<Vec<CompareRow>> {
    if opts.dims.is_empty() || *opts.dims.start() == 0 {
        return Err(Error::InvalidArgument("dimension range must be non-empty and start at 1 or more".into()));
    }
    if opts.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    opts.chain.validate()?;
    let dims: Vec<usize> = opts.dims.clone().collect();
    let jobs = dims.len() * opts.trials;
    let outcomes = map_indexed(exec, jobs, |k| {
        compare_trial(opts, dims[k / opts.trials], k % opts.trials)
    });
    let mut rows = Vec::with_capacity(dims.len());
    for (d, chunk) in dims.iter().zip(outcomes.chunks(opts.trials)) {
        let chunk: Vec<&TrialOutcome> = chunk.iter().map(|r| r.as_ref()).collect::<std::result::Result<_, _>>().map_err(|e| e.clone())?;
        let deltas: Vec<f64> = chunk.iter().map(|t| t.delta).collect();
        rows.push(CompareRow {
            n: *d,
            trials: opts.trials,
            delta_mean: deltas.iter().sum::<f64>() / deltas.len() as f64,
            delta_max: deltas.iter().copied().fold(0.0, f64::max),
            unconverged: chunk.iter().filter(|t| !t.converged).count(),
        });
    }
    Ok(rows)
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{COMPARE_CSV_VERSION}")?;
    let mut w = csv_writer(out);
    w.write_record(["n", "trials", "delta_mean", "delta_max", "unconverged"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.trials.to_string(),
            r.delta_mean.to_string(),
            r.delta_max.to_string(),
            r.unconverged.to_string(),
        ])?;
    }
    w.flush()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleReport {
    pub n: usize,
    pub rho: f64,
    pub iterations: usize,
    pub final_delta: f64,
    pub converged: bool,
    pub modulus: f64,
    pub wall_seconds: f64,
}

/// Large exponential-correlation problem solved through the tridiagonal
/// precision. Means are zero, or uniform on `[-1, 1]` when a seed is given;
/// every coordinate is cut 0.5 below its mean.
pub fn scale_problem(n: usize, rho: f64, seed: Option<u64>) -> Result<Problem> {
    let mu: Vec<f64> = match seed {
        Some(s) => {
            let mut rng = stream_rng(s, 0);
            (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
        }
        None => vec![0.0; n],
    };
    let bounds = mu.iter().map(|m| TruncationBound::left(m - 0.5)).collect();
    Problem::new(
        mu,
        Covariance::ExpCorr(crate::expcorr::ExpCorrSpec::new(n, rho)?),
        bounds,
    )
}

pub fn scale(n: usize, rho: f64, seed: Option<u64>, solver: &SolverConfig) -> Result<(ScaleReport, SolverTrace)> {
    let problem = scale_problem(n, rho, seed)?;
    let cfg = SolverConfig {
        record_iterates: false,
        ..solver.clone()
    };
    let t0 = Instant::now();
    let trace = solve(&problem, &cfg)?;
    let wall_seconds = t0.elapsed().as_secs_f64();
    Ok((
        ScaleReport {
            n,
            rho,
            iterations: trace.iterations_used,
            final_delta: trace.final_delta().unwrap_or(0.0),
            converged: trace.converged,
            modulus: trace.modulus.modulus,
            wall_seconds,
        },
        trace,
    ))
}

/// Published per-iteration `||w(t) - w(t-1)||_1 / n` of the fixed-point
/// scheme on the bundled five-dimensional problem (iterations 1..=10).
pub const TABLE1_PUBLISHED_SOLVER: [f64; 10] = [
    6.278, 571.150e-3, 34.602e-3, 3.897e-3, 324.702e-6, 27.751e-6, 1.920e-6, 133.025e-9, 0.0, 0.0,
];

/// Published running-mean steps of the Gibbs sampler on the same problem.
pub const TABLE1_PUBLISHED_MCMC: [f64; 10] = [
    95.130e-3, 72.952e-3, 47.163e-3, 43.741e-3, 35.021e-3, 25.441e-3, 34.047e-3, 14.612e-3, 17.539e-3,
    21.859e-3,
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub iteration: usize,
    pub solver_delta: Option<f64>,
    pub published_solver_delta: f64,
    pub mcmc_delta: Option<f64>,
    pub published_mcmc_delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
    pub fixed_point: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
}

/// Convergence trace on the bundled five-dimensional problem, started from
/// the origin (the published first step of 6.278 is the mean absolute value
/// of the first iterate).
pub fn table1(solver: &SolverConfig, chain: Option<&ChainConfig>) -> Result<Table1Report> {
    let problem = load_bundled("table1")?;
    let cfg = SolverConfig {
        initial: Some(vec![0.0; problem.dim()]),
        ..solver.clone()
    };
    let trace = solve(&problem, &cfg)?;
    let mcmc = match chain {
        Some(c) => {
            let c = ChainConfig {
                trace_iters: TABLE1_PUBLISHED_MCMC.len(),
                ..c.clone()
            };
            Some(gibbs_estimate(&problem, &c)?.running_mean_deltas)
        }
        None => None,
    };
    let rows = (0..TABLE1_PUBLISHED_SOLVER.len())
        .map(|t| Table1Row {
            iteration: t + 1,
            solver_delta: trace.deltas.get(t).copied(),
            published_solver_delta: TABLE1_PUBLISHED_SOLVER[t],
            mcmc_delta: mcmc.as_ref().and_then(|m| m.get(t).copied()),
            published_mcmc_delta: TABLE1_PUBLISHED_MCMC[t],
        })
        .collect();
    Ok(Table1Report {
        rows,
        fixed_point: trace.fixed_point().to_vec(),
        converged: trace.converged,
        iterations_used: trace.iterations_used,
    })
}

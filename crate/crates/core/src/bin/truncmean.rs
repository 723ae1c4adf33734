use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use truncmean::experiments::{
    compare, scale, sweep, table1, write_compare_csv, write_sweep_csv, CompareOptions, SweepOptions,
};
use truncmean::gibbs::{gibbs_estimate, ChainConfig};
use truncmean::par::Execution;
use truncmean::problem_file::ProblemFile;
use truncmean::solver::{solve, SolverConfig};
use truncmean::Problem;

#[derive(Parser)]
#[command(name = "truncmean", about = "Means of one-sided truncated multivariate normals")]
struct Cli {
    /// Run every driver on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed-point estimate for a problem file.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write every iterate and step size as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Gibbs-sampler estimate for a problem file.
    Mcmc {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fixed point vs. Gibbs over a (rho, a) grid of exponential-correlation problems.
    Sweep {
        #[arg(long, default_value_t = 25)]
        n: usize,
        /// Comma-separated rho values (default 0.1 to 0.9 step 0.05).
        #[arg(long, allow_hyphen_values = true)]
        rho_grid: Option<String>,
        /// Comma-separated cut points (default -2 to 2 step 0.25).
        #[arg(long, allow_hyphen_values = true)]
        a_grid: Option<String>,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        csv_out: Option<PathBuf>,
        /// Emit JSON rows instead of CSV.
        #[arg(long)]
        json: bool,
        /// Add per-cell wall-time columns.
        #[arg(long)]
        timing: bool,
    },
    /// Fixed point vs. Gibbs on random problems with dominant inverse covariance.
    Compare {
        /// Dimension range, e.g. 2..15 (inclusive).
        #[arg(long, default_value = "2..15")]
        dims: String,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        csv_out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Large exponential-correlation problem through the banded precision.
    Scale {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Randomize the means (uniform on [-1, 1]) under this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Include wall time in the report.
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Convergence trace on the bundled five-dimensional problem.
    Table1 {
        /// Also trace the Gibbs running mean.
        #[arg(long)]
        mcmc: bool,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        json: bool,
    },
    /// Print the version.
    Version,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 200_000)]
    iters: usize,
    #[arg(long, default_value_t = 20_000)]
    burnin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ChainArgs {
    fn config(&self) -> ChainConfig {
        ChainConfig::new(self.iters, self.burnin, self.seed)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Accepted for symmetry with the table commands; output is always JSON.
    #[arg(long)]
    json: bool,
}

enum Failure {
    Input(String),
    NotConverged,
}

impl From<truncmean::Error> for Failure {
    fn from(e: truncmean::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged) => {
            eprintln!("error: iteration budget exhausted before convergence");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Problem, Failure> {
    Ok(ProblemFile::read(path)?.into_problem()?)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Input(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Outcome {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::Input(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Input(format!("bad {what} value {s:?}")))
        })
        .collect()
}

fn parse_dims(text: &str) -> Result<std::ops::RangeInclusive<usize>, Failure> {
    let bad = || Failure::Input(format!("bad dimension range {text:?}, expected e.g. 2..15"));
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
        None => (text, text),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    Ok(lo..=hi)
}

fn run(command: Command, exec: Execution) -> Outcome {
    match command {
        Command::Solve {
            input,
            solver,
            trace_out,
            out,
        } => {
            let problem = load(&input)?;
            let trace = solve(&problem, &solver.config())?;
            let report = json!({
                "fixed_point": trace.fixed_point(),
                "iterations": trace.iterations_used,
                "converged": trace.converged,
                "deltas": trace.deltas,
                "modulus": trace.modulus.modulus,
                "dominant": trace.modulus.is_dominant,
                "violating_rows": trace.modulus.violating_rows,
                "warnings": trace.warnings,
            });
            emit_json(&report, out.json_out.as_deref())?;
            if let Some(path) = trace_out {
                let full = json!({
                    "iterates": trace.iterates,
                    "deltas": trace.deltas,
                    "steps_inf": trace.steps_inf,
                });
                emit_json(&full, Some(&path))?;
            }
            if !trace.converged {
                return Err(Failure::NotConverged);
            }
            Ok(())
        }
        Command::Mcmc { input, chain, out } => {
            let problem = load(&input)?;
            let stats = gibbs_estimate(&problem, &chain.config())?;
            emit_json(&stats, out.json_out.as_deref())
        }
        Command::Sweep {
            n,
            rho_grid,
            a_grid,
            chain,
            solver,
            csv_out,
            json,
            timing,
        } => {
            let opts = SweepOptions {
                n,
                rho_grid: match rho_grid {
                    Some(s) => parse_list(&s, "rho")?,
                    None => SweepOptions::default_rho_grid(),
                },
                a_grid: match a_grid {
                    Some(s) => parse_list(&s, "cut")?,
                    None => SweepOptions::default_a_grid(),
                },
                chain: chain.config(),
                solver: solver.config(),
            };
            let mut rows = sweep(&opts, exec)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("warning: {failed} cell(s) failed; see the error column");
            }
            if json {
                if !timing {
                    for r in &mut rows {
                        r.solver_ms = 0.0;
                        r.mcmc_ms = 0.0;
                    }
                }
                emit_json(&rows, csv_out.as_deref())
            } else {
                let mut out = output(csv_out.as_deref())?;
                write_sweep_csv(&rows, &mut out, timing)?;
                out.flush()?;
                Ok(())
            }
        }
        Command::Compare {
            dims,
            trials,
            chain,
            solver,
            csv_out,
            json,
        } => {
            let opts = CompareOptions {
                dims: parse_dims(&dims)?,
                trials,
                chain: chain.config(),
                solver: solver.config(),
            };
            let rows = compare(&opts, exec)?;
            if json {
                emit_json(&rows, csv_out.as_deref())
            } else {
                let mut out = output(csv_out.as_deref())?;
                write_compare_csv(&rows, &mut out)?;
                out.flush()?;
                Ok(())
            }
        }
        Command::Scale {
            n,
            rho,
            seed,
            solver,
            timing,
            out,
        } => {
            let (report, _) = scale(n, rho, seed, &solver.config())?;
            eprintln!("solved n = {n} in {:.3} s", report.wall_seconds);
            let mut value = serde_json::to_value(&report).map_err(|e| Failure::Input(e.to_string()))?;
            if !timing {
                value.as_object_mut().expect("report is an object").remove("wall_seconds");
            }
            emit_json(&value, out.json_out.as_deref())?;
            if !report.converged {
                return Err(Failure::NotConverged);
            }
            Ok(())
        }
        Command::Table1 {
            mcmc,
            chain,
            solver,
            json,
        } => {
            let chain_cfg = chain.config();
            let report = table1(&solver.config(), mcmc.then_some(&chain_cfg))?;
            if json {
                return emit_json(&report, None);
            }
            let mut out = output(None)?;
            writeln!(out, "{:>4}  {:>14}  {:>14}  {:>14}  {:>14}", "t", "fixed-point", "published", "gibbs", "published")?;
            let cell = |v: Option<f64>| v.map(|x| format!("{x:14.6e}")).unwrap_or_else(|| format!("{:>14}", "-"));
            for r in &report.rows {
                writeln!(
                    out,
                    "{:>4}  {}  {:14.6e}  {}  {:14.6e}",
                    r.iteration,
                    cell(r.solver_delta),
                    r.published_solver_delta,
                    cell(r.mcmc_delta),
                    r.published_mcmc_delta
                )?;
            }
            let fp: Vec<String> = report.fixed_point.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "fixed point: [{}]", fp.join(", "))?;
            writeln!(out, "converged: {} after {} sweeps", report.converged, report.iterations_used)?;
            out.flush()?;
            if !report.converged {
                return Err(Failure::NotConverged);
            }
            Ok(())
        }
        Command::Version => {
            println!("truncmean {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

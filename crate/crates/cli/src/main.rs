//! Command-line front end: critical-point classification, fixed-point
//! spectra, single trajectories, Monte-Carlo experiments, and step-size
//! sweeps over the built-in fixture families.
//!
//! Exit codes: 0 success, 2 parse/domain/config error, 3 a fixed-point-only
//! spectrum was requested away from a fixed point, 4 I/O error, 1 other
//! runtime failure.

mod config;

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use saddle_dynamics::experiment::{
    run_experiment, run_trajectory, summary_path, sweep_stepsize, threads_from_env,
    write_records_csv, ExperimentConfig, ExperimentSummary, InitDistribution,
};
use saddle_dynamics::jacobian::{
    differential, fd_differential, relative_frobenius, spectral_report, DEFAULT_TOL_DET,
    DEFAULT_TOL_SPEC,
};
use saddle_dynamics::objective::{critical_point_report, DEFAULT_TOL_EIG, DEFAULT_TOL_GRAD};
use saddle_dynamics::{fixture_by_name, Error, ObjectiveProblem, OptimizerMap, TrajectoryRecord};

#[derive(Parser)]
#[command(
    name = "saddle-dynamics",
    version,
    about = "First-order optimization maps as dynamical systems: classify critical points, \
             inspect fixed-point spectra, and run seeded saddle-avoidance experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MethodArgs {
    /// Fixture name: nesterov, quadratic:<d>, sphere-rayleigh:<d>, simplex-quadratic:<D>
    #[arg(long)]
    problem: String,
    /// gd | prox | cd | bcd | manifold-gd | mw | mirror-euclidean
    #[arg(long)]
    method: String,
    /// Step size (must be positive)
    #[arg(long)]
    alpha: f64,
    /// Blocks for bcd, e.g. `0,1;2,3`
    #[arg(long)]
    blocks: Option<String>,
    /// Treat an inadmissible step size as an error instead of a warning
    #[arg(long)]
    strict_stepsize: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a point: gradient residual, tangent Hessian spectrum, label
    Classify {
        /// Fixture name: nesterov, quadratic:<d>, sphere-rayleigh:<d>, simplex-quadratic:<D>
        #[arg(long)]
        problem: String,
        /// Comma-separated coordinates, e.g. `0,0`
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = DEFAULT_TOL_GRAD)]
        tol_grad: f64,
        #[arg(long, default_value_t = DEFAULT_TOL_EIG)]
        tol_eig: f64,
    },
    /// Eigenvalues, spectral radius, determinant, and stability of Dg at a point
    Spectrum {
        #[command(flatten)]
        method: MethodArgs,
        /// Comma-separated coordinates
        #[arg(long)]
        point: String,
        /// Also print the finite-difference cross-check error
        #[arg(long)]
        check_fd: bool,
        /// Step for the finite-difference cross-check
        #[arg(long, default_value_t = 1e-5)]
        fd_step: f64,
    },
    /// Iterate one trajectory from a given start and classify its limit
    Trajectory {
        #[command(flatten)]
        method: MethodArgs,
        /// Comma-separated starting point
        #[arg(long)]
        x0: String,
        #[arg(long, default_value_t = saddle_dynamics::experiment::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = saddle_dynamics::experiment::DEFAULT_TOL_GRAD)]
        tol_grad: f64,
        #[arg(long, default_value_t = saddle_dynamics::experiment::DEFAULT_TOL_STEP)]
        tol_step: f64,
        #[arg(long, default_value_t = saddle_dynamics::experiment::DEFAULT_DIVERGENCE_RADIUS)]
        divergence_radius: f64,
        #[arg(long, default_value_t = saddle_dynamics::experiment::DEFAULT_SADDLE_MATCH_RADIUS)]
        match_radius: f64,
        /// Write the record as a one-row CSV
        #[arg(long)]
        output: Option<String>,
    },
    /// Run a Monte-Carlo experiment from a config file
    Run {
        /// Path to a `key = value` config file
        #[arg(long)]
        config: String,
        #[arg(long)]
        strict_stepsize: bool,
    },
    /// Run one experiment per step size, seeds derived per alpha
    Sweep {
        #[arg(long)]
        config: String,
        /// Comma-separated step sizes, e.g. `0.05,0.1`
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        strict_stepsize: bool,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DomainViolation { .. }
            | Error::Config(_)
            | Error::MethodDomainMismatch { .. }
            | Error::InvalidPartition(_)
            | Error::RepeatedEigenvalues { .. }
            | Error::RowSumMismatch { .. } => 2,
            Error::NotAFixedPoint { .. } => 3,
            Error::Io(_) => 4,
            _ => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<String> for CliError {
    fn from(message: String) -> Self {
        CliError::usage(message)
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn build_map<'a>(
    args: &MethodArgs,
    problem: &'a ObjectiveProblem,
) -> Result<OptimizerMap<'a>, CliError> {
    let method = config::parse_method(&args.method, args.blocks.as_deref(), problem.dim())?;
    let map = OptimizerMap::new(method, args.alpha, problem)?;
    enforce_stepsize(&map, args.strict_stepsize)?;
    Ok(map)
}

fn enforce_stepsize(map: &OptimizerMap, strict: bool) -> Result<(), CliError> {
    let bound = map.step_size_bound();
    if !bound.admits(map.alpha()) {
        if strict {
            return Err(CliError::usage(format!(
                "step size {} violates the admissible bound {bound}",
                map.alpha()
            )));
        }
        eprintln!(
            "warning: step size {} is outside the admissible bound {bound}",
            map.alpha()
        );
    }
    Ok(())
}

fn format_vector(v: &saddle_dynamics::nalgebra::DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    parts.join(",")
}

fn print_record(record: &TrajectoryRecord) {
    println!("x0 = {}", format_vector(&record.x0));
    println!("x_final = {}", format_vector(&record.x_final));
    println!("iters = {}", record.iters);
    println!("final_grad_norm = {:.6e}", record.final_grad_norm);
    println!("termination = {}", record.termination);
    println!("limit_class = {}", record.limit_class);
    match (record.matched_critical_point, record.distance_to_match) {
        (Some(i), Some(d)) => println!("matched_cp = {i}  (distance {d:.6e})"),
        _ => println!("matched_cp = none"),
    }
}

fn print_summary(summary: &ExperimentSummary, output_path: &str) {
    println!("{summary}");
    if !output_path.is_empty() {
        println!("csv = {output_path}");
        println!("summary_file = {}", summary_path(Path::new(output_path)).display());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify { problem, point, tol_grad, tol_eig } => {
            let problem = fixture_by_name(&problem)?;
            let x = config::parse_point(&point, problem.dim())?;
            let report = critical_point_report(&problem, &x, tol_grad, tol_eig)?;
            println!("problem = {}", problem.name());
            println!("point = {}", format_vector(&x));
            println!("grad_norm = {:.6e}", report.grad_norm);
            let eigs: Vec<String> = report
                .tangent_hessian_eigenvalues
                .iter()
                .map(|e| format!("{e:.12e}"))
                .collect();
            println!("tangent_hessian_eigenvalues = {}", eigs.join(", "));
            println!("classification = {}", report.class);
            Ok(())
        }
        Command::Spectrum { method, point, check_fd, fd_step } => {
            let problem = fixture_by_name(&method.problem)?;
            let map = build_map(&method, &problem)?;
            let x = config::parse_point(&point, problem.dim())?;
            let dg = differential(&map, &x)?;
            let report = spectral_report(&dg, DEFAULT_TOL_SPEC, DEFAULT_TOL_DET)?;
            println!("problem = {}", problem.name());
            println!("method = {}", map.method().name());
            println!("alpha = {}", map.alpha());
            println!("{report}");
            if check_fd {
                let fd = fd_differential(&map, &x, fd_step)?;
                println!("fd_rel_error = {:.6e}", relative_frobenius(&dg, &fd));
            }
            Ok(())
        }
        Command::Trajectory {
            method,
            x0,
            max_iters,
            tol_grad,
            tol_step,
            divergence_radius,
            match_radius,
            output,
        } => {
            let problem = fixture_by_name(&method.problem)?;
            let map = build_map(&method, &problem)?;
            let start = config::parse_point(&x0, problem.dim())?;
            let mut config = ExperimentConfig::new(
                problem.name().to_string(),
                map.method().clone(),
                map.alpha(),
                // placeholder distribution; the start is explicit
                match problem.domain() {
                    saddle_dynamics::Domain::Euclidean { dim } => {
                        InitDistribution::symmetric_box(dim, -1.0, 1.0)
                    }
                    saddle_dynamics::Domain::UnitSphere { .. } => InitDistribution::UniformSphere,
                    saddle_dynamics::Domain::SimplexInterior { .. } => {
                        InitDistribution::DirichletUniform
                    }
                },
                1,
                0,
            );
            config.max_iters = max_iters;
            config.tol_grad = tol_grad;
            config.tol_step = tol_step;
            config.divergence_radius = divergence_radius;
            config.saddle_match_radius = match_radius;
            config.validate(&problem)?;

            let record = run_trajectory(&map, &start, &config)?;
            print_record(&record);
            if let Some(path) = output {
                write_records_csv(Path::new(&path), std::slice::from_ref(&record), problem.dim())?;
                println!("csv = {path}");
            }
            Ok(())
        }
        Command::Run { config: path, strict_stepsize } => {
            let text = std::fs::read_to_string(&path).map_err(Error::Io)?;
            let parsed = config::parse_experiment_file(&text)?;
            let map = OptimizerMap::new(
                parsed.config.method.clone(),
                parsed.config.alpha,
                &parsed.problem,
            )?;
            enforce_stepsize(&map, strict_stepsize)?;
            let out = run_experiment(&parsed.problem, &parsed.config)?;
            print_summary(&out.summary, &parsed.config.output_path);
            Ok(())
        }
        Command::Sweep { config: path, alphas, strict_stepsize } => {
            let text = std::fs::read_to_string(&path).map_err(Error::Io)?;
            let parsed = config::parse_experiment_file(&text)?;
            let alphas: Vec<f64> = alphas
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::usage(format!("bad alpha list `{alphas}`")))?;
            if alphas.iter().any(|&a| !(a > 0.0)) {
                return Err(CliError::usage("alphas must be positive".to_string()));
            }
            for &alpha in &alphas {
                let map =
                    OptimizerMap::new(parsed.config.method.clone(), alpha, &parsed.problem)?;
                enforce_stepsize(&map, strict_stepsize)?;
            }
            let summaries =
                sweep_stepsize(&parsed.problem, &parsed.config, &alphas, threads_from_env())?;
            println!(
                "{:>10} {:>10} {:>9} {:>9} {:>9} {:>10} {:>13} {:>10} {:>6} {:>15}",
                "alpha", "converged", "diverged", "max_iter", "boundary", "local_min",
                "strict_saddle", "unmatched", "none", "saddle_fraction"
            );
            for s in &summaries {
                println!(
                    "{:>10} {:>10} {:>9} {:>9} {:>9} {:>10} {:>13} {:>10} {:>6} {:>15}",
                    s.config.alpha,
                    s.terminations.converged,
                    s.terminations.diverged,
                    s.terminations.max_iters,
                    s.terminations.boundary,
                    s.limits.local_min,
                    s.limits.strict_saddle,
                    s.limits.unmatched_critical,
                    s.limits.none,
                    s.saddle_fraction
                );
            }
            Ok(())
        }
    }
}

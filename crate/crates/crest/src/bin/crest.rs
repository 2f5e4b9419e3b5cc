//! Command-line front end for the refinement runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use crest::driver::{run, EmitFlags, Mode, RunConfig};
use crest::estimator::Variant;

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Uniform,
    Adaptive,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliEstimator {
    Cr,
    Crtilde,
}

/// Smoothed Crouzeix-Raviart benchmark runs with a posteriori error
/// estimation on the unit square.
#[derive(Parser)]
#[command(name = "crest", version, about)]
struct Cli {
    /// Position of the vertical source line, strictly inside (0, 1).
    #[arg(long, default_value_t = 2.0 / 3.0)]
    lambda: f64,

    /// Refinement mode.
    #[arg(long, value_enum, default_value_t = CliMode::Uniform)]
    mode: CliMode,

    /// Bubble indicator variant.
    #[arg(long, value_enum, default_value_t = CliEstimator::Cr)]
    estimator: CliEstimator,

    /// Doerfler bulk parameter for adaptive marking.
    #[arg(long, default_value_t = 0.7)]
    theta: f64,

    /// Weight of the bubble indicator in the combined estimator.
    #[arg(long, default_value_t = 1.0)]
    c1: f64,

    /// Weight of the oscillation surrogate in the combined estimator.
    #[arg(long, default_value_t = 0.3)]
    c2: f64,

    /// Stop before refining beyond this many elements.
    #[arg(long, default_value_t = 100_000)]
    max_elements: usize,

    /// Hard cap on the number of refinement iterations.
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,

    /// Relative residual tolerance of the linear solver.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,

    /// Output directory for emitted files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Comma-separated list of outputs to write: csv, vtk, svg.
    #[arg(long, value_delimiter = ',', value_name = "KIND")]
    emit: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut emit = EmitFlags::default();
    for kind in &cli.emit {
        match kind.as_str() {
            "csv" => emit.csv = true,
            "vtk" => emit.vtk = true,
            "svg" => emit.svg = true,
            other => {
                eprintln!("error: unknown emit kind '{other}' (expected csv, vtk, or svg)");
                return ExitCode::FAILURE;
            }
        }
    }
    if (emit.csv || emit.vtk || emit.svg) && cli.out.is_none() {
        eprintln!("error: --emit requires --out DIR");
        return ExitCode::FAILURE;
    }

    let config = RunConfig {
        lambda: cli.lambda,
        mode: match cli.mode {
            CliMode::Uniform => Mode::Uniform,
            CliMode::Adaptive => Mode::Adaptive,
        },
        variant: match cli.estimator {
            CliEstimator::Cr => Variant::Cr,
            CliEstimator::Crtilde => Variant::CrTilde,
        },
        theta: cli.theta,
        c1: cli.c1,
        c2: cli.c2,
        max_elements: cli.max_elements,
        max_iterations: cli.max_iterations,
        tol: cli.tol,
        out_dir: cli.out,
        emit,
    };

    match run(&config) {
        Ok(out) => {
            print!("{}", crest::driver::csv_table(&out.reports, &out.sizes));
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

//! Command-line pipelines for the kwgraph solvers.
//!
//! Every `cmd_*` function reads its inputs from disk, writes data to `out`
//! and diagnostics to `err`, and returns the process exit code.

mod commands;
mod problem_file;
mod solution_file;

pub use commands::{
    cmd_lambda_star, cmd_solve, cmd_sweep, cmd_verify, parse_grid, LambdaStarOptions,
    SolveOptions, SweepOptions, EXIT_FAILURE, EXIT_INFEASIBLE, EXIT_OK, EXIT_SOLVER,
    SWEEP_HEADER,
};
pub use problem_file::{emit_problem, parse_problem, ProblemFile};
pub use solution_file::{emit_solutions, fmt_num, parse_solutions, StoredSolution, SOLUTION_HEADER};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{}{reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Validation { line: Option<usize>, reason: String },
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("{0}")]
    Usage(String),
}

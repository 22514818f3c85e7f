use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kwgraph::solvers::SolverConfig;
use kwgraph_cli::{
    cmd_lambda_star, cmd_solve, cmd_sweep, cmd_verify, parse_grid, LambdaStarOptions,
    SolveOptions, SweepOptions, EXIT_FAILURE,
};

#[derive(Parser)]
#[command(name = "kwgraph")]
#[command(about = "Solve the Kazdan-Warner equation on finite weighted graphs")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Residual tolerance (sup norm)
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,

    /// Seed for the randomized retry in the mountain-pass search
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            residual_tol: self.tol,
            rng_seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve at one lambda
    Solve {
        file: PathBuf,
        /// Overrides the file's lambda
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Also search for the second (mountain-pass) solution
        #[arg(long)]
        both: bool,
        /// Write the solutions as CSV
        #[arg(long)]
        emit: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Bracket the existence threshold lambda*
    LambdaStar {
        file: PathBuf,
        /// Bracket width; defaults to 1e-3 times -min K
        #[arg(long)]
        width_tol: Option<f64>,
        /// Write the lower-end solution as CSV
        #[arg(long)]
        emit: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve over a lambda grid and write CSV rows
    Sweep {
        file: PathBuf,
        /// lo:hi:step
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        both: bool,
        /// Output CSV; standard output if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check a solution CSV against a problem file
    Verify {
        file: PathBuf,
        solution: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match cli.command {
        Command::Solve {
            file,
            lambda,
            both,
            emit,
            common,
        } => {
            let opts = SolveOptions {
                lambda,
                both,
                emit,
                cfg: common.config(),
            };
            cmd_solve(&file, &opts, &mut out, &mut err)
        }
        Command::LambdaStar {
            file,
            width_tol,
            emit,
            common,
        } => {
            let opts = LambdaStarOptions {
                width_tol,
                emit,
                cfg: common.config(),
            };
            cmd_lambda_star(&file, &opts, &mut out, &mut err)
        }
        Command::Sweep {
            file,
            grid,
            both,
            out: target,
            common,
        } => match parse_grid(&grid) {
            Ok(grid) => {
                let opts = SweepOptions {
                    grid,
                    both,
                    out: target,
                    cfg: common.config(),
                };
                cmd_sweep(&file, &opts, &mut out, &mut err)
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAILURE
            }
        },
        Command::Verify {
            file,
            solution,
            common,
        } => cmd_verify(&file, &solution, &common.config(), &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}

//! Solvers for the Kazdan-Warner equation `Δu + κ - (K + λ) e^{2u} = 0` on
//! finite connected weighted graphs.
//!
//! The crate covers the four solvability regimes in λ: a unique solution for
//! `λ ≤ 0`, two solutions below the threshold λ*, and none beyond it.
//!
//! * [`graph`] builds weighted graphs and evaluates the Laplacian, gradient
//!   form, integrals and norms.
//! * [`model`] holds the problem data, its energy, derivatives and the
//!   nonexistence certificate.
//! * [`solvers`] contains the convex minimizer, monotone iteration,
//!   λ-continuation, λ* bracketing and the mountain-pass search.
//! * [`oracle`] is brute-force ground truth used by the test suites.

pub mod error;
pub mod function;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod solvers;

pub use error::{KwError, Result};
pub use function::VertexFunction;
pub use graph::{build_graph, Edge, WeightedGraph};
pub use model::{Classification, KwProblem, OrderInterval, SolutionCandidate};
pub use solvers::{
    continuation_solve, estimate_lambda_star, monotone_solve, mountain_pass_solve, solve_convex,
    solve_poisson, SolverConfig,
};

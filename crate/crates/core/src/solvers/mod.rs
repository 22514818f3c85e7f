//! Solution procedures for the Kazdan-Warner problem.
//!
//! * [`solve_poisson`]: `Δv = rhs` on the mean-zero complement of the constants.
//! * [`solve_convex`]: damped Newton on the strictly convex energy (`K_λ ≤ 0`).
//! * [`monotone_solve`]: sub/supersolution iteration inside an order interval.
//! * [`continuation_solve`]: the minimal branch for `λ > 0` by λ-continuation.
//! * [`estimate_lambda_star`]: bisection bracket for the existence threshold.
//! * [`mountain_pass_solve`]: the second, saddle-type solution.

mod continuation;
mod convex;
mod monotone;
mod mountain_pass;
mod newton;
mod poisson;
mod threshold;

pub use continuation::{continuation_solve, continuation_solve_report, BranchPoint, ContinuationReport};
pub use convex::{minimize_energy, solve_convex, NewtonTrace};
pub use monotone::{
    build_lower_solution, choose_monotonicity_constant, monotone_solve, monotone_solve_observed,
    MonotoneOutcome, Side,
};
pub use mountain_pass::{mountain_pass_solve, MountainPassReport};
pub use newton::newton_solve;
pub use poisson::solve_poisson;
pub use threshold::{estimate_lambda_star, HiEvidence, LambdaStarBracket};

use crate::error::{KwError, Result};
use crate::model::KwProblem;

/// Tolerances and budgets shared by every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// ℓ^∞ bound on the equation residual for an accepted solution.
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    pub max_monotone_iters: usize,
    /// Backtracking factor in `(0, 1)`.
    pub line_search_shrink: f64,
    /// `None` means `0.1 · (-min K)`.
    pub continuation_initial_step: Option<f64>,
    pub continuation_min_step: f64,
    pub path_points: usize,
    pub mp_deform_tol: f64,
    pub mp_max_deforms: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_newton_iters: 200,
            max_monotone_iters: 10_000,
            line_search_shrink: 0.5,
            continuation_initial_step: None,
            continuation_min_step: 1e-6,
            path_points: 40,
            mp_deform_tol: 1e-8,
            mp_max_deforms: 50_000,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("residual_tol", self.residual_tol),
            ("continuation_min_step", self.continuation_min_step),
            ("mp_deform_tol", self.mp_deform_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KwError::PreconditionViolated(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(s) = self.continuation_initial_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(KwError::PreconditionViolated(format!(
                    "continuation_initial_step must be positive, got {s}"
                )));
            }
        }
        if !(self.line_search_shrink > 0.0 && self.line_search_shrink < 1.0) {
            return Err(KwError::PreconditionViolated(format!(
                "line_search_shrink must lie in (0, 1), got {}",
                self.line_search_shrink
            )));
        }
        if self.path_points < 3 {
            return Err(KwError::PreconditionViolated(format!(
                "path_points must be at least 3, got {}",
                self.path_points
            )));
        }
        Ok(())
    }

    pub(crate) fn initial_step(&self, p: &KwProblem) -> f64 {
        self.continuation_initial_step.unwrap_or_else(|| {
            let ceiling = p.lambda_ceiling();
            if ceiling > 0.0 {
                0.1 * ceiling
            } else {
                0.1
            }
        })
    }
}

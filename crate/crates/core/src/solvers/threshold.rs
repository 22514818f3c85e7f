use super::continuation::continue_from;
use super::convex::solve_convex;
use super::SolverConfig;
use crate::error::{KwError, Result};
use crate::model::{KwProblem, SolutionCandidate};

/// Bisection steps allowed before giving up on reaching the width.
const MAX_BISECTIONS: usize = 200;

/// Why the upper end of the bracket is believed to have no solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiEvidence {
    /// `K_λ ≥ 0`: no solution exists.
    CertifiedInfeasible,
    /// The continuation stalled; not a proof of nonexistence.
    BudgetFailed,
}

impl HiEvidence {
    pub fn as_str(self) -> &'static str {
        match self {
            HiEvidence::CertifiedInfeasible => "certified_infeasible",
            HiEvidence::BudgetFailed => "budget_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaStarBracket {
    /// Largest λ tried with a certified solution.
    pub lambda_lo: f64,
    /// Smallest λ tried where the pipeline failed or the certificate fired.
    pub lambda_hi: f64,
    /// Solution at `lambda_lo`.
    pub evidence_lo: SolutionCandidate,
    pub evidence_hi: HiEvidence,
    pub bisections: usize,
}

impl LambdaStarBracket {
    pub fn width(&self) -> f64 {
        self.lambda_hi - self.lambda_lo
    }
}

/// Brackets the existence threshold by bisection on `(0, -min K)`.
///
/// Each trial continues the branch from the current lower end, so a trial
/// only has to cover `mid - lo`.
pub fn estimate_lambda_star(
    p: &KwProblem,
    width_tol: f64,
    cfg: &SolverConfig,
) -> Result<LambdaStarBracket> {
    p.check_hypotheses()?;
    if !(width_tol > 0.0 && width_tol.is_finite()) {
        return Err(KwError::PreconditionViolated(format!(
            "width_tol must be positive, got {width_tol}"
        )));
    }
    cfg.validate()?;
    let mut lo = 0.0;
    let mut lo_solution = solve_convex(&p.with_lambda(0.0), cfg, None)?;
    let mut hi = p.lambda_ceiling();
    let mut evidence_hi = HiEvidence::CertifiedInfeasible;
    let mut bisections = 0;
    while hi - lo > width_tol || lo == 0.0 {
        if bisections == MAX_BISECTIONS {
            return Err(KwError::ConvergenceFailure(format!(
                "bracket [{lo}, {hi}] not resolved in {MAX_BISECTIONS} bisections"
            )));
        }
        bisections += 1;
        let mid = 0.5 * (lo + hi);
        match continue_from(p, lo, &lo_solution, mid, cfg) {
            Ok(report) if report.candidate.residual_sup <= cfg.residual_tol => {
                lo = mid;
                lo_solution = report.candidate;
            }
            Ok(_) | Err(KwError::ContinuationStalled { .. }) | Err(KwError::ConvergenceFailure(_)) => {
                hi = mid;
                evidence_hi = HiEvidence::BudgetFailed;
            }
            Err(KwError::CertifiedInfeasible { .. }) => {
                hi = mid;
                evidence_hi = HiEvidence::CertifiedInfeasible;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(LambdaStarBracket {
        lambda_lo: lo,
        lambda_hi: hi,
        evidence_lo: lo_solution,
        evidence_hi,
        bisections,
    })
}

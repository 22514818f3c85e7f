use nalgebra::DVector;

use super::SolverConfig;
use crate::error::{KwError, Result};
use crate::function::VertexFunction;
use crate::model::KwProblem;

/// Largest ℓ^∞ length of a trial step before backtracking starts.
pub(crate) const MAX_STEP: f64 = 2.0;

/// Newton direction `d` solving `J(u) d = -r(u)`.
pub(crate) fn newton_direction(
    p: &KwProblem,
    u: &VertexFunction,
    r: &VertexFunction,
) -> Result<VertexFunction> {
    let j = p.jacobian(u)?;
    let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
    let d = j
        .lu()
        .solve(&rhs)
        .ok_or_else(|| KwError::ConvergenceFailure("singular Jacobian".into()))?;
    VertexFunction::new(d.iter().copied().collect())
        .map_err(|_| KwError::ConvergenceFailure("non-finite Newton direction".into()))
}

/// Damped Newton on the residual with backtracking on `½∫r² dμ`.
///
/// Converges to whichever critical point attracts `start`; callers decide
/// whether the result is the one they wanted.
pub fn newton_solve(
    p: &KwProblem,
    start: &VertexFunction,
    cfg: &SolverConfig,
) -> Result<VertexFunction> {
    let g = p.graph();
    let mut u = start.clone();
    let mut r = p.residual(&u)?;
    for _ in 0..cfg.max_newton_iters {
        if r.sup_norm() <= cfg.residual_tol {
            return Ok(u);
        }
        let merit = 0.5 * g.inner(&r, &r)?;
        let d = newton_direction(p, &u, &r)?;
        let mut alpha = (MAX_STEP / d.sup_norm()).min(1.0);
        loop {
            let trial = u.axpy(alpha, &d);
            if let Ok(rt) = p.residual(&trial) {
                let mt = 0.5 * g.inner(&rt, &rt)?;
                if mt <= merit * (1.0 - 2e-4 * alpha) {
                    u = trial;
                    r = rt;
                    break;
                }
            }
            alpha *= cfg.line_search_shrink;
            if alpha < 1e-12 {
                return Err(KwError::ConvergenceFailure(format!(
                    "Newton line search failed at residual {:e}",
                    r.sup_norm()
                )));
            }
        }
    }
    if r.sup_norm() <= cfg.residual_tol {
        return Ok(u);
    }
    Err(KwError::ConvergenceFailure(format!(
        "Newton budget of {} iterations exhausted at residual {:e}",
        cfg.max_newton_iters,
        r.sup_norm()
    )))
}

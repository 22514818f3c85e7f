use super::newton::{newton_direction, MAX_STEP};
use super::SolverConfig;
use crate::error::{KwError, Result};
use crate::function::VertexFunction;
use crate::model::{Classification, KwProblem, SolutionCandidate};

/// Armijo constant for the energy line search.
const ARMIJO: f64 = 1e-4;

/// Energies and residuals of the accepted Newton iterates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonTrace {
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Predicted decrease `-dE(u)(d)` of each accepted step.
    pub predicted_decrease: Vec<f64>,
}

/// Damped Newton with backtracking on the energy.
///
/// Every accepted step satisfies the Armijo condition and so strictly lowers
/// `E_λ`, except once the predicted decrease drops below the energy's
/// rounding error; such steps are accepted when they do not raise the energy
/// by more than rounding and do reduce the residual.
pub fn minimize_energy(
    p: &KwProblem,
    cfg: &SolverConfig,
    start: Option<&VertexFunction>,
) -> Result<(VertexFunction, NewtonTrace)> {
    cfg.validate()?;
    let g = p.graph();
    let mut u = match start {
        Some(s) => {
            g.check(s)?;
            s.clone()
        }
        None => g.zeros(),
    };
    let mut energy = p.energy(&u)?;
    let mut r = p.residual(&u)?;
    let mut trace = NewtonTrace::default();
    trace.energies.push(energy);
    trace.residuals.push(r.sup_norm());

    for _ in 0..cfg.max_newton_iters {
        if r.sup_norm() <= cfg.residual_tol {
            return Ok((u, trace));
        }
        let mut d = newton_direction(p, &u, &r)?;
        // dE(u)(d) = ∫ 2r·d dμ
        let mut slope = 2.0 * g.inner(&r, &d)?;
        if !(slope < 0.0) {
            d = r.scale(-1.0);
            slope = 2.0 * g.inner(&r, &d)?;
        }
        let roundoff = 8.0 * f64::EPSILON * (1.0 + energy.abs());
        let mut alpha = (MAX_STEP / d.sup_norm()).min(1.0);
        let mut accepted = false;
        while alpha >= 1e-14 {
            let trial = u.axpy(alpha, &d);
            if let (Ok(et), Ok(rt)) = (p.energy(&trial), p.residual(&trial)) {
                let armijo = et <= energy + ARMIJO * alpha * slope && et < energy;
                let polish = -alpha * slope <= roundoff
                    && et <= energy + roundoff
                    && rt.sup_norm() < r.sup_norm();
                if armijo || polish {
                    trace.predicted_decrease.push(-alpha * slope);
                    u = trial;
                    energy = et;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            alpha *= cfg.line_search_shrink;
        }
        if !accepted {
            return Err(KwError::ConvergenceFailure(format!(
                "energy line search failed at residual {:e}",
                r.sup_norm()
            )));
        }
        trace.energies.push(energy);
        trace.residuals.push(r.sup_norm());
    }
    if r.sup_norm() <= cfg.residual_tol {
        return Ok((u, trace));
    }
    Err(KwError::ConvergenceFailure(format!(
        "Newton budget of {} iterations exhausted at residual {:e}",
        cfg.max_newton_iters,
        r.sup_norm()
    )))
}

/// The unique minimizer of the strictly convex energy when `K_λ ≤ 0` and
/// `K_λ ≢ 0`, started from `start` or from zero.
pub fn solve_convex(
    p: &KwProblem,
    cfg: &SolverConfig,
    start: Option<&VertexFunction>,
) -> Result<SolutionCandidate> {
    let kl = p.k_lambda();
    if kl.max() > 0.0 {
        return Err(KwError::PreconditionViolated(format!(
            "K_lambda is positive somewhere (max {})",
            kl.max()
        )));
    }
    if kl.min() == 0.0 {
        return Err(KwError::PreconditionViolated("K_lambda vanishes identically".into()));
    }
    let (u, _) = minimize_energy(p, cfg, start)?;
    let c = p.candidate(u)?;
    if c.classification != Classification::LocalMin {
        return Err(KwError::ConvergenceFailure(format!(
            "convex minimizer has Hessian eigenvalue {}",
            c.hessian_min_eig
        )));
    }
    Ok(c)
}

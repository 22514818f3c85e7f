//! Sub- and supersolution iteration.
//!
//! Writing the equation as `Δu + f(x,u) = 0` with `f(x,t) = κ(x) - K_λ(x)e^{2t}`,
//! a lower solution has residual `≤ 0` and an upper solution residual `≥ 0`.
//! For `c` large enough that `t ↦ ct - f(x,t)` is nondecreasing, the iterates
//! `(Δ + c) φ_{j+1} = c φ_j - f(·, φ_j)` started at a lower solution increase
//! monotonically toward a solution, and those started at an upper solution
//! decrease toward one.

use nalgebra::DVector;

use super::poisson::solve_poisson;
use super::SolverConfig;
use crate::error::{KwError, Result};
use crate::function::VertexFunction;
use crate::model::{KwProblem, OrderInterval, SolutionCandidate};

/// Largest shift tried by [`build_lower_solution`].
const MAX_SHIFT: f64 = 1e6;

/// `c = 2 max(0, -min K_λ) e^{2A} + 1`: with this `c`, `t ↦ ct - f(x,t)` has
/// derivative `c + 2K_λ e^{2t} ≥ 1` for every `t ≤ A`, in particular on `[-A, A]`.
pub fn choose_monotonicity_constant(p: &KwProblem, a: f64) -> f64 {
    let neg = (-p.k_lambda().min()).max(0.0);
    2.0 * neg * (2.0 * a).exp() + 1.0
}

/// Strict lower solution `φ = v - s` where `Δv = -κ + κ̄` and the shift `s`
/// is doubled from 1 until the residual is below `-δ` everywhere,
/// `δ = min(1, |κ̄|/2)`. On `φ` the residual equals `κ̄ - K_λ e^{2(v-s)}`.
pub fn build_lower_solution(p: &KwProblem) -> Result<VertexFunction> {
    lower_solution_below(p, None)
}

pub(crate) fn lower_solution_below(
    p: &KwProblem,
    upper: Option<&VertexFunction>,
) -> Result<VertexFunction> {
    let g = p.graph();
    let total = g.total_measure();
    let kappa_integral = p.kappa_integral();
    if kappa_integral >= 0.0 {
        return Err(KwError::PreconditionViolated(format!(
            "lower solution needs a negative integral of kappa, got {kappa_integral}"
        )));
    }
    let mean = kappa_integral / total;
    let v = solve_poisson(g, &p.kappa().map(|k| -k + mean))?;
    let delta = (0.5 * mean.abs()).min(1.0);
    let mut s = 1.0;
    while s <= MAX_SHIFT {
        let phi = v.shift(-s);
        let strict = p.residual(&phi).map(|r| r.max() < -delta).unwrap_or(false);
        let below = upper.is_none_or(|psi| (0..phi.len()).all(|x| phi[x] < psi[x]));
        if strict && below {
            return Ok(phi);
        }
        s *= 2.0;
    }
    Err(KwError::SearchFailure(MAX_SHIFT))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Result of running both monotone sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneOutcome {
    /// Limit of the increasing sequence started at the lower solution.
    pub candidate: SolutionCandidate,
    /// Limit of the decreasing sequence started at the upper solution.
    pub upper_limit: VertexFunction,
    /// Set when the two limits are further apart than the residual tolerance.
    pub limits_differ: bool,
    pub lower_iterations: usize,
    pub upper_iterations: usize,
}

pub fn monotone_solve(
    p: &KwProblem,
    interval: &OrderInterval,
    cfg: &SolverConfig,
) -> Result<MonotoneOutcome> {
    monotone_solve_observed(p, interval, cfg, |_, _, _| {})
}

/// Slack allowed on the order checks; pure rounding.
fn order_slack(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

/// [`monotone_solve`] calling `observe(side, j, iterate)` on every iterate,
/// starting with the interval endpoint as `j = 0`.
pub fn monotone_solve_observed(
    p: &KwProblem,
    interval: &OrderInterval,
    cfg: &SolverConfig,
    mut observe: impl FnMut(Side, usize, &VertexFunction),
) -> Result<MonotoneOutcome> {
    cfg.validate()?;
    if p.infeasibility_certificate() {
        return Err(KwError::CertifiedInfeasible { lambda: p.lambda() });
    }
    let g = p.graph();
    let (lower, upper) = (interval.lower(), interval.upper());
    g.check(lower)?;
    g.check(upper)?;
    let rl = p.residual(lower)?;
    if let Some(x) = (0..rl.len()).find(|&x| rl[x] > cfg.residual_tol) {
        return Err(KwError::NotAnOrderedPair(format!(
            "lower end is not a lower solution: residual {} at vertex index {x}",
            rl[x]
        )));
    }
    let ru = p.residual(upper)?;
    if let Some(x) = (0..ru.len()).find(|&x| ru[x] < -cfg.residual_tol) {
        return Err(KwError::NotAnOrderedPair(format!(
            "upper end is not an upper solution: residual {} at vertex index {x}",
            ru[x]
        )));
    }

    // e^{2t} is increasing, so a bound on the upper end suffices for c
    let c = choose_monotonicity_constant(p, upper.max());
    let mu = g.measure();
    let mut a = g.stiffness_matrix();
    for x in 0..g.len() {
        a[(x, x)] += c * mu[x];
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| KwError::SingularSolveFailure("Δ + c is not positive definite".into()))?;
    let kappa = p.kappa();
    let kl = p.k_lambda();
    let step = |u: &VertexFunction| -> Result<VertexFunction> {
        let rhs = DVector::from_fn(u.len(), |x, _| {
            mu[x] * (c * u[x] - kappa[x] + kl[x] * (2.0 * u[x]).exp())
        });
        VertexFunction::new(chol.solve(&rhs).iter().copied().collect())
            .map_err(|_| KwError::ConvergenceFailure("non-finite monotone iterate".into()))
    };

    let mut run = |side: Side| -> Result<(VertexFunction, usize)> {
        let mut cur = match side {
            Side::Lower => lower.clone(),
            Side::Upper => upper.clone(),
        };
        observe(side, 0, &cur);
        if p.residual_sup(&cur)? <= cfg.residual_tol {
            return Ok((cur, 0));
        }
        for j in 1..=cfg.max_monotone_iters {
            let next = step(&cur)?;
            observe(side, j, &next);
            for x in 0..next.len() {
                let (prev, new) = (cur[x], next[x]);
                let slack = order_slack(new);
                let (moved_wrong, out_of_box) = match side {
                    Side::Lower => (new < prev - slack, new > upper[x] + slack),
                    Side::Upper => (new > prev + slack, new < lower[x] - slack),
                };
                if moved_wrong {
                    return Err(KwError::MonotonicityViolation {
                        index: x,
                        amount: (new - prev).abs(),
                    });
                }
                if out_of_box {
                    return Err(KwError::NotAnOrderedPair(format!(
                        "iterate left the order interval at vertex index {x}"
                    )));
                }
            }
            let change = next.sub(&cur).sup_norm();
            cur = next;
            if change <= cfg.residual_tol && p.residual_sup(&cur)? <= cfg.residual_tol {
                return Ok((cur, j));
            }
        }
        Err(KwError::ConvergenceFailure(format!(
            "monotone iteration from the {side:?} end did not converge in {} steps",
            cfg.max_monotone_iters
        )))
    };

    let (low_limit, lower_iterations) = run(Side::Lower)?;
    let (upper_limit, upper_iterations) = run(Side::Upper)?;
    let limits_differ = low_limit.sub(&upper_limit).sup_norm() > cfg.residual_tol;
    Ok(MonotoneOutcome {
        candidate: p.candidate(low_limit)?,
        upper_limit,
        limits_differ,
        lower_iterations,
        upper_iterations,
    })
}

use super::convex::solve_convex;
use super::monotone::{lower_solution_below, monotone_solve};
use super::newton::newton_solve;
use super::SolverConfig;
use crate::error::{KwError, Result};
use crate::function::VertexFunction;
use crate::model::{Classification, KwProblem, OrderInterval, SolutionCandidate};

/// One accepted point on the minimal branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    pub energy: f64,
    pub hessian_min_eig: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationReport {
    pub candidate: SolutionCandidate,
    /// Accepted points in increasing λ, starting at the convex start.
    pub branch: Vec<BranchPoint>,
    /// λ₁ whose solution served as the upper solution at the target.
    pub upper_lambda: f64,
    /// `false` when the monotone iteration ran out of budget and the
    /// continuation iterate was returned instead.
    pub used_monotone: bool,
}

/// Minimal-branch solution at `target_lambda`.
pub fn continuation_solve(
    p: &KwProblem,
    target_lambda: f64,
    cfg: &SolverConfig,
) -> Result<SolutionCandidate> {
    continuation_solve_report(p, target_lambda, cfg).map(|r| r.candidate)
}

pub fn continuation_solve_report(
    p: &KwProblem,
    target_lambda: f64,
    cfg: &SolverConfig,
) -> Result<ContinuationReport> {
    cfg.validate()?;
    let at = p.with_lambda(target_lambda);
    if at.infeasibility_certificate() {
        return Err(KwError::CertifiedInfeasible {
            lambda: target_lambda,
        });
    }
    // below this λ the energy is convex
    let lambda0 = 0.0 - p.k().max();
    if target_lambda <= lambda0 {
        let candidate = solve_convex(&at, cfg, None)?;
        return Ok(ContinuationReport {
            branch: vec![BranchPoint::of(target_lambda, &candidate)],
            candidate,
            upper_lambda: target_lambda,
            used_monotone: false,
        });
    }
    let start = solve_convex(&p.with_lambda(lambda0), cfg, None)?;
    continue_from(p, lambda0, &start, target_lambda, cfg)
}

impl BranchPoint {
    fn of(lambda: f64, c: &SolutionCandidate) -> Self {
        Self {
            lambda,
            energy: c.energy,
            hessian_min_eig: c.hessian_min_eig,
        }
    }
}

struct Node {
    lambda: f64,
    candidate: SolutionCandidate,
    /// `∫e^{2u} dμ = -dE/dλ` along the branch.
    mass: f64,
}

impl Node {
    fn new(p: &KwProblem, lambda: f64, candidate: SolutionCandidate) -> Result<Self> {
        let mass = p.graph().integrate(&candidate.u.map(|v| (2.0 * v).exp()))?;
        Ok(Self {
            lambda,
            candidate,
            mass,
        })
    }
}

/// Newton at `lambda` warm-started from `prev`; accepted only as a strict
/// local minimum whose energy moved consistently with the branch slope.
fn try_step(p: &KwProblem, prev: &Node, lambda: f64, cfg: &SolverConfig) -> Option<Node> {
    let q = p.with_lambda(lambda);
    let u = newton_solve(&q, &prev.candidate.u, cfg).ok()?;
    let candidate = q.candidate(u).ok()?;
    if candidate.classification != Classification::LocalMin {
        return None;
    }
    let node = Node::new(p, lambda, candidate).ok()?;
    let slope = prev.mass.max(node.mass);
    let jump = (node.candidate.energy - prev.candidate.energy).abs();
    let allowed = 10.0 * slope * (lambda - prev.lambda) + 1e-9 * (1.0 + prev.candidate.energy.abs());
    (jump <= allowed).then_some(node)
}

/// Marches the minimal branch from the solution `start` at `lambda0` up to
/// `target`, then finishes with the monotone iteration.
pub(crate) fn continue_from(
    p: &KwProblem,
    lambda0: f64,
    start: &SolutionCandidate,
    target: f64,
    cfg: &SolverConfig,
) -> Result<ContinuationReport> {
    let at = p.with_lambda(target);
    if at.infeasibility_certificate() {
        return Err(KwError::CertifiedInfeasible { lambda: target });
    }
    let mut cur = Node::new(p, lambda0, start.clone())?;
    let mut branch = vec![BranchPoint::of(lambda0, start)];
    let mut step = cfg.initial_step(p);
    while cur.lambda < target {
        let next = (cur.lambda + step).min(target);
        match try_step(p, &cur, next, cfg) {
            Some(node) => {
                branch.push(BranchPoint::of(node.lambda, &node.candidate));
                cur = node;
                step *= 1.5;
            }
            None => {
                step *= 0.5;
                if step < cfg.continuation_min_step {
                    return Err(KwError::ContinuationStalled {
                        reached: cur.lambda,
                        target,
                    });
                }
            }
        }
    }

    // a solution at λ₁ > target has residual (λ₁ - target)e^{2u} > 0 at target
    let mut upper: Option<(f64, VertexFunction)> = None;
    let mut delta = step;
    while delta >= cfg.continuation_min_step {
        if let Some(node) = try_step(p, &cur, target + delta, cfg) {
            let strict = at
                .residual(&node.candidate.u)
                .map(|r| r.min() > 0.0)
                .unwrap_or(false);
            if strict {
                upper = Some((node.lambda, node.candidate.u));
                break;
            }
        }
        delta *= 0.5;
    }
    let (upper_lambda, psi) = upper.unwrap_or_else(|| (target, cur.candidate.u.clone()));

    let phi = lower_solution_below(&at, Some(&psi))?;
    let interval = OrderInterval::new(phi, psi)?;
    match monotone_solve(&at, &interval, cfg) {
        Ok(out) => Ok(ContinuationReport {
            candidate: out.candidate,
            branch,
            upper_lambda,
            used_monotone: true,
        }),
        Err(KwError::ConvergenceFailure(_)) => Ok(ContinuationReport {
            candidate: cur.candidate,
            branch,
            upper_lambda,
            used_monotone: false,
        }),
        Err(e) => Err(e),
    }
}

//! Second solution by a discretized mountain-pass search.
//!
//! A path of `path_points` nodes joins the strict minimizer to a point of
//! much lower energy. The highest interior node climbs along the reflected
//! gradient `-g + 2⟨g,τ⟩τ` (τ the unit path tangent), the other interior
//! nodes descend along the gradient component normal to the path, and the
//! nodes are re-spaced by W^{1,2} arclength on each side of the climber. The
//! climber converges to a critical point of mountain-pass type, which damped
//! Newton then polishes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::newton::newton_solve;
use super::SolverConfig;
use crate::error::{KwError, Result};
use crate::function::VertexFunction;
use crate::graph::WeightedGraph;
use crate::model::{KwProblem, SolutionCandidate};

/// Largest `t` tried for the endpoint `t·1_{V_ε}`.
const MAX_ENDPOINT_SCALE: f64 = 256.0;
/// Largest ℓ^∞ move of a node in one deformation.
const MAX_NODE_MOVE: f64 = 0.5;
/// Amplitude of the random perturbation on the retry.
const PERTURBATION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassReport {
    pub second_solution: SolutionCandidate,
    /// Highest energy on the final path.
    pub path_max_energy: f64,
    /// The point `v` with `E(v) < E(u_min) - 1`.
    pub endpoint: VertexFunction,
    pub deform_steps: usize,
}

pub fn mountain_pass_solve(
    p: &KwProblem,
    u_min: &SolutionCandidate,
    cfg: &SolverConfig,
) -> Result<MountainPassReport> {
    cfg.validate()?;
    let g = p.graph();
    g.check(&u_min.u)?;
    let lambda = p.lambda();
    if p.infeasibility_certificate() {
        return Err(KwError::CertifiedInfeasible { lambda });
    }
    if !(lambda > 0.0) {
        return Err(KwError::PreconditionViolated(format!(
            "mountain pass needs lambda > 0, got {lambda}"
        )));
    }
    if !(u_min.hessian_min_eig > 0.0) {
        return Err(KwError::PreconditionViolated(format!(
            "start is not a strict local minimum (Hessian eigenvalue {})",
            u_min.hessian_min_eig
        )));
    }
    let e_min = p.energy(&u_min.u)?;
    let endpoint = find_endpoint(p, e_min)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    match attempt(p, u_min, &endpoint, cfg.path_points, None, cfg) {
        Err(KwError::CollapsedToMinimum) | Err(KwError::DeformationStalled(_)) => {
            attempt(p, u_min, &endpoint, 2 * cfg.path_points, Some(&mut rng), cfg)
        }
        other => other,
    }
}

/// `t·1_{V_ε}` with `ε = λ/2` and `t` doubled from 1.
fn find_endpoint(p: &KwProblem, e_min: f64) -> Result<VertexFunction> {
    let eps = 0.5 * p.lambda();
    let f = p.k_lambda().map(|k| if k > eps { 1.0 } else { 0.0 });
    let mut t = 1.0;
    while t <= MAX_ENDPOINT_SCALE {
        let v = f.scale(t);
        if p.energy(&v)? < e_min - 1.0 {
            return Ok(v);
        }
        t *= 2.0;
    }
    Err(KwError::EndpointSearchFailure(format!(
        "energy of t on the set where K_lambda > {eps} stayed above {} up to t = {MAX_ENDPOINT_SCALE}",
        e_min - 1.0
    )))
}

fn attempt(
    p: &KwProblem,
    u_min: &SolutionCandidate,
    endpoint: &VertexFunction,
    points: usize,
    rng: Option<&mut ChaCha8Rng>,
    cfg: &SolverConfig,
) -> Result<MountainPassReport> {
    let g = p.graph();
    let e_min = u_min.energy;
    let mut n = points;
    let mut path = linear_path(&u_min.u, endpoint, n);
    // refine until the path actually rises above the minimizer's level
    loop {
        let top = interior_max(p, &path)?;
        if top.1 > e_min {
            break;
        }
        if n > 64 * points {
            return Err(KwError::CollapsedToMinimum);
        }
        n = 2 * n - 1;
        path = linear_path(&u_min.u, endpoint, n);
    }
    if let Some(rng) = rng {
        for node in path.iter_mut().take(n - 1).skip(1) {
            let noise: Vec<f64> = (0..node.len())
                .map(|_| PERTURBATION * rng.gen_range(-1.0..1.0))
                .collect();
            *node = node.add(&VertexFunction::new(noise)?);
        }
    }

    let mut steps = 0;
    let climber = loop {
        let (m, _) = interior_max(p, &path)?;
        let grad = p.energy_gradient(&path[m])?;
        if g.lp_norm(&grad, 2.0)? <= cfg.mp_deform_tol {
            break m;
        }
        if steps == cfg.mp_max_deforms {
            return Err(KwError::DeformationStalled(steps));
        }
        steps += 1;
        let moved: Vec<VertexFunction> = (1..n - 1)
            .map(|i| {
                let grad = if i == m { grad.clone() } else { p.energy_gradient(&path[i])? };
                let tau = unit(g, &path[i + 1].sub(&path[i - 1]))?;
                let along = g.inner(&grad, &tau)?;
                let dir = if i == m {
                    grad.scale(-1.0).axpy(2.0 * along, &tau)
                } else {
                    grad.scale(-1.0).axpy(along, &tau)
                };
                let mut alpha = 1.0 / hessian_bound(p, &path[i]);
                let size = dir.sup_norm();
                if alpha * size > MAX_NODE_MOVE {
                    alpha = MAX_NODE_MOVE / size;
                }
                Ok(path[i].axpy(alpha, &dir))
            })
            .collect::<Result<_>>()?;
        for (i, node) in moved.into_iter().enumerate() {
            path[i + 1] = node;
        }
        path = respace(g, &path, m)?;
    };

    let path_max_energy = path
        .iter()
        .map(|u| p.energy(u))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let polished = newton_solve(p, &path[climber], cfg)?;
    if polished.sub(&u_min.u).sup_norm() <= 10.0 * cfg.residual_tol {
        return Err(KwError::CollapsedToMinimum);
    }
    Ok(MountainPassReport {
        second_solution: p.candidate(polished)?,
        path_max_energy,
        endpoint: endpoint.clone(),
        deform_steps: steps,
    })
}

fn linear_path(a: &VertexFunction, b: &VertexFunction, n: usize) -> Vec<VertexFunction> {
    let d = b.sub(a);
    (0..n)
        .map(|i| a.axpy(i as f64 / (n - 1) as f64, &d))
        .collect()
}

/// Index and energy of the highest interior node.
fn interior_max(p: &KwProblem, path: &[VertexFunction]) -> Result<(usize, f64)> {
    let mut best = (1, f64::NEG_INFINITY);
    for (i, u) in path.iter().enumerate().take(path.len() - 1).skip(1) {
        let e = p.energy(u)?;
        if e > best.1 {
            best = (i, e);
        }
    }
    Ok(best)
}

fn unit(g: &WeightedGraph, v: &VertexFunction) -> Result<VertexFunction> {
    let norm = g.lp_norm(v, 2.0)?;
    if norm == 0.0 {
        return Ok(v.clone());
    }
    Ok(v.scale(1.0 / norm))
}

/// Gershgorin bound on the spectral radius of the Hessian
/// `h ↦ 2(Δh - 2K_λ e^{2u} h)` in its symmetric form.
fn hessian_bound(p: &KwProblem, u: &VertexFunction) -> f64 {
    let g = p.graph();
    let mu = g.measure();
    let kl = p.k_lambda();
    (0..g.len())
        .map(|x| {
            let off: f64 = g
                .neighbors(x)
                .iter()
                .map(|&(y, w)| w / (mu[x] * mu[y]).sqrt())
                .sum();
            2.0 * (g.degree(x) / mu[x] + 2.0 * kl[x].abs() * (2.0 * u[x]).exp() + off)
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Re-spaces nodes evenly by W^{1,2} arclength on `[0, pin]` and on
/// `[pin, n-1]` separately, keeping both ends and the pinned node fixed.
fn respace(g: &WeightedGraph, path: &[VertexFunction], pin: usize) -> Result<Vec<VertexFunction>> {
    let mut out = respace_segment(g, &path[..=pin])?;
    out.pop();
    out.extend(respace_segment(g, &path[pin..])?);
    Ok(out)
}

fn respace_segment(g: &WeightedGraph, nodes: &[VertexFunction]) -> Result<Vec<VertexFunction>> {
    let k = nodes.len();
    if k <= 2 {
        return Ok(nodes.to_vec());
    }
    let mut cum = vec![0.0];
    for w in nodes.windows(2) {
        let len = g.sobolev_norm(&w[1].sub(&w[0]))?;
        cum.push(cum.last().copied().unwrap_or(0.0) + len);
    }
    let total = cum[k - 1];
    if total == 0.0 {
        return Ok(nodes.to_vec());
    }
    let mut out = Vec::with_capacity(k);
    out.push(nodes[0].clone());
    let mut seg = 0;
    for j in 1..k - 1 {
        let s = total * j as f64 / (k - 1) as f64;
        while seg < k - 2 && cum[seg + 1] < s {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (s - cum[seg]) / span } else { 0.0 };
        out.push(nodes[seg].axpy(t, &nodes[seg + 1].sub(&nodes[seg])));
    }
    out.push(nodes[k - 1].clone());
    Ok(out)
}

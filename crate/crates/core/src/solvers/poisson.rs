use nalgebra::{DMatrix, DVector};

use crate::error::{KwError, Result};
use crate::function::VertexFunction;
use crate::graph::WeightedGraph;

/// Solves `Δv = rhs` with `∫v dμ = 0`.
///
/// The kernel of Δ on a connected graph is the constants, so `rhs` must have
/// zero integral. The singular system `S v = M rhs` is bordered with the
/// measure vector, `[S μ; μᵀ 0]`, which is nonsingular.
pub fn solve_poisson(g: &WeightedGraph, rhs: &VertexFunction) -> Result<VertexFunction> {
    g.check(rhs)?;
    let total = g.total_measure();
    let integral = g.integrate(rhs)?;
    let rhs_scale = rhs.sup_norm().max(1.0);
    if integral.abs() > 1e-10 * total * rhs_scale {
        return Err(KwError::IncompatibleRhs { integral });
    }

    let n = g.len();
    let mu = g.measure();
    let s = g.stiffness_matrix();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&s);
    for x in 0..n {
        a[(x, n)] = mu[x];
        a[(n, x)] = mu[x];
    }
    let mut b = DVector::zeros(n + 1);
    for x in 0..n {
        b[x] = mu[x] * rhs[x];
    }
    let lu = a.clone().lu();
    let mut sol = lu
        .solve(&b)
        .ok_or_else(|| KwError::SingularSolveFailure("bordered Laplacian is singular".into()))?;
    // one step of iterative refinement
    let correction = lu
        .solve(&(&b - &a * &sol))
        .ok_or_else(|| KwError::SingularSolveFailure("refinement solve failed".into()))?;
    sol += correction;

    let v: Vec<f64> = sol.iter().take(n).copied().collect();
    let mean = v.iter().zip(mu).map(|(a, m)| a * m).sum::<f64>() / total;
    let v = VertexFunction::new(v.into_iter().map(|x| x - mean).collect())?;

    let residual = g.laplacian(&v)?.sub(rhs).sup_norm();
    if residual > 1e-10 * rhs_scale {
        return Err(KwError::SingularSolveFailure(format!(
            "residual {residual:e} after solve"
        )));
    }
    Ok(v)
}

//! Brute-force ground truth for small instances.
//!
//! Nothing here calls the operator or residual code in [`crate::graph`] and
//! [`crate::model`]: the Laplacian, residual and energy are transcribed again
//! from the raw vertex measures and edge list, so a bug in the production
//! path cannot confirm itself.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KwError, Result};
use crate::function::VertexFunction;
use crate::graph::WeightedGraph;
use crate::model::KwProblem;

/// Default half-width of the scanned box `[-R, R]²`.
pub const DEFAULT_SCAN_RADIUS: f64 = 10.0;
/// Residual tolerance every oracle solution is polished to.
pub const POLISH_TOL: f64 = 1e-10;

/// Every solution of a 2-vertex problem inside `[-R, R]²`. Solutions outside
/// the box are not searched for.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolutionSet {
    pub solutions: Vec<VertexFunction>,
    pub scan_radius: f64,
    pub grid_step: f64,
    pub polish_tol: f64,
}

impl OracleSolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// Distance in ℓ^∞ from `u` to the nearest listed solution.
    pub fn distance_to(&self, u: &VertexFunction) -> f64 {
        self.solutions
            .iter()
            .map(|s| s.sub(u).sup_norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `Δf` by accumulating each edge's contribution at both ends.
pub fn literal_laplacian(g: &WeightedGraph, f: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; g.len()];
    for e in g.edges() {
        let d = f[e.a] - f[e.b];
        acc[e.a] += e.weight * d;
        acc[e.b] -= e.weight * d;
    }
    acc.iter()
        .zip(g.measure())
        .map(|(s, m)| s / m)
        .collect()
}

/// `Δu + κ - (K + λ) e^{2u}` at every vertex.
pub fn literal_residual(p: &KwProblem, u: &[f64]) -> Vec<f64> {
    let lap = literal_laplacian(p.graph(), u);
    (0..u.len())
        .map(|x| {
            let kl = p.k()[x] + p.lambda();
            lap[x] + p.kappa()[x] - kl * (2.0 * u[x]).exp()
        })
        .collect()
}

/// `Σ_edges ω (u_a - u_b)² + Σ_x μ(x)(2κ(x)u(x) - K_λ(x) e^{2u(x)})`
pub fn literal_energy(p: &KwProblem, u: &[f64]) -> f64 {
    let g = p.graph();
    let dirichlet: f64 = g
        .edges()
        .iter()
        .map(|e| e.weight * (u[e.a] - u[e.b]).powi(2))
        .sum();
    let pointwise: f64 = (0..u.len())
        .map(|x| {
            let kl = p.k()[x] + p.lambda();
            g.measure()[x] * (2.0 * p.kappa()[x] * u[x] - kl * (2.0 * u[x]).exp())
        })
        .sum();
    dirichlet + pointwise
}

/// Central-difference gradient of the energy with respect to the μ-inner
/// product: component x is `(E(u + t e_x) - E(u - t e_x)) / (2 t μ(x))`, so
/// that `∫ g φ dμ` matches the directional derivative along an indicator φ.
pub fn finite_difference_gradient(p: &KwProblem, u: &VertexFunction, t: f64) -> VertexFunction {
    let mu = p.graph().measure();
    let base = u.values().to_vec();
    let values = (0..base.len())
        .map(|x| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[x] += t;
            minus[x] -= t;
            (literal_energy(p, &plus) - literal_energy(p, &minus)) / (2.0 * t * mu[x])
        })
        .collect();
    VertexFunction::from_raw(values)
}

/// Solves `(Δ + c) u = rhs` from a separately assembled matrix.
pub fn solve_shifted(g: &WeightedGraph, c: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = g.len();
    let mut a = DMatrix::zeros(n, n);
    for e in g.edges() {
        let (ma, mb) = (g.measure()[e.a], g.measure()[e.b]);
        a[(e.a, e.a)] += e.weight / ma;
        a[(e.a, e.b)] -= e.weight / ma;
        a[(e.b, e.b)] += e.weight / mb;
        a[(e.b, e.a)] -= e.weight / mb;
    }
    for x in 0..n {
        a[(x, x)] += c;
    }
    a.lu()
        .solve(&DVector::from_column_slice(rhs))
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| KwError::SingularSolveFailure("Δ + c is singular".into()))
}

/// Randomized check of the weak and strong maximum principles for `Δ + c`.
///
/// Each trial draws a non-negative `g` (some entries zero, sometimes all),
/// solves `(Δ + c) u = g`, and requires `u ≥ -1e-12`; if `g ≢ 0` and `u`
/// touches zero somewhere it must vanish everywhere.
pub fn max_principle_trial(g: &WeightedGraph, c: f64, trials: usize, seed: u64) -> Result<bool> {
    const SLACK: f64 = 1e-12;
    if !(c > 0.0) {
        return Err(KwError::PreconditionViolated(format!("need c > 0, got {c}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.len();
    for trial in 0..trials {
        let rhs: Vec<f64> = if trial % 10 == 0 {
            vec![0.0; n]
        } else {
            (0..n)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        rng.gen_range(0.1..1.0)
                    }
                })
                .collect()
        };
        let u = solve_shifted(g, c, &rhs)?;
        if u.iter().any(|&v| v < -SLACK) {
            return Ok(false);
        }
        let nontrivial = rhs.iter().any(|&v| v > 0.0);
        let touches_zero = u.iter().any(|&v| v <= SLACK);
        if nontrivial && touches_zero && u.iter().any(|&v| v > SLACK) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exhaustive solve of a 2-vertex problem inside `[-R, R]²`.
///
/// The first equation is solved exactly for `u_b` as a function of `u_a`,
/// which turns the box scan into a scan of one smooth scalar function on a
/// grid of spacing `step`. Sign changes are bisected; near-tangential roots
/// (two roots inside one grid cell) are caught by locating the local extremum
/// of the scalar function. Every root is then polished with 2D Newton on the
/// full residual and deduplicated.
pub fn brute_force_solve_2v(p: &KwProblem, radius: f64, step: f64) -> Result<OracleSolutionSet> {
    let g = p.graph();
    if g.len() != 2 {
        return Err(KwError::PreconditionViolated(format!(
            "oracle needs exactly 2 vertices, got {}",
            g.len()
        )));
    }
    let sys = TwoVertex::new(p);
    let n = (2.0 * radius / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| (-radius + i as f64 * step).min(radius))
        .collect();
    let vals: Vec<Option<f64>> = grid.iter().map(|&a| sys.reduced(a, radius)).collect();

    let mut roots = Vec::new();
    for i in 0..n {
        if let (Some(g0), Some(g1)) = (vals[i], vals[i + 1]) {
            if g0 == 0.0 {
                roots.push(grid[i]);
            } else if g0 * g1 < 0.0 {
                if let Some(r) = sys.bisect(grid[i], grid[i + 1], radius) {
                    roots.push(r);
                }
            }
        }
    }
    for i in 1..n {
        let (Some(gl), Some(gm), Some(gr)) = (vals[i - 1], vals[i], vals[i + 1]) else {
            continue;
        };
        let same_sign = gl * gm > 0.0 && gm * gr > 0.0;
        if same_sign && gm.abs() <= gl.abs() && gm.abs() <= gr.abs() {
            roots.extend(sys.tangent_roots(grid[i - 1], grid[i + 1], gm.signum(), radius));
        }
    }
    if let Some(last) = vals[n] {
        if last == 0.0 {
            roots.push(grid[n]);
        }
    }

    let mut solutions: Vec<[f64; 2]> = Vec::new();
    for a in roots {
        let Some(b) = sys.partner(a) else { continue };
        let Some(sol) = sys.polish([a, b]) else { continue };
        if sol.iter().any(|v| v.abs() > radius) {
            continue;
        }
        let duplicate = solutions
            .iter()
            .any(|s| (s[0] - sol[0]).abs().max((s[1] - sol[1]).abs()) <= 1e-7);
        if !duplicate {
            solutions.push(sol);
        }
    }
    solutions.sort_by(|x, y| x[0].total_cmp(&y[0]));
    Ok(OracleSolutionSet {
        solutions: solutions
            .into_iter()
            .map(|s| VertexFunction::from_raw(s.to_vec()))
            .collect(),
        scan_radius: radius,
        grid_step: step,
        polish_tol: POLISH_TOL,
    })
}

struct TwoVertex {
    // ω/μ at each end
    ca: f64,
    cb: f64,
    kappa: [f64; 2],
    kl: [f64; 2],
}

impl TwoVertex {
    fn new(p: &KwProblem) -> Self {
        let g = p.graph();
        let w = g.edges()[0].weight;
        let mu = g.measure();
        Self {
            ca: w / mu[0],
            cb: w / mu[1],
            kappa: [p.kappa()[0], p.kappa()[1]],
            kl: [p.k()[0] + p.lambda(), p.k()[1] + p.lambda()],
        }
    }

    fn residual(&self, u: [f64; 2]) -> [f64; 2] {
        [
            self.ca * (u[0] - u[1]) + self.kappa[0] - self.kl[0] * (2.0 * u[0]).exp(),
            self.cb * (u[1] - u[0]) + self.kappa[1] - self.kl[1] * (2.0 * u[1]).exp(),
        ]
    }

    /// `u_b` making the first equation hold exactly.
    fn partner(&self, a: f64) -> Option<f64> {
        let b = a + (self.kappa[0] - self.kl[0] * (2.0 * a).exp()) / self.ca;
        b.is_finite().then_some(b)
    }

    /// Second equation along the curve where the first holds; `None` when the
    /// partner leaves the box.
    fn reduced(&self, a: f64, radius: f64) -> Option<f64> {
        let b = self.partner(a)?;
        if b.abs() > radius {
            return None;
        }
        Some(self.residual([a, b])[1])
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, radius: f64) -> Option<f64> {
        let mut flo = self.reduced(lo, radius)?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = self.reduced(mid, radius)?;
            if fm == 0.0 {
                return Some(mid);
            }
            if flo * fm < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Roots hiding inside `[lo, hi]` where the sampled values keep `sign`.
    fn tangent_roots(&self, lo: f64, hi: f64, sign: f64, radius: f64) -> Vec<f64> {
        let f = |a: f64| self.reduced(a, radius).map(|v| sign * v);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        for _ in 0..200 {
            let (Some(fc), Some(fd)) = (f(c), f(d)) else {
                return Vec::new();
            };
            if fc < fd {
                b = d;
            } else {
                a = c;
            }
            c = b - phi * (b - a);
            d = a + phi * (b - a);
            if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
        }
        let star = 0.5 * (a + b);
        let Some(fs) = f(star) else { return Vec::new() };
        if fs < 0.0 {
            [self.bisect(lo, star, radius), self.bisect(star, hi, radius)]
                .into_iter()
                .flatten()
                .collect()
        } else if fs.abs() <= POLISH_TOL {
            vec![star]
        } else {
            Vec::new()
        }
    }

    fn polish(&self, mut u: [f64; 2]) -> Option<[f64; 2]> {
        let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
        let mut r = self.residual(u);
        for _ in 0..50 {
            if norm(r) <= 0.01 * POLISH_TOL {
                break;
            }
            let ea = (2.0 * u[0]).exp();
            let eb = (2.0 * u[1]).exp();
            let j = [
                [self.ca - 2.0 * self.kl[0] * ea, -self.ca],
                [-self.cb, self.cb - 2.0 * self.kl[1] * eb],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let dx = (-r[0] * j[1][1] + r[1] * j[0][1]) / det;
            let dy = (-j[0][0] * r[1] + j[1][0] * r[0]) / det;
            let next = [u[0] + dx, u[1] + dy];
            let rn = self.residual(next);
            if !(norm(rn) < norm(r)) {
                break;
            }
            u = next;
            r = rn;
        }
        (norm(r) <= POLISH_TOL).then_some(u)
    }
}

/// Second difference `(E(u + th) - 2E(u) + E(u - th)) / t²`, approximating
/// the Hessian quadratic form along `h`.
pub fn second_difference(p: &KwProblem, u: &VertexFunction, h: &VertexFunction, t: f64) -> f64 {
    let at = |s: f64| -> f64 {
        let v: Vec<f64> = u.iter().zip(h.iter()).map(|(a, b)| a + s * b).collect();
        literal_energy(p, &v)
    };
    (at(t) - 2.0 * at(0.0) + at(-t)) / (t * t)
}

/// Random connected graph on `n ≥ 2` vertices: a random spanning tree plus
/// about `n/2` extra edges, measures and weights in `[0.5, 2)`.
pub fn random_graph(rng: &mut impl Rng, n: usize) -> Result<WeightedGraph> {
    let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let vertices: Vec<(String, f64)> = ids
        .iter()
        .map(|id| (id.clone(), rng.gen_range(0.5..2.0)))
        .collect();
    let mut pairs = Vec::new();
    for i in 1..n {
        pairs.push((rng.gen_range(0..i), i));
    }
    for _ in 0..n / 2 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (a, b) = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    let edges: Vec<(String, String, f64)> = pairs
        .into_iter()
        .map(|(a, b)| (ids[a].clone(), ids[b].clone(), rng.gen_range(0.5..2.0)))
        .collect();
    WeightedGraph::build(&vertices, &edges)
}

/// Random problem satisfying the strict hypotheses at `lambda`: `K ≤ 0`
/// with `K = 0` at one vertex and `min K ∈ [-2, -0.5]`, and κ shifted if
/// needed so that `∫κ dμ ≤ -0.5`.
pub fn random_strict_problem(rng: &mut impl Rng, n: usize, lambda: f64) -> Result<KwProblem> {
    let g = random_graph(rng, n)?;
    let mut k: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.0..2.0)).collect();
    let zero = rng.gen_range(0..n);
    let low = (zero + 1 + rng.gen_range(0..n - 1)) % n;
    k[zero] = 0.0;
    k[low] = -rng.gen_range(0.5..2.0);
    let kappa: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..0.5)).collect();
    let integral: f64 = kappa.iter().zip(g.measure()).map(|(a, m)| a * m).sum();
    let shift = if integral > -0.5 {
        (integral + 0.5) / g.total_measure()
    } else {
        0.0
    };
    let kappa = VertexFunction::new(kappa.into_iter().map(|v| v - shift).collect())?;
    KwProblem::strict(g, kappa, VertexFunction::new(k)?, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use std::sync::Arc;

    fn two() -> Arc<WeightedGraph> {
        Arc::new(build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 1.0)]).unwrap())
    }

    fn sample(lambda: f64) -> KwProblem {
        let g = two();
        KwProblem::strict(
            g.clone(),
            g.function(vec![-1.0, -2.0]).unwrap(),
            g.function(vec![0.0, -1.0]).unwrap(),
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn literal_laplacian_path3() {
        // a-b-c, ω_ab = 2, ω_bc = 1, μ = (1, 2, 1), f = (0, 1, 3)
        let g = build_graph(
            &[("a", 1.0), ("b", 2.0), ("c", 1.0)],
            &[("a", "b", 2.0), ("b", "c", 1.0)],
        )
        .unwrap();
        let lap = literal_laplacian(&g, &[0.0, 1.0, 3.0]);
        // a: 2(0-1)/1 = -2; b: (2(1-0) + 1(1-3))/2 = 0; c: 1(3-1)/1 = 2
        assert_eq!(lap, vec![-2.0, 0.0, 2.0]);
    }

    #[test]
    fn constant_problem_has_one_solution() {
        let g = two();
        let p = KwProblem::relaxed(g.clone(), g.constant(-1.0), g.constant(-1.0), 0.0).unwrap();
        let set = brute_force_solve_2v(&p, 1.0, 1e-2).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.solutions[0].sup_norm() < 1e-10);
    }

    #[test]
    fn solution_counts_by_regime() {
        assert_eq!(brute_force_solve_2v(&sample(0.0), 10.0, 2e-3).unwrap().len(), 1);
        assert_eq!(brute_force_solve_2v(&sample(-0.5), 10.0, 2e-3).unwrap().len(), 1);
        assert_eq!(brute_force_solve_2v(&sample(0.0035), 10.0, 2e-3).unwrap().len(), 2);
        assert_eq!(brute_force_solve_2v(&sample(0.0072), 10.0, 2e-3).unwrap().len(), 0);
    }

    #[test]
    fn listed_solutions_satisfy_residual() {
        let p = sample(0.0035);
        let set = brute_force_solve_2v(&p, 10.0, 2e-3).unwrap();
        for s in &set.solutions {
            let r = literal_residual(&p, s.values());
            assert!(r.iter().all(|v| v.abs() <= set.polish_tol));
        }
    }

    #[test]
    fn refining_the_grid_keeps_solutions() {
        let p = sample(0.0035);
        let coarse = brute_force_solve_2v(&p, 10.0, 8e-3).unwrap();
        let fine = brute_force_solve_2v(&p, 10.0, 2e-3).unwrap();
        assert_eq!(coarse.len(), fine.len());
        for s in &coarse.solutions {
            assert!(fine.distance_to(s) < 1e-9);
        }
    }

    #[test]
    fn rejects_larger_graphs() {
        let g = Arc::new(
            build_graph(
                &[("a", 1.0), ("b", 1.0), ("c", 1.0)],
                &[("a", "b", 1.0), ("b", "c", 1.0)],
            )
            .unwrap(),
        );
        let p = KwProblem::relaxed(g.clone(), g.constant(-1.0), g.constant(-1.0), 0.0).unwrap();
        assert!(brute_force_solve_2v(&p, 1.0, 0.1).is_err());
    }

    #[test]
    fn finite_difference_matches_closed_form_on_constants() {
        let g = two();
        let (k0, c) = (-1.5, 0.3);
        let p = KwProblem::relaxed(g.clone(), g.constant(-1.0), g.constant(k0), 0.0).unwrap();
        let fd = finite_difference_gradient(&p, &g.constant(c), 1e-5);
        let exact = 2.0 * (-1.0 - k0 * (2.0 * c).exp());
        for v in fd.iter() {
            assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
        }
        let at_solution = finite_difference_gradient(&p, &g.constant(0.5 * (1.0f64 / 1.5).ln()), 1e-5);
        assert!(at_solution.sup_norm() < 1e-5);
    }

    #[test]
    fn shifted_solve_constants() {
        let g = two();
        assert_eq!(solve_shifted(&g, 1.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let u = solve_shifted(&g, 1.0, &[1.0, 1.0]).unwrap();
        assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn max_principle_small() {
        assert!(max_principle_trial(&two(), 0.5, 50, 7).unwrap());
        assert!(max_principle_trial(&two(), 0.0, 1, 7).is_err());
    }
}

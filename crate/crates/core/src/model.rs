//! The Kazdan-Warner problem `Δu + κ - K_λ e^{2u} = 0` with `K_λ = K + λ`,
//! its energy
//!
//! ```text
//! E_λ(u) = ∫_V (|∇u|² + 2κu - K_λ e^{2u}) dμ
//! ```
//!
//! and the first two derivatives of that energy. With respect to the
//! μ-weighted inner product the gradient is `2(Δu + κ - K_λ e^{2u})`, twice
//! the equation residual, and the Hessian is the operator
//! `h ↦ 2(Δh - 2K_λ e^{2u} h)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{KwError, Result};
use crate::function::VertexFunction;
use crate::graph::WeightedGraph;

/// Exponents `2u` above this raise [`KwError::Overflow`].
pub const EXPONENT_LIMIT: f64 = 700.0;

/// Relative margin on the Hessian spectrum used to tell minima from saddles.
pub const CLASSIFICATION_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KwProblem {
    graph: Arc<WeightedGraph>,
    kappa: VertexFunction,
    k: VertexFunction,
    lambda: f64,
    strict: bool,
}

impl KwProblem {
    /// Validates coefficient data. In strict mode this also enforces
    /// `∫κ dμ < 0`, `max K = 0` and `K ≢ 0`.
    pub fn new(
        graph: impl Into<Arc<WeightedGraph>>,
        kappa: VertexFunction,
        k: VertexFunction,
        lambda: f64,
        strict: bool,
    ) -> Result<Self> {
        let graph = graph.into();
        graph.check(&kappa)?;
        graph.check(&k)?;
        if !lambda.is_finite() {
            return Err(KwError::NonFinite {
                index: 0,
                value: lambda,
            });
        }
        let p = Self {
            graph,
            kappa,
            k,
            lambda,
            strict,
        };
        if strict {
            p.check_hypotheses()?;
        }
        Ok(p)
    }

    pub fn strict(
        graph: impl Into<Arc<WeightedGraph>>,
        kappa: VertexFunction,
        k: VertexFunction,
        lambda: f64,
    ) -> Result<Self> {
        Self::new(graph, kappa, k, lambda, true)
    }

    pub fn relaxed(
        graph: impl Into<Arc<WeightedGraph>>,
        kappa: VertexFunction,
        k: VertexFunction,
        lambda: f64,
    ) -> Result<Self> {
        Self::new(graph, kappa, k, lambda, false)
    }

    /// Checks the strict-mode hypotheses regardless of the mode flag.
    pub fn check_hypotheses(&self) -> Result<()> {
        let total = self.kappa_integral();
        if total >= 0.0 {
            return Err(KwError::HypothesesViolated(format!(
                "integral of kappa must be negative, got {total}"
            )));
        }
        let max = self.k.max();
        if max != 0.0 {
            return Err(KwError::HypothesesViolated(format!(
                "max K must be 0, got {max}"
            )));
        }
        if self.k.min() >= 0.0 {
            return Err(KwError::HypothesesViolated(
                "K must be non-constant".to_string(),
            ));
        }
        Ok(())
    }

    /// Same data at a different λ.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<WeightedGraph> {
        &self.graph
    }

    pub fn kappa(&self) -> &VertexFunction {
        &self.kappa
    }

    pub fn k(&self) -> &VertexFunction {
        &self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn kappa_integral(&self) -> f64 {
        self.graph.integrate(&self.kappa).expect("validated domain")
    }

    /// `-min_V K`, the upper end of the interval containing λ*.
    pub fn lambda_ceiling(&self) -> f64 {
        -self.k.min()
    }

    /// `K_λ = K + λ` pointwise.
    pub fn k_lambda(&self) -> VertexFunction {
        self.k.shift(self.lambda)
    }

    fn exp2(&self, u: &VertexFunction) -> Result<VertexFunction> {
        self.graph.check(u)?;
        for (index, v) in u.iter().enumerate() {
            if 2.0 * v > EXPONENT_LIMIT {
                return Err(KwError::Overflow {
                    index,
                    exponent: 2.0 * v,
                });
            }
        }
        Ok(u.map(|v| (2.0 * v).exp()))
    }

    /// `Δu + κ - K_λ e^{2u}` pointwise.
    pub fn residual(&self, u: &VertexFunction) -> Result<VertexFunction> {
        let e = self.exp2(u)?;
        let lap = self.graph.laplacian(u)?;
        let kl = self.k_lambda();
        let values = (0..u.len())
            .map(|x| lap[x] + self.kappa[x] - kl[x] * e[x])
            .collect();
        Ok(VertexFunction::from_raw(values))
    }

    pub fn residual_sup(&self, u: &VertexFunction) -> Result<f64> {
        Ok(self.residual(u)?.sup_norm())
    }

    pub fn energy(&self, u: &VertexFunction) -> Result<f64> {
        let e = self.exp2(u)?;
        let g = &self.graph;
        let dirichlet = g.integrate(&g.gradient_form(u, u)?)?;
        let linear = 2.0 * g.inner(&self.kappa, u)?;
        let exponential = g.inner(&self.k_lambda(), &e)?;
        Ok(dirichlet + linear - exponential)
    }

    /// μ-inner-product gradient of the energy, exactly `2 · residual`.
    pub fn energy_gradient(&self, u: &VertexFunction) -> Result<VertexFunction> {
        Ok(self.residual(u)?.scale(2.0))
    }

    /// `d²E_λ(u)(h,h) = 2∫(|∇h|² - 2K_λ e^{2u} h²) dμ`
    pub fn hessian_quadratic_form(&self, u: &VertexFunction, h: &VertexFunction) -> Result<f64> {
        let e = self.exp2(u)?;
        self.graph.check(h)?;
        let g = &self.graph;
        let dirichlet = g.integrate(&g.gradient_form(h, h)?)?;
        let kl = self.k_lambda();
        let weight = kl.zip_with(&e, |a, b| a * b);
        let potential = g.inner(&weight, &h.zip_with(h, |a, b| a * b))?;
        Ok(2.0 * (dirichlet - 2.0 * potential))
    }

    /// Jacobian of the residual map, `Δ - 2 diag(K_λ e^{2u})`, in vertex order.
    pub fn jacobian(&self, u: &VertexFunction) -> Result<DMatrix<f64>> {
        let e = self.exp2(u)?;
        let kl = self.k_lambda();
        let mut j = self.graph.laplacian_matrix();
        for x in 0..u.len() {
            j[(x, x)] -= 2.0 * kl[x] * e[x];
        }
        Ok(j)
    }

    /// The Hessian operator conjugated by `M^{1/2}` so that it is symmetric in
    /// the Euclidean inner product; its spectrum is the Hessian's.
    pub fn symmetric_hessian(&self, u: &VertexFunction) -> Result<DMatrix<f64>> {
        let e = self.exp2(u)?;
        let g = &self.graph;
        let kl = self.k_lambda();
        let mu = g.measure();
        let n = g.len();
        let mut a = DMatrix::zeros(n, n);
        for x in 0..n {
            a[(x, x)] = 2.0 * (g.degree(x) / mu[x] - 2.0 * kl[x] * e[x]);
            for &(y, w) in g.neighbors(x) {
                a[(x, y)] = -2.0 * w / (mu[x] * mu[y]).sqrt();
            }
        }
        Ok(a)
    }

    /// Hessian eigenvalues in ascending order (dense decomposition).
    pub fn hessian_spectrum(&self, u: &VertexFunction) -> Result<Vec<f64>> {
        let a = self.symmetric_hessian(u)?;
        let mut eig: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.total_cmp(b));
        Ok(eig)
    }

    pub fn hessian_min_eigenvalue(&self, u: &VertexFunction) -> Result<f64> {
        Ok(self.hessian_spectrum(u)?[0])
    }

    /// Smallest Hessian eigenvalue by shifted inverse iteration. The shift sits
    /// below the Gershgorin lower bound so the shifted matrix is positive
    /// definite and the target eigenvalue is the dominant one of its inverse.
    pub fn hessian_min_eigenvalue_iterative(
        &self,
        u: &VertexFunction,
        max_iters: usize,
    ) -> Result<f64> {
        let a = self.symmetric_hessian(u)?;
        let n = a.nrows();
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for i in 0..n {
            let radius: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            lower = lower.min(a[(i, i)] - radius);
            upper = upper.max(a[(i, i)] + radius);
        }
        let scale = lower.abs().max(upper.abs()).max(1e-300);
        let shift = lower - 1e-3 * scale;
        let shifted = &a - DMatrix::identity(n, n) * shift;
        let chol = shifted.cholesky().ok_or_else(|| {
            KwError::ConvergenceFailure("shifted Hessian not positive definite".into())
        })?;

        // start away from any particular eigenvector
        let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i as f64 + 1.0).sin());
        x.normalize_mut();
        for _ in 0..max_iters {
            let mut y = chol.solve(&x);
            y.normalize_mut();
            let ay = &a * &y;
            let theta = y.dot(&ay);
            let res = (&ay - &y * theta).norm();
            x = y;
            if res <= 1e-12 * scale {
                return Ok(theta);
            }
        }
        Err(KwError::ConvergenceFailure(format!(
            "inverse iteration did not converge in {max_iters} iterations"
        )))
    }

    /// `true` when `min K_λ ≥ 0` and `∫κ dμ < 0`: summing the equation over V
    /// would force `∫K_λ e^{2u} dμ = ∫κ dμ < 0`, so no solution exists.
    /// `false` only means no certificate is available.
    pub fn infeasibility_certificate(&self) -> bool {
        self.k_lambda().min() >= 0.0 && self.kappa_integral() < 0.0
    }

    /// Necessary condition for a solution: `|∫K_λ e^{2u} dμ - ∫κ dμ| ≤ tol`.
    pub fn solution_identity_check(&self, u: &VertexFunction, tol: f64) -> Result<bool> {
        Ok(self.identity_gap(u)? <= tol)
    }

    pub fn identity_gap(&self, u: &VertexFunction) -> Result<f64> {
        let e = self.exp2(u)?;
        let lhs = self.graph.inner(&self.k_lambda(), &e)?;
        Ok((lhs - self.kappa_integral()).abs())
    }

    /// Evaluates `u` and packages it with its diagnostics.
    pub fn candidate(&self, u: VertexFunction) -> Result<SolutionCandidate> {
        let residual_sup = self.residual_sup(&u)?;
        let energy = self.energy(&u)?;
        let spectrum = self.hessian_spectrum(&u)?;
        let hessian_min_eig = spectrum[0];
        let hessian_scale = spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(SolutionCandidate {
            u,
            residual_sup,
            energy,
            hessian_min_eig,
            hessian_scale,
            classification: Classification::from_spectrum(hessian_min_eig, hessian_scale),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    LocalMin,
    Saddle,
    Unclassified,
}

impl Classification {
    /// Sign of the smallest eigenvalue with a margin of
    /// [`CLASSIFICATION_MARGIN`] times the spectral radius.
    pub fn from_spectrum(min_eig: f64, scale: f64) -> Self {
        let margin = CLASSIFICATION_MARGIN * scale;
        if min_eig > margin {
            Classification::LocalMin
        } else if min_eig < -margin {
            Classification::Saddle
        } else {
            Classification::Unclassified
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::LocalMin => "local_min",
            Classification::Saddle => "saddle",
            Classification::Unclassified => "unclassified",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A vertex function together with its residual, energy and Hessian data.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCandidate {
    pub u: VertexFunction,
    pub residual_sup: f64,
    pub energy: f64,
    pub hessian_min_eig: f64,
    /// Largest absolute Hessian eigenvalue.
    pub hessian_scale: f64,
    pub classification: Classification,
}

/// `[φ, ψ]` with `φ ≤ ψ` pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderInterval {
    lower: VertexFunction,
    upper: VertexFunction,
}

impl OrderInterval {
    pub fn new(lower: VertexFunction, upper: VertexFunction) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(KwError::DomainMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if let Some(x) = (0..lower.len()).find(|&x| lower[x] > upper[x]) {
            return Err(KwError::NotAnOrderedPair(format!(
                "lower {} exceeds upper {} at vertex index {x}",
                lower[x], upper[x]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &VertexFunction {
        &self.lower
    }

    pub fn upper(&self) -> &VertexFunction {
        &self.upper
    }

    pub fn contains(&self, u: &VertexFunction, slack: f64) -> bool {
        self.lower.le(u, slack) && u.le(&self.upper, slack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn two() -> Arc<WeightedGraph> {
        Arc::new(build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 1.0)]).unwrap())
    }

    fn constant_problem() -> KwProblem {
        let g = two();
        KwProblem::relaxed(g.clone(), g.constant(-1.0), g.constant(-1.0), 0.0).unwrap()
    }

    fn sample() -> KwProblem {
        let g = two();
        let kappa = g.function(vec![-1.0, -2.0]).unwrap();
        let k = g.function(vec![0.0, -1.0]).unwrap();
        KwProblem::strict(g, kappa, k, 0.0).unwrap()
    }

    #[test]
    fn strict_hypotheses() {
        let g = two();
        let bad_max = KwProblem::strict(
            g.clone(),
            g.constant(-1.0),
            g.function(vec![0.5, -1.0]).unwrap(),
            0.0,
        );
        assert!(matches!(bad_max, Err(KwError::HypothesesViolated(_))));
        let constant_k = KwProblem::strict(g.clone(), g.constant(-1.0), g.zeros(), 0.0);
        assert!(matches!(constant_k, Err(KwError::HypothesesViolated(_))));
        let positive_kappa = KwProblem::strict(
            g.clone(),
            g.constant(1.0),
            g.function(vec![0.0, -1.0]).unwrap(),
            0.0,
        );
        assert!(matches!(positive_kappa, Err(KwError::HypothesesViolated(_))));
        assert!(KwProblem::relaxed(g.clone(), g.constant(1.0), g.zeros(), 2.0).is_ok());
    }

    #[test]
    fn k_lambda_is_pointwise_shift() {
        let p = sample();
        assert_eq!(p.k_lambda(), *p.k());
        let q = p.with_lambda(1.0);
        assert_eq!(q.k_lambda().values(), &[1.0, 0.0]);
        let g = two();
        let zero_k = KwProblem::relaxed(g.clone(), g.constant(-1.0), g.zeros(), 2.0).unwrap();
        assert_eq!(zero_k.k_lambda().values(), &[2.0, 2.0]);
        let g3 = g.function(vec![0.0, -3.0]).unwrap();
        let p3 = KwProblem::strict(g.clone(), g.constant(-1.0), g3, 1.0).unwrap();
        assert_eq!(p3.k_lambda().values(), &[1.0, -2.0]);
    }

    #[test]
    fn residual_constant_cases() {
        let p = constant_problem();
        let g = p.graph();
        assert_eq!(p.residual(&g.zeros()).unwrap().sup_norm(), 0.0);
        let r = p.residual(&g.constant(1.0)).unwrap();
        let expected = -1.0 + 2f64.exp();
        for v in r.iter() {
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn energy_constant_cases() {
        let p = sample().with_lambda(0.3);
        let g = p.graph().clone();
        let e0 = p.energy(&g.zeros()).unwrap();
        assert!((e0 + g.integrate(&p.k_lambda()).unwrap()).abs() < 1e-15);
        let c = 0.7;
        let ec = p.energy(&g.constant(c)).unwrap();
        let closed: f64 = (0..2)
            .map(|x| 2.0 * p.kappa()[x] * c - p.k_lambda()[x] * (2.0 * c).exp())
            .sum();
        assert!((ec - closed).abs() < 1e-13);
    }

    #[test]
    fn gradient_is_twice_residual() {
        let p = sample().with_lambda(0.2);
        let u = p.graph().function(vec![0.3, -1.1]).unwrap();
        let r = p.residual(&u).unwrap();
        let g = p.energy_gradient(&u).unwrap();
        for x in 0..2 {
            assert_eq!(g[x], 2.0 * r[x]);
        }
        let c = constant_problem();
        assert_eq!(c.energy_gradient(&c.graph().zeros()).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn overflow_guard() {
        let p = sample();
        let u = p.graph().function(vec![351.0, 0.0]).unwrap();
        assert!(matches!(p.residual(&u), Err(KwError::Overflow { index: 0, .. })));
        assert!(matches!(p.energy(&u), Err(KwError::Overflow { .. })));
        let ok = p.graph().function(vec![349.0, 0.0]).unwrap();
        assert!(p.residual(&ok).is_ok());
    }

    #[test]
    fn hessian_form_edge_cases() {
        let p = sample();
        let g = p.graph().clone();
        let u = g.function(vec![0.4, -0.2]).unwrap();
        assert_eq!(p.hessian_quadratic_form(&u, &g.zeros()).unwrap(), 0.0);
        let h = g.function(vec![1.0, -0.5]).unwrap();
        assert!(p.hessian_quadratic_form(&u, &h).unwrap() > 0.0);
        assert!(p.hessian_min_eigenvalue(&u).unwrap() > 0.0);
    }

    #[test]
    fn two_vertex_hessian_closed_form() {
        // explicit 2x2 symmetric matrix of h -> 2(Δh - 2K_λ e^{2u} h), μ = (1, 2), ω = 3
        let g = Arc::new(build_graph(&[("a", 1.0), ("b", 2.0)], &[("a", "b", 3.0)]).unwrap());
        let p = KwProblem::strict(
            g.clone(),
            g.function(vec![-1.0, 0.2]).unwrap(),
            g.function(vec![0.0, -2.0]).unwrap(),
            0.7,
        )
        .unwrap();
        let u = g.function(vec![0.2, -0.4]).unwrap();
        let (m1, m2, w): (f64, f64, f64) = (1.0, 2.0, 3.0);
        let kl = [0.7, -1.3];
        let a = 2.0 * (w / m1 - 2.0 * kl[0] * (0.4f64).exp());
        let d = 2.0 * (w / m2 - 2.0 * kl[1] * (-0.8f64).exp());
        let b = -2.0 * w / (m1 * m2).sqrt();
        let lo = 0.5 * (a + d) - ((0.5 * (a - d)).powi(2) + b * b).sqrt();
        let hi = 0.5 * (a + d) + ((0.5 * (a - d)).powi(2) + b * b).sqrt();
        let spec = p.hessian_spectrum(&u).unwrap();
        assert!((spec[0] - lo).abs() < 1e-12 * hi.abs());
        assert!((spec[1] - hi).abs() < 1e-12 * hi.abs());
        let it = p.hessian_min_eigenvalue_iterative(&u, 10_000).unwrap();
        assert!((it - lo).abs() < 1e-8);
    }

    #[test]
    fn certificate() {
        let p = sample();
        assert!(!p.infeasibility_certificate());
        assert!(p.with_lambda(1.0).infeasibility_certificate());
        assert!(p.with_lambda(1.5).infeasibility_certificate());
        assert!(!p.with_lambda(0.999).infeasibility_certificate());
    }

    #[test]
    fn identity_check() {
        let p = constant_problem();
        let g = p.graph().clone();
        assert!(p.solution_identity_check(&g.zeros(), 1e-12).unwrap());
        let s = sample();
        // ∫K = -1, ∫κ = -3
        assert!(!s.solution_identity_check(&g.zeros(), 1e-6).unwrap());
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(Classification::from_spectrum(1.0, 10.0), Classification::LocalMin);
        assert_eq!(Classification::from_spectrum(-1.0, 10.0), Classification::Saddle);
        assert_eq!(Classification::from_spectrum(1e-12, 10.0), Classification::Unclassified);
        let c = constant_problem().candidate(VertexFunction::zeros(2)).unwrap();
        assert_eq!(c.classification, Classification::LocalMin);
        assert_eq!(c.residual_sup, 0.0);
    }

    #[test]
    fn order_interval() {
        let lo = VertexFunction::new(vec![-1.0, 0.0]).unwrap();
        let hi = VertexFunction::new(vec![1.0, 0.0]).unwrap();
        let iv = OrderInterval::new(lo.clone(), hi.clone()).unwrap();
        assert!(iv.contains(&VertexFunction::zeros(2), 0.0));
        assert!(matches!(
            OrderInterval::new(hi, lo),
            Err(KwError::NotAnOrderedPair(_))
        ));
    }
}

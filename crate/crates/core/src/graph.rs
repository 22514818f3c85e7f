//! Finite connected weighted graphs and the discrete operators on them.
//!
//! The Laplacian follows the positive-semidefinite convention
//! `Δf(x) = (1/μ(x)) Σ_{y~x} ω_xy (f(x) - f(y))`, the negative of the
//! analyst's Laplacian. The gradient form is the discrete carré du champ
//! `Γ(f,h)(x) = (1/2μ(x)) Σ_{y~x} ω_xy (f(x)-f(y))(h(x)-h(y))`.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;

use crate::error::{KwError, Result};
use crate::function::VertexFunction;

/// An undirected edge stored once per unordered vertex pair (`a < b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// A finite connected graph with positive vertex measure and symmetric
/// positive edge weights. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    measure: Vec<f64>,
    edges: Vec<Edge>,
    // neighbour lists in edge insertion order
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// Builds a graph from `(id, measure)` and `(id, id, weight)` lists.
pub fn build_graph<S: AsRef<str>>(
    vertex_specs: &[(S, f64)],
    edge_specs: &[(S, S, f64)],
) -> Result<WeightedGraph> {
    WeightedGraph::build(vertex_specs, edge_specs)
}

impl WeightedGraph {
    pub fn build<S: AsRef<str>>(
        vertex_specs: &[(S, f64)],
        edge_specs: &[(S, S, f64)],
    ) -> Result<Self> {
        if vertex_specs.is_empty() {
            return Err(KwError::EmptyInput);
        }
        let mut ids = Vec::with_capacity(vertex_specs.len());
        let mut index = HashMap::with_capacity(vertex_specs.len());
        let mut measure = Vec::with_capacity(vertex_specs.len());
        for (id, mu) in vertex_specs {
            let id = id.as_ref().to_string();
            // NaN fails this comparison too
            if !(*mu > 0.0 && mu.is_finite()) {
                return Err(KwError::NonPositiveMeasure {
                    vertex: id,
                    value: *mu,
                });
            }
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(KwError::DuplicateVertex(id));
            }
            ids.push(id);
            measure.push(*mu);
        }
        if ids.len() == 1 {
            return Err(KwError::SingleVertex(ids.remove(0)));
        }
        if edge_specs.is_empty() {
            return Err(KwError::Disconnected(ids[1].clone()));
        }

        let mut edges: Vec<Edge> = Vec::with_capacity(edge_specs.len());
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (a, b, w) in edge_specs {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index
                .get(a)
                .ok_or_else(|| KwError::UnknownVertex(a.to_string()))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| KwError::UnknownVertex(b.to_string()))?;
            if ia == ib {
                return Err(KwError::SelfLoop(a.to_string()));
            }
            if !(*w > 0.0 && w.is_finite()) {
                return Err(KwError::NonPositiveWeight {
                    a: a.to_string(),
                    b: b.to_string(),
                    value: *w,
                });
            }
            let key = (ia.min(ib), ia.max(ib));
            match seen.get(&key) {
                Some(&k) if edges[k].weight == *w => continue,
                Some(&k) => {
                    return Err(KwError::DuplicateEdge {
                        a: a.to_string(),
                        b: b.to_string(),
                        first: edges[k].weight,
                        second: *w,
                    })
                }
                None => {
                    seen.insert(key, edges.len());
                    edges.push(Edge {
                        a: key.0,
                        b: key.1,
                        weight: *w,
                    });
                }
            }
        }

        let mut adjacency = vec![Vec::new(); ids.len()];
        for e in &edges {
            adjacency[e.a].push((e.b, e.weight));
            adjacency[e.b].push((e.a, e.weight));
        }

        let mut reached = vec![false; ids.len()];
        let mut queue = VecDeque::from([0usize]);
        reached[0] = true;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &adjacency[x] {
                if !reached[y] {
                    reached[y] = true;
                    queue.push_back(y);
                }
            }
        }
        if let Some(lost) = reached.iter().position(|r| !r) {
            return Err(KwError::Disconnected(ids[lost].clone()));
        }

        Ok(Self {
            ids,
            index,
            measure,
            edges,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// μ(V)
    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// ω_xy for an unordered pair, `None` if the vertices are not adjacent.
    pub fn weight(&self, x: usize, y: usize) -> Option<f64> {
        self.adjacency
            .get(x)?
            .iter()
            .find(|(z, _)| *z == y)
            .map(|(_, w)| *w)
    }

    /// Σ_{y~x} ω_xy
    pub fn degree(&self, x: usize) -> f64 {
        self.adjacency[x].iter().map(|(_, w)| w).sum()
    }

    pub fn check(&self, f: &VertexFunction) -> Result<()> {
        if f.len() != self.len() {
            return Err(KwError::DomainMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    pub fn constant(&self, value: f64) -> VertexFunction {
        VertexFunction::constant(self.len(), value)
    }

    pub fn zeros(&self) -> VertexFunction {
        VertexFunction::zeros(self.len())
    }

    /// Builds a vertex function from values listed in vertex order.
    pub fn function(&self, values: Vec<f64>) -> Result<VertexFunction> {
        let f = VertexFunction::new(values)?;
        self.check(&f)?;
        Ok(f)
    }

    pub fn laplacian(&self, f: &VertexFunction) -> Result<VertexFunction> {
        self.check(f)?;
        let values = (0..self.len())
            .map(|x| {
                let s: f64 = self.adjacency[x]
                    .iter()
                    .map(|&(y, w)| w * (f[x] - f[y]))
                    .sum();
                s / self.measure[x]
            })
            .collect();
        Ok(VertexFunction::from_raw(values))
    }

    pub fn gradient_form(&self, f: &VertexFunction, h: &VertexFunction) -> Result<VertexFunction> {
        self.check(f)?;
        self.check(h)?;
        let values = (0..self.len())
            .map(|x| {
                let s: f64 = self.adjacency[x]
                    .iter()
                    .map(|&(y, w)| w * (f[x] - f[y]) * (h[x] - h[y]))
                    .sum();
                s / (2.0 * self.measure[x])
            })
            .collect();
        Ok(VertexFunction::from_raw(values))
    }

    /// ∫_V f dμ = Σ_x μ(x) f(x)
    pub fn integrate(&self, f: &VertexFunction) -> Result<f64> {
        self.check(f)?;
        Ok(self.measure.iter().zip(f.iter()).map(|(m, v)| m * v).sum())
    }

    /// ∫_V f h dμ
    pub fn inner(&self, f: &VertexFunction, h: &VertexFunction) -> Result<f64> {
        self.check(f)?;
        self.check(h)?;
        Ok((0..self.len()).map(|x| self.measure[x] * f[x] * h[x]).sum())
    }

    /// ℓ^p_μ norm; `p = f64::INFINITY` gives the sup norm.
    pub fn lp_norm(&self, f: &VertexFunction, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(KwError::InvalidExponent(p));
        }
        self.check(f)?;
        if p == f64::INFINITY {
            return Ok(f.sup_norm());
        }
        let s: f64 = (0..self.len())
            .map(|x| self.measure[x] * f[x].abs().powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// W^{1,2} norm `(∫ (|∇f|² + f²) dμ)^{1/2}`.
    pub fn sobolev_norm(&self, f: &VertexFunction) -> Result<f64> {
        let grad = self.integrate(&self.gradient_form(f, f)?)?;
        let mass = self.inner(f, f)?;
        Ok((grad + mass).sqrt())
    }

    /// Matrix of Δ in vertex order: row x holds `(deg(x)/μ(x), -ω_xy/μ(x))`.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for x in 0..n {
            for &(y, w) in &self.adjacency[x] {
                m[(x, x)] += w / self.measure[x];
                m[(x, y)] -= w / self.measure[x];
            }
        }
        m
    }

    /// Symmetric weighted Laplacian `S` with `Δ = M⁻¹ S`, `M = diag(μ)`.
    pub fn stiffness_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for e in &self.edges {
            m[(e.a, e.a)] += e.weight;
            m[(e.b, e.b)] += e.weight;
            m[(e.a, e.b)] -= e.weight;
            m[(e.b, e.a)] -= e.weight;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> WeightedGraph {
        build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 1.0)]).unwrap()
    }

    fn path3() -> WeightedGraph {
        build_graph(
            &[("a", 1.0), ("b", 2.0), ("c", 1.0)],
            &[("a", "b", 2.0), ("b", "c", 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn build_errors_name_the_offender() {
        assert_eq!(
            build_graph(&[("a", 1.0), ("b", 1.0), ("c", 1.0)], &[("a", "b", 1.0)]),
            Err(KwError::Disconnected("c".into()))
        );
        assert!(matches!(
            build_graph(&[("a", 1.0), ("b", -2.0)], &[("a", "b", 1.0)]),
            Err(KwError::NonPositiveMeasure { ref vertex, .. }) if vertex == "b"
        ));
        assert!(matches!(
            build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 0.0)]),
            Err(KwError::NonPositiveWeight { .. })
        ));
        assert_eq!(
            build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "a", 1.0)]),
            Err(KwError::SelfLoop("a".into()))
        );
        assert!(matches!(
            build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 1.0), ("b", "a", 2.0)]),
            Err(KwError::DuplicateEdge { .. })
        ));
        assert_eq!(
            build_graph::<&str>(&[("a", 1.0)], &[]),
            Err(KwError::SingleVertex("a".into()))
        );
        assert_eq!(
            build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "z", 1.0)]),
            Err(KwError::UnknownVertex("z".into()))
        );
        assert_eq!(
            build_graph(&[("a", 1.0), ("a", 1.0)], &[("a", "b", 1.0)]),
            Err(KwError::DuplicateVertex("a".into()))
        );
    }

    #[test]
    fn repeated_edge_with_same_weight_is_merged() {
        let g = build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 1.5), ("b", "a", 1.5)]).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.weight(0, 1), Some(1.5));
        assert_eq!(g.weight(1, 0), Some(1.5));
        assert_eq!(g.weight(0, 0), None);
    }

    #[test]
    fn two_vertex_operators() {
        let g = two();
        let f = g.function(vec![1.0, 0.0]).unwrap();
        assert_eq!(g.laplacian(&f).unwrap().values(), &[1.0, -1.0]);
        assert_eq!(g.gradient_form(&f, &f).unwrap().values(), &[0.5, 0.5]);
        assert!((g.sobolev_norm(&f).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let f = g.function(vec![3.0, 4.0]).unwrap();
        assert_eq!(g.lp_norm(&f, 2.0).unwrap(), 5.0);
        assert_eq!(g.lp_norm(&f, f64::INFINITY).unwrap(), 4.0);
    }

    #[test]
    fn constants() {
        let g = path3();
        let c = g.constant(-2.5);
        assert!(g.laplacian(&c).unwrap().sup_norm() == 0.0);
        let h = g.function(vec![1.0, 5.0, -1.0]).unwrap();
        assert!(g.gradient_form(&c, &h).unwrap().sup_norm() == 0.0);
        assert_eq!(g.lp_norm(&c, f64::INFINITY).unwrap(), 2.5);
        assert_eq!(g.integrate(&g.constant(1.0)).unwrap(), 4.0);
        assert_eq!(g.integrate(&g.zeros()).unwrap(), 0.0);
        let s = g.sobolev_norm(&c).unwrap();
        assert!((s - 2.5 * 4f64.sqrt()).abs() < 1e-14);
        assert_eq!(g.sobolev_norm(&g.zeros()).unwrap(), 0.0);
        assert_eq!(g.lp_norm(&g.zeros(), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn integrate_path3() {
        let g = path3();
        let f = g.function(vec![1.0, -1.0, 2.0]).unwrap();
        assert_eq!(g.integrate(&f).unwrap(), 1.0);
    }

    #[test]
    fn domain_and_exponent_errors() {
        let g = two();
        let f = VertexFunction::zeros(3);
        assert!(matches!(g.laplacian(&f), Err(KwError::DomainMismatch { .. })));
        assert!(matches!(g.integrate(&f), Err(KwError::DomainMismatch { .. })));
        assert_eq!(
            g.lp_norm(&g.zeros(), 0.5),
            Err(KwError::InvalidExponent(0.5))
        );
        assert!(g.lp_norm(&g.zeros(), f64::NAN).is_err());
    }

    #[test]
    fn matrix_views_agree_with_operator() {
        let g = path3();
        let f = g.function(vec![0.0, 1.0, 3.0]).unwrap();
        let lf = g.laplacian(&f).unwrap();
        let v = nalgebra::DVector::from_column_slice(f.values());
        let lm = g.laplacian_matrix() * &v;
        let mut sm = g.stiffness_matrix() * &v;
        for x in 0..3 {
            sm[x] /= g.measure()[x];
            assert!((lm[x] - lf[x]).abs() < 1e-15);
            assert!((sm[x] - lf[x]).abs() < 1e-15);
        }
    }
}

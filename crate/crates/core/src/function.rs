use std::ops::Index;

use crate::error::{KwError, Result};

/// A real-valued function on the vertex set, stored in the graph's vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
}

impl VertexFunction {
    /// Wraps `values`, rejecting NaN and infinities.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(KwError::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self::from_raw(vec![value; len])
    }

    pub fn zeros(len: usize) -> Self {
        Self::constant(len, 0.0)
    }

    /// Indicator of the vertex at `index`.
    pub fn indicator(len: usize, index: usize) -> Self {
        let mut values = vec![0.0; len];
        values[index] = 1.0;
        Self::from_raw(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self::from_raw(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn shift(&self, s: f64) -> Self {
        self.map(|v| v + s)
    }

    /// `self + s * dir`
    pub fn axpy(&self, s: f64, dir: &Self) -> Self {
        self.zip_with(dir, |a, b| a + s * b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `true` when every entry is `<=` the matching entry of `other`, up to `slack`.
    pub fn le(&self, other: &Self, slack: f64) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= *b + slack)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for VertexFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            VertexFunction::new(vec![0.0, f64::NAN]),
            Err(KwError::NonFinite { index: 1, .. })
        ));
        assert!(VertexFunction::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(VertexFunction::new(vec![1.0, -2.0]).is_ok());
    }

    #[test]
    fn norms_and_order() {
        let f = VertexFunction::new(vec![-3.0, 2.0]).unwrap();
        assert_eq!(f.sup_norm(), 3.0);
        assert_eq!(f.max(), 2.0);
        assert_eq!(f.min(), -3.0);
        let g = f.shift(1.0);
        assert!(f.le(&g, 0.0));
        assert!(!g.le(&f, 0.5));
    }
}

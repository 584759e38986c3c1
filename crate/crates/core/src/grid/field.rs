use std::sync::Arc;

use super::domain::BallDomain;
use crate::error::{LabError, Result};

/// Scalar values on every node of a [`BallDomain`], interior nodes first.
#[derive(Debug, Clone)]
pub struct GridField {
    domain: Arc<BallDomain>,
    values: Vec<f64>,
}

impl PartialEq for GridField {
    fn eq(&self, other: &Self) -> bool {
        self.same_domain(other) && self.values == other.values
    }
}

impl GridField {
    pub fn zeros(domain: &Arc<BallDomain>) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn constant(domain: &Arc<BallDomain>, c: f64) -> Self {
        assert!(c.is_finite(), "constant field value must be finite");
        GridField {
            domain: domain.clone(),
            values: vec![c; domain.node_count()],
        }
    }

    /// Samples `f` at every node. Panics if `f` returns a non-finite value.
    pub fn from_fn(domain: &Arc<BallDomain>, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::try_from_fn(domain, f).expect("sampled field must be finite")
    }

    pub fn try_from_fn(domain: &Arc<BallDomain>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; domain.dim()];
        let values = (0..domain.node_count())
            .map(|i| {
                domain.coord_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self::from_values(domain, values)
    }

    /// Samples `f` at interior nodes and sets boundary values to zero.
    pub fn test_field(domain: &Arc<BallDomain>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut field = Self::from_fn(domain, f);
        field.boundary_mut().fill(0.0);
        field
    }

    pub fn from_values(domain: &Arc<BallDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(LabError::InvalidParameter(format!(
                "expected {} values, got {}",
                domain.node_count(),
                values.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite { node });
        }
        Ok(GridField {
            domain: domain.clone(),
            values,
        })
    }

    pub fn from_parts(domain: &Arc<BallDomain>, interior: &[f64], boundary: &[f64]) -> Result<Self> {
        if interior.len() != domain.interior_count() || boundary.len() != domain.boundary_count() {
            return Err(LabError::InvalidParameter("value counts do not match the domain".into()));
        }
        let mut values = Vec::with_capacity(domain.node_count());
        values.extend_from_slice(interior);
        values.extend_from_slice(boundary);
        Self::from_values(domain, values)
    }

    pub fn domain(&self) -> &Arc<BallDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[..self.domain.interior_count()]
    }

    pub fn boundary(&self) -> &[f64] {
        &self.values[self.domain.interior_count()..]
    }

    /// Mutable interior values. Callers must keep them finite.
    pub fn interior_mut(&mut self) -> &mut [f64] {
        let ni = self.domain.interior_count();
        &mut self.values[..ni]
    }

    pub fn boundary_mut(&mut self) -> &mut [f64] {
        let ni = self.domain.interior_count();
        &mut self.values[ni..]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_domain(&self, other: &GridField) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    pub fn ensure_same_domain(&self, other: &GridField) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(LabError::DomainMismatch)
        }
    }

    pub fn ensure_on(&self, domain: &BallDomain) -> Result<()> {
        if *self.domain == *domain {
            Ok(())
        } else {
            Err(LabError::DomainMismatch)
        }
    }

    /// Applies `f` nodewise. Panics on non-finite results.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        GridField::from_values(&self.domain, values).expect("mapped field must be finite")
    }

    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        self.ensure_same_domain(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GridField::from_values(&self.domain, values)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridField, b: f64) -> Result<GridField> {
        self.zip_map(other, |u, v| a * u + b * v)
    }

    pub fn with_boundary_zeroed(mut self) -> GridField {
        self.boundary_mut().fill(0.0);
        self
    }

    pub fn max_interior(&self) -> f64 {
        self.interior().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_interior(&self) -> f64 {
        self.interior().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Max of absolute values over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridField) -> Result<f64> {
        self.ensure_same_domain(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// One `n`-vector per interior node.
#[derive(Debug, Clone)]
pub struct VectorField {
    dim: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len() % dim, 0);
        VectorField { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// One symmetric `n x n` matrix per interior node, upper triangle stored row by row.
#[derive(Debug, Clone)]
pub struct SymmetricMatrixField {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrixField {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        let w = dim * (dim + 1) / 2;
        assert_eq!(data.len() % w, 0);
        SymmetricMatrixField { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.dim * (self.dim + 1) / 2)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Entry `(a, b)` of the matrix at node `i`.
    pub fn get(&self, i: usize, a: usize, b: usize) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let w = self.dim * (self.dim + 1) / 2;
        self.data[i * w + upper_index(self.dim, a, b)]
    }

    /// Full row-major copy of the matrix at node `i`.
    pub fn full(&self, i: usize) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] = self.get(i, a, b);
            }
        }
        m
    }
}

/// Position of `(a, b)`, `a <= b`, in a row-by-row upper triangle.
pub fn upper_index(n: usize, a: usize, b: usize) -> usize {
    a * n - a * (a + 1) / 2 + b
}

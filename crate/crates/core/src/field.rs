//! Vertex-indexed fields.
//!
//! Total fields are dense vectors aligned with the graph's vertex index order.
//! Partial data (boundary values, values on a subset) is keyed by vertex id.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MetricMeasureGraph, VertexId};
use crate::report::ext_float;

/// Values on a subset of vertices, keyed by id.
pub type PartialField = BTreeMap<VertexId, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    #[serde(with = "ext_float::vec")]
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Builds a total field from id-keyed values; every vertex must be present.
    pub fn from_partial(g: &MetricMeasureGraph, data: &PartialField) -> Result<Self> {
        let mut values = vec![f64::NAN; g.vertex_count()];
        for (&id, &v) in data {
            values[g.index_of(id)?] = v;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::input(format!("field missing a value for vertex {}", g.id(i))));
        }
        Ok(ScalarField { values })
    }

    pub fn check_len(&self, g: &MetricMeasureGraph) -> Result<()> {
        if self.values.len() != g.vertex_count() {
            return Err(Error::input(format!(
                "field has {} values for {} vertices",
                self.values.len(),
                g.vertex_count()
            )));
        }
        Ok(())
    }

    /// Largest absolute finite value.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_partial(&self, g: &MetricMeasureGraph) -> PartialField {
        self.values.iter().enumerate().map(|(i, &v)| (g.id(i), v)).collect()
    }
}

/// Nonnegative vertex field: Hajłasz gradients, upper-gradient densities,
/// per-vertex residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientField {
    #[serde(with = "ext_float::vec")]
    pub values: Vec<f64>,
}

impl GradientField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::input(format!("gradient values must be nonnegative, got {v}")));
        }
        Ok(GradientField { values })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        GradientField::new(vec![c; n]).expect("constant gradient must be nonnegative")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorNorm {
    #[default]
    Max,
    Euclidean,
}

impl VectorNorm {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            VectorNorm::Max => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            VectorNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            VectorNorm::Max => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
            VectorNorm::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }
}

/// `R^m`-valued field; entries are `None` off the field's support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub dim: usize,
    pub norm: VectorNorm,
    pub values: Vec<Option<Vec<f64>>>,
}

impl VectorField {
    pub fn new(dim: usize, norm: VectorNorm, values: Vec<Option<Vec<f64>>>) -> Result<Self> {
        for v in values.iter().flatten() {
            if v.len() != dim {
                return Err(Error::input(format!("vector of length {} in a {dim}-dimensional field", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::input("vector field values must be finite"));
            }
        }
        Ok(VectorField { dim, norm, values })
    }

    /// Field supported on the ids in `data`.
    pub fn from_partial(
        g: &MetricMeasureGraph,
        dim: usize,
        norm: VectorNorm,
        data: &BTreeMap<VertexId, Vec<f64>>,
    ) -> Result<Self> {
        let mut values = vec![None; g.vertex_count()];
        for (&id, v) in data {
            values[g.index_of(id)?] = Some(v.clone());
        }
        VectorField::new(dim, norm, values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(self.norm.norm(v)))
    }

    /// Scalar field as a one-dimensional vector field.
    pub fn from_scalar(values: &[Option<f64>]) -> Self {
        VectorField {
            dim: 1,
            norm: VectorNorm::Max,
            values: values.iter().map(|v| v.map(|x| vec![x])).collect(),
        }
    }
}

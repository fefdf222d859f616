//! Metric measure spaces discretized as weighted graphs.
//!
//! The crate computes geodesic and essential distances, quasiconvexity,
//! doubling and Poincaré diagnostics, builds Lipschitz extension operators
//! (McShane with truncation, Whitney-type over Nagata covers) and solves the
//! discrete infinity-harmonic / AMLE boundary problem.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amle;
pub mod analysis;
pub mod error;
pub mod extension;
pub mod field;
pub mod graph;
pub mod io;
pub mod metric;
pub mod paths;
pub mod report;
pub mod spaces;

pub use error::{Error, Result};
pub use field::{GradientField, PartialField, ScalarField, VectorField, VectorNorm};
pub use graph::{Edge, MetricMeasureGraph, Vertex, VertexId};
pub use metric::{DistanceMatrix, Euclidean, Metric, MetricChoice};

//! Distance oracles and Lipschitz-constant audits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::graph::{Edge, MetricMeasureGraph};
use crate::paths::{all_edges, distances_from, positive_edges};

/// A distance on vertex indices.
pub trait Metric: Sync {
    fn distance(&self, a: usize, b: usize) -> f64;
}

impl<F: Fn(usize, usize) -> f64 + Sync> Metric for F {
    fn distance(&self, a: usize, b: usize) -> f64 {
        self(a, b)
    }
}

/// Which edges a graph geodesic may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricChoice {
    /// Shortest paths over all edges.
    #[default]
    Graph,
    /// Shortest paths over positive-measure edges only.
    Essential,
}

impl MetricChoice {
    pub fn edge_filter(self) -> fn(&Edge) -> bool {
        match self {
            MetricChoice::Graph => all_edges,
            MetricChoice::Essential => positive_edges,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "graph" => Ok(MetricChoice::Graph),
            "essential" => Ok(MetricChoice::Essential),
            _ => Err(Error::input(format!("unknown metric '{s}', expected graph|essential"))),
        }
    }
}

/// Dense all-pairs distance table.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// One Dijkstra per row; rows are computed in parallel and assembled in
    /// index order. Row `i` sums path lengths outward from `i`, so `(i, j)`
    /// and `(j, i)` may differ in the last bit.
    pub fn all_pairs<F>(g: &MetricMeasureGraph, keep: F) -> Self
    where
        F: Fn(&Edge) -> bool + Sync,
    {
        let n = g.vertex_count();
        let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| distances_from(g, i, &keep)).collect();
        DistanceMatrix { n, data: rows.concat() }
    }

    pub fn for_choice(g: &MetricMeasureGraph, choice: MetricChoice) -> Self {
        DistanceMatrix::all_pairs(g, choice.edge_filter())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

impl Metric for DistanceMatrix {
    fn distance(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }
}

/// Euclidean distance between vertex embeddings.
#[derive(Clone, Copy, Debug)]
pub struct Euclidean<'g> {
    g: &'g MetricMeasureGraph,
}

impl<'g> Euclidean<'g> {
    pub fn new(g: &'g MetricMeasureGraph) -> Result<Self> {
        if !g.is_empty() && g.embedding_dim().is_none() {
            return Err(Error::input("Euclidean distance needs a pos field on every vertex"));
        }
        Ok(Euclidean { g })
    }
}

impl Metric for Euclidean<'_> {
    fn distance(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.g.pos(a).unwrap(), self.g.pos(b).unwrap());
        p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

/// `sup |u(x) - u(y)| / d(x, y)` over distinct pairs at finite positive
/// distance. Pairs where either value is NaN are skipped.
pub fn lipschitz_constant<M: Metric + ?Sized>(g: &MetricMeasureGraph, u: &ScalarField, metric: &M) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::input("Lipschitz constant of a field on an empty graph"));
    }
    u.check_len(g)?;
    let n = g.vertex_count();
    let row_max = |i: usize| {
        let mut best = 0.0f64;
        for j in i + 1..n {
            let d = metric.distance(i, j);
            let (a, b) = (u.values[i], u.values[j]);
            if !(d.is_finite() && d > 0.0) || a.is_nan() || b.is_nan() {
                continue;
            }
            let diff = if a == b { 0.0 } else { (a - b).abs() };
            best = best.max(diff / d);
        }
        best
    };
    let maxima: Vec<f64> = (0..n).into_par_iter().map(row_max).collect();
    Ok(maxima.into_iter().fold(0.0, f64::max))
}

/// Lipschitz constant in a graph's own path metric. For a path metric the
/// supremum over pairs is attained on an edge, so one pass over the edges
/// accepted by `keep` suffices. Edges touching a non-finite value are skipped.
pub fn edge_lipschitz<F>(g: &MetricMeasureGraph, values: &[f64], keep: F) -> f64
where
    F: Fn(&Edge) -> bool,
{
    let mut best = 0.0f64;
    for (k, e) in g.edges().iter().enumerate() {
        let (a, b) = g.ends(k);
        if keep(e) && values[a].is_finite() && values[b].is_finite() && values[a] != values[b] {
            best = best.max((values[a] - values[b]).abs() / e.len);
        }
    }
    best
}

/// Lipschitz constant restricted to the vertex indices in `subset`.
pub fn lipschitz_constant_on<M: Metric + ?Sized>(subset: &[usize], values: &[f64], metric: &M) -> f64 {
    let mut best = 0.0f64;
    for (k, &i) in subset.iter().enumerate() {
        for &j in &subset[k + 1..] {
            let d = metric.distance(i, j);
            if d.is_finite() && d > 0.0 && values[i] != values[j] {
                best = best.max((values[i] - values[j]).abs() / d);
            }
        }
    }
    best
}

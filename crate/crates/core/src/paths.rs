//! Shortest paths, balls and connected components.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, MetricMeasureGraph, VertexId};
use crate::report::ext_float;

const NO_PRED: u32 = u32::MAX;

/// Accepts every edge.
pub fn all_edges(_: &Edge) -> bool {
    true
}

/// Accepts edges of positive measure.
pub fn positive_edges(e: &Edge) -> bool {
    e.mu_edge > 0.0
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    vertex: usize,
}

impl Eq for State {}

// min-heap on (cost, vertex)
impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single- or multi-source shortest path tree.
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pred: Vec<u32>,
}

impl ShortestPaths {
    /// Vertex indices from a source to `target`, empty when unreachable.
    pub fn path_to(&self, target: usize) -> Vec<usize> {
        if !self.dist[target].is_finite() {
            return Vec::new();
        }
        let mut path = vec![target];
        let mut cur = target;
        while self.pred[cur] != NO_PRED {
            cur = self.pred[cur] as usize;
            path.push(cur);
        }
        path.reverse();
        path
    }
}

/// Dijkstra from `sources` (vertex index, initial offset) over edges passing
/// `keep`. Vertices farther than `cutoff` are left at infinity. Among equal
/// tentative distances the smaller vertex index is settled first, and the
/// recorded predecessor is the smallest index achieving the distance.
pub fn dijkstra<F>(g: &MetricMeasureGraph, sources: &[(usize, f64)], keep: F, cutoff: f64) -> ShortestPaths
where
    F: Fn(&Edge) -> bool,
{
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &(s, d0) in sources {
        if d0 < dist[s] {
            dist[s] = d0;
            heap.push(State { cost: d0, vertex: s });
        }
    }
    while let Some(State { cost, vertex }) = heap.pop() {
        if done[vertex] || cost > dist[vertex] {
            continue;
        }
        if cost > cutoff {
            break;
        }
        done[vertex] = true;
        for inc in g.neighbors(vertex) {
            if done[inc.vertex] || !keep(g.edge(inc.edge)) {
                continue;
            }
            let next = cost + g.edge(inc.edge).len;
            let slot = &mut dist[inc.vertex];
            if next < *slot {
                *slot = next;
                pred[inc.vertex] = vertex as u32;
                heap.push(State { cost: next, vertex: inc.vertex });
            } else if next == *slot && (vertex as u32) < pred[inc.vertex] {
                pred[inc.vertex] = vertex as u32;
            }
        }
    }
    for (d, &fin) in dist.iter_mut().zip(&done) {
        if !fin {
            *d = f64::INFINITY;
        }
    }
    ShortestPaths { dist, pred }
}

/// Distances from vertex index `source` to every vertex.
pub fn distances_from<F: Fn(&Edge) -> bool>(g: &MetricMeasureGraph, source: usize, keep: F) -> Vec<f64> {
    dijkstra(g, &[(source, 0.0)], keep, f64::INFINITY).dist
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    #[serde(with = "ext_float")]
    pub length: f64,
    pub vertex_sequence: Vec<VertexId>,
}

pub fn shortest_path<F>(g: &MetricMeasureGraph, x: VertexId, y: VertexId, keep: F) -> Result<PathResult>
where
    F: Fn(&Edge) -> bool,
{
    let (xi, yi) = (g.index_of(x)?, g.index_of(y)?);
    let sp = dijkstra(g, &[(xi, 0.0)], keep, f64::INFINITY);
    Ok(PathResult {
        length: sp.dist[yi],
        vertex_sequence: sp.path_to(yi).into_iter().map(|i| g.id(i)).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BallKind {
    /// `d(center, y) < radius`
    #[default]
    Open,
    /// `d(center, y) <= radius`
    Closed,
}

impl BallKind {
    pub fn contains(self, d: f64, radius: f64) -> bool {
        match self {
            BallKind::Open => d < radius,
            BallKind::Closed => d <= radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: VertexId,
    pub radius: f64,
    pub members: BTreeSet<VertexId>,
    pub measure: f64,
}

/// Open ball in the graph metric.
pub fn ball(g: &MetricMeasureGraph, x: VertexId, r: f64) -> Result<Ball> {
    ball_with(g, x, r, BallKind::Open, all_edges)
}

pub fn ball_with<F>(g: &MetricMeasureGraph, x: VertexId, r: f64, kind: BallKind, keep: F) -> Result<Ball>
where
    F: Fn(&Edge) -> bool,
{
    if !(r > 0.0) {
        return Err(Error::input(format!("ball radius must be positive, got {r}")));
    }
    let xi = g.index_of(x)?;
    let members = ball_indices(g, xi, r, kind, keep);
    Ok(Ball {
        center: x,
        radius: r,
        measure: members.iter().map(|&i| g.mu(i)).sum(),
        members: members.into_iter().map(|i| g.id(i)).collect(),
    })
}

/// Ball members as ascending vertex indices.
pub fn ball_indices<F>(g: &MetricMeasureGraph, center: usize, r: f64, kind: BallKind, keep: F) -> Vec<usize>
where
    F: Fn(&Edge) -> bool,
{
    let sp = dijkstra(g, &[(center, 0.0)], keep, r);
    sp.dist
        .iter()
        .enumerate()
        .filter(|(_, &d)| kind.contains(d, r))
        .map(|(i, _)| i)
        .collect()
}

/// Connected components over the edges passing `keep`, each part sorted by id
/// and parts ordered by their smallest id.
pub fn components<F>(g: &MetricMeasureGraph, keep: F) -> Vec<Vec<VertexId>>
where
    F: Fn(&Edge) -> bool,
{
    component_labels(g, keep)
        .1
        .into_iter()
        .map(|part| part.into_iter().map(|i| g.id(i)).collect())
        .collect()
}

/// Component label per vertex index plus the index lists of each component.
pub fn component_labels<F>(g: &MetricMeasureGraph, keep: F) -> (Vec<usize>, Vec<Vec<usize>>)
where
    F: Fn(&Edge) -> bool,
{
    let n = g.vertex_count();
    let mut label = vec![usize::MAX; n];
    let mut parts = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = parts.len();
        let mut part = vec![start];
        label[start] = id;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for inc in g.neighbors(v) {
                if label[inc.vertex] == usize::MAX && keep(g.edge(inc.edge)) {
                    label[inc.vertex] = id;
                    part.push(inc.vertex);
                    stack.push(inc.vertex);
                }
            }
        }
        part.sort_unstable();
        parts.push(part);
    }
    (label, parts)
}

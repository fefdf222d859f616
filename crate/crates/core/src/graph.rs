//! Weighted undirected graphs carrying a vertex measure.
//!
//! A [`MetricMeasureGraph`] is immutable once built. Vertices are stored sorted
//! by id, so the dense vertex index order agrees with id order; every
//! algorithm in the crate works on indices and ties are broken by the smaller
//! index, i.e. the smaller id.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<f64>>,
    pub mu: f64,
}

impl Vertex {
    pub fn new(id: VertexId, mu: f64) -> Self {
        Vertex { id, pos: None, mu }
    }

    pub fn at(id: VertexId, pos: Vec<f64>, mu: f64) -> Self {
        Vertex { id, pos: Some(pos), mu }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
    pub len: f64,
    pub mu_edge: f64,
}

impl Edge {
    pub fn new(a: VertexId, b: VertexId, len: f64) -> Self {
        Edge { a, b, len, mu_edge: 1.0 }
    }

    pub fn with_measure(mut self, mu_edge: f64) -> Self {
        self.mu_edge = mu_edge;
        self
    }

    /// Zero-measure edges carry the negligibility role.
    pub fn is_negligible(&self) -> bool {
        self.mu_edge == 0.0
    }
}

/// Neighbor entry of the compressed adjacency: `(vertex index, edge index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub vertex: usize,
    pub edge: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct GraphDoc {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc", into = "GraphDoc")]
pub struct MetricMeasureGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    ends: Vec<[u32; 2]>,
    offsets: Vec<usize>,
    adjacency: Vec<[u32; 2]>,
}

impl TryFrom<GraphDoc> for MetricMeasureGraph {
    type Error = Error;

    fn try_from(doc: GraphDoc) -> Result<Self> {
        MetricMeasureGraph::new(doc.vertices, doc.edges)
    }
}

impl From<MetricMeasureGraph> for GraphDoc {
    fn from(g: MetricMeasureGraph) -> Self {
        GraphDoc { vertices: g.vertices, edges: g.edges }
    }
}

impl MetricMeasureGraph {
    /// Validates and indexes a graph. Vertices are re-sorted by id; edge order
    /// is kept as given.
    pub fn new(mut vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self> {
        if vertices.len() >= u32::MAX as usize || edges.len() >= u32::MAX as usize {
            return Err(Error::Size("graph exceeds 2^32 vertices or edges".into()));
        }
        vertices.sort_by_key(|v| v.id);
        for w in vertices.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::input(format!("duplicate vertex id {}", w[0].id)));
            }
        }
        let mut dim = None;
        for v in &vertices {
            if !v.mu.is_finite() || v.mu < 0.0 {
                return Err(Error::input(format!("vertex {} has invalid measure {}", v.id, v.mu)));
            }
            if let Some(p) = &v.pos {
                if p.iter().any(|c| !c.is_finite()) {
                    return Err(Error::input(format!("vertex {} has a non-finite coordinate", v.id)));
                }
                match dim {
                    None => dim = Some(p.len()),
                    Some(d) if d != p.len() => {
                        return Err(Error::input(format!(
                            "vertex {} has {} coordinates, expected {d}",
                            v.id,
                            p.len()
                        )))
                    }
                    _ => {}
                }
            }
        }

        let lookup = |id: VertexId| -> Result<u32> {
            vertices
                .binary_search_by_key(&id, |v| v.id)
                .map(|i| i as u32)
                .map_err(|_| Error::UnknownVertex(id))
        };
        let mut ends = Vec::with_capacity(edges.len());
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            let (a, b) = (lookup(e.a)?, lookup(e.b)?);
            if a == b {
                return Err(Error::input(format!("self-loop at vertex {}", e.a)));
            }
            if !(e.len.is_finite() && e.len > 0.0) {
                return Err(Error::input(format!("edge {}-{} has invalid length {}", e.a, e.b, e.len)));
            }
            if !e.mu_edge.is_finite() || e.mu_edge < 0.0 {
                return Err(Error::input(format!(
                    "edge {}-{} has invalid measure {}",
                    e.a, e.b, e.mu_edge
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::input(format!("duplicate edge {}-{}", e.a, e.b)));
            }
            ends.push([a, b]);
        }
        drop(seen);

        let n = vertices.len();
        let mut degree = vec![0usize; n + 1];
        for &[a, b] in &ends {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for d in &degree[..n] {
            offsets.push(acc);
            acc += d;
        }
        offsets.push(acc);
        let mut fill = offsets.clone();
        let mut adjacency = vec![[0u32; 2]; acc];
        for (ei, &[a, b]) in ends.iter().enumerate() {
            adjacency[fill[a as usize]] = [b, ei as u32];
            fill[a as usize] += 1;
            adjacency[fill[b as usize]] = [a, ei as u32];
            fill[b as usize] += 1;
        }
        for i in 0..n {
            adjacency[offsets[i]..offsets[i + 1]].sort_unstable();
        }

        Ok(MetricMeasureGraph { vertices, edges, ends, offsets, adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, index: usize) -> &Vertex {
        &self.vertices[index]
    }

    pub fn edge(&self, index: usize) -> &Edge {
        &self.edges[index]
    }

    pub fn id(&self, index: usize) -> VertexId {
        self.vertices[index].id
    }

    pub fn mu(&self, index: usize) -> f64 {
        self.vertices[index].mu
    }

    pub fn pos(&self, index: usize) -> Option<&[f64]> {
        self.vertices[index].pos.as_deref()
    }

    pub fn index_of(&self, id: VertexId) -> Result<usize> {
        self.vertices
            .binary_search_by_key(&id, |v| v.id)
            .map_err(|_| Error::UnknownVertex(id))
    }

    /// Endpoint indices of edge `e`.
    pub fn ends(&self, e: usize) -> (usize, usize) {
        let [a, b] = self.ends[e];
        (a as usize, b as usize)
    }

    /// Incident edges of vertex `i`, ordered by neighbor index.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = Incidence> + '_ {
        self.adjacency[self.offsets[i]..self.offsets[i + 1]]
            .iter()
            .map(|&[v, e]| Incidence { vertex: v as usize, edge: e as usize })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn total_measure(&self) -> f64 {
        self.vertices.iter().map(|v| v.mu).sum()
    }

    /// Same vertex set, only the edges accepted by `keep`.
    pub fn filter_edges(&self, keep: impl Fn(&Edge) -> bool) -> MetricMeasureGraph {
        let edges = self.edges.iter().filter(|e| keep(e)).cloned().collect();
        MetricMeasureGraph::new(self.vertices.clone(), edges)
            .expect("a subgraph of a valid graph is valid")
    }

    /// Subgraph induced by the given vertex indices.
    pub fn induced(&self, keep: &[usize]) -> MetricMeasureGraph {
        let mut mask = vec![false; self.vertex_count()];
        for &i in keep {
            mask[i] = true;
        }
        let vertices = (0..self.vertex_count())
            .filter(|&i| mask[i])
            .map(|i| self.vertices[i].clone())
            .collect();
        let edges = self
            .edges
            .iter()
            .zip(&self.ends)
            .filter(|(_, &[a, b])| mask[a as usize] && mask[b as usize])
            .map(|(e, _)| e.clone())
            .collect();
        MetricMeasureGraph::new(vertices, edges).expect("an induced subgraph of a valid graph is valid")
    }

    /// Edge length between adjacent vertices, if an edge exists.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let slice = &self.adjacency[self.offsets[a]..self.offsets[a + 1]];
        slice
            .binary_search_by_key(&(b as u32), |&[v, _]| v)
            .ok()
            .map(|k| slice[k][1] as usize)
    }

    /// Dimension of the vertex embeddings, or `None` if any vertex lacks one.
    pub fn embedding_dim(&self) -> Option<usize> {
        let first = self.vertices.first()?.pos.as_ref()?.len();
        self.vertices.iter().all(|v| v.pos.is_some()).then_some(first)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

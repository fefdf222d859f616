#![allow(dead_code)]

use metricgraph::graph::{Edge, MetricMeasureGraph, Vertex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Connected graph: a random spanning tree plus `extra` random chords, edge
/// lengths in [0.1, 1], vertex measures in [0.5, 1.5].
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> MetricMeasureGraph {
    let vertices = (0..n as u64).map(|i| Vertex::new(i, rng.gen_range(0.5..1.5))).collect();
    let mut pairs = BTreeSet::new();
    for i in 1..n as u64 {
        pairs.insert((rng.gen_range(0..i), i));
    }
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n as u64), rng.gen_range(0..n as u64));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges = pairs.into_iter().map(|(a, b)| Edge::new(a, b, rng.gen_range(0.1..1.0))).collect();
    MetricMeasureGraph::new(vertices, edges).unwrap()
}

/// `k` distinct vertex indices, sorted.
pub fn random_subset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut s = BTreeSet::new();
    while s.len() < k.min(n) {
        s.insert(rng.gen_range(0..n));
    }
    s.into_iter().collect()
}

/// Single-source distances by Bellman-Ford relaxation over edges passing `keep`.
pub fn bellman_ford(g: &MetricMeasureGraph, src: usize, keep: impl Fn(&Edge) -> bool) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; g.vertex_count()];
    d[src] = 0.0;
    loop {
        let mut changed = false;
        for (k, e) in g.edges().iter().enumerate() {
            if !keep(e) {
                continue;
            }
            let (a, b) = g.ends(k);
            if d[a] + e.len < d[b] {
                d[b] = d[a] + e.len;
                changed = true;
            }
            if d[b] + e.len < d[a] {
                d[a] = d[b] + e.len;
                changed = true;
            }
        }
        if !changed {
            return d;
        }
    }
}

#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use metricgraph::io::{parse_scalar_field_csv, parse_vector_field_csv};
use metricgraph::{Edge, MetricMeasureGraph, Vertex, VectorNorm};

fn graph() -> &'static MetricMeasureGraph {
    static G: OnceLock<MetricMeasureGraph> = OnceLock::new();
    G.get_or_init(|| {
        let vertices = [0, 1, 2, 5, 9].map(|id| Vertex::new(id, 1.0)).to_vec();
        let edges = vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 0.5), Edge::new(2, 5, 2.0), Edge::new(5, 9, 1.0)];
        MetricMeasureGraph::new(vertices, edges).unwrap()
    })
}

fuzz_target!(|data: &[u8]| {
    let g = graph();
    if let Ok(f) = parse_scalar_field_csv(data, g) {
        assert_eq!(f.len(), g.vertex_count());
    }
    for norm in [VectorNorm::Euclidean, VectorNorm::Max] {
        if let Ok(v) = parse_vector_field_csv(data, g, norm) {
            assert_eq!(v.values.len(), g.vertex_count());
            assert!(v.values.iter().flatten().all(|c| c.len() == v.dim));
        }
    }
});

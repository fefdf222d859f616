#![no_main]

use libfuzzer_sys::fuzz_target;
use metricgraph::io::parse_graph;

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = parse_graph(data) {
        let text = g.to_json().expect("valid graph serializes");
        let back = parse_graph(text.as_bytes()).expect("serialized graph parses");
        assert_eq!(back, g);
    }
});

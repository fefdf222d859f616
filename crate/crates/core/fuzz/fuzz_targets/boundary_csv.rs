#![no_main]

use libfuzzer_sys::fuzz_target;
use metricgraph::io::{parse_boundary_csv, parse_partial_csv, partial_field_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(b) = parse_boundary_csv(data) {
        assert!(b.values().all(|v| v.is_finite()));
        let back = parse_partial_csv(partial_field_csv(&b).as_bytes()).expect("written CSV parses");
        assert_eq!(back, b);
    }
});

#![no_main]

use busflow_core::io::{parse_line_points, write_line_points};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((stops, itineraries)) = parse_line_points(data) {
        for iti in &itineraries {
            assert!(iti.check().is_ok());
        }
        let mut buf = Vec::new();
        write_line_points(&mut buf, &stops, &itineraries).unwrap();
        let (again_stops, again_its) = parse_line_points(buf.as_slice()).unwrap();
        assert_eq!(again_its, itineraries);
        assert_eq!(again_stops.len(), stops.len());
    }
});

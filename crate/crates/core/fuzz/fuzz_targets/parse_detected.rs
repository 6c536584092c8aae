#![no_main]

use busflow_core::io::{parse_detected, write_detected};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(trips) = parse_detected(data) {
        for t in &trips {
            assert!(t.check().is_ok());
        }
        let mut buf = Vec::new();
        write_detected(&mut buf, &trips).unwrap();
        assert_eq!(parse_detected(buf.as_slice()).unwrap(), trips);
    }
});

#![no_main]

use busflow_core::io::{parse_lines, write_lines};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(lines) = parse_lines(data) {
        let mut buf = Vec::new();
        write_lines(&mut buf, &lines).unwrap();
        assert_eq!(parse_lines(buf.as_slice()).unwrap(), lines);
    }
});

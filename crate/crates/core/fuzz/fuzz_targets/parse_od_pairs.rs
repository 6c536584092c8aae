#![no_main]

use busflow_core::io::{parse_od_pairs, write_od_pairs};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(pairs) = parse_od_pairs(data) {
        let mut buf = Vec::new();
        write_od_pairs(&mut buf, &pairs).unwrap();
        assert_eq!(parse_od_pairs(buf.as_slice()).unwrap(), pairs);
    }
});

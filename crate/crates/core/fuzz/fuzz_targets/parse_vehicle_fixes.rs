#![no_main]

use busflow_core::io::{parse_vehicle_fixes, write_vehicle_fixes};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(fixes) = parse_vehicle_fixes(data) {
        for w in fixes.windows(2) {
            if w[0].group_key() == w[1].group_key() {
                assert!(w[0].time <= w[1].time);
            }
        }
        let mut buf = Vec::new();
        write_vehicle_fixes(&mut buf, &fixes).unwrap();
        assert_eq!(parse_vehicle_fixes(buf.as_slice()).unwrap(), fixes);
    }
});

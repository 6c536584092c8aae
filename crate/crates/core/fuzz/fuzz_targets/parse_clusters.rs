#![no_main]

use busflow_core::io::{parse_clusters, write_clusters};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(clusters) = parse_clusters(data) {
        for c in &clusters {
            assert!(c.members.contains(&c.centroid_stop_id));
        }
        let mut buf = Vec::new();
        write_clusters(&mut buf, &clusters).unwrap();
        assert_eq!(parse_clusters(buf.as_slice()).unwrap(), clusters);
    }
});

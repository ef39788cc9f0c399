#![no_main]

use libfuzzer_sys::fuzz_target;

use humanet::protocol::TableDigest;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = TableDigest::decode(data) {
        assert_eq!(d.encode(), data);
        for e in &d.entries {
            assert_eq!(e.path.last(), Some(&e.host));
        }
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;

use humanet::protocol::Packet;

fuzz_target!(|data: &[u8]| {
    if let Ok(pkt) = Packet::decode(data) {
        let bytes = pkt.encode();
        assert_eq!(bytes, data, "decode accepted a non-canonical encoding");
        assert_eq!(Packet::decode(&bytes).unwrap(), pkt);
    }
});

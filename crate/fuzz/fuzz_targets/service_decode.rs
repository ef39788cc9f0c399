#![no_main]

use libfuzzer_sys::fuzz_target;

use humanet::services::ftp::{AckSegment, Segment};
use humanet::services::names::{decode_query, encode_query, Answer, RegisterArgs};

fuzz_target!(|data: &[u8]| {
    let Some((&selector, body)) = data.split_first() else {
        return;
    };
    match selector % 5 {
        0 => {
            if let Ok(s) = Segment::decode(body) {
                assert!(s.seq < s.total);
                assert_eq!(s.encode(), body);
            }
        }
        1 => {
            if let Ok(a) = AckSegment::decode(body) {
                assert_eq!(a.encode(), body);
            }
        }
        2 => {
            if let Ok(r) = RegisterArgs::decode(body) {
                assert_eq!(r.encode(), body);
            }
        }
        3 => {
            if let Ok(a) = Answer::decode(body) {
                assert_eq!(a.encode(), body);
            }
        }
        _ => {
            if let Ok(q) = decode_query(body) {
                assert_eq!(encode_query(&q), body);
            }
        }
    }
});

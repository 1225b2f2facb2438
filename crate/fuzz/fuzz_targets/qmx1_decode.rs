#![no_main]

use libfuzzer_sys::fuzz_target;
use qmm_core::io::{decode_qmx1, encode_qmx1};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_qmx1(data) {
        let again = decode_qmx1(&encode_qmx1(&m)).expect("re-encoded matrix decodes");
        assert_eq!(again, m);
    }
});

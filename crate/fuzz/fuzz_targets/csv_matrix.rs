#![no_main]

use libfuzzer_sys::fuzz_target;
use qmm_core::io::{decode_csv, encode_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = decode_csv(text) {
        let again = decode_csv(&encode_csv(&m)).expect("re-encoded matrix decodes");
        assert_eq!(again, m);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use qmm_core::formats::QuantizedVector;

// Input layout: JSON descriptor, one NUL byte, little-endian code payload.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else {
        return;
    };
    let Ok(json) = std::str::from_utf8(&data[..split]) else {
        return;
    };
    if let Ok(qv) = QuantizedVector::from_artifact(json, &data[split + 1..]) {
        let _ = qv.reconstruct();
        let (json, codes) = qv.to_artifact().expect("valid vector serializes");
        assert_eq!(
            QuantizedVector::from_artifact(&json, &codes).expect("roundtrip"),
            qv
        );
    }
});

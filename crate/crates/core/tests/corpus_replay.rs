//! Replays the checked-in fuzz corpora through the decoders with the same
//! assertions as the fuzz targets.

use std::path::PathBuf;

use qmm_core::formats::QuantizedVector;
use qmm_core::io::{decode_csv, decode_qmx1, encode_csv, encode_qmx1};

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus {target}");
    files
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn qmx1_corpus() {
    let mut decoded = 0;
    for (name, data) in corpus("qmx1_decode") {
        if let Ok(m) = decode_qmx1(&data) {
            assert_eq!(decode_qmx1(&encode_qmx1(&m)).unwrap(), m, "{name}");
            decoded += 1;
        }
    }
    assert!(decoded >= 2);
}

#[test]
fn csv_corpus() {
    let mut decoded = 0;
    for (name, data) in corpus("csv_matrix") {
        let Ok(text) = std::str::from_utf8(&data) else {
            continue;
        };
        if let Ok(m) = decode_csv(text) {
            assert_eq!(decode_csv(&encode_csv(&m)).unwrap(), m, "{name}");
            decoded += 1;
        }
    }
    assert!(decoded >= 2);
}

#[test]
fn quantized_vector_corpus() {
    for (name, data) in corpus("quantized_vector_decode") {
        let split = data.iter().position(|&b| b == 0).expect("NUL separator");
        let json = std::str::from_utf8(&data[..split]).unwrap();
        let qv = QuantizedVector::from_artifact(json, &data[split + 1..])
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(qv.reconstruct().len(), qv.len());
        let (json, codes) = qv.to_artifact().unwrap();
        assert_eq!(
            QuantizedVector::from_artifact(&json, &codes).unwrap(),
            qv,
            "{name}"
        );
    }
}

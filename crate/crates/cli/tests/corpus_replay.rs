use std::path::PathBuf;

use qmm_cli::RunConfig;

#[test]
fn run_config_corpus() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/run_config_parse");
    let mut accepted = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        match RunConfig::from_toml_str(&text) {
            Ok(cfg) => {
                cfg.scheme().unwrap();
                accepted += 1;
            }
            Err(e) => assert_eq!(e.kind, "config", "{}", path.display()),
        }
    }
    assert!(accepted >= 5);
}

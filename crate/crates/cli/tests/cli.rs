use std::path::Path;
use std::process::{Command, Output};

use qmm_core::io::{read_matrix, write_csv};
use qmm_core::matrix::Matrix;
use serde_json::Value;

fn qmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmm"))
        .args(args)
        .env_remove("QMM_SEED")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = qmm(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn ok_text(args: &[&str]) -> String {
    let out = qmm(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// `(rate, distortion, label)` rows after the config and header lines.
fn csv_rows(text: &str) -> Vec<(f64, f64, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].to_string(),
            )
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_single_line_error(out: &Output) -> Value {
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    let v: Value = serde_json::from_str(err.trim_end()).unwrap();
    assert!(v["error"]["kind"].is_string() && v["error"]["message"].is_string());
    v
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.qmx1"), dir.path().join("b.qmx1"));
    for p in [&p1, &p2] {
        ok_json(&[
            "gen",
            "--rows",
            "4",
            "--cols",
            "4",
            "--dist",
            "gaussian",
            "--seed",
            "1",
            "--out",
            s(p),
        ]);
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    let p3 = dir.path().join("c.qmx1");
    ok_json(&[
        "gen",
        "--rows",
        "4",
        "--cols",
        "4",
        "--seed",
        "2",
        "--out",
        s(&p3),
    ]);
    assert_ne!(std::fs::read(&p1).unwrap(), std::fs::read(&p3).unwrap());
}

#[test]
fn gen_spike_places_one_outlier_per_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("spike.qmx1");
    ok_json(&[
        "gen",
        "--rows",
        "32",
        "--cols",
        "8",
        "--dist",
        "spike",
        "--spikes",
        "1",
        "--magnitude",
        "100",
        "--out",
        s(&p),
    ]);
    let m = read_matrix(&p).unwrap();
    for c in 0..m.cols() {
        let hits = m.column(c).iter().filter(|v| v.abs() == 100.0).count();
        assert_eq!(hits, 1, "column {c}");
    }
}

#[test]
fn gen_gaussian_variance_matches_target() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.csv");
    let report = ok_json(&[
        "gen",
        "--rows",
        "4096",
        "--cols",
        "1",
        "--dist",
        "gaussian",
        "--scale",
        "2",
        "--format",
        "csv",
        "--seed",
        "4",
        "--out",
        s(&p),
    ]);
    let m = read_matrix(&p).unwrap();
    let n = m.data().len() as f64;
    let mean = m.data().iter().sum::<f64>() / n;
    let var = m
        .data()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1.0);
    let sd = 4.0 * (2.0 / (n - 1.0)).sqrt();
    assert!((var - 4.0).abs() <= 3.0 * sd, "variance {var}");
    assert_eq!(report["result"]["rows"], 4096);
    assert_eq!(report["config"]["distribution"]["sigma"], 2.0);
}

#[test]
fn ipbench_reproduces_gaussian_table_rows() {
    for (scheme, rotate, target) in [
        ("int8", false, -6.8619),
        ("int8", true, -6.8619),
        ("e4m3", false, -5.2395),
    ] {
        let mut args = vec!["ipbench", "--scheme", scheme, "--seed", "17"];
        if rotate {
            args.push("--rotate");
        }
        let r = ok_json(&args);
        let got = r["result"]["log2_summary"]["rms_2n"].as_f64().unwrap();
        assert!(
            (got - target).abs() <= 0.05,
            "{scheme} rotate={rotate}: {got}"
        );
        assert_eq!(r["config"]["n"], 4096);
        assert_eq!(r["config"]["rotate"], rotate);
    }
}

#[test]
fn ipbench_exact_and_nvfp4_rate() {
    let r = ok_json(&[
        "ipbench", "--scheme", "exact", "--n", "64", "--a", "3", "--b", "3", "--rotate",
    ]);
    let err = r["result"]["error"]["data"].as_array().unwrap();
    assert!(err.iter().all(|v| v.as_f64().unwrap().abs() < 1e-9));
    let r = ok_json(&[
        "ipbench", "--scheme", "nvfp4", "--n", "64", "--a", "2", "--b", "2",
    ]);
    assert_eq!(r["result"]["rate"], 4.5);
}

#[test]
fn ipbench_reads_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 1.0]]).unwrap();
    let pa = dir.path().join("a.csv");
    write_csv(&pa, &a).unwrap();
    let r = ok_json(&[
        "ipbench",
        "--scheme",
        "exact",
        "--a-file",
        s(&pa),
        "--b-file",
        s(&pa),
    ]);
    assert_eq!(r["config"]["n"], 2);
    assert_eq!(r["result"]["k"]["rows"], 2);
}

#[test]
fn weightquant_identity_sigma_gives_identical_codes() {
    let dir = tempfile::tempdir().unwrap();
    for sic in ["watersic", "gptq"] {
        ok_text(&[
            "weightquant",
            "--sigma",
            "identity",
            "--n",
            "8",
            "--a",
            "32",
            "--rate",
            "4",
            "--sic",
            sic,
            "--stem",
            sic,
            "--out",
            s(dir.path()),
        ]);
    }
    let zw = std::fs::read(dir.path().join("watersic_z.qmx1")).unwrap();
    let zg = std::fs::read(dir.path().join("gptq_z.qmx1")).unwrap();
    assert_eq!(zw, zg);
    let report: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("watersic_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["sic"], "watersic");
    assert!(report["result"]["rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn weightquant_two_by_two_spacings() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("sigma.csv");
    let w = dir.path().join("w.csv");
    write_csv(
        &sigma,
        &Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap(),
    )
    .unwrap();
    write_csv(
        &w,
        &Matrix::from_rows(&[vec![0.3, -1.2, 2.5], vec![1.1, 0.4, -0.7]]).unwrap(),
    )
    .unwrap();
    let r = ok_json(&[
        "weightquant",
        "--sigma-file",
        s(&sigma),
        "--w-file",
        s(&w),
        "--alpha",
        "1",
    ]);
    let sp = r["result"]["spacings"].as_array().unwrap();
    assert!((sp[0].as_f64().unwrap() - 0.93060).abs() < 5e-6);
    assert!((sp[1].as_f64().unwrap() - 1.07457).abs() < 5e-6);
    assert_eq!(r["result"]["covariance_regularized"], false);
}

#[test]
fn weightquant_sweep_curves_are_monotone() {
    let text = ok_text(&[
        "weightquant",
        "--sweep",
        "--n",
        "16",
        "--a",
        "256",
        "--sigma",
        "wishart",
        "--rates",
        "2,3,4,5,6",
        "--format",
        "csv",
        "--seed",
        "3",
    ]);
    let rows = csv_rows(&text);
    let mut labels: Vec<String> = rows.iter().map(|r| r.2.clone()).collect();
    labels.dedup();
    for label in [
        "gptq+ec",
        "gptq+rect",
        "watersic+ec",
        "watersic+rect",
        "waterfill",
        "d_iso",
        "d_rc",
    ] {
        let pts: Vec<_> = rows.iter().filter(|r| r.2 == label).collect();
        assert!(!pts.is_empty(), "{label} missing");
        for w in pts.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 < w[0].1, "{label} not monotone");
        }
    }
}

#[test]
fn theory_rows() {
    let rows = csv_rows(&ok_text(&[
        "theory",
        "waterfill",
        "--lambda",
        "3,1",
        "--rates",
        "4",
        "--format",
        "csv",
    ]));
    assert!((rows[0].1 - 0.0067658).abs() < 5e-8);
    let rows = csv_rows(&ok_text(&[
        "theory", "gamma", "--rates", "0", "--format", "csv",
    ]));
    assert_eq!(rows[0].1, 1.0);
    let rows = csv_rows(&ok_text(&[
        "theory", "limit", "--rates", "1", "--format", "csv",
    ]));
    assert!((rows[0].1 - 0.7778).abs() < 5e-5);
    let r = ok_json(&["theory", "zador", "--lambda", "2,2", "--rates", "3"]);
    assert_eq!(r["result"]["curves"].as_array().unwrap().len(), 3);
    for curve in ["diso", "drc"] {
        let rows = csv_rows(&ok_text(&[
            "theory", curve, "--lambda", "4,1,0.25", "--format", "csv",
        ]));
        assert!(rows.windows(2).all(|w| w[1].1 < w[0].1), "{curve}");
    }
}

#[test]
fn study_nsm() {
    let z = ok_json(&["study", "nsm", "--lattice", "z", "--samples", "200000"]);
    let est = &z["result"]["estimate"];
    let (v, se) = (
        est["value"].as_f64().unwrap(),
        est["std_error"].as_f64().unwrap(),
    );
    assert!((v - 1.0 / 12.0).abs() <= 3.0 * se, "{v} +- {se}");
    let e8 = ok_json(&[
        "study",
        "nsm",
        "--lattice",
        "e8",
        "--samples",
        "1000000",
        "--seed",
        "8",
    ]);
    let v = e8["result"]["estimate"]["value"].as_f64().unwrap();
    assert!((v - 0.0717).abs() <= 0.0005, "{v}");
}

#[test]
fn study_chol_diag_constant_spectrum_is_flat() {
    let r = ok_json(&[
        "study",
        "chol-diag",
        "--n",
        "16",
        "--low",
        "2",
        "--high",
        "2",
        "--trials",
        "5",
    ]);
    for key in ["measured", "approx"] {
        for v in r["result"]["study"][key].as_array().unwrap() {
            assert!((v.as_f64().unwrap() - 2.0).abs() < 1e-9, "{key}");
        }
    }
}

#[test]
fn study_gap_and_histograms() {
    let r = ok_json(&["study", "gap", "--n", "16", "--sigma", "wishart"]);
    assert!(r["result"]["gap_bits"].as_f64().unwrap() >= 0.0);
    assert!(r["result"]["gap_bits_rotated"].as_f64().unwrap() >= 0.0);
    let r = ok_json(&[
        "study",
        "delta-hist",
        "--n",
        "256",
        "--a",
        "4",
        "--b",
        "4",
        "--rotate",
    ]);
    let counts: u64 = r["result"]["delta_int"]["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(counts, 16);
    assert_eq!(
        r["result"]["delta_int"]["edges"].as_array().unwrap().len(),
        65
    );
}

#[test]
fn invalid_combinations_fail_with_json_line() {
    let v = assert_single_line_error(&qmm(&["ipbench", "--n", "100", "--rotate"]));
    assert_eq!(v["error"]["kind"], "usage");
    let v = assert_single_line_error(&qmm(&[
        "ipbench", "--scheme", "e1m3", "--n", "8", "--a", "1", "--b", "1",
    ]));
    assert_eq!(v["error"]["kind"], "parameter");
    assert_single_line_error(&qmm(&["ipbench", "--no-such-flag"]));
    assert_single_line_error(&qmm(&["weightquant", "--sweep", "--n", "12", "--rotate"]));
    assert_single_line_error(&qmm(&["gen", "--rows", "2"]));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "sede = 3\n").unwrap();
    let v = assert_single_line_error(&qmm(&["theory", "--config", s(&cfg)]));
    assert_eq!(v["error"]["kind"], "config");
}

#[test]
fn config_precedence_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 11\nscheme = \"int4\"\nn = 64\na = 4\nb = 4\n").unwrap();
    let r = ok_json(&["ipbench", "--config", s(&cfg)]);
    assert_eq!(r["seed"], 11);
    assert_eq!(r["config"]["scheme"], "int4");
    let r = ok_json(&[
        "ipbench",
        "--config",
        s(&cfg),
        "--seed",
        "12",
        "--scheme",
        "int6",
    ]);
    assert_eq!(r["seed"], 12);
    assert_eq!(r["config"]["scheme"], "int6");

    let out = Command::new(env!("CARGO_BIN_EXE_qmm"))
        .args(["ipbench", "--n", "16", "--a", "1", "--b", "1"])
        .env("QMM_SEED", "77")
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["seed"], 77);

    let p = dir.path().join("r.json");
    ok_text(&["ipbench", "--config", s(&cfg), "--out", s(&p)]);
    let first = std::fs::read(&p).unwrap();
    ok_text(&["ipbench", "--config", s(&cfg), "--out", s(&p)]);
    assert_eq!(first, std::fs::read(&p).unwrap());
}

#[test]
fn sweep_output_independent_of_workers() {
    let run = |workers: &str| {
        let r = ok_json(&[
            "weightquant",
            "--sweep",
            "--n",
            "8",
            "--a",
            "64",
            "--rates",
            "3,4",
            "--workers",
            workers,
        ]);
        assert_eq!(r["config"]["workers"], workers.parse::<u64>().unwrap());
        r["result"].to_string()
    };
    assert_eq!(run("1"), run("4"));
}

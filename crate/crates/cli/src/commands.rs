//! Subcommand bodies. Each returns the text destined for stdout; files
//! named by `--out` are written here.

use std::path::Path;

use qmm_core::eval::{
    chol_diag_study, delta_histograms, gptq_vs_watersic_gap, hadamard_matrix, log_uniform_spectrum,
    matmul_error_report, rd_sweep_weight_only, Histogram, SigmaSource, SweepConfig, WeightScheme,
};
use qmm_core::io::{encode_csv, encode_qmx1, read_matrix};
use qmm_core::lattice::{nsm_estimate, LatticeSpec};
use qmm_core::matrix::Matrix;
use qmm_core::rng::SeededRng;
use qmm_core::sic::{alpha_for_rate, gptq_quantize, watersic_quantize, WeightQuantResult};
use qmm_core::wmse::{
    d_iso_curve, d_rc_at_rate, fundamental_limit_matmul, gamma_matmul, waterfill_curve,
    zador_bound, CovarianceModel, RdCurve, RdPoint,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Accounting, Curve, Distribution, OutputFormat, RunConfig, SicKind, Study};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Random streams: fork 0 feeds the first data matrix (or `Σ`), fork 1 the
/// second (or `W`), fork 2 the rotation and quantizer dither.
const DATA_A: u64 = 0;
const DATA_B: u64 = 1;
const SCHEME: u64 = 2;

pub fn run(cfg: &mut RunConfig) -> Result<String> {
    match cfg.command.as_str() {
        "gen" => gen(cfg),
        "ipbench" => ipbench(cfg),
        "weightquant" => weightquant(cfg),
        "theory" => theory(cfg),
        "study" => study(cfg),
        other => Err(CliError::usage(format!("unknown command {other:?}"))),
    }
}

fn json_report(cfg: &RunConfig, result: impl Serialize) -> Result<String> {
    let doc = json!({
        "command": cfg.command,
        "seed": cfg.seed,
        "config": cfg,
        "result": result,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// CSV body behind a `#` line carrying the resolved config.
fn csv_report(cfg: &RunConfig, body: &str) -> Result<String> {
    Ok(format!(
        "# qmm {} seed={} config={}\n{body}",
        cfg.command,
        cfg.seed,
        serde_json::to_string(cfg)?
    ))
}

/// Writes to `--out` when given (returning nothing for stdout).
fn deliver(cfg: &RunConfig, text: String) -> Result<String> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn emit(cfg: &RunConfig, result: impl Serialize, csv: impl FnOnce() -> String) -> Result<String> {
    let text = match cfg.format {
        OutputFormat::Json => json_report(cfg, result)?,
        OutputFormat::Csv => csv_report(cfg, &csv())?,
    };
    deliver(cfg, text)
}

fn root(cfg: &RunConfig) -> SeededRng {
    SeededRng::new(cfg.seed)
}

fn gaussian(rows: usize, cols: usize, sigma: f64, rng: &mut SeededRng) -> Result<Matrix> {
    Ok(Matrix::new(
        rows,
        cols,
        rng.gaussian_vec(rows * cols, sigma),
    )?)
}

fn generate(rows: usize, cols: usize, dist: &Distribution, rng: &mut SeededRng) -> Result<Matrix> {
    match *dist {
        Distribution::Gaussian { sigma } => {
            positive("sigma", sigma)?;
            gaussian(rows, cols, sigma, rng)
        }
        Distribution::Uniform { half_width } => {
            positive("half_width", half_width)?;
            let data = (0..rows * cols)
                .map(|_| rng.uniform_range(-half_width, half_width))
                .collect();
            Ok(Matrix::new(rows, cols, data)?)
        }
        Distribution::Spike {
            count,
            magnitude,
            sigma,
        } => {
            positive("sigma", sigma)?;
            positive("magnitude", magnitude)?;
            if count > rows {
                return Err(CliError::usage(format!(
                    "{count} spikes do not fit in {rows} rows"
                )));
            }
            let mut m = gaussian(rows, cols, sigma, rng)?;
            let mut order: Vec<usize> = (0..rows).collect();
            for c in 0..cols {
                // Partial Fisher-Yates: the first `count` entries are distinct rows.
                for k in 0..count {
                    let j = k + rng.index(rows - k);
                    order.swap(k, j);
                    let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                    m[(order[k], c)] = sign * magnitude;
                }
            }
            Ok(m)
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn gen(cfg: &mut RunConfig) -> Result<String> {
    let rows = *cfg.rows.get_or_insert(4096);
    let cols = *cfg.cols.get_or_insert(64);
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::usage("gen needs --out"))?;
    let m = generate(rows, cols, &cfg.distribution, &mut root(cfg).fork(DATA_A))?;
    match cfg.format {
        OutputFormat::Json => std::fs::write(&out, encode_qmx1(&m))?,
        OutputFormat::Csv => std::fs::write(&out, encode_csv(&m))?,
    }
    let count = m.data().len().max(1) as f64;
    let mean = m.data().iter().sum::<f64>() / count;
    let variance = m
        .data()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / count;
    json_report(
        cfg,
        json!({ "path": out, "rows": rows, "cols": cols, "mean": mean, "variance": variance }),
    )
}

fn load_or_gaussian(
    path: &Option<std::path::PathBuf>,
    n: usize,
    cols: usize,
    rng: &mut SeededRng,
) -> Result<Matrix> {
    match path {
        Some(p) => Ok(read_matrix(p)?),
        None => gaussian(n, cols, 1.0, rng),
    }
}

fn ipbench(cfg: &mut RunConfig) -> Result<String> {
    let scheme = cfg.scheme()?;
    let r = root(cfg);
    let n = cfg.n.unwrap_or(4096);
    let a_cols = *cfg.a.get_or_insert(64);
    let b_cols = *cfg.b.get_or_insert(64);
    let a = load_or_gaussian(&cfg.input_a, n, a_cols, &mut r.fork(DATA_A))?;
    let b = load_or_gaussian(&cfg.input_b, n, b_cols, &mut r.fork(DATA_B))?;
    cfg.n = Some(a.rows());
    cfg.check_rotation(a.rows())?;
    let report = matmul_error_report(&a, &b, scheme, cfg.rotate, &mut r.fork(SCHEME))?;
    emit(cfg, &report, || report.summary_csv())
}

/// `Σ` from the configured source; a Wishart `dof` of 0 becomes `2n`.
fn covariance(cfg: &mut RunConfig, n: usize) -> Result<CovarianceModel> {
    if let SigmaSource::Wishart { dof } = &mut cfg.sigma {
        if *dof == 0 {
            *dof = 2 * n;
        }
    }
    Ok(cfg.sigma.resolve(n, &mut root(cfg).fork(DATA_A))?)
}

fn weightquant(cfg: &mut RunConfig) -> Result<String> {
    if cfg.sweep {
        return sweep(cfg);
    }
    let r = root(cfg);
    let w = match &cfg.input_w {
        Some(p) => read_matrix(p)?,
        None => {
            let n = *cfg.n.get_or_insert(256);
            let a = *cfg.a.get_or_insert(2048);
            gaussian(n, a, cfg.sigma_w2.sqrt(), &mut r.fork(DATA_B))?
        }
    };
    let n = w.rows();
    cfg.n = Some(n);
    cfg.a = Some(w.cols());
    cfg.check_rotation(n)?;
    let mut sigma = covariance(cfg, n)?;
    let mut w = w;
    if cfg.rotate {
        let h = hadamard_matrix(n, &mut r.fork(SCHEME))?;
        sigma = sigma.rotated(&h.transpose())?;
        w = h.matmul(&w)?;
    }
    let alpha = match cfg.alpha {
        Some(a) => a,
        None => alpha_for_rate(*cfg.rate.get_or_insert(4.0), cfg.sigma_w2)?,
    };
    let res = match cfg.sic {
        SicKind::Watersic => watersic_quantize(&w, &sigma, alpha)?,
        SicKind::Gptq => gptq_quantize(&w, &sigma, alpha)?,
    };
    let mut result: Value = serde_json::from_str(&res.metadata_json()?)?;
    result["rate"] = json!(accounted_rate(cfg.accounting, &res));
    result["accounting"] = json!(cfg.accounting);
    result["covariance_jitter"] = json!(sigma.jitter());
    result["covariance_regularized"] = json!(sigma.is_regularized());
    let text = match cfg.format {
        OutputFormat::Json => json_report(cfg, &result)?,
        OutputFormat::Csv => csv_report(
            cfg,
            &format!(
                "scheme,alpha,rate,rate_rect,rate_entropy,rate_entropy_corrected,wmse,predicted_wmse\n{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                sic_label(cfg.sic),
                res.alpha,
                accounted_rate(cfg.accounting, &res),
                res.rate_rect,
                res.rate_entropy,
                res.rate_entropy_corrected,
                res.wmse,
                res.predicted_wmse
            ),
        )?,
    };
    match cfg.out.clone() {
        Some(dir) => {
            res.write_artifacts(&dir, &cfg.stem)?;
            let ext = match cfg.format {
                OutputFormat::Json => "json",
                OutputFormat::Csv => "csv",
            };
            std::fs::write(
                Path::new(&dir).join(format!("{}_report.{ext}", cfg.stem)),
                text,
            )?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn sic_label(s: SicKind) -> &'static str {
    match s {
        SicKind::Watersic => "watersic",
        SicKind::Gptq => "gptq",
    }
}

fn accounted_rate(accounting: Accounting, res: &WeightQuantResult) -> f64 {
    match accounting {
        Accounting::Entropy => res.rate_entropy_corrected,
        Accounting::Rect => res.rate_rect,
    }
}

fn curves_csv(curves: &[RdCurve]) -> String {
    let mut out = String::from("rate,distortion,label\n");
    for c in curves {
        // Skip each curve's own header line.
        for line in c.to_csv().lines().skip(1) {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn sweep(cfg: &mut RunConfig) -> Result<String> {
    if cfg.input_w.is_some() {
        return Err(CliError::usage("--sweep draws W itself; drop --w-file"));
    }
    let n = *cfg.n.get_or_insert(256);
    let a = *cfg.a.get_or_insert(2048);
    if cfg.rates.is_empty() {
        cfg.rates = vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    }
    if let SigmaSource::Wishart { dof } = &mut cfg.sigma {
        if *dof == 0 {
            *dof = 2 * n;
        }
    }
    let sweep_cfg = SweepConfig {
        schemes: WeightScheme::ALL.to_vec(),
        rates: cfg.rates.clone(),
        n,
        a,
        sigma: cfg.sigma.clone(),
        rotate: cfg.rotate,
        seed: cfg.seed,
        sigma_w2: cfg.sigma_w2,
        estimator: cfg.estimator,
    };
    cfg.check_rotation(n)?;
    let res = rd_sweep_weight_only(&sweep_cfg)?;
    emit(cfg, &res, || curves_csv(&res.curves))
}

fn default_rates() -> Vec<f64> {
    (1..=32).map(|k| 0.25 * k as f64).collect()
}

fn theory(cfg: &mut RunConfig) -> Result<String> {
    if cfg.rates.is_empty() {
        cfg.rates = default_rates();
    }
    let (lambda, s2, rates) = (&cfg.lambda, cfg.sigma_w2, &cfg.rates);
    let curve = |label: &str, f: &dyn Fn(f64) -> qmm_core::error::Result<f64>| -> Result<RdCurve> {
        let points = rates
            .iter()
            .map(|&r| {
                Ok(RdPoint {
                    rate: r,
                    distortion: f(r)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RdCurve::new(label, points))
    };
    let curves = match cfg.curve {
        Curve::Waterfill => vec![waterfill_curve(lambda, s2, rates)?],
        Curve::Diso => vec![d_iso_curve(lambda, s2, rates)?],
        Curve::Drc => vec![RdCurve::new(
            "d_rc",
            rates
                .iter()
                .map(|&r| d_rc_at_rate(lambda, s2, r))
                .collect::<qmm_core::error::Result<Vec<_>>>()?,
        )],
        Curve::Gamma => vec![curve("gamma", &gamma_matmul)?],
        Curve::Limit => vec![curve("limit", &fundamental_limit_matmul)?],
        Curve::Zador => {
            let n = lambda.len();
            if n == 0 || lambda.iter().any(|v| !(*v > 0.0)) {
                return Err(CliError::usage("zador needs positive eigenvalues"));
            }
            let det_root = (lambda.iter().map(|v| v.ln()).sum::<f64>() / n as f64).exp();
            // Lattice of spacing α in every coordinate: γ = α^{-n}.
            let bound = |r: f64| {
                let alpha = alpha_for_rate(r, s2)?;
                zador_bound(n, det_root, alpha.powi(-(n as i32)))
            };
            vec![
                curve("zador-exact", &|r| Ok(bound(r)?.exact))?,
                curve("zador-approx", &|r| Ok(bound(r)?.approx))?,
                curve("zador-approx-lower", &|r| Ok(bound(r)?.approx_lower))?,
            ]
        }
    };
    emit(cfg, json!({ "curves": &curves }), || curves_csv(&curves))
}

fn parse_lattice(name: &str) -> Result<LatticeSpec> {
    match name {
        "e8" => Ok(LatticeSpec::e8()),
        "z" => Ok(LatticeSpec::integer(1)?),
        _ => {
            let dim = name
                .strip_prefix('z')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| CliError::usage(format!("unknown lattice {name:?}")))?;
            Ok(LatticeSpec::integer(dim)?)
        }
    }
}

fn histogram_rows(out: &mut String, label: &str, h: &Histogram) {
    for (i, c) in h.counts.iter().enumerate() {
        out.push_str(&format!(
            "{label},{:?},{:?},{c}\n",
            h.edges[i],
            h.edges[i + 1]
        ));
    }
}

fn study(cfg: &mut RunConfig) -> Result<String> {
    let r = root(cfg);
    match cfg.study {
        Study::CholDiag => {
            let n = *cfg.n.get_or_insert(128);
            let lambda = log_uniform_spectrum(n, cfg.low, cfg.high)?;
            let s = chol_diag_study(&lambda, cfg.trials, &mut r.fork(DATA_A))?;
            let k_lo = 5.min(n);
            let k_hi = n.saturating_sub(5).max(k_lo);
            let dev = s.max_relative_deviation(k_lo, k_hi);
            emit(
                cfg,
                json!({ "study": &s, "max_relative_deviation": dev, "k_range": [k_lo, k_hi] }),
                || s.to_csv(),
            )
        }
        Study::DeltaHist => {
            let n = *cfg.n.get_or_insert(4096);
            let a = gaussian(n, *cfg.a.get_or_insert(64), 1.0, &mut r.fork(DATA_A))?;
            let b = gaussian(n, *cfg.b.get_or_insert(64), 1.0, &mut r.fork(DATA_B))?;
            cfg.check_rotation(n)?;
            let h = delta_histograms(&a, &b, cfg.rotate, &mut r.fork(SCHEME))?;
            emit(cfg, &h, || {
                let mut out = String::from("quantity,lower,upper,count\n");
                histogram_rows(&mut out, "delta_int", &h.delta_int);
                histogram_rows(&mut out, "delta_fp", &h.delta_fp);
                out
            })
        }
        Study::Nsm => {
            let lattice = parse_lattice(&cfg.lattice)?;
            let est = nsm_estimate(&lattice, cfg.samples, &mut r.fork(DATA_A))?;
            let name = lattice.name();
            emit(cfg, json!({ "lattice": name, "estimate": est }), || {
                format!(
                    "lattice,value,std_error,samples\n{name},{:?},{:?},{}\n",
                    est.value, est.std_error, est.samples
                )
            })
        }
        Study::Gap => {
            let n = *cfg.n.get_or_insert(64);
            let sigma = covariance(cfg, n)?;
            let plain = gptq_vs_watersic_gap(&sigma, false, &mut r.fork(SCHEME))?;
            let rotated = if n.is_power_of_two() {
                Some(gptq_vs_watersic_gap(&sigma, true, &mut r.fork(SCHEME))?)
            } else {
                None
            };
            emit(
                cfg,
                json!({ "n": n, "gap_bits": plain, "gap_bits_rotated": rotated }),
                || {
                    let rot = rotated.map(|v| format!("{v:?}")).unwrap_or_default();
                    format!("n,gap_bits,gap_bits_rotated\n{n},{plain:?},{rot}\n")
                },
            )
        }
    }
}

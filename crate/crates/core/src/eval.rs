//! Experiment harness: generic-MatMul error reports under the K/Δ
//! normalizations, weight-only rate-distortion sweeps against the theory
//! curves, Δ histograms, and the Cholesky-diagonal study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, QmmError, Result};
use crate::formats::{
    absmax_int_quantize, delta_fp, delta_int, dithered_absmax_fp_quantize, nv_microscale_quantize,
    Dither, FpFormat, IntFormat, NvBase, NvScaleRule, NV_BLOCK,
};
use crate::hadamard::{random_orthogonal, RandomHadamard};
use crate::io::read_matrix;
use crate::lattice::{nestquant_quantize, LatticeSpec, NestedCode};
use crate::matrix::{dot, norm_sq, Matrix};
use crate::rng::SeededRng;
use crate::sic::{
    alpha_for_rate, entropy_rate_with, gptq_quantize, watersic_quantize, EntropyEstimator,
    WeightQuantResult,
};
use crate::wmse::{
    cholesky_upper, d_iso_curve, d_rc_at_rate, planted_covariance, waterfill, waterfill_curve,
    wishart_covariance, CovarianceModel, RdCurve, RdPoint,
};

/// Vector quantizer applied to every column before the inner products.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// No quantization.
    Exact,
    /// Absmax INT with `bits`-bit codes.
    Int {
        bits: u32,
    },
    /// Absmax FP, optionally exponent-dithered.
    Fp {
        exponent_bits: u32,
        mantissa_bits: u32,
        dither: Dither,
    },
    NvInt4,
    NvFp4,
    /// E8 nested-lattice code with a geometric scale bank.
    NestQuant {
        q: u32,
        bank_size: usize,
        r_min: f64,
        r_max: f64,
    },
}

impl Scheme {
    pub const INT8: Scheme = Scheme::Int { bits: 8 };
    pub const FP8_DITHERED: Scheme = Scheme::Fp {
        exponent_bits: 4,
        mantissa_bits: 3,
        dither: Dither::Random,
    };
    pub const NESTQUANT_DEFAULT: Scheme = Scheme::NestQuant {
        q: 16,
        bank_size: 16,
        r_min: 2.0,
        r_max: 6.0,
    };

    /// Short identifier, e.g. `int8` or `e4m3-dithered`.
    pub fn name(&self) -> String {
        match *self {
            Scheme::Exact => "exact".into(),
            Scheme::Int { bits } => format!("int{bits}"),
            Scheme::Fp {
                exponent_bits,
                mantissa_bits,
                dither,
            } => {
                let d = match dither {
                    Dither::Random => "-dithered".to_string(),
                    Dither::Fixed(1.0) => String::new(),
                    Dither::Fixed(u) => format!("-u{u}"),
                };
                format!("e{exponent_bits}m{mantissa_bits}{d}")
            }
            Scheme::NvInt4 => "nvint4".into(),
            Scheme::NvFp4 => "nvfp4".into(),
            Scheme::NestQuant { q, bank_size, .. } => format!("nestquant-q{q}-k{bank_size}"),
        }
    }

    fn build(&self) -> Result<Quantizer> {
        Ok(match *self {
            Scheme::Exact => Quantizer::Exact,
            Scheme::Int { bits } => Quantizer::Int(IntFormat::new(bits)?),
            Scheme::Fp {
                exponent_bits,
                mantissa_bits,
                dither,
            } => Quantizer::Fp(FpFormat::new(exponent_bits, mantissa_bits)?, dither),
            Scheme::NvInt4 => Quantizer::Nv(NvBase::Int4),
            Scheme::NvFp4 => Quantizer::Nv(NvBase::Fp4),
            Scheme::NestQuant {
                q,
                bank_size,
                r_min,
                r_max,
            } => Quantizer::Nest(NestedCode::geometric(
                LatticeSpec::e8(),
                q,
                bank_size,
                r_min,
                r_max,
            )?),
        })
    }
}

enum Quantizer {
    Exact,
    Int(IntFormat),
    Fp(FpFormat, Dither),
    Nv(NvBase),
    Nest(NestedCode),
}

impl Quantizer {
    /// Reconstruction and bits per entry.
    fn apply(&self, x: &[f64], rng: &mut SeededRng) -> Result<(Vec<f64>, f64)> {
        let q = match self {
            Quantizer::Exact => return Ok((x.to_vec(), 64.0)),
            Quantizer::Int(fmt) => absmax_int_quantize(x, *fmt)?,
            Quantizer::Fp(fmt, dither) => dithered_absmax_fp_quantize(x, *fmt, *dither, rng)?,
            Quantizer::Nv(base) => {
                nv_microscale_quantize(x, *base, NV_BLOCK, NvScaleRule::NoOverload)?
            }
            Quantizer::Nest(code) => nestquant_quantize(x, code)?,
        };
        Ok((q.reconstruct(), q.rate))
    }
}

/// Table-style RMS summaries of a MatMul error matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsSummary {
    /// `RMS(e/√(2n))`.
    pub rms_2n: f64,
    /// `RMS(e/√K)`.
    pub rms_k: f64,
    /// `RMS(e/√(K·Δ_INT/3))`.
    pub rms_int: f64,
    /// `RMS(e/√(K·Δ_FP))`.
    pub rms_fp: f64,
}

impl RmsSummary {
    /// Deterministic in its inputs.
    pub fn from_matrices(
        n: usize,
        error: &Matrix,
        k: &Matrix,
        delta_int: &Matrix,
        delta_fp: &Matrix,
    ) -> Result<Self> {
        let shape = error.shape();
        if k.shape() != shape || delta_int.shape() != shape || delta_fp.shape() != shape {
            return dim_err("summary matrices must share a shape");
        }
        let count = error.data().len().max(1) as f64;
        let rms = |f: &dyn Fn(usize) -> f64| -> f64 {
            ((0..error.data().len())
                .map(|i| {
                    let v = f(i);
                    v * v
                })
                .sum::<f64>()
                / count)
                .sqrt()
        };
        let e = error.data();
        let (kd, di, df) = (k.data(), delta_int.data(), delta_fp.data());
        let two_n = 2.0 * n as f64;
        Ok(Self {
            rms_2n: rms(&|i| e[i] / two_n.sqrt()),
            rms_k: rms(&|i| e[i] / kd[i].sqrt()),
            rms_int: rms(&|i| e[i] / (kd[i] * di[i] / 3.0).sqrt()),
            rms_fp: rms(&|i| e[i] / (kd[i] * df[i]).sqrt()),
        })
    }

    /// The same summaries as base-2 exponents.
    pub fn log2(&self) -> RmsSummary {
        RmsSummary {
            rms_2n: self.rms_2n.log2(),
            rms_k: self.rms_k.log2(),
            rms_int: self.rms_int.log2(),
            rms_fp: self.rms_fp.log2(),
        }
    }
}

/// Full output of one MatMul experiment; `e(i,j) = âᵢᵀb̂ⱼ − aᵢᵀbⱼ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatmulErrorReport {
    pub scheme: Scheme,
    pub scheme_name: String,
    pub seed: u64,
    pub rotate: bool,
    pub n: usize,
    pub rate: f64,
    #[serde(with = "matrix_serde")]
    pub error: Matrix,
    #[serde(with = "matrix_serde")]
    pub k: Matrix,
    #[serde(with = "matrix_serde")]
    pub delta_int: Matrix,
    #[serde(with = "matrix_serde")]
    pub delta_fp: Matrix,
    pub summary: RmsSummary,
    pub log2_summary: RmsSummary,
}

impl MatmulErrorReport {
    /// Header plus one row, laid out like the paper's table.
    pub fn summary_csv(&self) -> String {
        let l = self.log2_summary;
        format!(
            "scheme,rotate,n,rate,log2_rms_2n,log2_rms_k,log2_rms_int,log2_rms_fp\n{},{},{},{:?},{:?},{:?},{:?},{:?}\n",
            self.scheme_name, self.rotate, self.n, self.rate, l.rms_2n, l.rms_k, l.rms_int, l.rms_fp
        )
    }
}

pub(crate) mod matrix_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::matrix::Matrix;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().to_vec(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let r = Repr::deserialize(d)?;
        Matrix::new(r.rows, r.cols, r.data).map_err(serde::de::Error::custom)
    }
}

/// `K(i,j) = 2‖aᵢ‖²‖bⱼ‖²/n` over the columns of `A` and `B`.
pub fn k_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return dim_err(format!(
            "column lengths {} and {} differ",
            a.rows(),
            b.rows()
        ));
    }
    let n = a.rows() as f64;
    let na: Vec<f64> = a.columns().iter().map(|c| norm_sq(c)).collect();
    let nb: Vec<f64> = b.columns().iter().map(|c| norm_sq(c)).collect();
    Ok(Matrix::from_fn(na.len(), nb.len(), |i, j| {
        2.0 * na[i] * nb[j] / n
    }))
}

/// Column-rotated copies of `a` and `b` under a shared random Hadamard
/// transform; the identity when `rotate` is false.
fn rotate_columns(
    a: &Matrix,
    b: &Matrix,
    rotate: bool,
    rng: &mut SeededRng,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (ca, cb) = (a.columns(), b.columns());
    if !rotate {
        return Ok((ca, cb));
    }
    let h = RandomHadamard::new(a.rows(), rng)?;
    let ra = ca.iter().map(|c| h.apply(c)).collect::<Result<Vec<_>>>()?;
    let rb = cb.iter().map(|c| h.apply(c)).collect::<Result<Vec<_>>>()?;
    Ok((ra, rb))
}

/// Quantize every column of `A` (`n×a`) and `B` (`n×b`) with `scheme`,
/// optionally after a shared random Hadamard rotation, and record the
/// `a×b` error matrix with its normalizers.
///
/// Generator use is sequential: rotation signs, then the columns of `A`, then
/// those of `B`.
pub fn matmul_error_report(
    a: &Matrix,
    b: &Matrix,
    scheme: Scheme,
    rotate: bool,
    rng: &mut SeededRng,
) -> Result<MatmulErrorReport> {
    if a.rows() != b.rows() {
        return dim_err(format!(
            "column lengths {} and {} differ",
            a.rows(),
            b.rows()
        ));
    }
    if a.rows() == 0 || a.cols() == 0 || b.cols() == 0 {
        return dim_err("matrices must be non-empty");
    }
    let n = a.rows();
    let seed = rng.seed();
    let quantizer = scheme.build()?;
    let (ca, cb) = rotate_columns(a, b, rotate, rng)?;
    let mut rate = 64.0;
    let mut quantize_all = |cols: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        cols.iter()
            .map(|c| {
                let (v, r) = quantizer.apply(c, rng)?;
                rate = r;
                Ok(v)
            })
            .collect()
    };
    let qa = quantize_all(&ca)?;
    let qb = quantize_all(&cb)?;
    let exact = a.t_matmul(b)?;
    let (na, nb) = (a.cols(), b.cols());
    let mut error = Matrix::zeros(na, nb);
    let mut d_int = Matrix::zeros(na, nb);
    let mut d_fp = Matrix::zeros(na, nb);
    for i in 0..na {
        for j in 0..nb {
            error[(i, j)] = dot(&qa[i], &qb[j]) - exact[(i, j)];
            d_int[(i, j)] = delta_int(&ca[i], &cb[j])?;
            d_fp[(i, j)] = delta_fp(&ca[i], &cb[j])?;
        }
    }
    let k = k_matrix(a, b)?;
    let summary = RmsSummary::from_matrices(n, &error, &k, &d_int, &d_fp)?;
    Ok(MatmulErrorReport {
        scheme,
        scheme_name: scheme.name(),
        seed,
        rotate,
        n,
        rate,
        error,
        k,
        delta_int: d_int,
        delta_fp: d_fp,
        log2_summary: summary.log2(),
        summary,
    })
}

/// Histogram on explicit bin edges; the last bin is closed on the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub max: f64,
}

pub const HISTOGRAM_BINS: usize = 64;

impl Histogram {
    /// `bins` log-spaced bins over `[min(values), upper]`.
    pub fn log_spaced(values: &[f64], upper: f64, bins: usize) -> Result<Self> {
        if values.is_empty() || bins == 0 {
            return param_err("histogram needs values and at least one bin");
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(lo > 0.0) {
            return param_err("log-spaced histogram needs positive values");
        }
        let hi = upper.max(lo * (1.0 + 1e-9));
        let (llo, lhi) = (lo.ln(), hi.ln());
        let mut edges: Vec<f64> = (0..=bins)
            .map(|i| (llo + (lhi - llo) * i as f64 / bins as f64).exp())
            .collect();
        edges[0] = lo;
        edges[bins] = hi;
        let mut counts = vec![0u64; bins];
        for &v in values {
            let idx = edges[1..].partition_point(|&e| e <= v).min(bins - 1);
            counts[idx] += 1;
        }
        Ok(Self {
            edges,
            counts,
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Histograms of `Δ_INT(i,j)` and `Δ_FP(i,j)` over all column pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaHistograms {
    pub n: usize,
    pub rotate: bool,
    pub delta_int: Histogram,
    pub delta_fp: Histogram,
}

pub fn delta_histograms(
    a: &Matrix,
    b: &Matrix,
    rotate: bool,
    rng: &mut SeededRng,
) -> Result<DeltaHistograms> {
    if a.rows() != b.rows() {
        return dim_err("column lengths differ");
    }
    let (ca, cb) = rotate_columns(a, b, rotate, rng)?;
    let mut di = Vec::with_capacity(ca.len() * cb.len());
    let mut df = Vec::with_capacity(ca.len() * cb.len());
    for x in &ca {
        for y in &cb {
            di.push(delta_int(x, y)?);
            df.push(delta_fp(x, y)?);
        }
    }
    let n = a.rows() as f64;
    Ok(DeltaHistograms {
        n: a.rows(),
        rotate,
        delta_int: Histogram::log_spaced(&di, n, HISTOGRAM_BINS)?,
        delta_fp: Histogram::log_spaced(&df, n, HISTOGRAM_BINS)?,
    })
}

/// Trial-mean `U_kk²` under Haar rotations next to its approximation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CholDiagStudy {
    pub trials: usize,
    pub measured: Vec<f64>,
    pub approx: Vec<f64>,
}

impl CholDiagStudy {
    /// Largest `|measured/approx − 1|` over `k ∈ [k_lo, k_hi]` (1-based).
    pub fn max_relative_deviation(&self, k_lo: usize, k_hi: usize) -> f64 {
        (k_lo.max(1)..=k_hi.min(self.measured.len()))
            .map(|k| (self.measured[k - 1] / self.approx[k - 1] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `(k, measured, approx)` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,measured,approx\n");
        for (k, (m, a)) in self.measured.iter().zip(&self.approx).enumerate() {
            out.push_str(&format!("{},{:?},{:?}\n", k + 1, m, a));
        }
        out
    }
}

/// For each trial draw Haar `V`, factor `Vᵀdiag(λ)V = UᵀU`, and average `U_kk²`.
pub fn chol_diag_study(
    lambda: &[f64],
    trials: usize,
    rng: &mut SeededRng,
) -> Result<CholDiagStudy> {
    if trials == 0 {
        return param_err("need at least one trial");
    }
    let approx = crate::wmse::ukk_approx_all(lambda)?;
    let n = lambda.len();
    let mut sum = vec![0.0; n];
    for _ in 0..trials {
        let v = random_orthogonal(n, rng)?;
        let sigma = crate::wmse::conjugate_diag(lambda, &v)?;
        let u = cholesky_upper(&sigma)?;
        for (s, d) in sum.iter_mut().zip(u.diag()) {
            *s += d * d;
        }
    }
    Ok(CholDiagStudy {
        trials,
        measured: sum.iter().map(|s| s / trials as f64).collect(),
        approx,
    })
}

/// `½log₂(mean(U_ii²)/geomean(U_ii²))`, optionally after a random Hadamard
/// rotation of `Σ`.
pub fn gptq_vs_watersic_gap(
    sigma: &CovarianceModel,
    rotate: bool,
    rng: &mut SeededRng,
) -> Result<f64> {
    let model = if rotate {
        let h = hadamard_matrix(sigma.dim(), rng)?;
        sigma.rotated(&h.transpose())?
    } else {
        sigma.clone()
    };
    let d2: Vec<f64> = model.chol_upper().diag().iter().map(|u| u * u).collect();
    crate::wmse::am_gm_rate_gap(&d2)
}

/// The orthogonal matrix of a random Hadamard transform.
pub fn hadamard_matrix(n: usize, rng: &mut SeededRng) -> Result<Matrix> {
    let h = RandomHadamard::new(n, rng)?;
    let mut m = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        m.set_column(j, &h.apply(&e)?);
        e[j] = 0.0;
    }
    Ok(m)
}

/// GPTQ and WaterSIC at the same `α`, with the measured horizontal gap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasuredGap {
    pub gptq_rate: f64,
    pub gptq_wmse: f64,
    pub watersic_rate: f64,
    pub watersic_wmse: f64,
    /// Extra rate GPTQ spends to reach WaterSIC's distortion, using the
    /// local `2^{−2R}` slope.
    pub gap_bits: f64,
    /// `½log₂(AM/GM of U_ii²)`.
    pub predicted_bits: f64,
}

pub fn measured_gap(
    w: &Matrix,
    sigma: &CovarianceModel,
    alpha: f64,
    estimator: EntropyEstimator,
) -> Result<MeasuredGap> {
    let g = gptq_quantize(w, sigma, alpha)?;
    let ws = watersic_quantize(w, sigma, alpha)?;
    let rg = entropy_rate_with(&g.z, None, estimator)?;
    let rw = entropy_rate_with(&ws.z, None, estimator)?;
    let gap = (rg - rw) + 0.5 * (g.wmse / ws.wmse).log2();
    let d2: Vec<f64> = sigma.chol_upper().diag().iter().map(|u| u * u).collect();
    Ok(MeasuredGap {
        gptq_rate: rg,
        gptq_wmse: g.wmse,
        watersic_rate: rw,
        watersic_wmse: ws.wmse,
        gap_bits: gap,
        predicted_bits: crate::wmse::am_gm_rate_gap(&d2)?,
    })
}

/// Source of the activation covariance in a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaSource {
    Identity,
    Wishart {
        dof: usize,
    },
    /// `Vᵀdiag(λ)V` with Haar `V` and `λ` log-uniform on `[low, high]`.
    LogUniform {
        low: f64,
        high: f64,
    },
    File {
        path: String,
    },
}

impl SigmaSource {
    pub fn resolve(&self, n: usize, rng: &mut SeededRng) -> Result<CovarianceModel> {
        let m = match self {
            SigmaSource::Identity => Matrix::identity(n),
            SigmaSource::Wishart { dof } => wishart_covariance(n, *dof, rng)?,
            SigmaSource::LogUniform { low, high } => {
                planted_covariance(&log_uniform_spectrum(n, *low, *high)?, rng)?
            }
            SigmaSource::File { path } => {
                let m = read_matrix(path)?;
                if m.shape() != (n, n) {
                    return dim_err(format!(
                        "covariance file is {}x{}, expected {n}x{n}",
                        m.rows(),
                        m.cols()
                    ));
                }
                m
            }
        };
        CovarianceModel::new(m)
    }
}

/// `λ_i = low·(high/low)^{i/(n−1)}`, descending order not implied.
pub fn log_uniform_spectrum(n: usize, low: f64, high: f64) -> Result<Vec<f64>> {
    if n == 0 || !(low > 0.0) || !(high >= low) {
        return param_err("log-uniform spectrum needs n > 0 and 0 < low <= high");
    }
    if n == 1 {
        return Ok(vec![low]);
    }
    let r = (high / low).ln();
    Ok((0..n)
        .map(|i| low * (r * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Weight-only scheme: SIC variant plus rate accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    GptqEc,
    GptqRect,
    WaterSicEc,
    WaterSicRect,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 4] = [
        WeightScheme::GptqEc,
        WeightScheme::GptqRect,
        WeightScheme::WaterSicEc,
        WeightScheme::WaterSicRect,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            WeightScheme::GptqEc => "gptq+ec",
            WeightScheme::GptqRect => "gptq+rect",
            WeightScheme::WaterSicEc => "watersic+ec",
            WeightScheme::WaterSicRect => "watersic+rect",
        }
    }

    fn is_watersic(&self) -> bool {
        matches!(self, WeightScheme::WaterSicEc | WeightScheme::WaterSicRect)
    }
}

/// Weight-only sweep configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub schemes: Vec<WeightScheme>,
    /// Nominal rates fed to `alpha_for_rate`; strictly increasing.
    pub rates: Vec<f64>,
    pub n: usize,
    /// Columns of `W`.
    pub a: usize,
    pub sigma: SigmaSource,
    pub rotate: bool,
    pub seed: u64,
    pub sigma_w2: f64,
    pub estimator: EntropyEstimator,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.rates.windows(2).any(|w| !(w[1] > w[0])) {
            return param_err("rate grid must be non-empty and strictly increasing");
        }
        if self.n == 0 || self.a == 0 {
            return param_err("n and a must be positive");
        }
        if self.rotate && !self.n.is_power_of_two() {
            return param_err(format!("rotation needs a power-of-two n, got {}", self.n));
        }
        if !(self.sigma_w2 > 0.0) {
            return param_err("weight variance must be positive");
        }
        if self.schemes.is_empty() {
            return param_err("no schemes selected");
        }
        Ok(())
    }
}

/// Measured points of one cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub scheme: WeightScheme,
    pub nominal_rate: f64,
    pub alpha: f64,
    pub rate: f64,
    pub wmse: f64,
    /// `wmse / D*(rate)`.
    pub ratio_to_waterfill: f64,
}

/// All measured cells plus the theory overlays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub eigenvalues: Vec<f64>,
    pub cells: Vec<SweepCell>,
    pub curves: Vec<RdCurve>,
}

/// Run every (scheme, rate) cell and attach `D*`, `D_iso`, `D_rc` and
/// `(2πe/12)·D*` on the same rate grid.
///
/// `Σ` draws from fork 0 of the master seed, `W` from fork 1 and the
/// rotation from fork 2; cells are deterministic given these, so parallel and serial
/// runs agree exactly.
pub fn rd_sweep_weight_only(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let root = SeededRng::new(cfg.seed);
    let mut sigma = cfg.sigma.resolve(cfg.n, &mut root.fork(0))?;
    let mut w_rng = root.fork(1);
    let mut w = Matrix::new(
        cfg.n,
        cfg.a,
        w_rng.gaussian_vec(cfg.n * cfg.a, cfg.sigma_w2.sqrt()),
    )?;
    if cfg.rotate {
        let h = hadamard_matrix(cfg.n, &mut root.fork(2))?;
        sigma = sigma.rotated(&h.transpose())?;
        w = h.matmul(&w)?;
    }
    let lambda = sigma.eigenvalues().to_vec();
    let jobs: Vec<(bool, f64)> = [false, true]
        .iter()
        .filter(|ws| cfg.schemes.iter().any(|s| s.is_watersic() == **ws))
        .flat_map(|&ws| cfg.rates.iter().map(move |&r| (ws, r)))
        .collect();
    let runs: Vec<(bool, f64, WeightQuantResult)> = jobs
        .par_iter()
        .map(|&(ws, r)| {
            let alpha = alpha_for_rate(r, cfg.sigma_w2)?;
            let res = if ws {
                watersic_quantize(&w, &sigma, alpha)?
            } else {
                gptq_quantize(&w, &sigma, alpha)?
            };
            Ok((ws, r, res))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    let mut curves = Vec::new();
    for &scheme in &cfg.schemes {
        let mut points = Vec::new();
        for (ws, nominal, res) in &runs {
            if *ws != scheme.is_watersic() {
                continue;
            }
            let rate = match scheme {
                WeightScheme::GptqEc | WeightScheme::WaterSicEc => {
                    entropy_rate_with(&res.z, None, cfg.estimator)?
                }
                _ => res.rate_rect,
            };
            let d_star = waterfill(&lambda, cfg.sigma_w2, rate)?.distortion;
            cells.push(SweepCell {
                scheme,
                nominal_rate: *nominal,
                alpha: res.alpha,
                rate,
                wmse: res.wmse,
                ratio_to_waterfill: res.wmse / d_star,
            });
            points.push(RdPoint {
                rate,
                distortion: res.wmse,
            });
        }
        curves.push(RdCurve::new(scheme.label(), points));
    }
    let wf = waterfill_curve(&lambda, cfg.sigma_w2, &cfg.rates)?;
    let scaled = RdCurve::new(
        "waterfill x 2pie/12",
        wf.points
            .iter()
            .map(|p| RdPoint {
                rate: p.rate,
                distortion: p.distortion * 2.0 * std::f64::consts::PI * std::f64::consts::E / 12.0,
            })
            .collect(),
    );
    let rc = RdCurve::new(
        "d_rc",
        cfg.rates
            .iter()
            .filter(|r| **r > 0.0)
            .map(|&r| d_rc_at_rate(&lambda, cfg.sigma_w2, r))
            .collect::<Result<Vec<_>>>()?,
    );
    curves.push(wf);
    curves.push(d_iso_curve(&lambda, cfg.sigma_w2, &cfg.rates)?);
    curves.push(rc);
    curves.push(scaled);
    if cells.iter().any(|c| !c.wmse.is_finite()) {
        return Err(QmmError::Computation(
            "non-finite distortion in sweep".into(),
        ));
    }
    Ok(SweepResult {
        config: cfg.clone(),
        eigenvalues: lambda,
        cells,
        curves,
    })
}

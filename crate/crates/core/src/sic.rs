//! Successive interference cancellation (SIC) for weight-only quantization:
//! the general feedforward/feedback form, the Cholesky-based SIC (GPTQ when
//! spacings are constant), and WaterSIC with AM-GM-equalizing spacings.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{dim_err, param_err, QmmError, Result};
use crate::formats::{
    fp4_decode, fp4_encode, fp_quantize_scalar, FpFormat, IntFormat, FP4_MAGNITUDES,
};
use crate::io::write_qmx1;
use crate::matrix::{check_finite, Matrix};
use crate::wmse::CovarianceModel;

/// Nearest integer with halves rounded up, so `x − round_up(x) ∈ [−½, ½)`.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Scalar codebook `𝒞₀` for one coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Codebook {
    Integers,
    /// `{−2^{M−1}, …, 2^{M−1}}`.
    Int(IntFormat),
    /// Normal FP values plus zero.
    Fp(FpFormat),
    Fp4,
}

impl Codebook {
    /// Nearest codeword and whether `x` lay beyond the largest codeword.
    pub fn quantize(&self, x: f64) -> (f64, bool) {
        match *self {
            Codebook::Integers => (round_half_up(x), false),
            Codebook::Int(fmt) => {
                let m = fmt.max_code() as f64;
                let r = round_half_up(x);
                if r > m {
                    (m, true)
                } else if r < -m {
                    (-m, true)
                } else {
                    (r, false)
                }
            }
            Codebook::Fp(fmt) => {
                let max = fmt.max_value();
                let a = x.abs();
                let over = a > max;
                let mn = fmt.min_normal();
                let q = if a < mn {
                    if a >= mn - a {
                        mn.copysign(x)
                    } else {
                        0.0
                    }
                } else {
                    fp_quantize_scalar(x, fmt)
                };
                (q, over)
            }
            Codebook::Fp4 => {
                let max = FP4_MAGNITUDES[7];
                let q = fp4_decode(fp4_encode(x)).unwrap_or(0.0);
                (q, x.abs() > max)
            }
        }
    }
}

/// `(F, B, β)` for the high-rate regime: `F = diag(U)⁻¹`, `B = diag(U)⁻¹U − I`,
/// `β = 1`.
pub fn high_rate_filters(u: &Matrix) -> Result<(Matrix, Matrix, f64)> {
    check_upper(u)?;
    let n = u.rows();
    let d = u.diag();
    let f = Matrix::from_diag(&d.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    let b = Matrix::from_fn(n, n, |r, c| if c > r { u[(r, c)] / d[r] } else { 0.0 });
    Ok((f, b, 1.0))
}

fn check_upper(u: &Matrix) -> Result<()> {
    if !u.is_square() || u.rows() == 0 {
        return dim_err("U must be square and non-empty");
    }
    if !u.is_upper_triangular() {
        return param_err("U must be upper triangular");
    }
    if u.diag().iter().any(|v| !(*v > 0.0)) {
        return param_err("U must have a positive diagonal");
    }
    Ok(())
}

fn check_spacings(spacings: &[f64], n: usize) -> Result<()> {
    if spacings.len() != n {
        return dim_err(format!("expected {n} spacings, got {}", spacings.len()));
    }
    if spacings.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return param_err("spacings must be positive and finite");
    }
    Ok(())
}

/// Inputs of the general SIC quantizer.
#[derive(Clone, Debug)]
pub struct SicPlan {
    u: Matrix,
    spacings: Vec<f64>,
    codebooks: Vec<Codebook>,
    f: Matrix,
    b: Matrix,
    beta: f64,
}

impl SicPlan {
    /// Validated plan; `B` must be strictly upper triangular.
    pub fn new(
        u: Matrix,
        spacings: Vec<f64>,
        codebooks: Vec<Codebook>,
        f: Matrix,
        b: Matrix,
        beta: f64,
    ) -> Result<Self> {
        check_upper(&u)?;
        let n = u.rows();
        check_spacings(&spacings, n)?;
        if codebooks.len() != n {
            return dim_err(format!("expected {n} codebooks, got {}", codebooks.len()));
        }
        if f.shape() != (n, n) || b.shape() != (n, n) {
            return dim_err(format!("F and B must be {n}x{n}"));
        }
        for r in 0..n {
            for c in 0..=r {
                if b[(r, c)] != 0.0 {
                    return param_err("feedback B must be strictly upper triangular");
                }
            }
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return param_err("beta must be positive");
        }
        Ok(Self {
            u,
            spacings,
            codebooks,
            f,
            b,
            beta,
        })
    }

    /// High-rate filters with one codebook for every coordinate.
    pub fn high_rate(u: Matrix, spacings: Vec<f64>, codebook: Codebook) -> Result<Self> {
        let (f, b, beta) = high_rate_filters(&u)?;
        let n = u.rows();
        Self::new(u, spacings, vec![codebook; n], f, b, beta)
    }

    /// Replace `β` (shrinkage below 1).
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return param_err("beta must be positive");
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn codebooks(&self) -> &[Codebook] {
        &self.codebooks
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `max |I − βU(I+B)⁻¹F|`, zero for the high-rate filters.
    pub fn zero_forcing_residual(&self) -> Result<f64> {
        let n = self.dim();
        let mut ib = self.b.clone();
        for i in 0..n {
            ib[(i, i)] += 1.0;
        }
        let m = self
            .u
            .matmul(&ib.inverse()?.matmul(&self.f)?)?
            .scale(self.beta);
        Ok(m.max_abs_diff(&Matrix::identity(n)))
    }
}

/// General SIC output.
#[derive(Clone, Debug, PartialEq)]
pub struct SicOutput {
    pub w_hat: Vec<f64>,
    /// Coordinates whose input fell outside a finite codebook.
    pub overloads: usize,
}

/// Filter by `F`, then for `i = n..1` quantize `Y_i` on `α_i𝒞_i` and feed
/// back `Ŵ_i·B_{:,i}`; finally scale by `β`.
pub fn general_sic(y: &[f64], plan: &SicPlan) -> Result<SicOutput> {
    let n = plan.dim();
    if y.len() != n {
        return dim_err(format!("expected length {n}, got {}", y.len()));
    }
    check_finite(y)?;
    let mut r = plan.f.mat_vec(y)?;
    let mut w = vec![0.0; n];
    let mut overloads = 0;
    for i in (0..n).rev() {
        let a = plan.spacings[i];
        let (q, over) = plan.codebooks[i].quantize(r[i] / a);
        overloads += usize::from(over);
        w[i] = a * q;
        for k in 0..i {
            r[k] -= w[i] * plan.b[(k, i)];
        }
    }
    for v in &mut w {
        *v *= plan.beta;
    }
    Ok(SicOutput {
        w_hat: w,
        overloads,
    })
}

/// Integer SIC: for `i = n..1`, `z_i = round(Y_i/(α_iU_ii))` and
/// `Y ← Y − α_i z_i U_{:,i}`. The result `c = α∘z` leaves
/// `Y − Uc ∈ Π[−α_iU_ii/2, α_iU_ii/2)`.
pub fn sic_quantize(y: &[f64], u: &Matrix, spacings: &[f64]) -> Result<Vec<i64>> {
    check_upper(u)?;
    let n = u.rows();
    check_spacings(spacings, n)?;
    if y.len() != n {
        return dim_err(format!("expected length {n}, got {}", y.len()));
    }
    check_finite(y)?;
    let mut r = y.to_vec();
    let mut z = vec![0i64; n];
    for i in (0..n).rev() {
        let step = spacings[i] * u[(i, i)];
        let zi = round_half_up(r[i] / step);
        z[i] = zi as i64;
        let c = spacings[i] * zi;
        for k in 0..=i {
            r[k] -= c * u[(k, i)];
        }
    }
    Ok(z)
}

/// `α_i = α·|det U|^{1/n}/U_ii`, so every `α_iU_ii` equals `α|det U|^{1/n}`.
pub fn waterfill_spacings(u: &Matrix, alpha: f64) -> Result<Vec<f64>> {
    check_upper(u)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return param_err("alpha must be positive and finite");
    }
    let d = u.diag();
    let log_root = d.iter().map(|v| v.ln()).sum::<f64>() / d.len() as f64;
    Ok(d.iter()
        .map(|v| alpha * (log_root - v.ln()).exp())
        .collect())
}

/// Row-major integer matrix of SIC codes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl CodeMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return dim_err(format!(
                "{rows}x{cols} code matrix needs {} entries",
                rows * cols
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |r, c| {
            self.data[r * self.cols + c] as f64
        })
    }

    /// `diag(α)·Z`.
    pub fn scaled(&self, spacings: &[f64]) -> Result<Matrix> {
        check_spacings(spacings, self.rows)?;
        Ok(Matrix::from_fn(self.rows, self.cols, |r, c| {
            spacings[r] * self.data[r * self.cols + c] as f64
        }))
    }

    fn groups(&self, group: Option<usize>) -> Result<Vec<&[i64]>> {
        let g = match group {
            None => self.cols.max(1),
            Some(0) => return param_err("group size must be positive"),
            Some(g) => g,
        };
        if self.cols == 0 {
            return Ok(Vec::new());
        }
        Ok((0..self.rows).flat_map(|r| self.row(r).chunks(g)).collect())
    }
}

/// Rectangular shaping: each row (or group of `group` entries) is sent with a
/// fixed-length code over `{−q, …, q}`, `q = max|Z|`; returns the mean of
/// `log₂(1+2q)` over groups.
pub fn rect_shaping_rate(z: &CodeMatrix, group: Option<usize>) -> Result<f64> {
    let groups = z.groups(group)?;
    if groups.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = groups
        .iter()
        .map(|g| {
            let q = g.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64;
            (1.0 + 2.0 * q).log2()
        })
        .sum();
    Ok(total / groups.len() as f64)
}

/// Estimator for the per-row entropy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyEstimator {
    /// Entropy of the empirical distribution.
    #[default]
    PlugIn,
    /// Plug-in plus `(m−1)/(2N ln 2)`, `m` the number of occupied symbols.
    MillerMadow,
    /// `ln N − (1/N)Σ n_j G(n_j)` with
    /// `G(n) = ψ(n) + ½(−1)ⁿ(ψ((n+1)/2) − ψ(n/2))`, in bits.
    Grassberger,
}

/// Plug-in empirical entropy per entry, averaged over rows (or groups).
pub fn entropy_rate(z: &CodeMatrix, group: Option<usize>) -> Result<f64> {
    entropy_rate_with(z, group, EntropyEstimator::PlugIn)
}

/// Per-row (or per-group) entropy under the chosen estimator, averaged.
pub fn entropy_rate_with(
    z: &CodeMatrix,
    group: Option<usize>,
    estimator: EntropyEstimator,
) -> Result<f64> {
    let groups = z.groups(group)?;
    if groups.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = groups.iter().map(|g| estimate_entropy(g, estimator)).sum();
    Ok(total / groups.len() as f64)
}

/// Entropy in bits of the empirical distribution of `values`.
pub fn empirical_entropy(values: &[i64]) -> f64 {
    estimate_entropy(values, EntropyEstimator::PlugIn)
}

/// Entropy in bits of the source behind `values`.
pub fn estimate_entropy(values: &[i64], estimator: EntropyEstimator) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    let n = values.len() as f64;
    let mut counts: Vec<usize> = counts.into_values().collect();
    counts.sort_unstable();
    let plug_in = -counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();
    match estimator {
        EntropyEstimator::PlugIn => plug_in,
        EntropyEstimator::MillerMadow => {
            plug_in + (counts.len() as f64 - 1.0) / (2.0 * n * std::f64::consts::LN_2)
        }
        EntropyEstimator::Grassberger => {
            let s: f64 = counts
                .iter()
                .map(|&c| {
                    let x = c as f64;
                    let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                    let g = digamma(x) + 0.5 * sign * (digamma((x + 1.0) / 2.0) - digamma(x / 2.0));
                    x * g
                })
                .sum();
            (n.ln() - s / n) / std::f64::consts::LN_2
        }
    }
}

/// `α = √(2πeσ²_W 2^{−2R})`.
pub fn alpha_for_rate(rate: f64, sigma_w2: f64) -> Result<f64> {
    if !rate.is_finite() || !(sigma_w2 > 0.0) {
        return param_err("rate must be finite and variance positive");
    }
    Ok((2.0 * std::f64::consts::PI * std::f64::consts::E * sigma_w2).sqrt() * (-rate).exp2())
}

/// `(1/12)(1/n)Σ(α_iU_ii)²`.
pub fn predict_sic_wmse(u: &Matrix, spacings: &[f64]) -> Result<f64> {
    check_upper(u)?;
    check_spacings(spacings, u.rows())?;
    let d = u.diag();
    let s: f64 = d.iter().zip(spacings).map(|(u, a)| (a * u) * (a * u)).sum();
    Ok(s / (12.0 * d.len() as f64))
}

/// `α²|Σ|^{1/n}/12`.
pub fn predict_watersic_wmse(sigma: &CovarianceModel, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return param_err("alpha must be positive");
    }
    Ok(alpha * alpha * sigma.det_root() / 12.0)
}

const TWO_PI_E_OVER_12: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::E / 12.0;

/// High-rate GPTQ with entropy coding: `(2πe/12)σ²_W·mean(U_ii²)·2^{−2R}`.
pub fn gptq_high_rate_wmse(u: &Matrix, sigma_w2: f64, rate: f64) -> Result<f64> {
    check_upper(u)?;
    let d = u.diag();
    let mean = d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64;
    Ok(TWO_PI_E_OVER_12 * sigma_w2 * mean * (-2.0 * rate).exp2())
}

/// High-rate WaterSIC with entropy coding: `(2πe/12)σ²_W(ΠU_ii²)^{1/n}2^{−2R}`.
pub fn watersic_high_rate_wmse(u: &Matrix, sigma_w2: f64, rate: f64) -> Result<f64> {
    check_upper(u)?;
    let d = u.diag();
    let gm = (d.iter().map(|v| 2.0 * v.ln()).sum::<f64>() / d.len() as f64).exp();
    Ok(TWO_PI_E_OVER_12 * sigma_w2 * gm * (-2.0 * rate).exp2())
}

/// Which spacing rule produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SicScheme {
    Gptq,
    WaterSic,
}

/// Output of a weight-only quantizer: `Ŵ = diag(α)·Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightQuantResult {
    pub scheme: SicScheme,
    pub alpha: f64,
    pub spacings: Vec<f64>,
    pub z: CodeMatrix,
    #[serde(skip)]
    pub w_hat: Option<Matrix>,
    pub rate_rect: f64,
    /// Plug-in estimate.
    pub rate_entropy: f64,
    /// Grassberger estimate, less biased when rows have many rare symbols.
    pub rate_entropy_corrected: f64,
    /// `(1/(an))‖U(W−Ŵ)‖²_F`.
    pub wmse: f64,
    pub predicted_wmse: f64,
    /// Largest `|U(W−Ŵ)|_{ij}/(α_iU_ii)`; below ½ by construction.
    pub max_normalized_error: f64,
}

/// JSON sidecar written next to the QMX1 dumps.
#[derive(Serialize)]
struct WeightQuantMeta<'a> {
    scheme: SicScheme,
    alpha: f64,
    spacings: &'a [f64],
    rows: usize,
    cols: usize,
    rate_rect: f64,
    rate_entropy: f64,
    rate_entropy_corrected: f64,
    wmse: f64,
    predicted_wmse: f64,
    max_normalized_error: f64,
}

impl WeightQuantResult {
    pub fn reconstruction(&self) -> Result<Matrix> {
        match &self.w_hat {
            Some(m) => Ok(m.clone()),
            None => self.z.scaled(&self.spacings),
        }
    }

    pub fn metadata_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&WeightQuantMeta {
            scheme: self.scheme,
            alpha: self.alpha,
            spacings: &self.spacings,
            rows: self.z.rows(),
            cols: self.z.cols(),
            rate_rect: self.rate_rect,
            rate_entropy: self.rate_entropy,
            rate_entropy_corrected: self.rate_entropy_corrected,
            wmse: self.wmse,
            predicted_wmse: self.predicted_wmse,
            max_normalized_error: self.max_normalized_error,
        })?)
    }

    /// Writes `<stem>.json`, `<stem>_z.qmx1` and `<stem>_what.qmx1` in `dir`.
    pub fn write_artifacts(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.metadata_json()?)?;
        write_qmx1(dir.join(format!("{stem}_z.qmx1")), &self.z.to_matrix())?;
        write_qmx1(
            dir.join(format!("{stem}_what.qmx1")),
            &self.reconstruction()?,
        )?;
        Ok(())
    }
}

/// SIC applied to every column of `Y = UW` at once, row by row from the
/// last; returns the integer codes.
fn sic_matrix(y: Matrix, u: &Matrix, spacings: &[f64]) -> CodeMatrix {
    let n = u.rows();
    let a = y.cols();
    let mut y = y;
    let mut z = vec![0i64; n * a];
    for i in (0..n).rev() {
        let step = spacings[i] * u[(i, i)];
        let zi: Vec<f64> = y.row(i).iter().map(|v| round_half_up(v / step)).collect();
        for (dst, v) in z[i * a..(i + 1) * a].iter_mut().zip(&zi) {
            *dst = *v as i64;
        }
        for k in 0..=i {
            let coef = spacings[i] * u[(k, i)];
            for (yk, v) in y.row_mut(k).iter_mut().zip(&zi) {
                *yk -= coef * v;
            }
        }
    }
    CodeMatrix {
        rows: n,
        cols: a,
        data: z,
    }
}

fn quantize_weights(
    w: &Matrix,
    sigma: &CovarianceModel,
    alpha: f64,
    scheme: SicScheme,
) -> Result<WeightQuantResult> {
    let n = sigma.dim();
    if w.rows() != n {
        return dim_err(format!("W has {} rows but Σ is {n}x{n}", w.rows()));
    }
    if w.cols() == 0 {
        return dim_err("W has no columns");
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return param_err("alpha must be positive and finite");
    }
    let u = sigma.chol_upper();
    let spacings = match scheme {
        SicScheme::Gptq => vec![alpha; n],
        SicScheme::WaterSic => waterfill_spacings(u, alpha)?,
    };
    let z = sic_matrix(u.matmul(w)?, u, &spacings);
    let w_hat = z.scaled(&spacings)?;
    let err = u.matmul(&w.sub(&w_hat)?)?;
    let wmse = err.data().iter().map(|v| v * v).sum::<f64>() / (n * w.cols()) as f64;
    let mut max_normalized_error = 0.0f64;
    for i in 0..n {
        let step = spacings[i] * u[(i, i)];
        for v in err.row(i) {
            max_normalized_error = max_normalized_error.max((v / step).abs());
        }
    }
    if !wmse.is_finite() {
        return Err(QmmError::Computation("non-finite WMSE".into()));
    }
    let predicted_wmse = match scheme {
        SicScheme::Gptq => predict_sic_wmse(u, &spacings)?,
        SicScheme::WaterSic => predict_watersic_wmse(sigma, alpha)?,
    };
    Ok(WeightQuantResult {
        scheme,
        alpha,
        rate_rect: rect_shaping_rate(&z, None)?,
        rate_entropy: entropy_rate(&z, None)?,
        rate_entropy_corrected: entropy_rate_with(&z, None, EntropyEstimator::Grassberger)?,
        spacings,
        z,
        w_hat: Some(w_hat),
        wmse,
        predicted_wmse,
        max_normalized_error,
    })
}

/// WaterSIC on an `n×a` weight matrix.
///
/// SIC runs on the weighted target `UW`, so the per-entry weighted error
/// `U(W−Ŵ)` lies in `α|Σ|^{1/2n}·[−½, ½)`.
pub fn watersic_quantize(
    w: &Matrix,
    sigma: &CovarianceModel,
    alpha: f64,
) -> Result<WeightQuantResult> {
    quantize_weights(w, sigma, alpha, SicScheme::WaterSic)
}

/// SIC with constant spacing `α`, equivalent to GPTQ.
pub fn gptq_quantize(w: &Matrix, sigma: &CovarianceModel, alpha: f64) -> Result<WeightQuantResult> {
    quantize_weights(w, sigma, alpha, SicScheme::Gptq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u2() -> Matrix {
        Matrix::from_rows(&[
            vec![2f64.sqrt(), 1.0 / 2f64.sqrt()],
            vec![0.0, 1.5f64.sqrt()],
        ])
        .unwrap()
    }

    fn sigma2() -> CovarianceModel {
        CovarianceModel::new(Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()).unwrap()
    }

    #[test]
    fn filters_example() {
        let (f, b, beta) = high_rate_filters(&u2()).unwrap();
        assert!((f[(0, 0)] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((f[(1, 1)] - 1.0 / 1.5f64.sqrt()).abs() < 1e-15);
        assert!((b[(0, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(b[(1, 0)], 0.0);
        assert_eq!(beta, 1.0);
        let (f, b, _) = high_rate_filters(&Matrix::identity(3)).unwrap();
        assert_eq!(f, Matrix::identity(3));
        assert_eq!(b, Matrix::zeros(3, 3));
    }

    #[test]
    fn sic_hand_walk() {
        let z = sic_quantize(&[0.9, 0.7], &u2(), &[1.0, 1.0]).unwrap();
        assert_eq!(z, vec![0, 1]);
    }

    #[test]
    fn plan_rejects_lower_feedback() {
        let u = u2();
        let b = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let r = SicPlan::new(
            u,
            vec![1.0, 1.0],
            vec![Codebook::Integers; 2],
            Matrix::identity(2),
            b,
            1.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn spacings_example() {
        let m = sigma2();
        let s = waterfill_spacings(m.chol_upper(), 1.0).unwrap();
        assert!((s[0] - 0.93060).abs() < 5e-6, "{s:?}");
        assert!((s[1] - 1.07457).abs() < 5e-6);
        let d = m.chol_upper().diag();
        for i in 0..2 {
            assert!((s[i] * d[i] - 3f64.powf(0.25)).abs() < 1e-12);
        }
    }

    #[test]
    fn predictions_example() {
        let m = sigma2();
        let g = predict_sic_wmse(m.chol_upper(), &[1.0, 1.0]).unwrap();
        let w = predict_watersic_wmse(&m, 1.0).unwrap();
        assert!((g - 0.145833).abs() < 1e-6);
        assert!((w - 3f64.sqrt() / 12.0).abs() < 1e-12);
        assert!(g >= w);
    }

    #[test]
    fn rates() {
        let z = CodeMatrix::new(2, 3, vec![3, -1, 0, 2, -7, 1]).unwrap();
        let r = rect_shaping_rate(&z, None).unwrap();
        assert!((r - 0.5 * (7f64.log2() + 15f64.log2())).abs() < 1e-12);
        assert!((r - 3.3571).abs() < 5e-5);
        let zero = CodeMatrix::new(2, 2, vec![0; 4]).unwrap();
        assert_eq!(rect_shaping_rate(&zero, None).unwrap(), 0.0);
        assert_eq!(entropy_rate(&zero, None).unwrap(), 0.0);
        let bits = CodeMatrix::new(1, 4, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(entropy_rate(&bits, None).unwrap(), 1.0);
        assert_eq!(entropy_rate(&bits, Some(2)).unwrap(), 1.0);
    }

    #[test]
    fn alpha_values() {
        let a0 = alpha_for_rate(0.0, 1.0).unwrap();
        assert!((a0 - 4.1327).abs() < 5e-5);
        assert_eq!(
            alpha_for_rate(3.0, 1.0).unwrap() * 2.0,
            alpha_for_rate(2.0, 1.0).unwrap()
        );
    }

    #[test]
    fn codebook_saturation() {
        let cb = Codebook::Int(IntFormat::new(4).unwrap());
        assert_eq!(cb.quantize(9.7), (8.0, true));
        assert_eq!(cb.quantize(-3.2), (-3.0, false));
        assert_eq!(Codebook::Fp4.quantize(7.0), (6.0, true));
        assert_eq!(Codebook::Fp(FpFormat::E4M3).quantize(1000.0), (240.0, true));
        let mn = FpFormat::E4M3.min_normal();
        assert_eq!(Codebook::Fp(FpFormat::E4M3).quantize(0.8 * mn).0, mn);
        assert_eq!(Codebook::Fp(FpFormat::E4M3).quantize(0.3 * mn).0, 0.0);
    }
}

//! Weighted-MSE theory: covariance models, a symmetric eigensolver, upper
//! Cholesky, reverse waterfilling, and the benchmark curves weight-only and
//! generic-MatMul schemes are compared against.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, QmmError, Result};
use crate::hadamard::random_orthogonal;
use crate::matrix::Matrix;
use crate::rng::SeededRng;

/// Relative jitter `δ = JITTER_SCALE·tr(Σ)/n` added when Cholesky fails.
pub const JITTER_SCALE: f64 = 1e-8;

/// PSD covariance `Σ_X` with its spectrum and upper Cholesky factor cached.
///
/// When the input is numerically singular, `sigma` already includes the
/// jitter `δI` and `jitter()` reports `δ`.
#[derive(Clone, Debug)]
pub struct CovarianceModel {
    sigma: Matrix,
    eigenvalues: Vec<f64>,
    chol_upper: Matrix,
    jitter: f64,
}

impl CovarianceModel {
    /// Symmetrize, factor, and fall back to jitter if the factorization fails.
    pub fn new(sigma: Matrix) -> Result<Self> {
        if !sigma.is_square() || sigma.rows() == 0 {
            return dim_err(format!(
                "covariance must be square and non-empty, got {}x{}",
                sigma.rows(),
                sigma.cols()
            ));
        }
        let mut sigma = sigma;
        sigma.symmetrize();
        let n = sigma.rows();
        let trace = sigma.trace();
        if sigma.frobenius_norm() == 0.0 || !(trace > 0.0) {
            return Err(QmmError::Singular("covariance is identically zero".into()));
        }
        let (sigma, chol_upper, jitter) = match cholesky_upper(&sigma) {
            Ok(u) => (sigma, u, 0.0),
            Err(_) => {
                let delta = JITTER_SCALE * trace / n as f64;
                let mut reg = sigma;
                for i in 0..n {
                    reg[(i, i)] += delta;
                }
                let u = cholesky_upper(&reg).map_err(|_| {
                    QmmError::Singular("covariance is not PSD even after jitter".into())
                })?;
                (reg, u, delta)
            }
        };
        let eigenvalues = eigenvalues_sym(&sigma)?;
        Ok(Self {
            sigma,
            eigenvalues,
            chol_upper,
            jitter,
        })
    }

    /// `Vᵀ diag(λ) V` for a given orthogonal `V`.
    pub fn from_spectrum(lambda: &[f64], v: &Matrix) -> Result<Self> {
        Self::new(conjugate_diag(lambda, v)?)
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn chol_upper(&self) -> &Matrix {
        &self.chol_upper
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn is_regularized(&self) -> bool {
        self.jitter > 0.0
    }

    /// `ln det Σ = 2Σ ln U_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol_upper.diag().iter().map(|u| u.ln()).sum::<f64>()
    }

    /// `det(Σ)^{1/n}`.
    pub fn det_root(&self) -> f64 {
        (self.log_det() / self.dim() as f64).exp()
    }

    /// `VᵀΣV`.
    pub fn rotated(&self, v: &Matrix) -> Result<Self> {
        let inner = self.sigma.matmul(v)?;
        Self::new(v.t_matmul(&inner)?)
    }
}

/// `Vᵀ diag(λ) V`.
pub fn conjugate_diag(lambda: &[f64], v: &Matrix) -> Result<Matrix> {
    let n = lambda.len();
    if v.shape() != (n, n) {
        return dim_err(format!("rotation must be {n}x{n}"));
    }
    let mut scaled = v.clone();
    for r in 0..n {
        for c in 0..n {
            scaled[(r, c)] *= lambda[r];
        }
    }
    let mut out = v.t_matmul(&scaled)?;
    out.symmetrize();
    Ok(out)
}

/// Plug-in covariance `XᵀX/b` from `b` samples (rows of `X`).
pub fn estimate_covariance(x: &Matrix) -> Result<CovarianceModel> {
    if x.rows() < 2 {
        return param_err(format!("need at least 2 samples, got {}", x.rows()));
    }
    let sigma = x.t_matmul(x)?.scale(1.0 / x.rows() as f64);
    CovarianceModel::new(sigma)
}

/// Sample covariance of `dof` iid `N(0, I_n)` draws.
pub fn wishart_covariance(n: usize, dof: usize, rng: &mut SeededRng) -> Result<Matrix> {
    if n == 0 || dof == 0 {
        return param_err("Wishart dimension and degrees of freedom must be positive");
    }
    let data: Vec<f64> = (0..n * dof).map(|_| rng.gaussian()).collect();
    let x = Matrix::new(dof, n, data)?;
    let mut s = x.t_matmul(&x)?.scale(1.0 / dof as f64);
    s.symmetrize();
    Ok(s)
}

/// `Vᵀ diag(λ) V` with Haar-random `V`.
pub fn planted_covariance(lambda: &[f64], rng: &mut SeededRng) -> Result<Matrix> {
    let v = random_orthogonal(lambda.len(), rng)?;
    conjugate_diag(lambda, &v)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi, sorted descending.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e−12·‖Σ‖_F`.
pub fn eigenvalues_sym(sigma: &Matrix) -> Result<Vec<f64>> {
    if !sigma.is_square() {
        return dim_err("eigenvalues need a square matrix");
    }
    let n = sigma.rows();
    let mut a = sigma.clone();
    a.symmetrize();
    let target = 1e-12 * a.frobenius_norm();
    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += a[(r, c)] * a[(r, c)];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&a) > target {
        sweeps += 1;
        if sweeps > 100 {
            return Err(QmmError::Computation(
                "Jacobi iteration did not converge".into(),
            ));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut values = a.diag();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// Upper-triangular `U` with `Σ = UᵀU` and a strictly positive diagonal.
///
/// Pivots at or below `1e−12·max Σ_ii` are treated as singular.
pub fn cholesky_upper(sigma: &Matrix) -> Result<Matrix> {
    if !sigma.is_square() {
        return dim_err("Cholesky needs a square matrix");
    }
    let n = sigma.rows();
    let max_diag = sigma.diag().iter().fold(0.0f64, |m, v| m.max(*v));
    let floor = 1e-12 * max_diag;
    let mut u = Matrix::zeros(n, n);
    for i in 0..n {
        let mut d = sigma[(i, i)];
        for k in 0..i {
            d -= u[(k, i)] * u[(k, i)];
        }
        if !(d > floor) {
            return Err(QmmError::Singular(format!(
                "non-positive pivot {d:e} at index {i}"
            )));
        }
        let uii = d.sqrt();
        u[(i, i)] = uii;
        for j in (i + 1)..n {
            let mut s = sigma[(i, j)];
            for k in 0..i {
                s -= u[(k, i)] * u[(k, j)];
            }
            u[(i, j)] = s / uii;
        }
    }
    Ok(u)
}

/// Waterfilling solution at a target rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaterfillSolution {
    pub tau: f64,
    pub distortion: f64,
    pub rate: f64,
    pub per_coord_rates: Vec<f64>,
}

fn check_spectrum(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return dim_err("spectrum is empty");
    }
    if lambda.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
        return param_err("spectrum entries must be finite and non-negative");
    }
    if !lambda.iter().any(|&l| l > 0.0) {
        return param_err("spectrum must have a positive entry");
    }
    Ok(())
}

/// `R*(τ) = (1/n)Σ ½log₂ max(1, λ_i/τ)`.
pub fn waterfill_rate(lambda: &[f64], tau: f64) -> f64 {
    let n = lambda.len() as f64;
    lambda
        .iter()
        .map(|&l| if l > tau { 0.5 * (l / tau).log2() } else { 0.0 })
        .sum::<f64>()
        / n
}

/// `D*(τ) = (σ²_W/n)Σ min(λ_i, τ)`.
pub fn waterfill_distortion(lambda: &[f64], sigma_w2: f64, tau: f64) -> f64 {
    sigma_w2 * lambda.iter().map(|&l| l.min(tau)).sum::<f64>() / lambda.len() as f64
}

/// Reverse waterfilling at rate `R`: bisection on `ln τ`, then the active-set
/// closed form `τ = (Π_A λ)^{1/k}·2^{−2nR/k}` when it is self-consistent.
pub fn waterfill(lambda: &[f64], sigma_w2: f64, rate: f64) -> Result<WaterfillSolution> {
    check_spectrum(lambda)?;
    if !(rate >= 0.0) || !rate.is_finite() {
        return param_err(format!("rate must be finite and non-negative, got {rate}"));
    }
    if !(sigma_w2 > 0.0) {
        return param_err("weight variance must be positive");
    }
    let max = lambda.iter().fold(0.0f64, |m, &l| m.max(l));
    let min_pos = lambda
        .iter()
        .filter(|&&l| l > 0.0)
        .fold(f64::INFINITY, |m, &l| m.min(l));
    let tau = if rate == 0.0 {
        max
    } else {
        let mut lo = min_pos.ln() - 60.0;
        let mut hi = max.ln() + 1.0;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            let r = waterfill_rate(lambda, mid.exp());
            if (r - rate).abs() < 1e-12 {
                lo = mid;
                hi = mid;
                break;
            }
            if r > rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let bisected = (0.5 * (lo + hi)).exp();
        polish_tau(lambda, rate, bisected).unwrap_or(bisected)
    };
    let residual = (waterfill_rate(lambda, tau) - rate).abs();
    if residual > 1e-10 {
        return Err(QmmError::Computation(format!(
            "waterfilling residual {residual:e} above tolerance"
        )));
    }
    Ok(WaterfillSolution {
        tau,
        distortion: waterfill_distortion(lambda, sigma_w2, tau),
        rate,
        per_coord_rates: lambda
            .iter()
            .map(|&l| if l > tau { 0.5 * (l / tau).log2() } else { 0.0 })
            .collect(),
    })
}

fn polish_tau(lambda: &[f64], rate: f64, tau: f64) -> Option<f64> {
    let active: Vec<f64> = lambda.iter().copied().filter(|&l| l > tau).collect();
    if active.is_empty() {
        return None;
    }
    let k = active.len() as f64;
    let n = lambda.len() as f64;
    let log2_prod: f64 = active.iter().map(|l| l.log2()).sum();
    let t = ((log2_prod - 2.0 * n * rate) / k).exp2();
    let consistent = lambda.iter().all(|&l| (l > tau) == (l > t));
    let better =
        (waterfill_rate(lambda, t) - rate).abs() <= (waterfill_rate(lambda, tau) - rate).abs();
    (consistent && better).then_some(t)
}

/// Rate at which waterfilling reaches distortion `d`; `D*` is piecewise
/// linear in `τ`, so `τ` is found exactly on the sorted spectrum.
pub fn waterfill_rate_for_distortion(lambda: &[f64], sigma_w2: f64, d: f64) -> Result<f64> {
    check_spectrum(lambda)?;
    let n = lambda.len() as f64;
    let target = d / sigma_w2 * n;
    let total: f64 = lambda.iter().sum();
    if !(target > 0.0) {
        return param_err("distortion must be positive");
    }
    if target >= total {
        return Ok(0.0);
    }
    let mut sorted = lambda.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    // Σ min(λ, τ) = Σ_{λ_i ≤ τ} λ_i + (#λ_i > τ)·τ.
    let mut below = 0.0;
    for (i, &l) in sorted.iter().enumerate() {
        let above = (sorted.len() - i) as f64;
        let tau = (target - below) / above;
        if tau <= l {
            return Ok(waterfill_rate(lambda, tau));
        }
        below += l;
    }
    Ok(0.0)
}

/// `det(Σ)^{1/n}σ²_W 2^{−2R}`.
pub fn d_high_rate(lambda: &[f64], sigma_w2: f64, rate: f64) -> Result<f64> {
    Ok(geometric_mean(lambda)? * sigma_w2 * (-2.0 * rate).exp2())
}

/// `2^{−2R}σ²_W tr(Σ)/n`.
pub fn d_iso(lambda: &[f64], sigma_w2: f64, rate: f64) -> Result<f64> {
    check_spectrum(lambda)?;
    let mean = lambda.iter().sum::<f64>() / lambda.len() as f64;
    Ok((-2.0 * rate).exp2() * sigma_w2 * mean)
}

/// One (rate, distortion) pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub rate: f64,
    pub distortion: f64,
}

/// Labelled curve, points ordered by increasing rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    pub label: String,
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(label: impl Into<String>, mut points: Vec<RdPoint>) -> Self {
        points.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        Self {
            label: label.into(),
            points,
        }
    }

    /// Distortion strictly decreasing along increasing rate.
    pub fn is_strictly_decreasing(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].rate > w[0].rate && w[1].distortion < w[0].distortion)
    }

    /// `rate,distortion,label` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rate,distortion,label\n");
        for p in &self.points {
            out.push_str(&format!("{:?},{:?},{}\n", p.rate, p.distortion, self.label));
        }
        out
    }
}

/// Waterfilling `D*(R)` on a rate grid.
pub fn waterfill_curve(lambda: &[f64], sigma_w2: f64, rates: &[f64]) -> Result<RdCurve> {
    let points = rates
        .iter()
        .map(|&r| {
            waterfill(lambda, sigma_w2, r).map(|s| RdPoint {
                rate: r,
                distortion: s.distortion,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve::new("waterfill", points))
}

/// `D_iso(R)` on a rate grid.
pub fn d_iso_curve(lambda: &[f64], sigma_w2: f64, rates: &[f64]) -> Result<RdCurve> {
    let points = rates
        .iter()
        .map(|&r| {
            d_iso(lambda, sigma_w2, r).map(|d| RdPoint {
                rate: r,
                distortion: d,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve::new("d_iso", points))
}

/// One point of the random-codebook curve:
/// `D = (τσ²_W/n)Σ λ_i/(τ+λ_i)`, `R = (1/2n)Σ log₂(1+λ_i/τ)`.
pub fn d_rc_point(lambda: &[f64], sigma_w2: f64, tau: f64) -> Result<RdPoint> {
    check_spectrum(lambda)?;
    if !(tau > 0.0) {
        return param_err("tau must be positive");
    }
    let n = lambda.len() as f64;
    let distortion = tau * sigma_w2 / n * lambda.iter().map(|&l| l / (tau + l)).sum::<f64>();
    let rate = lambda.iter().map(|&l| (1.0 + l / tau).log2()).sum::<f64>() / (2.0 * n);
    Ok(RdPoint { rate, distortion })
}

/// `D_rc` traced over a grid of `τ`.
pub fn d_rc_curve(lambda: &[f64], sigma_w2: f64, taus: &[f64]) -> Result<RdCurve> {
    let points = taus
        .iter()
        .map(|&t| d_rc_point(lambda, sigma_w2, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve::new("d_rc", points))
}

/// `D_rc` at a given rate, solving for `τ` by bisection on `ln τ`.
pub fn d_rc_at_rate(lambda: &[f64], sigma_w2: f64, rate: f64) -> Result<RdPoint> {
    check_spectrum(lambda)?;
    if !(rate > 0.0) {
        return param_err("rate must be positive");
    }
    let max = lambda.iter().fold(0.0f64, |m, &l| m.max(l));
    let mut lo = max.ln() - 2.0 * rate * std::f64::consts::LN_2 * lambda.len() as f64 - 60.0;
    let mut hi = max.ln() + 60.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let p = d_rc_point(lambda, sigma_w2, mid.exp())?;
        if p.rate > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    d_rc_point(lambda, sigma_w2, (0.5 * (lo + hi)).exp())
}

/// Value of `φ(R) = 2·2^{−2R} − 2^{−4R}`.
fn phi(r: f64) -> f64 {
    2.0 * (-2.0 * r).exp2() - (-4.0 * r).exp2()
}

fn phi_prime(r: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    -4.0 * ln2 * (-2.0 * r).exp2() + 4.0 * ln2 * (-4.0 * r).exp2()
}

/// Critical rate `R*` where the chord from `(0, 1)` touches `φ`
/// (`φ(R) − Rφ′(R) = 1`).
pub fn critical_rate() -> f64 {
    let g = |r: f64| phi(r) - r * phi_prime(r) - 1.0;
    let (mut lo, mut hi) = (0.5, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gaussian MatMul distortion floor `Γ(R)` (per unit `σ⁴`): the chord
/// `1 − (1 − φ(R*))R/R*` below `R*`, and `φ(R)` above it.
pub fn gamma_matmul(rate: f64) -> Result<f64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return param_err("rate must be finite and non-negative");
    }
    let rs = critical_rate();
    Ok(if rate <= rs {
        1.0 - (1.0 - phi(rs)) * rate / rs
    } else {
        phi(rate)
    })
}

/// `(2·2^{2R} − 1)/(2^{2R} − 1)²`.
pub fn fundamental_limit_matmul(rate: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return param_err("rate must be positive and finite");
    }
    let s = (2.0 * rate).exp2();
    Ok((2.0 * s - 1.0) / ((s - 1.0) * (s - 1.0)))
}

/// High-rate surrogate `2·2^{−2R}`.
pub fn fundamental_limit_surrogate(rate: f64) -> f64 {
    2.0 * (-2.0 * rate).exp2()
}

/// Ball-based lower bounds on the second moment `σ²(UL)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZadorBound {
    /// `Γ(n/2+1)^{2/n}/((n+2)π)·V^{2/n}`, the second moment of the ball.
    pub exact: f64,
    /// `V^{2/n}/(2πe)`.
    pub approx: f64,
    /// `(n/(n+2))·V^{2/n}/(2πe)`, never above `exact`.
    pub approx_lower: f64,
}

/// Lower bound on `σ²(UL)` given `|U|^{2/n}` and the point density `γ(L)`.
pub fn zador_bound(n: usize, u_det_term: f64, point_density: f64) -> Result<ZadorBound> {
    if n == 0 {
        return param_err("dimension must be positive");
    }
    if !(u_det_term > 0.0) || !(point_density > 0.0) {
        return param_err("determinant term and point density must be positive");
    }
    let nf = n as f64;
    let vol_term = u_det_term * (-(2.0 / nf) * point_density.ln()).exp();
    let ball =
        ((2.0 / nf) * libm::lgamma(nf / 2.0 + 1.0)).exp() / ((nf + 2.0) * std::f64::consts::PI);
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    Ok(ZadorBound {
        exact: ball * vol_term,
        approx: vol_term / two_pi_e,
        approx_lower: nf / (nf + 2.0) * vol_term / two_pi_e,
    })
}

fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() || values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return param_err("geometric mean needs positive finite values");
    }
    Ok((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// `½log₂(AM/GM)` in bits.
pub fn am_gm_rate_gap(values: &[f64]) -> Result<f64> {
    let gm = geometric_mean(values)?;
    let am = values.iter().sum::<f64>() / values.len() as f64;
    Ok((0.5 * (am / gm).log2()).max(0.0))
}

/// Expected `U_kk²` under a Haar rotation, for every `k = 1..n`:
/// `Ē_k/Ē_{k−1}` where `Ē_k = e_k(λ)/C(n,k)`.
///
/// The mean recursion runs on `λ/g` (`g` the geometric mean) and the ratios
/// are rescaled by `g`.
pub fn ukk_approx_all(lambda: &[f64]) -> Result<Vec<f64>> {
    let g = geometric_mean(lambda)?;
    let n = lambda.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (m1, &l) in lambda.iter().enumerate() {
        let m = (m1 + 1) as f64;
        let x = l / g;
        for k in (1..=m1 + 1).rev() {
            let kf = k as f64;
            e[k] = (m - kf) / m * e[k] + kf / m * x * e[k - 1];
        }
    }
    let out: Vec<f64> = (1..=n).map(|k| g * e[k] / e[k - 1]).collect();
    if out.iter().any(|v| !v.is_finite() || !(*v > 0.0)) {
        return Err(QmmError::Computation(
            "elementary symmetric means overflowed".into(),
        ));
    }
    Ok(out)
}

/// `(k/(n−k+1))·e_k(λ)/e_{k−1}(λ)`, for `1 ≤ k ≤ n`.
pub fn ukk_approx(lambda: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > lambda.len() {
        return param_err(format!("k must be in 1..={}, got {k}", lambda.len()));
    }
    Ok(ukk_approx_all(lambda)?[k - 1])
}

//! Lattice quantizers (ℤⁿ and E8), self-similar Voronoi codes, NestQuant
//! chunked quantization with a scale bank, and Monte-Carlo NSM estimation.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Result};
use crate::formats::{BlockScale, Constellation, QuantizedVector};
use crate::grid::round_even;
use crate::matrix::{check_finite, norm_sq, Matrix};
use crate::rng::SeededRng;

/// Lattices with a closed-form nearest-point routine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum LatticeKind {
    /// `ℤ^dim`.
    Integer { dim: usize },
    /// The Gosset lattice `D8 ∪ (D8 + ½𝟙)`.
    E8,
}

impl LatticeKind {
    pub fn dim(&self) -> usize {
        match self {
            LatticeKind::Integer { dim } => *dim,
            LatticeKind::E8 => 8,
        }
    }

    pub fn name(&self) -> String {
        match self {
            LatticeKind::Integer { dim } => format!("Z{dim}"),
            LatticeKind::E8 => "E8".to_string(),
        }
    }

    /// Generator whose columns are basis vectors.
    pub fn generator(&self) -> Matrix {
        match self {
            LatticeKind::Integer { dim } => Matrix::identity(*dim),
            LatticeKind::E8 => {
                let mut rows = vec![vec![0.0; 8]; 8];
                rows[0][0] = 2.0;
                for (i, row) in rows.iter_mut().enumerate().take(7).skip(1) {
                    row[i - 1] = -1.0;
                    row[i] = 1.0;
                }
                rows[7] = vec![0.5; 8];
                Matrix::from_rows(&rows).expect("static shape").transpose()
            }
        }
    }

    /// Radius of the largest ball inside the Voronoi cell.
    pub fn packing_radius(&self) -> f64 {
        match self {
            LatticeKind::Integer { .. } => 0.5,
            LatticeKind::E8 => std::f64::consts::SQRT_2 / 2.0,
        }
    }

    /// `Q_L(x)`; ties resolved by round-half-to-even and lowest index.
    pub fn nearest(&self, x: &[f64]) -> Vec<f64> {
        match self {
            LatticeKind::Integer { .. } => x.iter().map(|&v| round_even(v)).collect(),
            LatticeKind::E8 => nearest_e8_unchecked(x).to_vec(),
        }
    }

    /// Voronoi-relevant vectors: `±e_i` for ℤⁿ, the 240 roots for E8.
    pub fn relevant_vectors(&self) -> Vec<Vec<f64>> {
        match self {
            LatticeKind::Integer { dim } => {
                let mut out = Vec::with_capacity(2 * dim);
                for i in 0..*dim {
                    for s in [1.0, -1.0] {
                        let mut v = vec![0.0; *dim];
                        v[i] = s;
                        out.push(v);
                    }
                }
                out
            }
            LatticeKind::E8 => e8_roots(),
        }
    }
}

fn e8_roots() -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(240);
    for i in 0..8 {
        for j in (i + 1)..8 {
            for si in [1.0, -1.0] {
                for sj in [1.0, -1.0] {
                    let mut v = vec![0.0; 8];
                    v[i] = si;
                    v[j] = sj;
                    out.push(v);
                }
            }
        }
    }
    for mask in 0u32..256 {
        if mask.count_ones() % 2 == 0 {
            out.push(
                (0..8)
                    .map(|b| if mask >> b & 1 == 1 { -0.5 } else { 0.5 })
                    .collect(),
            );
        }
    }
    out
}

/// Per-coordinate round-half-to-even.
pub fn nearest_zn(x: &[f64]) -> Vec<i64> {
    x.iter().map(|&v| round_even(v) as i64).collect()
}

/// Nearest point of `D8` (integer vectors with even coordinate sum).
fn nearest_d8(x: &[f64]) -> [f64; 8] {
    let mut f = [0.0; 8];
    for i in 0..8 {
        f[i] = round_even(x[i]);
    }
    let sum: f64 = f.iter().sum();
    if sum.rem_euclid(2.0) != 0.0 {
        let mut worst = 0;
        let mut worst_d = -1.0;
        for i in 0..8 {
            let d = (x[i] - f[i]).abs();
            if d > worst_d {
                worst = i;
                worst_d = d;
            }
        }
        f[worst] += if x[worst] >= f[worst] { 1.0 } else { -1.0 };
    }
    f
}

fn nearest_e8_unchecked(x: &[f64]) -> [f64; 8] {
    let a = nearest_d8(x);
    let shifted: Vec<f64> = x.iter().map(|v| v - 0.5).collect();
    let mut b = nearest_d8(&shifted);
    for v in b.iter_mut() {
        *v += 0.5;
    }
    let da: f64 = a.iter().zip(x).map(|(p, v)| (p - v) * (p - v)).sum();
    let db: f64 = b.iter().zip(x).map(|(p, v)| (p - v) * (p - v)).sum();
    if db < da {
        b
    } else {
        a
    }
}

/// Exact nearest point of E8; on an exact tie the `D8` coset wins.
pub fn nearest_e8(x: &[f64]) -> Result<[f64; 8]> {
    if x.len() != 8 {
        return dim_err(format!("E8 needs an 8-vector, got length {}", x.len()));
    }
    check_finite(x)?;
    Ok(nearest_e8_unchecked(x))
}

/// A lattice together with its generator and cached inverse.
#[derive(Clone, Debug)]
pub struct LatticeSpec {
    kind: LatticeKind,
    generator: Matrix,
    generator_inv: Matrix,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind) -> Result<Self> {
        if kind.dim() == 0 {
            return param_err("lattice dimension must be at least 1");
        }
        let generator = kind.generator();
        let generator_inv = generator.inverse()?;
        Ok(Self {
            kind,
            generator,
            generator_inv,
        })
    }

    pub fn integer(dim: usize) -> Result<Self> {
        Self::new(LatticeKind::Integer { dim })
    }

    pub fn e8() -> Self {
        Self::new(LatticeKind::E8).expect("E8 generator is invertible")
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn name(&self) -> String {
        self.kind.name()
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    /// `|det G|`, computed from the generator.
    pub fn covolume(&self) -> f64 {
        determinant(&self.generator).abs()
    }

    pub fn nearest(&self, x: &[f64]) -> Vec<f64> {
        self.kind.nearest(x)
    }

    /// Integer coordinates `G⁻¹λ` of a lattice point.
    pub fn coordinates(&self, point: &[f64]) -> Vec<i64> {
        self.generator_inv
            .mat_vec(point)
            .expect("dimension checked by caller")
            .into_iter()
            .map(|v| round_even(v) as i64)
            .collect()
    }
}

fn determinant(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut a = m.clone();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        if a[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..n {
                let t = a[(col, c)];
                a[(col, c)] = a[(pivot, c)];
                a[(pivot, c)] = t;
            }
            det = -det;
        }
        det *= a[(col, col)];
        for r in (col + 1)..n {
            let f = a[(r, col)] / a[(col, col)];
            for c in col..n {
                a[(r, c)] -= f * a[(col, c)];
            }
        }
    }
    det
}

/// Position of a lattice point relative to the shaping region `q·V_L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    /// Strictly inside: the coset's minimum-energy member is unique.
    Interior,
    /// On a facet: other members of the coset have the same energy.
    Boundary,
    Outside,
}

/// Classify `point` against `q·V_L` using the Voronoi-relevant vectors:
/// `⟨λ, r⟩ ≤ q‖r‖²/2` for all relevant `r`.
pub fn shaping_membership(kind: LatticeKind, q: u32, point: &[f64]) -> Membership {
    let qf = q as f64;
    let mut boundary = false;
    for r in kind.relevant_vectors() {
        let ip: f64 = r.iter().zip(point).map(|(a, b)| a * b).sum();
        let half = 0.5 * qf * norm_sq(&r);
        if ip > half {
            return Membership::Outside;
        }
        if ip == half {
            boundary = true;
        }
    }
    if boundary {
        Membership::Boundary
    } else {
        Membership::Interior
    }
}

/// Self-similar nested pair `βL / qβL` with an optional bank of scales.
#[derive(Clone, Debug)]
pub struct NestedCode {
    lattice: LatticeSpec,
    q: u32,
    beta: f64,
    scale_bank: Vec<f64>,
}

impl NestedCode {
    /// Code at the single scale `beta`.
    pub fn new(lattice: LatticeSpec, q: u32, beta: f64) -> Result<Self> {
        Self::with_bank(lattice, q, vec![beta])
    }

    /// Code with an explicit bank `β_1..β_K`; the first entry is the base.
    pub fn with_bank(lattice: LatticeSpec, q: u32, bank: Vec<f64>) -> Result<Self> {
        if q < 2 {
            return param_err(format!("nesting ratio must be at least 2, got {q}"));
        }
        if bank.is_empty() || bank.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return param_err("scale bank must be non-empty with positive finite entries");
        }
        Ok(Self {
            beta: bank[0],
            lattice,
            q,
            scale_bank: bank,
        })
    }

    /// Geometric bank `β_k = β·r^{k−1}` whose shaping regions' inscribed
    /// balls have radii from `r_min` to `r_max`.
    pub fn geometric(
        lattice: LatticeSpec,
        q: u32,
        k: usize,
        r_min: f64,
        r_max: f64,
    ) -> Result<Self> {
        if k == 0 || !(r_min > 0.0) || !(r_max >= r_min) {
            return param_err("geometric bank needs K >= 1 and 0 < r_min <= r_max");
        }
        let unit = q as f64 * lattice.kind().packing_radius();
        let beta = r_min / unit;
        let ratio = if k == 1 {
            1.0
        } else {
            (r_max / r_min).powf(1.0 / (k - 1) as f64)
        };
        let mut bank: Vec<f64> = (0..k).map(|i| beta * ratio.powi(i as i32)).collect();
        bank[k - 1] = r_max / unit;
        Self::with_bank(lattice, q, bank)
    }

    /// The NestQuant preset for unit-variance coordinates: E8, `q = 16`,
    /// `K = 16`, inscribed radii from 2 to 6.
    pub fn nestquant_default() -> Self {
        Self::geometric(LatticeSpec::e8(), 16, 16, 2.0, 6.0).expect("static parameters")
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scale_bank(&self) -> &[f64] {
        &self.scale_bank
    }

    /// `log₂q + log₂K/d` bits per entry.
    pub fn rate(&self) -> f64 {
        (self.q as f64).log2() + (self.scale_bank.len() as f64).log2() / self.lattice.dim() as f64
    }

    /// `Enc` at scale `beta`: `[G⁻¹Q_L(x/β)] mod q`.
    pub fn encode_at(&self, x: &[f64], beta: f64) -> Vec<i64> {
        let scaled: Vec<f64> = x.iter().map(|v| v / beta).collect();
        let point = self.lattice.nearest(&scaled);
        let q = self.q as i64;
        self.lattice
            .coordinates(&point)
            .into_iter()
            .map(|c| c.rem_euclid(q))
            .collect()
    }

    /// `Dec` at scale `beta`: `β·(Gv − q·Q_L(Gv/q))`.
    pub fn decode_at(&self, v: &[i64], beta: f64) -> Vec<f64> {
        decode_unit(&self.lattice, self.q, v)
            .into_iter()
            .map(|p| beta * p)
            .collect()
    }
}

fn decode_unit(lattice: &LatticeSpec, q: u32, v: &[i64]) -> Vec<f64> {
    let vf: Vec<f64> = v.iter().map(|&c| c as f64).collect();
    let y = lattice.generator().mat_vec(&vf).expect("dimension checked");
    let qf = q as f64;
    let coarse = lattice.nearest(&y.iter().map(|p| p / qf).collect::<Vec<_>>());
    y.iter().zip(coarse).map(|(a, c)| a - qf * c).collect()
}

/// Unit-scale Voronoi decode of a flat code array, chunk by chunk.
pub(crate) fn voronoi_decode_kind(kind: LatticeKind, q: u32, codes: &[i64]) -> Vec<f64> {
    let lattice = LatticeSpec::new(kind).expect("validated lattice");
    codes
        .chunks(kind.dim())
        .flat_map(|c| decode_unit(&lattice, q, c))
        .collect()
}

fn check_chunk(x: &[f64], code: &NestedCode) -> Result<()> {
    if x.len() != code.lattice.dim() {
        return dim_err(format!(
            "expected a {}-vector, got length {}",
            code.lattice.dim(),
            x.len()
        ));
    }
    check_finite(x)
}

/// `Enc(x) = [G⁻¹Q_L(x)] mod q`, at the code's base scale.
pub fn voronoi_encode(x: &[f64], code: &NestedCode) -> Result<Vec<i64>> {
    check_chunk(x, code)?;
    Ok(code.encode_at(x, code.beta))
}

/// `Dec(v) = Gv − q·Q_L(Gv/q)`, at the code's base scale.
pub fn voronoi_decode(v: &[i64], code: &NestedCode) -> Result<Vec<f64>> {
    if v.len() != code.lattice.dim() {
        return dim_err(format!(
            "expected {} indices, got {}",
            code.lattice.dim(),
            v.len()
        ));
    }
    let q = code.q as i64;
    if v.iter().any(|&c| !(0..q).contains(&c)) {
        return param_err(format!("indices must lie in [0, {q})"));
    }
    Ok(code.decode_at(v, code.beta))
}

/// Result of one encode/decode pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Roundtrip {
    pub nearest: Vec<f64>,
    pub decoded: Vec<f64>,
    /// `Dec(Enc(x)) ≠ Q_L(x)`.
    pub overload: bool,
}

/// `Dec(Enc(x))` compared against `Q_L(x)` at the base scale.
pub fn voronoi_roundtrip(x: &[f64], code: &NestedCode) -> Result<Roundtrip> {
    check_chunk(x, code)?;
    let beta = code.beta;
    let scaled: Vec<f64> = x.iter().map(|v| v / beta).collect();
    let nearest: Vec<f64> = code
        .lattice
        .nearest(&scaled)
        .iter()
        .map(|p| beta * p)
        .collect();
    let decoded = code.decode_at(&code.encode_at(x, beta), beta);
    let overload = nearest != decoded;
    Ok(Roundtrip {
        nearest,
        decoded,
        overload,
    })
}

/// Uniform draw from the fundamental parallelepiped `G·[0,1)^d`.
fn uniform_parallelepiped(lattice: &LatticeSpec, rng: &mut SeededRng) -> Vec<f64> {
    let u: Vec<f64> = (0..lattice.dim()).map(|_| rng.uniform()).collect();
    lattice.generator().mat_vec(&u).expect("dimension matches")
}

/// Uniform draw from `V_L`.
pub fn uniform_voronoi(lattice: &LatticeSpec, rng: &mut SeededRng) -> Vec<f64> {
    let u = uniform_parallelepiped(lattice, rng);
    let p = lattice.nearest(&u);
    u.iter().zip(p).map(|(a, b)| a - b).collect()
}

/// Subtractive-dither variant: `Dec(Enc(x + u)) − u` with `u ~ Uniform(βV_L)`
/// drawn from a generator both ends share.
pub fn dithered_roundtrip(x: &[f64], code: &NestedCode, rng: &mut SeededRng) -> Result<Vec<f64>> {
    check_chunk(x, code)?;
    let beta = code.beta;
    let u: Vec<f64> = uniform_voronoi(&code.lattice, rng)
        .into_iter()
        .map(|v| beta * v)
        .collect();
    let shifted: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
    let decoded = code.decode_at(&code.encode_at(&shifted, beta), beta);
    Ok(decoded.iter().zip(&u).map(|(a, b)| a - b).collect())
}

/// NestQuant: normalize `x` by its RMS, split into `d`-chunks, and for each
/// chunk keep the bank scale with the smallest squared error (lowest index on
/// ties). The RMS travels as the vector scale at full precision.
pub fn nestquant_quantize(x: &[f64], code: &NestedCode) -> Result<QuantizedVector> {
    check_finite(x)?;
    let d = code.lattice.dim();
    if !x.len().is_multiple_of(d) {
        return dim_err(format!(
            "length {} is not divisible by lattice dimension {d}",
            x.len()
        ));
    }
    let rms = (norm_sq(x) / x.len().max(1) as f64).sqrt();
    let mut codes = Vec::with_capacity(x.len());
    let mut block_scales = Vec::with_capacity(x.len() / d);
    for (bi, chunk) in x.chunks(d).enumerate() {
        let normalized: Vec<f64> = chunk
            .iter()
            .map(|v| if rms > 0.0 { v / rms } else { 0.0 })
            .collect();
        let mut best: Option<(f64, usize, Vec<i64>)> = None;
        for (k, &beta) in code.scale_bank.iter().enumerate() {
            let v = code.encode_at(&normalized, beta);
            let rec = code.decode_at(&v, beta);
            let err: f64 = rec
                .iter()
                .zip(&normalized)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
                best = Some((err, k, v));
            }
        }
        let (_, k, v) = best.expect("bank is non-empty");
        codes.extend(v);
        block_scales.push(BlockScale {
            block: bi,
            code: k as i64,
            value: code.scale_bank[k],
        });
    }
    Ok(QuantizedVector {
        constellation: Constellation::Lattice {
            lattice: code.lattice.kind(),
            q: code.q,
            bank_size: code.scale_bank.len() as u32,
        },
        scale: rms,
        block_size: Some(d),
        block_scales,
        rate: code.rate(),
        codes,
    })
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NsmEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub const NSM_MIN_SAMPLES: usize = 10_000;

/// NSM `σ²(L)/covol^{2/d}` from `e = u − Q_L(u)` with `u` uniform on the
/// fundamental parallelepiped.
pub fn nsm_estimate(
    lattice: &LatticeSpec,
    samples: usize,
    rng: &mut SeededRng,
) -> Result<NsmEstimate> {
    if samples < NSM_MIN_SAMPLES {
        return param_err(format!(
            "NSM estimation needs at least {NSM_MIN_SAMPLES} samples, got {samples}"
        ));
    }
    let d = lattice.dim() as f64;
    let norm = lattice.covolume().powf(2.0 / d);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let e = uniform_voronoi(lattice, rng);
        let v = norm_sq(&e) / d / norm;
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(NsmEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_e8_point(p: &[f64]) -> bool {
        let all_int = p.iter().all(|v| v.fract() == 0.0);
        let all_half = p.iter().all(|v| (v - 0.5).fract() == 0.0);
        let sum: f64 = p.iter().sum();
        (all_int || all_half) && sum.rem_euclid(2.0) == 0.0
    }

    #[test]
    fn e8_generator_is_unimodular() {
        let l = LatticeSpec::e8();
        assert!((l.covolume() - 1.0).abs() < 1e-12);
        for c in l.generator().columns() {
            assert!(is_e8_point(&c));
        }
    }

    #[test]
    fn e8_roots_are_relevant() {
        let roots = e8_roots();
        assert_eq!(roots.len(), 240);
        for r in &roots {
            assert!(is_e8_point(r));
            assert_eq!(norm_sq(r), 2.0);
        }
    }

    #[test]
    fn nearest_zn_examples() {
        assert_eq!(nearest_zn(&[0.4, -0.4]), vec![0, 0]);
        assert_eq!(nearest_zn(&[0.5]), vec![0]);
        assert_eq!(nearest_zn(&[1.5, -2.5]), vec![2, -2]);
    }

    #[test]
    fn nearest_e8_fixed_points() {
        assert_eq!(nearest_e8(&[0.0; 8]).unwrap(), [0.0; 8]);
        let l = LatticeSpec::e8();
        let mut rng = SeededRng::new(1);
        for _ in 0..200 {
            let z: Vec<f64> = (0..8).map(|_| (rng.index(9) as f64) - 4.0).collect();
            let p = l.generator().mat_vec(&z).unwrap();
            assert!(is_e8_point(&p));
            assert_eq!(nearest_e8(&p).unwrap().to_vec(), p);
        }
        assert!(nearest_e8(&[0.0; 7]).is_err());
    }

    #[test]
    fn voronoi_integer_examples() {
        let code = NestedCode::new(LatticeSpec::integer(1).unwrap(), 4, 1.0).unwrap();
        assert_eq!(voronoi_encode(&[0.0], &code).unwrap(), vec![0]);
        assert_eq!(voronoi_decode(&[0], &code).unwrap(), vec![0.0]);
        assert_eq!(voronoi_encode(&[2.3], &code).unwrap(), vec![2]);
        assert_eq!(voronoi_decode(&[2], &code).unwrap(), vec![2.0]);
        assert_eq!(voronoi_encode(&[3.7], &code).unwrap(), vec![0]);
        let rt = voronoi_roundtrip(&[3.7], &code).unwrap();
        assert_eq!(rt.nearest, vec![4.0]);
        assert_eq!(rt.decoded, vec![0.0]);
        assert!(rt.overload);
        assert!(voronoi_decode(&[4], &code).is_err());
    }

    #[test]
    fn membership_of_integer_boundary() {
        let k = LatticeKind::Integer { dim: 1 };
        assert_eq!(shaping_membership(k, 4, &[1.0]), Membership::Interior);
        assert_eq!(shaping_membership(k, 4, &[2.0]), Membership::Boundary);
        assert_eq!(shaping_membership(k, 4, &[-2.0]), Membership::Boundary);
        assert_eq!(shaping_membership(k, 4, &[3.0]), Membership::Outside);
    }

    #[test]
    fn nestquant_rate_and_exact_chunk() {
        let code = NestedCode::nestquant_default();
        assert!((code.rate() - 4.5).abs() < 1e-12);
        assert_eq!(code.scale_bank().len(), 16);
        let top = code.scale_bank()[15];
        assert!((16.0 * top * code.lattice().kind().packing_radius() - 6.0).abs() < 1e-12);
        let q = nestquant_quantize(&[1.0; 8], &code).unwrap();
        q.validate().unwrap();
        let rec = q.reconstruct();
        assert_eq!(q.rate, 4.5);
        assert_eq!(rec.len(), 8);
        assert!(nestquant_quantize(&[1.0; 12], &code).is_err());
    }

    #[test]
    fn nestquant_zero_error_on_codeword() {
        let lattice = LatticeSpec::integer(2).unwrap();
        let code = NestedCode::with_bank(lattice, 8, vec![0.5, 0.25]).unwrap();
        let x = [1.0, -1.0];
        let q = nestquant_quantize(&x, &code).unwrap();
        let rec = q.reconstruct();
        assert_eq!(rec, x.to_vec());
        assert_eq!(q.block_scales[0].code, 0);
    }

    #[test]
    fn nsm_integer() {
        let mut rng = SeededRng::new(8);
        let z = nsm_estimate(&LatticeSpec::integer(1).unwrap(), 100_000, &mut rng).unwrap();
        assert!((z.value - 1.0 / 12.0).abs() < 3.0 * z.std_error);
        let z2 = nsm_estimate(&LatticeSpec::integer(2).unwrap(), 100_000, &mut rng).unwrap();
        assert!((z2.value - 1.0 / 12.0).abs() < 3.0 * z2.std_error);
        assert!(nsm_estimate(&LatticeSpec::integer(1).unwrap(), 10, &mut rng).is_err());
    }
}

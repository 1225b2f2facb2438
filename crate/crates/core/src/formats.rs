//! Scalar constellations (INT-M, FP with arbitrary exponent/mantissa widths,
//! the NV FP4 table) and the scaling schemes built on them: absmax INT,
//! dithered absmax FP and block-16 microscaling.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, QmmError, Result};
use crate::grid::round_even;
use crate::lattice::{self, LatticeKind};
use crate::matrix::{check_finite, compensated_sum, norm_inf};
use crate::rng::SeededRng;

/// `ℤ ∩ [−2^{M−1}, 2^{M−1}]`, the INT-M grid extended by one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntFormat {
    bits: u32,
}

impl IntFormat {
    pub fn new(bits: u32) -> Result<Self> {
        if !(2..=31).contains(&bits) {
            return param_err(format!("INT bit width must be in 2..=31, got {bits}"));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `2^{M−1}`.
    pub fn max_code(&self) -> i64 {
        1i64 << (self.bits - 1)
    }

    pub fn contains(&self, code: i64) -> bool {
        code.abs() <= self.max_code()
    }
}

/// Normal-only floating-point constellation with exponent bias
/// `μ = 2^{ℰ−1} − 1`. Exponent field values `0` and `2^ℰ − 1` are excluded,
/// so there are no subnormals, infinities or NaNs.
///
/// Codes are bit patterns `s | E | M` (sign in the top bit); the pattern `0`
/// encodes the value zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpFormat {
    exponent_bits: u32,
    mantissa_bits: u32,
}

impl FpFormat {
    pub const E4M3: FpFormat = FpFormat {
        exponent_bits: 4,
        mantissa_bits: 3,
    };

    pub fn new(exponent_bits: u32, mantissa_bits: u32) -> Result<Self> {
        if !(2..=11).contains(&exponent_bits) {
            return param_err(format!(
                "FP exponent bits must be in 2..=11, got {exponent_bits}"
            ));
        }
        if mantissa_bits > 52 || exponent_bits + mantissa_bits > 62 {
            return param_err(format!("FP mantissa bits {mantissa_bits} out of range"));
        }
        Ok(Self {
            exponent_bits,
            mantissa_bits,
        })
    }

    pub fn exponent_bits(&self) -> u32 {
        self.exponent_bits
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn bias(&self) -> i32 {
        (1 << (self.exponent_bits - 1)) - 1
    }

    /// Largest biased exponent field, `2^ℰ − 2`.
    pub fn max_exponent(&self) -> i32 {
        (1 << self.exponent_bits) - 2
    }

    /// `1 + ℰ + ℳ`.
    pub fn total_bits(&self) -> u32 {
        1 + self.exponent_bits + self.mantissa_bits
    }

    /// `2^{(2^ℰ−2)−μ}·(2 − 2^{−ℳ})`.
    pub fn max_value(&self) -> f64 {
        libm::ldexp(
            2.0 - libm::ldexp(1.0, -(self.mantissa_bits as i32)),
            self.max_exponent() - self.bias(),
        )
    }

    /// Smallest positive member, `2^{1−μ}`.
    pub fn min_normal(&self) -> f64 {
        libm::ldexp(1.0, 1 - self.bias())
    }

    /// `2^ℰ − 2 − (μ − 1)`, the exponent offset of dithered absmax scaling.
    pub fn e_max_minus(&self) -> i32 {
        self.max_exponent() - (self.bias() - 1)
    }

    fn pack(&self, negative: bool, exponent: u64, mantissa: u64) -> i64 {
        let sign = (negative as u64) << (self.exponent_bits + self.mantissa_bits);
        (sign | (exponent << self.mantissa_bits) | mantissa) as i64
    }

    /// Constellation value of a code, or `None` for a pattern outside the
    /// constellation.
    pub fn decode(&self, code: i64) -> Option<f64> {
        let width = self.total_bits();
        if code < 0 || (code as u64) >> width != 0 {
            return None;
        }
        let code = code as u64;
        let m_mask = (1u64 << self.mantissa_bits) - 1;
        let mantissa = code & m_mask;
        let exponent = (code >> self.mantissa_bits) & ((1u64 << self.exponent_bits) - 1);
        let negative = code >> (self.exponent_bits + self.mantissa_bits) != 0;
        if exponent == 0 {
            return (code == 0).then_some(0.0);
        }
        if exponent as i32 > self.max_exponent() {
            return None;
        }
        let frac = 1.0 + libm::ldexp(mantissa as f64, -(self.mantissa_bits as i32));
        let magnitude = libm::ldexp(frac, exponent as i32 - self.bias());
        Some(if negative { -magnitude } else { magnitude })
    }

    pub fn contains_code(&self, code: i64) -> bool {
        self.decode(code).is_some()
    }

    /// Quantize one real to the constellation, returning the code.
    ///
    /// Underflow (`E_z < 1`) maps to zero and overflow to the signed largest
    /// value. The mantissa carry is applied before the range check.
    pub fn encode(&self, z: f64) -> i64 {
        if z == 0.0 || z.is_nan() {
            return 0;
        }
        let negative = z < 0.0;
        let full = 1u64 << self.mantissa_bits;
        if z.is_infinite() {
            return self.pack(negative, self.max_exponent() as u64, full - 1);
        }
        let a = z.abs();
        let k = floor_log2(a);
        let mut e = self.bias() + k;
        let zbar = libm::ldexp(a, -k);
        let mut m = round_even(libm::ldexp(zbar - 1.0, self.mantissa_bits as i32)) as u64;
        if m == full {
            m = 0;
            e += 1;
        }
        if e < 1 {
            return 0;
        }
        if e > self.max_exponent() {
            return self.pack(negative, self.max_exponent() as u64, full - 1);
        }
        self.pack(negative, e as u64, m)
    }

    /// Code of the smallest constellation value `≥ t`, for `t > 0`, saturating
    /// at the largest value. Values below the smallest normal map to it.
    pub fn ceil_code(&self, t: f64) -> i64 {
        let min = self.pack(false, 1, 0);
        if !(t > self.min_normal()) {
            return min;
        }
        let code = self.encode(t);
        let value = self.decode(code).unwrap_or(0.0);
        if value >= t {
            return code;
        }
        let max = self.pack(
            false,
            self.max_exponent() as u64,
            (1u64 << self.mantissa_bits) - 1,
        );
        (code + 1).min(max)
    }
}

/// Exact `⌊log₂ a⌋` for finite `a > 0`, read from the exponent field.
pub fn floor_log2(a: f64) -> i32 {
    debug_assert!(a > 0.0 && a.is_finite());
    let bits = a.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        floor_log2(a * libm::ldexp(1.0, 64)) - 64
    } else {
        biased - 1023
    }
}

/// `Q_FP(z)`: value of [`FpFormat::encode`].
pub fn fp_quantize_scalar(z: f64, fmt: FpFormat) -> f64 {
    fmt.decode(fmt.encode(z))
        .expect("encode always yields a member code")
}

/// Magnitudes of the NV FP4 (E2M1) table, indexed by the low three code bits.
pub const FP4_MAGNITUDES: [f64; 8] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];

/// FP4 code `s|mag` with `mag ∈ 0..8`; the negative-zero pattern is invalid.
pub fn fp4_decode(code: i64) -> Option<f64> {
    match code {
        0..=7 => Some(FP4_MAGNITUDES[code as usize]),
        9..=15 => Some(-FP4_MAGNITUDES[(code - 8) as usize]),
        _ => None,
    }
}

/// Nearest FP4 code; ties go to the even magnitude index (even mantissa),
/// values beyond 6 saturate.
pub fn fp4_encode(z: f64) -> i64 {
    let a = z.abs();
    let mut best = 0usize;
    for i in 1..FP4_MAGNITUDES.len() {
        let d_new = (a - FP4_MAGNITUDES[i]).abs();
        let d_best = (a - FP4_MAGNITUDES[best]).abs();
        if d_new < d_best || (d_new == d_best && i % 2 == 0) {
            best = i;
        }
    }
    if z < 0.0 && best != 0 {
        best as i64 + 8
    } else {
        best as i64
    }
}

/// Scalar (or lattice) alphabet the codes of a [`QuantizedVector`] live in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constellation {
    /// Integer codes; absmax and NVINT4.
    Int { format: IntFormat },
    /// FP bit patterns; absmax and dithered absmax.
    Fp { format: FpFormat },
    /// NV FP4 table codes.
    Fp4,
    /// Voronoi-code indices in `[0, q)`, one chunk of `dim` codes per block.
    Lattice {
        lattice: LatticeKind,
        q: u32,
        bank_size: u32,
    },
}

impl Constellation {
    pub fn contains(&self, code: i64) -> bool {
        match self {
            Constellation::Int { format } => format.contains(code),
            Constellation::Fp { format } => format.contains_code(code),
            Constellation::Fp4 => fp4_decode(code).is_some(),
            Constellation::Lattice { q, .. } => (0..*q as i64).contains(&code),
        }
    }

    /// Scalar value of a code; `None` for lattice codes (they decode per chunk).
    fn scalar_value(&self, code: i64) -> Option<f64> {
        match self {
            Constellation::Int { .. } => Some(code as f64),
            Constellation::Fp { format } => format.decode(code),
            Constellation::Fp4 => fp4_decode(code),
            Constellation::Lattice { .. } => None,
        }
    }
}

/// Per-block scale. For microscaled vectors `code` is an E4M3 bit pattern;
/// for lattice vectors it is the bank index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockScale {
    pub block: usize,
    pub code: i64,
    pub value: f64,
}

/// Codes plus scale metadata; the output of every vector quantizer.
///
/// `reconstruct()[i] = scale · block_scale(i) · value(codes)[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedVector {
    pub constellation: Constellation,
    pub scale: f64,
    pub block_size: Option<usize>,
    pub block_scales: Vec<BlockScale>,
    /// Declared bits per entry, including amortized block scales.
    pub rate: f64,
    pub codes: Vec<i64>,
}

/// JSON half of a serialized [`QuantizedVector`]; the codes travel
/// separately as little-endian `i64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedDescriptor {
    pub constellation: Constellation,
    pub scale: f64,
    pub block_size: Option<usize>,
    pub block_scales: Vec<BlockScale>,
    pub rate: f64,
    pub len: usize,
    pub code_encoding: String,
}

const CODE_ENCODING: &str = "i64-le";

impl QuantizedVector {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Structural check: codes are constellation members, block metadata is
    /// consistent, and every scale is finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(QmmError::Format(format!("invalid scale {}", self.scale)));
        }
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(QmmError::Format(format!("invalid rate {}", self.rate)));
        }
        if let Some(i) = self
            .codes
            .iter()
            .position(|&c| !self.constellation.contains(c))
        {
            return Err(QmmError::Format(format!(
                "code {} at index {i} is outside the constellation",
                self.codes[i]
            )));
        }
        let is_lattice = matches!(self.constellation, Constellation::Lattice { .. });
        match self.block_size {
            None => {
                if is_lattice {
                    return Err(QmmError::Format("lattice vectors need a block size".into()));
                }
                if !self.block_scales.is_empty() {
                    return Err(QmmError::Format("block scales without a block size".into()));
                }
            }
            Some(b) => {
                if b == 0 || !self.codes.len().is_multiple_of(b) {
                    return Err(QmmError::Format(format!(
                        "block size {b} does not divide length {}",
                        self.codes.len()
                    )));
                }
                if self.block_scales.len() != self.codes.len() / b {
                    return Err(QmmError::Format("block scale count mismatch".into()));
                }
                for (i, bs) in self.block_scales.iter().enumerate() {
                    if bs.block != i || !bs.value.is_finite() || bs.value < 0.0 {
                        return Err(QmmError::Format(format!("bad block scale entry {i}")));
                    }
                    let ok = match self.constellation {
                        Constellation::Lattice { bank_size, .. } => {
                            (0..bank_size as i64).contains(&bs.code)
                        }
                        _ => FpFormat::E4M3.decode(bs.code) == Some(bs.value),
                    };
                    if !ok {
                        return Err(QmmError::Format(format!("bad block scale code {i}")));
                    }
                }
                if let Constellation::Lattice { lattice, .. } = self.constellation {
                    if b != lattice.dim() {
                        return Err(QmmError::Format(format!(
                            "lattice block size {b} differs from dimension {}",
                            lattice.dim()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Unscaled constellation values of one block (or of the whole vector).
    fn block_values(&self, start: usize, end: usize) -> Vec<f64> {
        match self.constellation {
            Constellation::Lattice { lattice, q, .. } => {
                lattice::voronoi_decode_kind(lattice, q, &self.codes[start..end])
            }
            c => self.codes[start..end]
                .iter()
                .map(|&code| c.scalar_value(code).unwrap_or(0.0))
                .collect(),
        }
    }

    fn blocks(&self) -> Vec<(usize, usize, f64)> {
        match self.block_size {
            None => vec![(0, self.codes.len(), 1.0)],
            Some(b) => self
                .block_scales
                .iter()
                .enumerate()
                .map(|(i, bs)| (i * b, (i + 1) * b, bs.value))
                .collect(),
        }
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.codes.len());
        for (start, end, s) in self.blocks() {
            let factor = self.scale * s;
            out.extend(
                self.block_values(start, end)
                    .into_iter()
                    .map(|v| factor * v),
            );
        }
        out
    }

    pub fn descriptor(&self) -> QuantizedDescriptor {
        QuantizedDescriptor {
            constellation: self.constellation,
            scale: self.scale,
            block_size: self.block_size,
            block_scales: self.block_scales.clone(),
            rate: self.rate,
            len: self.codes.len(),
            code_encoding: CODE_ENCODING.to_string(),
        }
    }

    /// Serialize as `(JSON descriptor, little-endian code bytes)`.
    pub fn to_artifact(&self) -> Result<(String, Vec<u8>)> {
        let json = serde_json::to_string_pretty(&self.descriptor())?;
        let mut bytes = Vec::with_capacity(8 * self.codes.len());
        for c in &self.codes {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
        Ok((json, bytes))
    }

    /// Inverse of [`QuantizedVector::to_artifact`]; the result is validated.
    pub fn from_artifact(json: &str, codes: &[u8]) -> Result<Self> {
        let d: QuantizedDescriptor = serde_json::from_str(json)?;
        if d.code_encoding != CODE_ENCODING {
            return Err(QmmError::Format(format!(
                "unsupported code encoding {:?}",
                d.code_encoding
            )));
        }
        if d.len.checked_mul(8) != Some(codes.len()) {
            return Err(QmmError::Format(format!(
                "descriptor declares {} codes, payload has {} bytes",
                d.len,
                codes.len()
            )));
        }
        let qv = QuantizedVector {
            constellation: d.constellation,
            scale: d.scale,
            block_size: d.block_size,
            block_scales: d.block_scales,
            rate: d.rate,
            codes: codes
                .chunks_exact(8)
                .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        };
        qv.validate()?;
        Ok(qv)
    }
}

/// Absmax INT-M: `γ = 2^{−(M−1)}‖x‖∞`, codes `round(x/γ)`.
pub fn absmax_int_quantize(x: &[f64], fmt: IntFormat) -> Result<QuantizedVector> {
    check_finite(x)?;
    let amax = norm_inf(x);
    let gamma = libm::ldexp(amax, -(fmt.bits() as i32 - 1));
    let max = fmt.max_code();
    let codes = if gamma == 0.0 {
        vec![0; x.len()]
    } else {
        x.iter()
            .map(|&v| (round_even(v / gamma) as i64).clamp(-max, max))
            .collect()
    };
    Ok(QuantizedVector {
        constellation: Constellation::Int { format: fmt },
        scale: gamma,
        block_size: None,
        block_scales: Vec::new(),
        rate: fmt.bits() as f64,
        codes,
    })
}

/// Exponent dither of absmax FP scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "u", rename_all = "snake_case")]
pub enum Dither {
    /// `U ~ Uniform[0, 1)` drawn from the caller's generator.
    Random,
    /// Fixed `U`; `Fixed(1.0)` is plain absmax FP.
    Fixed(f64),
}

/// Dithered absmax FP: `γ = 2^U·2^{−ℰmax−}‖x‖∞`, codes `Q_FP(x/γ)`.
pub fn dithered_absmax_fp_quantize(
    x: &[f64],
    fmt: FpFormat,
    dither: Dither,
    rng: &mut SeededRng,
) -> Result<QuantizedVector> {
    check_finite(x)?;
    let u = match dither {
        Dither::Random => rng.uniform(),
        Dither::Fixed(u) => {
            if !u.is_finite() {
                return param_err("dither must be finite");
            }
            u
        }
    };
    let amax = norm_inf(x);
    let gamma = 2f64.powf(u) * libm::ldexp(amax, -fmt.e_max_minus());
    let codes = if gamma == 0.0 {
        vec![0; x.len()]
    } else {
        x.iter().map(|&v| fmt.encode(v / gamma)).collect()
    };
    Ok(QuantizedVector {
        constellation: Constellation::Fp { format: fmt },
        scale: gamma,
        block_size: None,
        block_scales: Vec::new(),
        rate: fmt.total_bits() as f64,
        codes,
    })
}

/// Base constellation of NV microscaling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NvBase {
    Int4,
    Fp4,
}

impl NvBase {
    /// Block absmax the scale selection aims for.
    pub fn target(&self) -> f64 {
        match self {
            NvBase::Int4 => 7.0,
            NvBase::Fp4 => 6.0,
        }
    }
}

/// Block-scale selection rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NvScaleRule {
    /// Smallest E4M3 scale keeping the scaled block absmax at most the target.
    #[default]
    NoOverload,
    /// E4M3 scale nearest to `blockmax/target`; overshoot saturates.
    Nearest,
}

pub const NV_BLOCK: usize = 16;

/// NV microscaling: a global absmax-style scale, then one E4M3 scale per
/// block, then per-entry INT4 or FP4 rounding.
///
/// The global scale maps the largest block scale to the E4M3 maximum.
pub fn nv_microscale_quantize(
    x: &[f64],
    base: NvBase,
    block: usize,
    rule: NvScaleRule,
) -> Result<QuantizedVector> {
    check_finite(x)?;
    if block == 0 || !x.len().is_multiple_of(block) {
        return dim_err(format!(
            "length {} is not divisible by block size {block}",
            x.len()
        ));
    }
    let e4m3 = FpFormat::E4M3;
    let target = base.target();
    let amax = norm_inf(x);
    let global = amax / (target * e4m3.max_value());
    let int4 = IntFormat::new(4)?;
    let mut codes = Vec::with_capacity(x.len());
    let mut block_scales = Vec::with_capacity(x.len() / block);
    for (bi, chunk) in x.chunks(block).enumerate() {
        let bmax = norm_inf(chunk);
        let wanted = if amax == 0.0 {
            0.0
        } else {
            e4m3.max_value() * (bmax / amax)
        };
        let code = match rule {
            NvScaleRule::NoOverload => e4m3.ceil_code(wanted),
            NvScaleRule::Nearest => {
                let c = e4m3.encode(wanted);
                if c == 0 {
                    e4m3.ceil_code(0.0)
                } else {
                    c
                }
            }
        };
        let s = e4m3.decode(code).expect("member code");
        block_scales.push(BlockScale {
            block: bi,
            code,
            value: s,
        });
        let denom = global * s;
        for &v in chunk {
            let t = if denom == 0.0 { 0.0 } else { v / denom };
            codes.push(match base {
                NvBase::Int4 => {
                    let m = int4.max_code();
                    (round_even(t) as i64).clamp(-m, m)
                }
                NvBase::Fp4 => fp4_encode(t),
            });
        }
    }
    Ok(QuantizedVector {
        constellation: match base {
            NvBase::Int4 => Constellation::Int { format: int4 },
            NvBase::Fp4 => Constellation::Fp4,
        },
        scale: global,
        block_size: Some(block),
        block_scales,
        rate: 4.0 + e4m3.total_bits() as f64 / block as f64,
        codes,
    })
}

/// `γ_x·γ_y·Σ x̂_i ŷ_i`, block scales applied per block.
///
/// Unblocked integer pairs are summed exactly in `i64`.
pub fn quantized_inner_product(qx: &QuantizedVector, qy: &QuantizedVector) -> Result<f64> {
    if qx.len() != qy.len() {
        return dim_err(format!("lengths {} and {} differ", qx.len(), qy.len()));
    }
    if qx.block_size != qy.block_size {
        return dim_err("block layouts differ");
    }
    if let (Constellation::Int { .. }, Constellation::Int { .. }, None) =
        (qx.constellation, qy.constellation, qx.block_size)
    {
        let s: i128 = qx
            .codes
            .iter()
            .zip(&qy.codes)
            .map(|(&a, &b)| a as i128 * b as i128)
            .sum();
        return Ok(qx.scale * qy.scale * s as f64);
    }
    let bx = qx.blocks();
    let by = qy.blocks();
    let mut total = 0.0;
    for ((start, end, sx), (_, _, sy)) in bx.into_iter().zip(by) {
        let vx = qx.block_values(start, end);
        let vy = qy.block_values(start, end);
        let ip: f64 = vx.iter().zip(&vy).map(|(a, b)| a * b).sum();
        total += sx * sy * ip;
    }
    Ok(qx.scale * qy.scale * total)
}

fn nonzero_norm_sq(x: &[f64], name: &str) -> Result<f64> {
    let n2 = compensated_sum(x.iter().map(|v| v * v));
    if !(n2 > 0.0) {
        return param_err(format!("{name} must be a nonzero vector"));
    }
    Ok(n2)
}

/// `½(n‖x‖∞²/‖x‖² + n‖y‖∞²/‖y‖²)`, in `[1, n]`.
pub fn delta_int(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return dim_err("delta_int needs equal lengths");
    }
    let n = x.len() as f64;
    let nx = nonzero_norm_sq(x, "x")?;
    let ny = nonzero_norm_sq(y, "y")?;
    let ix = norm_inf(x);
    let iy = norm_inf(y);
    Ok(0.5 * (n * ix * ix / nx + n * iy * iy / ny))
}

/// `n·Σ (x_i²/‖x‖²)(y_i²/‖y‖²)`, in `[0, n]`.
pub fn delta_fp(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return dim_err("delta_fp needs equal lengths");
    }
    let n = x.len() as f64;
    let nx = nonzero_norm_sq(x, "x")?;
    let ny = nonzero_norm_sq(y, "y")?;
    let s = compensated_sum(x.iter().zip(y).map(|(a, b)| (a * a / nx) * (b * b / ny)));
    Ok(n * s)
}

/// `E[2^{−2U}]` for `U ~ Uniform[0, 1)`, i.e. `3/(8 ln 2)`.
pub fn c_fp() -> f64 {
    3.0 / (8.0 * std::f64::consts::LN_2)
}

/// Smallest `n` for which the `2 ln n` envelope on `E[Δ_INT]` is proven.
pub const R_EFF_INT_MIN_N: usize = 27;

/// `M − ½log₂(2 ln n/3)`. Logs a warning below `n = 27`, where the envelope
/// behind the formula is not established.
pub fn r_eff_int(bits: u32, n: usize) -> Result<f64> {
    if n < 2 {
        return param_err(format!("r_eff_int needs n >= 2, got {n}"));
    }
    if n < R_EFF_INT_MIN_N {
        log::warn!("r_eff_int: n = {n} is below the validity range n >= {R_EFF_INT_MIN_N}");
    }
    Ok(bits as f64 - 0.5 * (2.0 * (n as f64).ln() / 3.0).log2())
}

/// `ℳ + ½log₂(12/C_FP)`.
pub fn r_eff_fp(mantissa_bits: u32) -> f64 {
    mantissa_bits as f64 + 0.5 * (12.0 / c_fp()).log2()
}

/// High-rate MSE prediction for absmax INT-M on one pair:
/// `(‖x‖²‖y‖²/n)·2·2^{−2M}·Δ_INT/3`.
pub fn predict_int_mse(x: &[f64], y: &[f64], bits: u32) -> Result<f64> {
    let d = delta_int(x, y)?;
    let n = x.len() as f64;
    let k = 2.0 * crate::matrix::norm_sq(x) * crate::matrix::norm_sq(y) / n;
    Ok(k * libm::ldexp(1.0, -2 * bits as i32) * d / 3.0)
}

/// IEIN MSE prediction for dithered absmax FP:
/// `(‖x‖²‖y‖²/n)·2·2^{−2R_eff}·Δ_FP`.
pub fn predict_fp_mse(x: &[f64], y: &[f64], mantissa_bits: u32) -> Result<f64> {
    let d = delta_fp(x, y)?;
    let n = x.len() as f64;
    let k = 2.0 * crate::matrix::norm_sq(x) * crate::matrix::norm_sq(y) / n;
    Ok(k * 2f64.powf(-2.0 * r_eff_fp(mantissa_bits)) * d)
}

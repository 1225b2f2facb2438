//! Uniform scalar grid quantization and the MMSE shrinkage factor.

use crate::error::{param_err, Result};
use crate::matrix::check_finite;

/// Round-half-to-even, the tie rule used by every scalar round in the crate.
#[inline]
pub fn round_even(x: f64) -> f64 {
    x.round_ties_even()
}

/// Quantize `x` to the grid `eps·ℤ`.
///
/// Returns the integer codes and the per-entry errors `eps·code − x`, each in
/// `[−eps/2, eps/2]`.
pub fn grid_quantize(x: &[f64], eps: f64) -> Result<(Vec<i64>, Vec<f64>)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return param_err(format!("grid spacing must be positive, got {eps}"));
    }
    check_finite(x)?;
    let codes: Vec<i64> = x.iter().map(|&v| round_even(v / eps) as i64).collect();
    let errors = codes
        .iter()
        .zip(x)
        .map(|(&c, &v)| eps * c as f64 - v)
        .collect();
    Ok((codes, errors))
}

/// `m/(m + eps²/12)`: the scalar that minimizes the MSE of `γ·x̃` under the
/// additive uniform-noise model.
pub fn shrinkage_gamma(second_moment: f64, eps: f64) -> Result<f64> {
    if !(second_moment > 0.0) || !second_moment.is_finite() {
        return param_err(format!(
            "second moment must be positive, got {second_moment}"
        ));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return param_err(format!("grid spacing must be non-negative, got {eps}"));
    }
    Ok(second_moment / (second_moment + eps * eps / 12.0))
}

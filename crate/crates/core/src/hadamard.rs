//! Randomized Hadamard rotation and Haar-random orthogonal matrices.

use crate::error::{dim_err, param_err, Result};
use crate::matrix::{dot, Matrix};
use crate::rng::SeededRng;

/// In-place unnormalized fast Walsh–Hadamard transform (Sylvester order).
fn fwht(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let a = v[i];
                let b = v[i + h];
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn check_signs(n: usize, signs: &[f64]) -> Result<()> {
    if !n.is_power_of_two() {
        return dim_err(format!("Hadamard dimension {n} is not a power of two"));
    }
    if signs.len() != n {
        return dim_err(format!("{} signs for dimension {n}", signs.len()));
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return param_err("sign entries must be +1 or -1");
    }
    Ok(())
}

/// `(1/√n)·H_n·diag(signs)·v`.
pub fn hadamard_rotate(v: &[f64], signs: &[f64]) -> Result<Vec<f64>> {
    check_signs(v.len(), signs)?;
    let mut out: Vec<f64> = v.iter().zip(signs).map(|(x, s)| x * s).collect();
    fwht(&mut out);
    let scale = 1.0 / (v.len() as f64).sqrt();
    out.iter_mut().for_each(|x| *x *= scale);
    Ok(out)
}

/// Inverse of [`hadamard_rotate`]: `diag(signs)·Hᵀ·v/√n`.
pub fn hadamard_unrotate(v: &[f64], signs: &[f64]) -> Result<Vec<f64>> {
    check_signs(v.len(), signs)?;
    let mut out = v.to_vec();
    fwht(&mut out);
    let scale = 1.0 / (v.len() as f64).sqrt();
    Ok(out.iter().zip(signs).map(|(x, s)| x * s * scale).collect())
}

/// Shared random-sign Hadamard rotation applied to many vectors.
#[derive(Clone, Debug)]
pub struct RandomHadamard {
    signs: Vec<f64>,
}

impl RandomHadamard {
    pub fn new(n: usize, rng: &mut SeededRng) -> Result<Self> {
        if !n.is_power_of_two() {
            return dim_err(format!("Hadamard dimension {n} is not a power of two"));
        }
        Ok(Self {
            signs: rng.signs(n),
        })
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        hadamard_rotate(v, &self.signs)
    }

    pub fn invert(&self, v: &[f64]) -> Result<Vec<f64>> {
        hadamard_unrotate(v, &self.signs)
    }
}

/// Haar-distributed orthogonal matrix: Gram–Schmidt (two passes) on an iid
/// Gaussian matrix. Columns are orthonormal.
pub fn random_orthogonal(n: usize, rng: &mut SeededRng) -> Result<Matrix> {
    if n == 0 {
        return param_err("orthogonal dimension must be at least 1");
    }
    let mut cols: Vec<Vec<f64>> = (0..n).map(|_| rng.gaussian_vec(n, 1.0)).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj = dot(&done[k], &rest[0]);
                for (x, q) in rest[0].iter_mut().zip(&done[k]) {
                    *x -= proj * q;
                }
            }
        }
        let norm = dot(&cols[j], &cols[j]).sqrt();
        cols[j].iter_mut().for_each(|x| *x /= norm);
    }
    Matrix::from_columns(&cols)
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{JsaError, JsaGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtDecomposition {
    /// Schmidt weights, descending, summing to one.
    pub weights: Vec<f64>,
    /// `K = 1/Σλ²`
    pub k: f64,
}

/// Discretized amplitude `A_ij·√(w_i w_j)`, whose singular values are the
/// Schmidt coefficients under trapezoid quadrature.
pub(crate) fn weighted_matrix(jsa: &JsaGrid) -> DMatrix<f64> {
    let n = jsa.points();
    let s: Vec<f64> = jsa.weights().iter().map(|w| w.sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| jsa.at(i, j) * s[i] * s[j])
}

pub fn schmidt_number(jsa: &JsaGrid) -> Result<SchmidtDecomposition, JsaError> {
    let n = jsa.points();
    let m = weighted_matrix(jsa);
    let sv = m
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or(JsaError::SvdFailed { points: n })?
        .singular_values;
    let mut weights: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(JsaError::ZeroAmplitude);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    weights.sort_by(|a, b| b.total_cmp(a));
    let purity: f64 = weights.iter().map(|w| w * w).sum();
    Ok(SchmidtDecomposition {
        weights,
        k: 1.0 / purity,
    })
}

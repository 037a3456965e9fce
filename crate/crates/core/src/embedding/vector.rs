use super::EmbeddingError;
use crate::types::EmbeddingVector;

const ZERO_NORM: f64 = 1e-12;

/// Cosine similarity clamped to [-1, 1]; identical vectors score exactly 1.
///
/// Exactly symmetric: both the dot product and the norm product are
/// commutative in floating point, so `cosine(u, v) == cosine(v, u)` bitwise.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    cosine_slices(u.values(), v.values())
}

pub fn cosine_slices(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimMismatch { expected: u.len(), actual: v.len() });
    }
    let nu = l2_norm(u);
    let nv = l2_norm(v);
    if nu < ZERO_NORM || nv < ZERO_NORM {
        return Err(EmbeddingError::ZeroVector);
    }
    if u == v {
        return Ok(1.0);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

//! Dense vector helpers shared by every estimator: feature clipping, the
//! ℓ2-ball projection and the two error metrics.

use crate::error::{Error, Result};

/// Norms within this distance of the radius count as inside the ball.
pub const PROJECTION_TOLERANCE: f64 = 1e-12;

fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(j) => Err(Error::InvalidInput(format!(
            "{what} has a non-finite entry at index {j}"
        ))),
        None => Ok(()),
    }
}

#[inline]
pub(crate) fn clip_scalar(x: f64, k: f64) -> f64 {
    x.clamp(-k, k)
}

/// Truncates every coordinate to `[-k, k]`, i.e. `sign(x_j) * min(|x_j|, k)`.
pub fn clip_features(x: &[f64], k: f64) -> Result<Vec<f64>> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "clip level must be positive and finite, got {k}"
        )));
    }
    ensure_finite(x, "feature vector")?;
    Ok(x.iter().map(|&v| clip_scalar(v, k)).collect())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Euclidean projection onto the ball of radius `radius`.
pub fn project_l2(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    project_l2_in_place(&mut out, radius)?;
    Ok(out)
}

pub(crate) fn project_l2_in_place(v: &mut [f64], radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "projection radius must be positive and finite, got {radius}"
        )));
    }
    ensure_finite(v, "vector to project")?;
    let norm = norm2(v);
    if norm > radius + PROJECTION_TOLERANCE {
        let scale = radius / norm;
        v.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(())
}

/// `‖beta_hat - beta_star‖₂`.
pub fn l2_error(beta_hat: &[f64], beta_star: &[f64]) -> Result<f64> {
    if beta_hat.len() != beta_star.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            beta_hat.len(),
            beta_star.len()
        )));
    }
    Ok(beta_hat
        .iter()
        .zip(beta_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Mean absolute residual.
pub fn mae(predictions: &[f64], responses: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidInput("mae of an empty vector".into()));
    }
    if predictions.len() != responses.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            predictions.len(),
            responses.len()
        )));
    }
    let total: f64 = predictions
        .iter()
        .zip(responses)
        .map(|(p, y)| (p - y).abs())
        .sum();
    Ok(total / predictions.len() as f64)
}

//! Private top-`s` selection by repeated noisy argmax ("peeling").
//!
//! Each of the `s` rounds draws a fresh Laplace vector over all coordinates
//! and appends the unselected index maximising `|v_j| + w_j`. The kept
//! values are then perturbed once more with an independent Laplace draw.

use crate::config::PrivacyParams;
use crate::error::{Error, Result};
use crate::sampling::{laplace, RngHandle};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeelingParams {
    pub s: usize,
    pub privacy: PrivacyParams,
    /// Per-coordinate sensitivity of the input vector.
    pub lambda: f64,
}

impl PeelingParams {
    pub fn new(s: usize, privacy: PrivacyParams, lambda: f64) -> Result<Self> {
        let p = Self { s, privacy, lambda };
        p.noise_scale()?;
        Ok(p)
    }

    /// Laplace scale `b = 2λ·sqrt(3·s·ln(1/δ)) / ε`; zero when non-private.
    pub fn noise_scale(&self) -> Result<f64> {
        if self.s == 0 {
            return Err(Error::InvalidConfig("peeling needs s >= 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sensitivity must be non-negative and finite, got {}",
                self.lambda
            )));
        }
        self.privacy.validate()?;
        Ok(match self.privacy {
            PrivacyParams::NonPrivate => 0.0,
            PrivacyParams::Private { epsilon, delta } => {
                2.0 * self.lambda * (3.0 * self.s as f64 * (1.0 / delta).ln()).sqrt() / epsilon
            }
        })
    }
}

/// Output of [`peel`]: the sparse vector and the selected indices in the
/// order they were chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct Peeled {
    pub values: Vec<f64>,
    pub selected: Vec<usize>,
}

pub fn peel(v: &[f64], params: &PeelingParams, rng: &mut RngHandle) -> Result<Peeled> {
    let d = v.len();
    let s = params.s;
    if s > d {
        return Err(Error::InvalidConfig(format!(
            "cannot select {s} coordinates out of {d}"
        )));
    }
    let b = params.noise_scale()?;

    let mut taken = vec![false; d];
    let mut selected = Vec::with_capacity(s);
    for _ in 0..s {
        let mut best: Option<(usize, f64)> = None;
        // noise is drawn for every coordinate, selected or not, to keep the
        // draw count independent of the data
        for j in 0..d {
            let w = laplace(b, rng)?;
            if taken[j] {
                continue;
            }
            let score = v[j].abs() + w;
            // strict comparison: ties go to the lowest index
            if best.is_none_or(|(_, top)| score > top) {
                best = Some((j, score));
            }
        }
        let (j, _) = best.expect("at least one unselected coordinate remains");
        taken[j] = true;
        selected.push(j);
    }

    let mut values = vec![0.0; d];
    for &j in &selected {
        values[j] = v[j] + laplace(b, rng)?;
    }
    Ok(Peeled { values, selected })
}

/// Exact hard thresholding: keeps the `s` largest-magnitude entries, lowest
/// index first among ties. Equivalent to non-private [`peel`].
pub fn hard_threshold(v: &[f64], s: usize) -> Result<Peeled> {
    let params = PeelingParams::new(s, PrivacyParams::NonPrivate, 0.0)?;
    peel(v, &params, &mut RngHandle::new(0, 0))
}

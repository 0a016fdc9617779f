//! Neighbouring-dataset probes of the half-step sensitivity.
//!
//! A probe builds a random fold, replaces one sample by an adversarial one
//! (features far outside the clip range, signs chosen to push every
//! coordinate of the gradient term away from the original sample's term),
//! runs a single half-step from the same iterate on both folds and reports
//! the ℓ∞ distance of the two results next to the sensitivity the estimator
//! feeds into the selection step.

use serde::{Deserialize, Serialize};

use crate::config::EstimatorConfig;
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::estimators::{half_step_sensitivity, loss_for, EstimatorKind};
use crate::losses::{batch_gradient, sample_multiplier, LossKind};
use crate::sampling::{student_t, RngHandle};
use crate::vector::{clip_scalar, project_l2_in_place};

/// Magnitude of adversarial feature coordinates before clipping.
const ADVERSARIAL_MAGNITUDE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub kind: EstimatorKind,
    /// `‖β^{t+0.5}(D) - β^{t+0.5}(D')‖∞`.
    pub deviation: f64,
    /// Sensitivity the estimator passes to the selection step.
    pub bound: f64,
    pub m: usize,
    pub d: usize,
    pub iteration: usize,
}

impl ProbeOutcome {
    pub fn within(&self, bound_scale: f64, tol: f64) -> bool {
        self.deviation <= bound_scale * self.bound + tol
    }

    pub fn ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.deviation / self.bound
        } else if self.deviation == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn prepared_fold(
    fold: &[Sample],
    kind: EstimatorKind,
    cfg: &EstimatorConfig,
) -> Result<Vec<Sample>> {
    if kind != EstimatorKind::DpSlrLite {
        return Ok(fold.to_vec());
    }
    let r = cfg
        .response_clip
        .ok_or_else(|| Error::InvalidConfig("missing field: response_clip".into()))?;
    Ok(fold
        .iter()
        .map(|s| Sample::new(s.features.clone(), s.response.clamp(-r, r)))
        .collect())
}

/// `β - η_t · ∇` on one fold, exactly as the estimator computes it.
pub fn half_step(
    fold: &[Sample],
    beta: &[f64],
    kind: EstimatorKind,
    cfg: &EstimatorConfig,
    t: usize,
) -> Result<Vec<f64>> {
    let fold = prepared_fold(fold, kind, cfg)?;
    let grad = batch_gradient(&fold, beta, loss_for(kind, cfg)?, cfg.clip)?;
    let eta = cfg.schedule.step(t);
    Ok(beta.iter().zip(&grad).map(|(b, g)| b - eta * g).collect())
}

pub fn half_step_deviation(
    fold_a: &[Sample],
    fold_b: &[Sample],
    beta: &[f64],
    kind: EstimatorKind,
    cfg: &EstimatorConfig,
    t: usize,
) -> Result<f64> {
    if fold_a.len() != fold_b.len() {
        return Err(Error::InvalidInput(
            "neighbouring folds must have equal size".into(),
        ));
    }
    let a = half_step(fold_a, beta, kind, cfg, t)?;
    let b = half_step(fold_b, beta, kind, cfg, t)?;
    Ok(a.iter()
        .zip(&b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())))
}

/// The replacement sample that maximises every coordinate of
/// `|g(original) - g(replacement)|` for the given loss and iterate.
fn adversarial_replacement(
    original: &Sample,
    beta: &[f64],
    loss: LossKind,
    clip: Option<f64>,
) -> Sample {
    let c = sample_multiplier(original, beta, loss, clip);
    // the replacement's multiplier is made positive, so each coordinate
    // takes the sign opposite to the original term
    let features: Vec<f64> = original
        .features
        .iter()
        .map(|x| {
            let term = c * clip.map_or(*x, |k| clip_scalar(*x, k));
            if term > 0.0 {
                -ADVERSARIAL_MAGNITUDE
            } else {
                ADVERSARIAL_MAGNITUDE
            }
        })
        .collect();
    let clipped_fit: f64 = features
        .iter()
        .zip(beta)
        .map(|(x, b)| clip.map_or(*x, |k| clip_scalar(*x, k)) * b)
        .sum();
    let raw_fit: f64 = features.iter().zip(beta).map(|(x, b)| x * b).sum();
    let response = match loss {
        // residual y - x̃ᵀβ far below -τ: multiplier -ℓ'(r) = +τ
        LossKind::Huber { tau } => clipped_fit - tau - 1.0,
        LossKind::AbsoluteL1 { sign_on_clipped } => {
            let fit = if sign_on_clipped {
                clipped_fit
            } else {
                raw_fit
            };
            fit - 1.0f64.max(fit.abs() * 1e-6)
        }
        // the response is clipped to -R inside the estimator
        LossKind::Squared => -ADVERSARIAL_MAGNITUDE,
    };
    Sample::new(features, response)
}

fn random_beta(d: usize, s: usize, radius: f64, rng: &mut RngHandle) -> Result<Vec<f64>> {
    let mut beta = vec![0.0; d];
    for j in rand::seq::index::sample(rng.rng_mut(), d, s.min(d)).iter() {
        beta[j] = 2.0 * rng.standard_normal();
    }
    project_l2_in_place(&mut beta, radius)?;
    Ok(beta)
}

/// Random fold size, dimension and iteration derived from `seed`, then a
/// single adversarial-replacement probe. The fold is `m` Gaussian samples
/// with standard deviation 2 (so clipping is active) and heavy-tailed
/// responses.
pub fn sensitivity_probe(
    kind: EstimatorKind,
    cfg: &EstimatorConfig,
    seed: u64,
) -> Result<ProbeOutcome> {
    cfg.validate()?;
    let mut rng = RngHandle::new(seed, 0);
    let m = 1 + (rng.open01() * 40.0) as usize;
    let d = cfg.sparsity.max(2) + (rng.open01() * 40.0) as usize;
    let t = (rng.open01() * cfg.iterations as f64) as usize;
    let loss = loss_for(kind, cfg)?;

    let fold: Vec<Sample> = (0..m)
        .map(|_| {
            let x = (0..d).map(|_| 2.0 * rng.standard_normal()).collect();
            let y = 3.0 * student_t(1.75, &mut rng)?;
            Ok(Sample::new(x, y))
        })
        .collect::<Result<_>>()?;
    let beta = random_beta(d, cfg.sparsity, cfg.radius, &mut rng)?;
    let idx = ((rng.open01() * m as f64) as usize).min(m - 1);

    let mut neighbour = fold.clone();
    neighbour[idx] = adversarial_replacement(&fold[idx], &beta, loss, cfg.clip);

    Ok(ProbeOutcome {
        kind,
        deviation: half_step_deviation(&fold, &neighbour, &beta, kind, cfg, t)?,
        bound: half_step_sensitivity(kind, cfg, t, m)?,
        m,
        d,
        iteration: t,
    })
}

/// Probe with two identical folds; the deviation must be zero.
pub fn identical_probe(
    kind: EstimatorKind,
    cfg: &EstimatorConfig,
    seed: u64,
) -> Result<ProbeOutcome> {
    let mut rng = RngHandle::new(seed, 0);
    let (m, d) = (10, cfg.sparsity.max(2) + 5);
    let fold: Vec<Sample> = (0..m)
        .map(|_| {
            let x = (0..d).map(|_| 2.0 * rng.standard_normal()).collect();
            Sample::new(x, rng.standard_normal())
        })
        .collect();
    let beta = random_beta(d, cfg.sparsity, cfg.radius, &mut rng)?;
    Ok(ProbeOutcome {
        kind,
        deviation: half_step_deviation(&fold, &fold, &beta, kind, cfg, 0)?,
        bound: half_step_sensitivity(kind, cfg, 0, m)?,
        m,
        d,
        iteration: 0,
    })
}

/// Absolute-loss instance that attains `2·η_t·K/m`: the differing sample
/// has every feature beyond the clip level in both datasets and only its
/// response changes, flipping the sign of its residual.
pub fn extremal_l1_probe(
    cfg: &EstimatorConfig,
    m: usize,
    d: usize,
    t: usize,
) -> Result<ProbeOutcome> {
    cfg.validate()?;
    let k = cfg
        .clip
        .ok_or_else(|| Error::InvalidConfig("extremal probe needs a clip level".into()))?;
    if m == 0 || d == 0 {
        return Err(Error::InvalidInput("m and d must be positive".into()));
    }
    let mut rng = RngHandle::new(0, 0);
    let mut fold: Vec<Sample> = (0..m)
        .map(|_| {
            let x = (0..d).map(|_| rng.standard_normal()).collect();
            Sample::new(x, rng.standard_normal())
        })
        .collect();
    let beta = vec![0.0; d];
    let spiky: Vec<f64> = (0..d)
        .map(|j| if j % 2 == 0 { 2.0 * k } else { -2.0 * k })
        .collect();
    fold[0] = Sample::new(spiky.clone(), -1.0);
    let mut neighbour = fold.clone();
    neighbour[0] = Sample::new(spiky, 1.0);

    Ok(ProbeOutcome {
        kind: EstimatorKind::DpIhtL,
        deviation: half_step_deviation(&fold, &neighbour, &beta, EstimatorKind::DpIhtL, cfg, t)?,
        bound: half_step_sensitivity(EstimatorKind::DpIhtL, cfg, t, m)?,
        m,
        d,
        iteration: t,
    })
}

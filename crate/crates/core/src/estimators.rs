//! The four iterative hard thresholding estimators.
//!
//! All of them share one loop: clip features, split the data into `T`
//! folds, and at iteration `t` take a gradient half-step on fold `t`,
//! select `s` coordinates with [`peel`] and project onto the ℓ2 ball.
//! They differ in the loss and in the sensitivity handed to [`peel`]:
//!
//! | estimator        | loss                  | sensitivity λ_t           |
//! |------------------|-----------------------|---------------------------|
//! | `DpIhtH`         | Huber(τ)              | η_t·τ·K / m               |
//! | `DpIhtL`         | absolute              | 2·η_t·K / m               |
//! | `AdaHuberLite`   | Huber(τ), non-private | –                         |
//! | `DpSlrLite`      | squared, `y` clipped  | η_t·K·(R + K·L) / m       |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{EstimatorConfig, PrivacyParams};
use crate::data::{fold_size, Dataset, Sample};
use crate::error::{Error, Result};
use crate::losses::{batch_gradient, LossKind};
use crate::peeling::{peel, PeelingParams};
use crate::sampling::RngHandle;
use crate::vector::{l2_error, norm_inf, project_l2_in_place};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    DpIhtH,
    DpIhtL,
    #[serde(rename = "ada-huber")]
    AdaHuberLite,
    #[serde(rename = "dp-slr")]
    DpSlrLite,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::DpIhtH,
        EstimatorKind::DpIhtL,
        EstimatorKind::AdaHuberLite,
        EstimatorKind::DpSlrLite,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::DpIhtH => "dp-iht-h",
            EstimatorKind::DpIhtL => "dp-iht-l",
            EstimatorKind::AdaHuberLite => "ada-huber",
            EstimatorKind::DpSlrLite => "dp-slr",
        }
    }

    /// Stable numeric tag used when deriving per-estimator seeds.
    pub fn tag(&self) -> u64 {
        match self {
            EstimatorKind::DpIhtH => 1,
            EstimatorKind::DpIhtL => 2,
            EstimatorKind::AdaHuberLite => 3,
            EstimatorKind::DpSlrLite => 4,
        }
    }

    pub fn is_private(&self) -> bool {
        !matches!(self, EstimatorKind::AdaHuberLite)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown estimator '{s}' (expected dp-iht-h, dp-iht-l, ada-huber or dp-slr)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub beta: Vec<f64>,
    /// Sorted indices of the selected coordinates.
    pub support: Vec<usize>,
    /// ℓ2 error after every iteration, when a reference β* was supplied.
    pub trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub estimate: Estimate,
    pub iterations_run: usize,
    /// `‖η_t ∇‖∞` of every half-step.
    pub half_step_linf_trace: Vec<f64>,
    /// Number of RNG streams handed to the selection step (one per iteration).
    pub rng_streams: usize,
}

/// The loss an estimator kind uses under `cfg`.
pub fn loss_for(kind: EstimatorKind, cfg: &EstimatorConfig) -> Result<LossKind> {
    Ok(match kind {
        EstimatorKind::DpIhtH | EstimatorKind::AdaHuberLite => LossKind::Huber {
            tau: cfg
                .tau
                .ok_or_else(|| Error::InvalidConfig("missing field: tau".into()))?,
        },
        EstimatorKind::DpIhtL => LossKind::AbsoluteL1 {
            sign_on_clipped: cfg.sign_on_clipped,
        },
        EstimatorKind::DpSlrLite => LossKind::Squared,
    })
}

fn response_clip(cfg: &EstimatorConfig) -> Result<f64> {
    cfg.response_clip
        .ok_or_else(|| Error::InvalidConfig("missing field: response_clip".into()))
}

/// The per-coordinate sensitivity handed to the selection step at
/// iteration `t` with folds of size `m`.
pub fn half_step_sensitivity(
    kind: EstimatorKind,
    cfg: &EstimatorConfig,
    t: usize,
    m: usize,
) -> Result<f64> {
    let eta = cfg.schedule.step(t);
    let m = m as f64;
    let k = match cfg.clip {
        Some(k) => k,
        None if kind.is_private() => {
            return Err(Error::InvalidConfig(
                "private estimators need a finite clip level".into(),
            ))
        }
        None => f64::INFINITY,
    };
    Ok(match kind {
        EstimatorKind::DpIhtH | EstimatorKind::AdaHuberLite => {
            let tau = cfg
                .tau
                .ok_or_else(|| Error::InvalidConfig("missing field: tau".into()))?;
            eta * tau * k / m
        }
        EstimatorKind::DpIhtL => 2.0 * eta * k / m,
        // |x̃ᵀβ - Π_R(y)| is bounded by R + K·L in this simplified form
        EstimatorKind::DpSlrLite => eta * k * (response_clip(cfg)? + k * cfg.radius) / m,
    })
}

fn clip_responses(ds: &Dataset, r: f64) -> Result<Dataset> {
    let samples = ds
        .samples()
        .iter()
        .map(|s| Sample::new(s.features.clone(), s.response.clamp(-r, r)))
        .collect();
    Dataset::new(samples, ds.d())
}

/// Runs `kind` on `ds`. `reference` (the true β*, when known) enables the
/// per-iteration error trace.
pub fn fit(
    kind: EstimatorKind,
    ds: &Dataset,
    cfg: &EstimatorConfig,
    privacy: PrivacyParams,
    reference: Option<&[f64]>,
) -> Result<FitReport> {
    cfg.validate_for(ds.n(), ds.d())?;
    privacy.validate()?;
    if let Some(r) = reference {
        if r.len() != ds.d() {
            return Err(Error::InvalidInput(format!(
                "reference has length {}, dataset dimension is {}",
                r.len(),
                ds.d()
            )));
        }
    }
    let privacy = if kind.is_private() {
        privacy
    } else {
        PrivacyParams::NonPrivate
    };
    if privacy.is_private() && cfg.clip.is_none() {
        return Err(Error::InvalidConfig(
            "private estimators need a finite clip level".into(),
        ));
    }
    let loss = loss_for(kind, cfg)?;

    let clipped;
    let data = if kind == EstimatorKind::DpSlrLite {
        clipped = clip_responses(ds, response_clip(cfg)?)?;
        &clipped
    } else {
        ds
    };

    let d = ds.d();
    let m = fold_size(ds.n(), cfg.iterations)?;
    let mut beta = vec![0.0; d];
    let mut selected = Vec::new();
    let mut linf_trace = Vec::with_capacity(cfg.iterations);
    let mut trace = reference.map(|_| Vec::with_capacity(cfg.iterations));

    for t in 0..cfg.iterations {
        let fold = &data.samples()[t * m..(t + 1) * m];
        let eta = cfg.schedule.step(t);
        let grad = batch_gradient(fold, &beta, loss, cfg.clip)?;
        let mut half = beta.clone();
        for (b, g) in half.iter_mut().zip(&grad) {
            *b -= eta * g;
        }
        if half.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalFailure {
                iteration: t,
                detail: "non-finite gradient step".into(),
            });
        }
        linf_trace.push(eta * norm_inf(&grad));

        let lambda = if privacy.is_private() {
            half_step_sensitivity(kind, cfg, t, m)?
        } else {
            0.0
        };
        let params = PeelingParams::new(cfg.sparsity, privacy, lambda)?;
        let mut rng = RngHandle::new(cfg.seed, t as u64);
        let peeled = peel(&half, &params, &mut rng)?;
        beta = peeled.values;
        selected = peeled.selected;
        project_l2_in_place(&mut beta, cfg.radius).map_err(|_| Error::NumericalFailure {
            iteration: t,
            detail: "non-finite iterate after selection".into(),
        })?;

        if let (Some(tr), Some(r)) = (trace.as_mut(), reference) {
            tr.push(l2_error(&beta, r)?);
        }
    }

    selected.sort_unstable();
    Ok(FitReport {
        estimate: Estimate {
            beta,
            support: selected,
            trace,
        },
        iterations_run: cfg.iterations,
        half_step_linf_trace: linf_trace,
        rng_streams: cfg.iterations,
    })
}

/// Private IHT with the Huber loss.
pub fn fit_dp_iht_h(
    ds: &Dataset,
    cfg: &EstimatorConfig,
    privacy: PrivacyParams,
) -> Result<FitReport> {
    fit(EstimatorKind::DpIhtH, ds, cfg, privacy, None)
}

/// Private IHT with the absolute loss. Pair with a two-phase schedule for
/// the decaying-then-constant step sizes.
pub fn fit_dp_iht_l(
    ds: &Dataset,
    cfg: &EstimatorConfig,
    privacy: PrivacyParams,
) -> Result<FitReport> {
    fit(EstimatorKind::DpIhtL, ds, cfg, privacy, None)
}

/// Non-private Huber IHT with exact hard thresholding.
pub fn fit_ada_huber_lite(ds: &Dataset, cfg: &EstimatorConfig) -> Result<FitReport> {
    fit(
        EstimatorKind::AdaHuberLite,
        ds,
        cfg,
        PrivacyParams::NonPrivate,
        None,
    )
}

/// Private IHT with the squared loss on responses clipped to `[-R, R]`.
pub fn fit_dp_slr_lite(
    ds: &Dataset,
    cfg: &EstimatorConfig,
    privacy: PrivacyParams,
    response_clip: f64,
) -> Result<FitReport> {
    let cfg = EstimatorConfig {
        response_clip: Some(response_clip),
        ..cfg.clone()
    };
    fit(EstimatorKind::DpSlrLite, ds, &cfg, privacy, None)
}

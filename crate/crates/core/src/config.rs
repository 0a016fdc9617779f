//! Privacy budget, step-size schedules and the estimator configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Privacy budget. `NonPrivate` turns every noise draw into an exact zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PrivacyParams {
    NonPrivate,
    Private { epsilon: f64, delta: f64 },
}

impl PrivacyParams {
    pub fn private(epsilon: f64, delta: f64) -> Result<Self> {
        let p = PrivacyParams::Private { epsilon, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if let PrivacyParams::Private { epsilon, delta } = *self {
            if !(epsilon > 0.0) || !epsilon.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "epsilon must be positive and finite, got {epsilon}"
                )));
            }
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "delta must lie in (0, 1), got {delta}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_private(&self) -> bool {
        matches!(self, PrivacyParams::Private { .. })
    }
}

/// Step size as a function of the iteration index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant {
        eta: f64,
    },
    /// Geometric decay `eta0 * (1 - decay)^t` while `t < switch_iter`, then
    /// the constant `eta_const`.
    TwoPhase {
        eta0: f64,
        decay: f64,
        switch_iter: usize,
        eta_const: f64,
    },
}

impl StepSchedule {
    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::TwoPhase {
                eta0,
                decay,
                switch_iter,
                eta_const,
            } => {
                if t < switch_iter {
                    eta0 * (1.0 - decay).powi(t as i32)
                } else {
                    eta_const
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match *self {
            StepSchedule::Constant { eta } => positive("eta", eta),
            StepSchedule::TwoPhase {
                eta0,
                decay,
                eta_const,
                ..
            } => {
                positive("eta0", eta0)?;
                positive("eta_const", eta_const)?;
                if !(decay > 0.0 && decay < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "decay must lie in (0, 1), got {decay}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Everything an iterative hard thresholding run is parameterised by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Target sparsity `s`.
    pub sparsity: usize,
    /// Number of iterations `T`; the data is split into this many folds.
    pub iterations: usize,
    /// Feature clip level `K`; `None` leaves features unclipped, which is
    /// only accepted for non-private fits.
    pub clip: Option<f64>,
    /// Radius `L` of the ℓ2 ball the iterates are projected onto.
    pub radius: f64,
    /// Huber parameter. Required by the Huber-loss estimators.
    pub tau: Option<f64>,
    pub schedule: StepSchedule,
    pub seed: u64,
    /// Evaluate the ℓ1 sign on clipped rather than raw features.
    #[serde(default)]
    pub sign_on_clipped: bool,
    /// Response clip level `R` of the squared-loss baseline.
    #[serde(default)]
    pub response_clip: Option<f64>,
}

impl EstimatorConfig {
    /// Checks the invariants that do not depend on a dataset.
    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::InvalidConfig("sparsity must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if let Some(k) = self.clip {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "clip must be positive, got {k}"
                )));
            }
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "tau must be positive, got {tau}"
                )));
            }
        }
        if let Some(r) = self.response_clip {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "response_clip must be non-negative, got {r}"
                )));
            }
        }
        self.schedule.validate()
    }

    /// Checks the invariants against the dataset shape as well.
    pub fn validate_for(&self, n: usize, d: usize) -> Result<()> {
        self.validate()?;
        if self.sparsity > d {
            return Err(Error::InvalidConfig(format!(
                "sparsity {} exceeds dimension {d}",
                self.sparsity
            )));
        }
        if self.iterations > n {
            return Err(Error::InvalidConfig(format!(
                "iterations {} exceed sample count {n}",
                self.iterations
            )));
        }
        Ok(())
    }
}

//! Experiment configuration: one JSON document describing the synthetic
//! model, the estimator knobs, the privacy budget and, optionally, a sweep or
//! a real-data run.
//!
//! Configs are read in two steps. [`RawConfig`] accepts any subset of the
//! fields; [`RawConfig::resolve`] fills defaults, checks every field and
//! reports all failures at once. The resolved [`ExperimentConfig`] serialises
//! to the same field names, so an echoed config reloads to itself.

use serde::{Deserialize, Serialize};

use crate::config::{EstimatorConfig, PrivacyParams, StepSchedule};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::sampling::SyntheticConfig;

pub const DEFAULT_ETA: f64 = 0.01;
pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_S_STAR: usize = 5;
pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_ZETA: f64 = 1.0;
pub const DEFAULT_ITERATIONS: usize = 10;
pub const DEFAULT_RADIUS: f64 = 5.0;
pub const DEFAULT_RESPONSE_CLIP: f64 = 5.0;
pub const DEFAULT_HOLDOUT_N: usize = 500;
pub const DEFAULT_REPEATS: usize = 20;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Exponent of the default `δ = n^{-1.1}`.
const DELTA_EXPONENT: f64 = 1.1;

/// Which field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    N,
    D,
    SStar,
    Epsilon,
    Zeta,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::D => "d",
            SweepAxis::SStar => "s_star",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Zeta => "zeta",
        }
    }

    fn is_integral(&self) -> bool {
        matches!(self, SweepAxis::N | SweepAxis::D | SweepAxis::SStar)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_sweep_estimators")]
    pub estimators: Vec<EstimatorKind>,
    /// Record wall-clock time per fit. Off by default so that results.csv
    /// is byte-identical across runs.
    #[serde(default)]
    pub record_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealSettings {
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Estimator whose fit stands in for the unknown β*.
    #[serde(default = "default_proxy")]
    pub proxy: EstimatorKind,
    #[serde(default = "default_real_estimators")]
    pub estimators: Vec<EstimatorKind>,
}

impl Default for RealSettings {
    fn default() -> Self {
        Self {
            standardize: true,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            proxy: EstimatorKind::AdaHuberLite,
            estimators: default_real_estimators(),
        }
    }
}

fn default_repeats() -> usize {
    DEFAULT_REPEATS
}

fn default_sweep_estimators() -> Vec<EstimatorKind> {
    vec![
        EstimatorKind::DpIhtH,
        EstimatorKind::DpIhtL,
        EstimatorKind::DpSlrLite,
    ]
}

fn default_real_estimators() -> Vec<EstimatorKind> {
    EstimatorKind::ALL.to_vec()
}

fn default_true() -> bool {
    true
}

fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

fn default_proxy() -> EstimatorKind {
    EstimatorKind::AdaHuberLite
}

/// A fully resolved experiment. `None` in `sparsity`, `clip` and `delta`
/// means "derive from the current point": `s_star`, `ln d` and `n^{-1.1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub s_star: usize,
    pub zeta: f64,
    pub beta_scale: f64,
    pub noise_scale: f64,
    /// Size of the fresh sample used for held-out MAE on synthetic runs.
    pub holdout_n: usize,
    pub sparsity: Option<usize>,
    pub iterations: usize,
    pub clip: Option<f64>,
    pub radius: f64,
    pub tau: Option<f64>,
    pub eta: f64,
    /// Step schedule of the absolute-loss estimator; `None` uses `eta`.
    pub l1_schedule: Option<StepSchedule>,
    pub sign_on_clipped: bool,
    pub response_clip: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub seed: u64,
    pub sweep: Option<SweepSettings>,
    pub real: Option<RealSettings>,
}

/// Any subset of the [`ExperimentConfig`] fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub s_star: Option<usize>,
    pub zeta: Option<f64>,
    pub beta_scale: Option<f64>,
    pub noise_scale: Option<f64>,
    pub holdout_n: Option<usize>,
    pub sparsity: Option<usize>,
    pub iterations: Option<usize>,
    pub clip: Option<f64>,
    pub radius: Option<f64>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub l1_schedule: Option<StepSchedule>,
    pub sign_on_clipped: Option<bool>,
    pub response_clip: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub sweep: Option<SweepSettings>,
    pub real: Option<RealSettings>,
}

/// What to do when `tau` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauDefault {
    /// Use [`DEFAULT_TAU`].
    Fill,
    /// Report `tau` as a missing field.
    Require,
    /// Leave it unset.
    Omit,
}

impl RawConfig {
    /// Fills defaults and validates. Every failing field is listed in the
    /// returned error.
    pub fn resolve(self, tau_default: TauDefault) -> Result<ExperimentConfig> {
        let mut problems = Vec::new();
        if self.n.is_none() {
            problems.push("n: missing field".to_string());
        }
        if self.d.is_none() {
            problems.push("d: missing field".to_string());
        }
        let tau = match (self.tau, tau_default) {
            (Some(t), _) => Some(t),
            (None, TauDefault::Fill) => Some(DEFAULT_TAU),
            (None, TauDefault::Require) => {
                problems.push("tau: missing field".to_string());
                None
            }
            (None, TauDefault::Omit) => None,
        };
        let cfg = ExperimentConfig {
            n: self.n.unwrap_or(0),
            d: self.d.unwrap_or(0),
            s_star: self.s_star.unwrap_or(DEFAULT_S_STAR),
            zeta: self.zeta.unwrap_or(DEFAULT_ZETA),
            beta_scale: self.beta_scale.unwrap_or(1.0),
            noise_scale: self.noise_scale.unwrap_or(1.0),
            holdout_n: self.holdout_n.unwrap_or(DEFAULT_HOLDOUT_N),
            sparsity: self.sparsity,
            iterations: self.iterations.unwrap_or(DEFAULT_ITERATIONS),
            clip: self.clip,
            radius: self.radius.unwrap_or(DEFAULT_RADIUS),
            tau,
            eta: self.eta.unwrap_or(DEFAULT_ETA),
            l1_schedule: self.l1_schedule,
            sign_on_clipped: self.sign_on_clipped.unwrap_or(false),
            response_clip: self.response_clip.unwrap_or(DEFAULT_RESPONSE_CLIP),
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            delta: self.delta,
            seed: self.seed.unwrap_or(0),
            sweep: self.sweep,
            real: self.real,
        };
        problems.extend(cfg.problems(self.n.is_some() && self.d.is_some()));
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

impl From<ExperimentConfig> for RawConfig {
    fn from(c: ExperimentConfig) -> Self {
        RawConfig {
            n: Some(c.n),
            d: Some(c.d),
            s_star: Some(c.s_star),
            zeta: Some(c.zeta),
            beta_scale: Some(c.beta_scale),
            noise_scale: Some(c.noise_scale),
            holdout_n: Some(c.holdout_n),
            sparsity: c.sparsity,
            iterations: Some(c.iterations),
            clip: c.clip,
            radius: Some(c.radius),
            tau: c.tau,
            eta: Some(c.eta),
            l1_schedule: c.l1_schedule,
            sign_on_clipped: Some(c.sign_on_clipped),
            response_clip: Some(c.response_clip),
            epsilon: Some(c.epsilon),
            delta: c.delta,
            seed: Some(c.seed),
            sweep: c.sweep,
            real: c.real,
        }
    }
}

fn positive(problems: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0) || !v.is_finite() {
        problems.push(format!("{name}: must be positive and finite, got {v}"));
    }
}

impl ExperimentConfig {
    /// Every invariant violation, as `field: reason` strings. Shape checks
    /// that need `n` and `d` run only when `shape_known`.
    fn problems(&self, shape_known: bool) -> Vec<String> {
        let mut p = Vec::new();
        if shape_known {
            if self.n == 0 {
                p.push("n: must be at least 1".into());
            }
            if self.d == 0 {
                p.push("d: must be at least 1".into());
            }
            if self.s_star > self.d {
                p.push(format!("s_star: {} exceeds d {}", self.s_star, self.d));
            }
            if self.sparsity.is_some_and(|s| s > self.d) {
                p.push(format!("sparsity: exceeds d {}", self.d));
            }
        }
        if self.s_star == 0 {
            p.push("s_star: must be at least 1".into());
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            p.push(format!("zeta: must lie in (0, 1], got {}", self.zeta));
        }
        positive(&mut p, "beta_scale", self.beta_scale);
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            p.push(format!(
                "noise_scale: must be non-negative, got {}",
                self.noise_scale
            ));
        }
        if self.holdout_n == 0 {
            p.push("holdout_n: must be at least 1".into());
        }
        if self.sparsity == Some(0) {
            p.push("sparsity: must be at least 1".into());
        }
        if self.iterations == 0 {
            p.push("iterations: must be at least 1".into());
        }
        if let Some(k) = self.clip {
            positive(&mut p, "clip", k);
        }
        positive(&mut p, "radius", self.radius);
        if let Some(t) = self.tau {
            positive(&mut p, "tau", t);
        }
        positive(&mut p, "eta", self.eta);
        if let Some(s) = self.l1_schedule {
            if let Err(e) = s.validate() {
                p.push(format!("l1_schedule: {e}"));
            }
        }
        if !(self.response_clip >= 0.0) || !self.response_clip.is_finite() {
            p.push(format!(
                "response_clip: must be non-negative, got {}",
                self.response_clip
            ));
        }
        positive(&mut p, "epsilon", self.epsilon);
        if let Some(delta) = self.delta {
            if !(delta > 0.0 && delta < 1.0) {
                p.push(format!("delta: must lie in (0, 1), got {delta}"));
            }
        }
        if let Some(sw) = &self.sweep {
            p.extend(sweep_problems(sw));
        }
        if let Some(r) = &self.real {
            if !(r.train_fraction > 0.0 && r.train_fraction < 1.0) {
                p.push(format!(
                    "real.train_fraction: must lie in (0, 1), got {}",
                    r.train_fraction
                ));
            }
            if r.estimators.is_empty() {
                p.push("real.estimators: must not be empty".into());
            }
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems(true);
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(p.join("; ")))
        }
    }

    /// Copy with the swept field set to `value`.
    pub fn at(&self, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
        if axis.is_integral() && (value.fract() != 0.0 || value < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "{} values must be positive integers, got {value}",
                axis.name()
            )));
        }
        let mut c = self.clone();
        match axis {
            SweepAxis::N => c.n = value as usize,
            SweepAxis::D => c.d = value as usize,
            SweepAxis::SStar => c.s_star = value as usize,
            SweepAxis::Epsilon => c.epsilon = value,
            SweepAxis::Zeta => c.zeta = value,
        }
        c.validate()?;
        Ok(c)
    }

    pub fn effective_clip(&self) -> f64 {
        self.clip.unwrap_or_else(|| (self.d as f64).ln())
    }

    pub fn effective_delta(&self) -> f64 {
        self.delta
            .unwrap_or_else(|| (self.n as f64).powf(-DELTA_EXPONENT))
    }

    pub fn effective_sparsity(&self) -> usize {
        self.sparsity.unwrap_or(self.s_star)
    }

    pub fn privacy(&self) -> Result<PrivacyParams> {
        PrivacyParams::private(self.epsilon, self.effective_delta())
    }

    pub fn synthetic(&self, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n: self.n,
            d: self.d,
            s_star: self.s_star,
            zeta: self.zeta,
            beta_scale: self.beta_scale,
            noise_scale: self.noise_scale,
            seed,
        }
    }

    /// Estimator settings for `kind` at this point. A clip level of `ln d`
    /// is below zero for `d = 1`, so it is floored at a small positive value.
    pub fn estimator_config(&self, kind: EstimatorKind, seed: u64) -> EstimatorConfig {
        let schedule = match (kind, self.l1_schedule) {
            (EstimatorKind::DpIhtL, Some(s)) => s,
            _ => StepSchedule::Constant { eta: self.eta },
        };
        EstimatorConfig {
            sparsity: self.effective_sparsity(),
            iterations: self.iterations,
            clip: Some(self.effective_clip().max(f64::EPSILON)),
            radius: self.radius,
            tau: self.tau,
            schedule,
            seed,
            sign_on_clipped: self.sign_on_clipped,
            response_clip: Some(self.response_clip),
        }
    }
}

fn sweep_problems(sw: &SweepSettings) -> Vec<String> {
    let mut p = Vec::new();
    if sw.values.is_empty() {
        p.push("sweep.values: must not be empty".into());
    }
    if sw.values.iter().any(|v| !v.is_finite()) {
        p.push("sweep.values: must be finite".into());
    }
    if sw.values.windows(2).any(|w| !(w[0] < w[1])) {
        p.push("sweep.values: must be strictly increasing".into());
    }
    if sw.axis.is_integral() && sw.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        p.push(format!(
            "sweep.values: {} values must be positive integers",
            sw.axis.name()
        ));
    }
    if sw.repeats == 0 {
        p.push("sweep.repeats: must be at least 1".into());
    }
    if sw.estimators.is_empty() {
        p.push("sweep.estimators: must not be empty".into());
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(n: usize, d: usize) -> RawConfig {
        RawConfig {
            n: Some(n),
            d: Some(d),
            ..RawConfig::default()
        }
    }

    #[test]
    fn defaults_from_empty_config() {
        let raw: RawConfig = serde_json::from_str("{}").unwrap();
        let c = RawConfig {
            n: Some(2000),
            d: Some(1000),
            ..raw
        }
        .resolve(TauDefault::Fill)
        .unwrap();
        assert_eq!(c.eta, 0.01);
        assert_eq!(c.tau, Some(1.0));
        assert!((c.effective_clip() - 6.907755278982137).abs() < 1e-12);
        assert_eq!(c.effective_delta(), 2000f64.powf(-1.1));
        assert_eq!(c.s_star, 5);
        assert_eq!(c.epsilon, 0.5);
        assert_eq!(c.effective_sparsity(), 5);
    }

    #[test]
    fn every_failed_field_is_listed() {
        let raw = RawConfig {
            delta: Some(1.5),
            eta: Some(-1.0),
            zeta: Some(2.0),
            ..RawConfig::default()
        };
        let msg = raw.resolve(TauDefault::Fill).unwrap_err().to_string();
        for field in ["n:", "d:", "delta:", "eta:", "zeta:"] {
            assert!(msg.contains(field), "{field} missing from '{msg}'");
        }
    }

    #[test]
    fn delta_out_of_range_is_rejected() {
        let raw = RawConfig {
            delta: Some(1.5),
            ..shape(100, 10)
        };
        assert!(raw.resolve(TauDefault::Fill).is_err());
    }

    #[test]
    fn tau_can_be_required() {
        let msg = shape(100, 10)
            .resolve(TauDefault::Require)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("tau: missing field"), "{msg}");
        let c = shape(100, 10).resolve(TauDefault::Omit).unwrap();
        assert_eq!(c.tau, None);
        let c = shape(100, 10).resolve(TauDefault::Fill).unwrap();
        assert_eq!(c.tau, Some(DEFAULT_TAU));
    }

    #[test]
    fn echo_reload_round_trip() {
        let raw: RawConfig = serde_json::from_str(
            r#"{"n": 500, "d": 40, "l1_schedule": {"kind": "two_phase", "eta0": 0.1,
                "decay": 0.05, "switch_iter": 5, "eta_const": 0.01},
                "sweep": {"axis": "epsilon", "values": [0.5, 1.0], "repeats": 2}}"#,
        )
        .unwrap();
        let c = raw.resolve(TauDefault::Fill).unwrap();
        let echoed = serde_json::to_string_pretty(&c).unwrap();
        let back: RawConfig = serde_json::from_str(&echoed).unwrap();
        assert_eq!(back.resolve(TauDefault::Omit).unwrap(), c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RawConfig>(r#"{"n": 5, "bogus": 1}"#).is_err());
    }

    #[test]
    fn sweep_values_must_increase() {
        let raw = RawConfig {
            sweep: Some(SweepSettings {
                axis: SweepAxis::N,
                values: vec![1000.0, 500.0],
                repeats: 0,
                estimators: vec![],
                record_timing: false,
            }),
            ..shape(100, 10)
        };
        let msg = raw.resolve(TauDefault::Fill).unwrap_err().to_string();
        assert!(msg.contains("strictly increasing"));
        assert!(msg.contains("repeats"));
        assert!(msg.contains("estimators"));
    }

    #[test]
    fn axis_points() {
        let c = shape(100, 10).resolve(TauDefault::Fill).unwrap();
        assert_eq!(c.at(SweepAxis::N, 400.0).unwrap().n, 400);
        assert_eq!(c.at(SweepAxis::Epsilon, 2.0).unwrap().epsilon, 2.0);
        assert!(c.at(SweepAxis::N, 2.5).is_err());
        assert!(c.at(SweepAxis::SStar, 11.0).is_err());
        assert_eq!(
            c.at(SweepAxis::N, 400.0).unwrap().effective_delta(),
            400f64.powf(-1.1)
        );
    }

    #[test]
    fn l1_schedule_only_applies_to_absolute_loss() {
        let two_phase = StepSchedule::TwoPhase {
            eta0: 0.1,
            decay: 0.1,
            switch_iter: 5,
            eta_const: 0.01,
        };
        let c = RawConfig {
            l1_schedule: Some(two_phase),
            ..shape(100, 10)
        }
        .resolve(TauDefault::Fill)
        .unwrap();
        assert_eq!(
            c.estimator_config(EstimatorKind::DpIhtL, 0).schedule,
            two_phase
        );
        assert_eq!(
            c.estimator_config(EstimatorKind::DpIhtH, 0).schedule,
            StepSchedule::Constant { eta: 0.01 }
        );
    }
}

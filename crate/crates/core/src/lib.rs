//! Differentially private iterative hard thresholding for sparse linear
//! regression with heavy-tailed responses.
//!
//! The crate provides the Huber-loss and absolute-loss private estimators,
//! the noisy top-`s` selection they share, two baselines, a seeded synthetic
//! data generator and an experiment harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod harness;
pub mod losses;
pub mod peeling;
pub mod probe;
pub mod sampling;
pub mod vector;

pub use config::{EstimatorConfig, PrivacyParams, StepSchedule};
pub use data::{Dataset, Sample};
pub use error::{Error, Result};
pub use estimators::{fit, Estimate, EstimatorKind, FitReport};
pub use experiment::{ExperimentConfig, RawConfig, SweepAxis};
pub use harness::{
    run_real, run_sensitivity_suite, run_sweep, RealDataSpec, SweepResult, SweepSpec,
};

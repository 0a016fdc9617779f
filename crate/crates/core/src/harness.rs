//! Experiment orchestration: synthetic sweeps with repeated seeded trials,
//! aggregation, held-out evaluation on user-supplied CSV data, and the
//! sensitivity probe suite.
//!
//! Seeding. Repeat `r` of a sweep draws its data with
//! `derive_seed(&[base_seed, r])` at every axis value, so the points of a
//! sweep share their random draws and differ only in the swept quantity.
//! Each estimator's selection noise is seeded with
//! `derive_seed(&[data_seed, estimator_tag])`; adding an estimator to a sweep
//! leaves the other rows unchanged.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EstimatorConfig, StepSchedule};
use crate::data::{read_csv, Dataset, Sample};
use crate::error::{Error, Result};
use crate::estimators::{fit, EstimatorKind};
use crate::experiment::{ExperimentConfig, RealSettings, SweepAxis};
use crate::probe::{extremal_l1_probe, sensitivity_probe, ProbeOutcome};
use crate::sampling::{derive_seed, generate_holdout, generate_synthetic, RngHandle};
use crate::vector::{l2_error, mae};

/// Environment variable capping the number of worker threads of a sweep.
pub const WORKERS_ENV: &str = "DPSPARSE_WORKERS";

/// Absolute tolerance of the sensitivity checks.
pub const PROBE_TOLERANCE: f64 = 1e-12;

/// Tolerance of the extremal absolute-loss tightness check.
pub const TIGHTNESS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub base: ExperimentConfig,
    pub repeats: usize,
    pub estimators: Vec<EstimatorKind>,
    pub record_timing: bool,
    /// Worker threads; `None` reads [`WORKERS_ENV`] and falls back to the
    /// number of CPUs.
    pub workers: Option<usize>,
}

impl SweepSpec {
    /// Builds the spec from the `sweep` section of a config.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let sw = cfg
            .sweep
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("sweep: missing section".into()))?;
        let spec = SweepSpec {
            axis: sw.axis,
            values: sw.values.clone(),
            base: cfg.clone(),
            repeats: sw.repeats,
            estimators: sw.estimators.clone(),
            record_timing: sw.record_timing,
            workers: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig(
                "sweep values must not be empty".into(),
            ));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(
                "sweep values must be strictly increasing".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one estimator is required".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        for &v in &self.values {
            self.base.at(self.axis, v)?;
        }
        Ok(())
    }

    /// Seed of the data drawn for repeat `r`.
    pub fn data_seed(&self, repeat: usize) -> u64 {
        derive_seed(&[self.base.seed, repeat as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

impl RowStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Failed => "failed",
        }
    }
}

/// One fit. Failed rows carry NaN metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub estimator: EstimatorKind,
    /// Data seed of the repeat.
    pub seed: u64,
    pub l2_error: f64,
    /// Mean absolute error on a fresh holdout sample.
    pub mae: f64,
    /// Wall-clock time of the fit; zero unless timing is recorded.
    pub wall_ms: f64,
    pub status: RowStatus,
}

/// Statistics of the successful rows at one (value, estimator) cell.
/// Standard deviations use the `n - 1` denominator and are zero for a
/// single row; every statistic is `None` when no row succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub value: f64,
    pub estimator: EstimatorKind,
    pub ok: usize,
    pub failed: usize,
    pub l2_mean: Option<f64>,
    pub l2_sd: Option<f64>,
    pub l2_median: Option<f64>,
    pub mae_mean: Option<f64>,
    pub mae_sd: Option<f64>,
    pub mae_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status == RowStatus::Failed)
            .count()
    }

    pub fn aggregate_for(&self, value: f64, estimator: EstimatorKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.value == value && a.estimator == estimator)
    }

    /// Successful `l2_error` values of one cell, in row order.
    pub fn l2_errors(&self, value: f64, estimator: EstimatorKind) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.value == value && r.estimator == estimator && r.status == RowStatus::Ok)
            .map(|r| r.l2_error)
            .collect()
    }

    /// Writes `results.csv` with columns
    /// `axis,value,estimator,seed,l2_error,mae,wall_ms,status`.
    pub fn write_results_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_error)?;
        w.write_record([
            "axis",
            "value",
            "estimator",
            "seed",
            "l2_error",
            "mae",
            "wall_ms",
            "status",
        ])
        .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                self.axis.name().to_string(),
                r.value.to_string(),
                r.estimator.name().to_string(),
                r.seed.to_string(),
                r.l2_error.to_string(),
                r.mae.to_string(),
                r.wall_ms.to_string(),
                r.status.name().to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `aggregates.json`: `{"axis": ..., "aggregates": [...]}`.
    pub fn write_aggregates_json(&self, path: impl AsRef<Path>) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a> {
            axis: SweepAxis,
            aggregates: &'a [Aggregate],
        }
        write_json(
            path,
            &Doc {
                axis: self.axis,
                aggregates: &self.aggregates,
            },
        )
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path.as_ref())?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Per-cell statistics, in the order cells first appear in `rows`.
pub fn aggregate(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut cells: Vec<(f64, EstimatorKind)> = Vec::new();
    for r in rows {
        if !cells.iter().any(|&(v, e)| v == r.value && e == r.estimator) {
            cells.push((r.value, r.estimator));
        }
    }
    cells
        .into_iter()
        .map(|(value, estimator)| {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.value == value && r.estimator == estimator)
                .collect();
            let ok: Vec<&SweepRow> = cell
                .iter()
                .copied()
                .filter(|r| r.status == RowStatus::Ok)
                .collect();
            let l2: Vec<f64> = ok.iter().map(|r| r.l2_error).collect();
            let ma: Vec<f64> = ok.iter().map(|r| r.mae).collect();
            let stat = |v: &[f64], f: fn(&[f64]) -> f64| (!v.is_empty()).then(|| f(v));
            Aggregate {
                value,
                estimator,
                ok: ok.len(),
                failed: cell.len() - ok.len(),
                l2_mean: stat(&l2, mean),
                l2_sd: stat(&l2, sd),
                l2_median: stat(&l2, median),
                mae_mean: stat(&ma, mean),
                mae_sd: stat(&ma, sd),
                mae_median: stat(&ma, median),
            }
        })
        .collect()
}

fn worker_count(requested: Option<usize>) -> Result<usize> {
    if let Some(w) = requested {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w >= 1 => Ok(w),
            _ => Err(Error::InvalidConfig(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs one (value, repeat) unit: draws the data once and fits every
/// estimator on it.
fn run_unit(spec: &SweepSpec, value: f64, repeat: usize) -> Vec<SweepRow> {
    let seed = spec.data_seed(repeat);
    let failed = |estimator| SweepRow {
        value,
        estimator,
        seed,
        l2_error: f64::NAN,
        mae: f64::NAN,
        wall_ms: 0.0,
        status: RowStatus::Failed,
    };
    let prepared = spec.base.at(spec.axis, value).and_then(|point| {
        let syn = point.synthetic(seed);
        let (train, beta_star) = generate_synthetic(&syn)?;
        let holdout = generate_holdout(&syn, &beta_star, point.holdout_n)?;
        Ok((point, train, beta_star, holdout))
    });
    let (point, train, beta_star, holdout) = match prepared {
        Ok(p) => p,
        Err(e) => {
            log::warn!(
                "{}={value} seed {seed}: data generation failed: {e}",
                spec.axis.name()
            );
            return spec.estimators.iter().map(|&k| failed(k)).collect();
        }
    };

    spec.estimators
        .iter()
        .map(|&kind| {
            let start = Instant::now();
            let outcome = point.privacy().and_then(|privacy| {
                let cfg = point.estimator_config(kind, derive_seed(&[seed, kind.tag()]));
                let report = fit(kind, &train, &cfg, privacy, None)?;
                let beta = &report.estimate.beta;
                Ok((
                    l2_error(beta, &beta_star)?,
                    mae(&holdout.predict(beta), &holdout.responses())?,
                ))
            });
            let wall_ms = if spec.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            match outcome {
                Ok((l2, m)) => SweepRow {
                    value,
                    estimator: kind,
                    seed,
                    l2_error: l2,
                    mae: m,
                    wall_ms,
                    status: RowStatus::Ok,
                },
                Err(e) => {
                    log::warn!(
                        "{}={value} seed {seed} {kind}: fit failed: {e}",
                        spec.axis.name()
                    );
                    SweepRow {
                        wall_ms,
                        ..failed(kind)
                    }
                }
            }
        })
        .collect()
}

/// Runs every (value, estimator, repeat) fit. Fit failures become rows with
/// status `failed`; only an invalid spec is an error. Rows are sorted by
/// value, estimator name and seed.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let workers = worker_count(spec.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let units: Vec<(f64, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.repeats).map(move |r| (v, r)))
        .collect();
    let mut rows: Vec<SweepRow> = pool.install(|| {
        units
            .par_iter()
            .flat_map_iter(|&(v, r)| run_unit(spec, v, r))
            .collect()
    });
    rows.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| a.estimator.name().cmp(b.estimator.name()))
            .then_with(|| a.seed.cmp(&b.seed))
    });
    let aggregates = aggregate(&rows);
    Ok(SweepResult {
        axis: spec.axis,
        rows,
        aggregates,
    })
}

/// Spearman rank correlation, with average ranks for ties. `None` when
/// either input is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataSpec {
    pub csv: PathBuf,
    pub response_col: String,
    pub settings: RealSettings,
}

/// One line of the real-data table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealRow {
    pub estimator: EstimatorKind,
    /// Mean absolute error on the test split.
    pub mae: f64,
    /// Number of selected features.
    pub size: usize,
    /// Header names of the selected features.
    pub selected: Vec<String>,
    /// `‖β̂ - β̂_proxy‖₂`, the proxy fit standing in for β*.
    pub l2_to_proxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealReport {
    pub rows: Vec<RealRow>,
    pub proxy: EstimatorKind,
    pub n_train: usize,
    pub n_test: usize,
    pub features_used: Vec<String>,
    /// Constant columns dropped under standardisation.
    pub skipped_columns: Vec<String>,
}

impl RealReport {
    /// Writes the table with columns `estimator,mae,size,selected,l2_to_proxy`;
    /// selected names are joined with `;`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_error)?;
        w.write_record(["estimator", "mae", "size", "selected", "l2_to_proxy"])
            .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.estimator.name().to_string(),
                r.mae.to_string(),
                r.size.to_string(),
                r.selected.join(";"),
                r.l2_to_proxy.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column means and population standard deviations.
fn column_stats(samples: &[Sample], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let mut mu = vec![0.0; d];
    for s in samples {
        for (m, x) in mu.iter_mut().zip(&s.features) {
            *m += x / n;
        }
    }
    let mut var = vec![0.0; d];
    for s in samples {
        for ((v, x), m) in var.iter_mut().zip(&s.features).zip(&mu) {
            *v += (x - m) * (x - m) / n;
        }
    }
    (mu, var.into_iter().map(f64::sqrt).collect())
}

fn transform(samples: &[Sample], keep: &[usize], mu: &[f64], sigma: &[f64]) -> Vec<Sample> {
    samples
        .iter()
        .map(|s| {
            let x = keep
                .iter()
                .map(|&j| (s.features[j] - mu[j]) / sigma[j])
                .collect();
            Sample::new(x, s.response)
        })
        .collect()
}

/// Shuffles the CSV rows with `base.seed`, splits them into train and test,
/// optionally standardises features with train-split statistics, fits every
/// estimator on the train split and evaluates on the test split.
pub fn run_real(spec: &RealDataSpec, base: &ExperimentConfig) -> Result<RealReport> {
    let st = &spec.settings;
    if !(st.train_fraction > 0.0 && st.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must lie in (0, 1), got {}",
            st.train_fraction
        )));
    }
    let labeled = read_csv(&spec.csv, &spec.response_col)?;
    let d_all = labeled.dataset.d();
    let mut samples = labeled.dataset.into_samples();
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    let mut rng = RngHandle::new(base.seed, 0);
    samples.shuffle(rng.rng_mut());
    let n_train = ((n as f64 * st.train_fraction).round() as usize).clamp(1, n - 1);
    let test = samples.split_off(n_train);
    let train = samples;

    let (keep, mu, sigma) = if st.standardize {
        let (mu, sigma) = column_stats(&train, d_all);
        let keep: Vec<usize> = (0..d_all).filter(|&j| sigma[j] > 0.0).collect();
        (keep, mu, sigma)
    } else {
        ((0..d_all).collect(), vec![0.0; d_all], vec![1.0; d_all])
    };
    let skipped: Vec<String> = (0..d_all)
        .filter(|j| !keep.contains(j))
        .map(|j| labeled.feature_names[j].clone())
        .collect();
    for name in &skipped {
        log::warn!("column '{name}' is constant on the train split; skipped");
    }
    if keep.is_empty() {
        return Err(Error::InvalidInput(
            "every feature column is constant".into(),
        ));
    }
    let names: Vec<String> = keep
        .iter()
        .map(|&j| labeled.feature_names[j].clone())
        .collect();
    let train = Dataset::new(transform(&train, &keep, &mu, &sigma), keep.len())?;
    let test = Dataset::new(transform(&test, &keep, &mu, &sigma), keep.len())?;

    let point = ExperimentConfig {
        n: train.n(),
        d: train.d(),
        sweep: None,
        real: None,
        ..base.clone()
    };
    let privacy = point.privacy()?;
    let fit_kind = |kind: EstimatorKind| -> Result<Vec<f64>> {
        let cfg = point.estimator_config(kind, derive_seed(&[base.seed, kind.tag()]));
        Ok(fit(kind, &train, &cfg, privacy, None)?.estimate.beta)
    };
    let proxy_beta = fit_kind(st.proxy)?;
    let rows = st
        .estimators
        .iter()
        .map(|&kind| {
            let beta = if kind == st.proxy {
                proxy_beta.clone()
            } else {
                fit_kind(kind)?
            };
            let selected: Vec<String> = beta
                .iter()
                .zip(&names)
                .filter(|(b, _)| **b != 0.0)
                .map(|(_, name)| name.clone())
                .collect();
            Ok(RealRow {
                estimator: kind,
                mae: mae(&test.predict(&beta), &test.responses())?,
                size: selected.len(),
                selected,
                l2_to_proxy: l2_error(&beta, &proxy_beta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RealReport {
        rows,
        proxy: st.proxy,
        n_train: train.n(),
        n_test: test.n(),
        features_used: names,
        skipped_columns: skipped,
    })
}

/// Worst probe of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub estimator: EstimatorKind,
    pub trials: usize,
    /// The probe with the largest deviation-to-bound ratio.
    pub worst: ProbeOutcome,
    pub max_ratio: f64,
    /// Trials whose deviation exceeds `bound_scale × bound + 1e-12`.
    pub violations: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessCheck {
    pub outcome: ProbeOutcome,
    /// `|deviation - bound|`.
    pub gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub bound_scale: f64,
    pub entries: Vec<SensitivityEntry>,
    pub extremal_l1: TightnessCheck,
    pub pass: bool,
}

/// Estimator settings of probe trial `trial`, drawn from wide ranges.
fn probe_config(seed: u64, trial: usize) -> EstimatorConfig {
    let mut rng = RngHandle::new(derive_seed(&[seed, trial as u64]), 1);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.open01();
    let eta = 10f64.powf(uniform(-3.0, 0.0));
    let tau = uniform(0.1, 5.0);
    let clip = uniform(0.5, 8.0);
    let radius = uniform(0.5, 10.0);
    let sparsity = 1 + (uniform(0.0, 5.0) as usize).min(4);
    let iterations = 1 + (uniform(0.0, 50.0) as usize).min(49);
    let schedule = if uniform(0.0, 1.0) < 0.5 {
        StepSchedule::Constant { eta }
    } else {
        StepSchedule::TwoPhase {
            eta0: eta,
            decay: uniform(0.01, 0.5),
            switch_iter: iterations / 2,
            eta_const: eta * uniform(0.1, 1.0),
        }
    };
    EstimatorConfig {
        sparsity,
        iterations,
        clip: Some(clip),
        radius,
        tau: Some(tau),
        schedule,
        seed,
        sign_on_clipped: false,
        response_clip: Some(uniform(0.5, 10.0)),
    }
}

/// The crafted absolute-loss instance whose deviation equals `2·η_t·K/m`.
pub fn extremal_check() -> Result<TightnessCheck> {
    let cfg = EstimatorConfig {
        sparsity: 3,
        iterations: 10,
        clip: Some(2.0),
        radius: 5.0,
        tau: None,
        schedule: StepSchedule::Constant { eta: 0.3 },
        seed: 0,
        sign_on_clipped: false,
        response_clip: None,
    };
    let outcome = extremal_l1_probe(&cfg, 7, 12, 3)?;
    let gap = (outcome.deviation - outcome.bound).abs();
    Ok(TightnessCheck {
        outcome,
        gap,
        pass: gap <= TIGHTNESS_TOLERANCE,
    })
}

/// Probes the Huber and absolute-loss half-steps `trials` times each on
/// random configurations and checks every deviation against
/// `bound_scale ×` the sensitivity the estimator uses. A `bound_scale`
/// below one is a negative control: a working probe must then fail.
pub fn run_sensitivity_suite(
    trials: usize,
    seed: u64,
    bound_scale: f64,
) -> Result<SensitivityReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if !(bound_scale > 0.0) || !bound_scale.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "bound_scale must be positive, got {bound_scale}"
        )));
    }
    let entries = [EstimatorKind::DpIhtH, EstimatorKind::DpIhtL]
        .into_iter()
        .map(|kind| {
            let outcomes = (0..trials)
                .map(|i| {
                    let cfg = probe_config(seed, i);
                    sensitivity_probe(kind, &cfg, derive_seed(&[seed, i as u64, kind.tag()]))
                })
                .collect::<Result<Vec<_>>>()?;
            let violations = outcomes
                .iter()
                .filter(|o| !o.within(bound_scale, PROBE_TOLERANCE))
                .count();
            let worst = outcomes
                .into_iter()
                .max_by(|a, b| a.ratio().total_cmp(&b.ratio()))
                .expect("trials >= 1");
            Ok(SensitivityEntry {
                estimator: kind,
                trials,
                max_ratio: worst.ratio(),
                worst,
                violations,
                pass: violations == 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let extremal_l1 = extremal_check()?;
    let pass = entries.iter().all(|e| e.pass) && extremal_l1.pass;
    Ok(SensitivityReport {
        bound_scale,
        entries,
        extremal_l1,
        pass,
    })
}

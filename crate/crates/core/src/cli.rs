//! Command-line interface. [`run`] parses arguments, dispatches to the
//! subcommand and maps the outcome to an exit code: 0 on success, 1 for
//! usage and validation errors, 2 for runtime failures (including sweeps
//! with failed rows and sensitivity checks that do not pass).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{read_csv, write_csv, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{fit, EstimatorKind, FitReport};
use crate::experiment::{ExperimentConfig, RawConfig, TauDefault};
use crate::harness::{
    run_real, run_sensitivity_suite, run_sweep, write_json, RealDataSpec, SweepSpec,
};
use crate::sampling::{derive_seed, generate_holdout, generate_synthetic, SyntheticConfig};
use crate::vector::{l2_error, mae};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Name of the config echo written by every subcommand.
pub const EFFECTIVE_CONFIG: &str = "effective_config.json";

#[derive(Debug, Parser)]
#[command(
    name = "dpsparse",
    version,
    about = "Private sparse regression under heavy-tailed noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic dataset and write it with its true coefficients.
    SynthGen {
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one estimator on synthetic data or on a CSV file.
    Fit {
        #[arg(long)]
        estimator: EstimatorKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Fit on this CSV instead of drawing synthetic data.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value = "y")]
        response_col: String,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sweep described by the config's `sweep` section.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train/test evaluation on a user-supplied CSV.
    Real {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        response_col: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the half-step sensitivity of the private estimators.
    Probe {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplier applied to every bound; below 1 is a negative control.
        #[arg(long, default_value_t = 1.0)]
        bound_scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags that override config-file values.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub s_star: Option<usize>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub beta_scale: Option<f64>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub holdout_n: Option<usize>,
    #[arg(long)]
    pub sparsity: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub response_clip: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sign_on_clipped: bool,
}

impl Overrides {
    fn apply(&self, raw: &mut RawConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if self.$f.is_some() {
                    raw.$f = self.$f;
                }
            )*};
        }
        set!(
            n,
            d,
            s_star,
            zeta,
            beta_scale,
            noise_scale,
            holdout_n,
            sparsity,
            iterations,
            clip,
            radius,
            tau,
            eta,
            response_clip,
            epsilon,
            delta,
            seed
        );
        if self.sign_on_clipped {
            raw.sign_on_clipped = Some(true);
        }
    }
}

fn read_raw(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

/// Reads and validates a config file, filling every default.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    read_raw(path)?.resolve(TauDefault::Fill)
}

/// Config file (if any) with flag overrides applied. A config file always
/// fills the default `tau`; without one, `without_file` decides.
pub fn load_with_overrides(
    path: Option<&Path>,
    overrides: &Overrides,
    shape: Option<(usize, usize)>,
    without_file: TauDefault,
) -> Result<ExperimentConfig> {
    let (mut raw, tau_default) = match path {
        Some(p) => (read_raw(p)?, TauDefault::Fill),
        None => (RawConfig::default(), without_file),
    };
    if let Some((n, d)) = shape {
        raw.n = Some(n);
        raw.d = Some(d);
    }
    overrides.apply(&mut raw);
    raw.resolve(tau_default)
}

fn prepare_out(out: &Path, cfg: &impl Serialize) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_json(out.join(EFFECTIVE_CONFIG), cfg)
}

#[derive(Serialize)]
struct SynthSidecar<'a> {
    beta_star: &'a [f64],
    config: &'a SyntheticConfig,
}

fn synth_gen(overrides: &Overrides, out: &Path) -> Result<i32> {
    let cfg = load_with_overrides(None, overrides, None, TauDefault::Omit)?;
    let syn = cfg.synthetic(cfg.seed);
    let (ds, beta_star) = generate_synthetic(&syn)?;
    prepare_out(out, &cfg)?;
    write_csv(&ds, out.join("data.csv"))?;
    write_json(
        out.join("data.json"),
        &SynthSidecar {
            beta_star: &beta_star,
            config: &syn,
        },
    )?;
    println!(
        "wrote {} samples x {} features to {}",
        ds.n(),
        ds.d(),
        out.display()
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FitOutput {
    estimator: EstimatorKind,
    /// ℓ2 distance to β*, for synthetic data.
    l2_error: Option<f64>,
    /// Held-out MAE for synthetic data, in-sample MAE for CSV input.
    mae: f64,
    selected: Option<Vec<String>>,
    report: FitReport,
}

fn fit_cmd(
    kind: EstimatorKind,
    config: Option<&Path>,
    csv: Option<&Path>,
    response_col: &str,
    overrides: &Overrides,
    out: &Path,
) -> Result<i32> {
    let labeled = csv.map(|p| read_csv(p, response_col)).transpose()?;
    let shape = labeled.as_ref().map(|l| (l.dataset.n(), l.dataset.d()));
    let tau = match kind {
        EstimatorKind::DpIhtH | EstimatorKind::AdaHuberLite => TauDefault::Require,
        _ => TauDefault::Omit,
    };
    let cfg = load_with_overrides(config, overrides, shape, tau)?;
    let privacy = cfg.privacy()?;
    let est = cfg.estimator_config(kind, derive_seed(&[cfg.seed, kind.tag()]));

    let output = match labeled {
        Some(l) => {
            let report = fit(kind, &l.dataset, &est, privacy, None)?;
            let beta = &report.estimate.beta;
            let selected = report
                .estimate
                .support
                .iter()
                .map(|&j| l.feature_names[j].clone())
                .collect();
            FitOutput {
                estimator: kind,
                l2_error: None,
                mae: mae(&l.dataset.predict(beta), &l.dataset.responses())?,
                selected: Some(selected),
                report,
            }
        }
        None => {
            let syn = cfg.synthetic(cfg.seed);
            let (train, beta_star) = generate_synthetic(&syn)?;
            let holdout: Dataset = generate_holdout(&syn, &beta_star, cfg.holdout_n)?;
            let report = fit(kind, &train, &est, privacy, Some(&beta_star))?;
            let beta = &report.estimate.beta;
            FitOutput {
                estimator: kind,
                l2_error: Some(l2_error(beta, &beta_star)?),
                mae: mae(&holdout.predict(beta), &holdout.responses())?,
                selected: None,
                report,
            }
        }
    };
    prepare_out(out, &cfg)?;
    write_json(out.join("fit.json"), &output)?;
    match output.l2_error {
        Some(e) => println!("{kind}: l2_error {e:.6} mae {:.6}", output.mae),
        None => println!("{kind}: mae {:.6}", output.mae),
    }
    println!("support {:?}", output.report.estimate.support);
    Ok(EXIT_OK)
}

fn sweep_cmd(config: &Path, overrides: &Overrides, out: &Path) -> Result<i32> {
    let cfg = load_with_overrides(Some(config), overrides, None, TauDefault::Fill)?;
    let spec = SweepSpec::from_config(&cfg)?;
    prepare_out(out, &cfg)?;
    let result = run_sweep(&spec)?;
    result.write_results_csv(out.join("results.csv"))?;
    result.write_aggregates_json(out.join("aggregates.json"))?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    println!(
        "{:>10}  {:<10} {:>4} {:>10} {:>10} {:>10}",
        spec.axis.name(),
        "estimator",
        "ok",
        "l2_mean",
        "l2_median",
        "mae_mean"
    );
    for a in &result.aggregates {
        println!(
            "{:>10}  {:<10} {:>4} {:>10} {:>10} {:>10}",
            a.value,
            a.estimator.name(),
            a.ok,
            fmt(a.l2_mean),
            fmt(a.l2_median),
            fmt(a.mae_mean)
        );
    }
    let failed = result.failed();
    if failed > 0 {
        eprintln!("{failed} of {} fits failed", result.rows.len());
        return Ok(EXIT_RUNTIME);
    }
    Ok(EXIT_OK)
}

fn real_cmd(
    csv: &Path,
    response_col: &str,
    config: Option<&Path>,
    overrides: &Overrides,
    out: &Path,
) -> Result<i32> {
    let labeled = read_csv(csv, response_col)?;
    let shape = (labeled.dataset.n(), labeled.dataset.d());
    // a dataset with fewer columns than the default s* should still load
    let mut overrides = overrides.clone();
    if config.is_none() && overrides.s_star.is_none() {
        overrides.s_star = Some(crate::experiment::DEFAULT_S_STAR.min(shape.1));
    }
    let mut cfg = load_with_overrides(config, &overrides, Some(shape), TauDefault::Fill)?;
    let settings = cfg.real.clone().unwrap_or_default();
    cfg.real = Some(settings.clone());
    prepare_out(out, &cfg)?;
    let report = run_real(
        &RealDataSpec {
            csv: csv.to_path_buf(),
            response_col: response_col.to_string(),
            settings,
        },
        &cfg,
    )?;
    report.write_csv(out.join("real_results.csv"))?;
    write_json(out.join("real_report.json"), &report)?;
    println!("{:<10} {:>10} {:>5}  selected", "estimator", "mae", "size");
    for r in &report.rows {
        println!(
            "{:<10} {:>10.4} {:>5}  {}",
            r.estimator.name(),
            r.mae,
            r.size,
            r.selected.join(",")
        );
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ProbeConfig {
    trials: usize,
    seed: u64,
    bound_scale: f64,
}

fn probe_cmd(trials: usize, seed: u64, bound_scale: f64, out: &Path) -> Result<i32> {
    let report = run_sensitivity_suite(trials, seed, bound_scale)?;
    prepare_out(
        out,
        &ProbeConfig {
            trials,
            seed,
            bound_scale,
        },
    )?;
    write_json(out.join("probe_report.json"), &report)?;
    for e in &report.entries {
        println!(
            "{} {}: max deviation {:.6e} vs bound {:.6e} (ratio {:.4}), {} of {} trials over",
            if e.pass { "PASS" } else { "FAIL" },
            e.estimator,
            e.worst.deviation,
            bound_scale * e.worst.bound,
            e.max_ratio / bound_scale,
            e.violations,
            e.trials
        );
    }
    let x = &report.extremal_l1;
    println!(
        "{} extremal dp-iht-l: deviation {:.6e} vs bound {:.6e} (gap {:.1e})",
        if x.pass { "PASS" } else { "FAIL" },
        x.outcome.deviation,
        x.outcome.bound,
        x.gap
    );
    Ok(if report.pass { EXIT_OK } else { EXIT_RUNTIME })
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    let outcome = match &cli.command {
        Command::SynthGen { overrides, out } => synth_gen(overrides, out),
        Command::Fit {
            estimator,
            config,
            csv,
            response_col,
            overrides,
            out,
        } => fit_cmd(
            *estimator,
            config.as_deref(),
            csv.as_deref(),
            response_col,
            overrides,
            out,
        ),
        Command::Sweep {
            config,
            overrides,
            out,
        } => sweep_cmd(config, overrides, out),
        Command::Real {
            csv,
            response_col,
            config,
            overrides,
            out,
        } => real_cmd(csv, response_col, config.as_deref(), overrides, out),
        Command::Probe {
            trials,
            seed,
            bound_scale,
            out,
        } => probe_cmd(*trials, *seed, *bound_scale, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

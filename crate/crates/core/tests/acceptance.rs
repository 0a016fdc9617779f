//! Acceptance suite. Every criterion runs, prints one PASS/FAIL line with
//! its measured quantity, and the process exits non-zero if any failed.
//!
//! Run with `cargo test --release --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use dpsparse::config::{EstimatorConfig, PrivacyParams, StepSchedule};
use dpsparse::data::{read_csv, write_csv, Dataset, Sample};
use dpsparse::estimators::{fit, EstimatorKind};
use dpsparse::experiment::{ExperimentConfig, RawConfig, RealSettings, SweepAxis, TauDefault};
use dpsparse::harness::{
    median, run_real, run_sensitivity_suite, run_sweep, spearman, RealDataSpec, SweepResult,
    SweepSpec,
};
use dpsparse::losses::{batch_gradient, huber_value, LossKind};
use dpsparse::peeling::{peel, PeelingParams};
use dpsparse::sampling::{generate_synthetic, laplace, RngHandle, SyntheticConfig};
use dpsparse::vector::{clip_features, dot, l2_error};

/// Runs the CLI binary with captured output and returns its exit code.
fn dpsparse(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_dpsparse"))
        .args(args)
        .output()
        .expect("run dpsparse")
        .status
        .code()
        .unwrap_or(-1)
}

/// Outcome of one criterion: pass flag and a one-line measurement summary.
type Outcome = (bool, String);

const D: usize = 1000;
const NS: [f64; 4] = [500.0, 1000.0, 2000.0, 4000.0];
const EPSILONS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
const REPEATS: usize = 20;

fn uniform(rng: &mut RngHandle, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.open01()
}

fn huber_objective(fold: &[Sample], beta: &[f64], tau: f64, k: f64) -> f64 {
    fold.iter()
        .map(|s| {
            let x = clip_features(&s.features, k).unwrap();
            huber_value(s.response - dot(&x, beta), tau)
        })
        .sum::<f64>()
        / fold.len() as f64
}

/// Criterion 1: central finite differences of the averaged Huber objective.
fn huber_gradient() -> Outcome {
    let mut rng = RngHandle::new(101, 0);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    while points < 1000 {
        let m = 1 + (rng.open01() * 20.0) as usize;
        let d = 1 + (rng.open01() * 10.0) as usize;
        let tau = uniform(&mut rng, 0.2, 3.0);
        let k = uniform(&mut rng, 0.5, 3.0);
        let fold: Vec<Sample> = (0..m)
            .map(|_| {
                let x = (0..d).map(|_| 2.0 * rng.standard_normal()).collect();
                Sample::new(x, 3.0 * rng.standard_normal())
            })
            .collect();
        let beta: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        // the objective must be smooth on the whole stencil
        let near_kink = fold.iter().any(|s| {
            let x = clip_features(&s.features, k).unwrap();
            ((s.response - dot(&x, &beta)).abs() - tau).abs() < 1e-3
        });
        if near_kink {
            continue;
        }
        points += 1;
        let g = batch_gradient(&fold, &beta, LossKind::Huber { tau }, Some(k)).unwrap();
        let fd: Vec<f64> = (0..d)
            .map(|j| {
                let mut up = beta.clone();
                let mut down = beta.clone();
                up[j] += h;
                down[j] -= h;
                (huber_objective(&fold, &up, tau, k) - huber_objective(&fold, &down, tau, k))
                    / (2.0 * h)
            })
            .collect();
        let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-8);
        let err = g
            .iter()
            .zip(&fd)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
            / scale;
        worst = worst.max(err);
    }
    (
        worst <= 1e-5,
        format!("1000 points, worst relative error {worst:.2e} (tolerance 1e-5)"),
    )
}

/// Brute-force top-`s` by magnitude, lowest index first among ties.
fn top_s_oracle(v: &[f64], s: usize) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    order.truncate(s);
    let mut out = vec![0.0; v.len()];
    for &j in &order {
        out[j] = v[j];
    }
    (out, order)
}

/// Criterion 2: noise-free selection against the sort oracle.
fn peeling_oracle() -> Outcome {
    let mut rng = RngHandle::new(202, 0);
    let mut mismatches = 0;
    for i in 0..1000 {
        let d = 1 + (rng.open01() * 200.0) as usize;
        let s = 1 + (rng.open01() * d.min(50) as f64) as usize;
        // every other vector draws from a small grid so ties are frequent
        let v: Vec<f64> = (0..d)
            .map(|_| {
                if i % 2 == 0 {
                    rng.standard_normal()
                } else {
                    ((rng.open01() * 7.0) as i64 - 3) as f64
                }
            })
            .collect();
        let params = PeelingParams::new(s, PrivacyParams::NonPrivate, 1.0).unwrap();
        let got = peel(&v, &params, &mut RngHandle::new(i, 0)).unwrap();
        let (values, selected) = top_s_oracle(&v, s);
        if got.values != values || got.selected != selected {
            mismatches += 1;
        }
    }
    (
        mismatches == 0,
        format!("1000 vectors, {mismatches} mismatches with the sort oracle"),
    )
}

/// Criterion 3: half-step sensitivity of both private estimators and the
/// tightness of the absolute-loss bound.
fn sensitivity() -> Outcome {
    let report = run_sensitivity_suite(200, 303, 1.0).unwrap();
    let mut parts = Vec::new();
    for e in &report.entries {
        parts.push(format!(
            "{} {} ({}/{} over, max ratio {:.4})",
            e.estimator,
            if e.pass {
                "within bound"
            } else {
                "BOUND EXCEEDED"
            },
            e.violations,
            e.trials,
            e.max_ratio
        ));
    }
    let x = &report.extremal_l1;
    parts.push(format!("extremal gap {:.1e} (tolerance 1e-9)", x.gap));
    let control = run_sensitivity_suite(200, 303, 0.5).unwrap();
    parts.push(format!(
        "halved-bound control {}",
        if control.pass {
            "NOT DETECTED"
        } else {
            "detected"
        }
    ));
    (report.pass && !control.pass, parts.join("; "))
}

/// Criterion 4: noiseless recovery without privacy.
fn noiseless_recovery() -> Outcome {
    let syn = SyntheticConfig {
        n: 2000,
        d: 100,
        s_star: 5,
        zeta: 1.0,
        beta_scale: 1.0,
        noise_scale: 0.0,
        seed: 404,
    };
    let (ds, beta_star) = generate_synthetic(&syn).unwrap();
    let base = EstimatorConfig {
        sparsity: 5,
        iterations: 200,
        clip: Some(100f64.ln()),
        radius: 10.0,
        tau: Some(10.0),
        schedule: StepSchedule::Constant { eta: 0.1 },
        seed: 0,
        sign_on_clipped: false,
        response_clip: None,
    };
    let h = fit(
        EstimatorKind::DpIhtH,
        &ds,
        &base,
        PrivacyParams::NonPrivate,
        None,
    )
    .unwrap();
    let l_cfg = EstimatorConfig {
        schedule: StepSchedule::TwoPhase {
            eta0: 0.5,
            decay: 0.03,
            switch_iter: 200,
            eta_const: 0.001,
        },
        ..base
    };
    let l = fit(
        EstimatorKind::DpIhtL,
        &ds,
        &l_cfg,
        PrivacyParams::NonPrivate,
        None,
    )
    .unwrap();
    let eh = l2_error(&h.estimate.beta, &beta_star).unwrap();
    let el = l2_error(&l.estimate.beta, &beta_star).unwrap();
    (
        eh < 1e-3 && el < 1e-2,
        format!("dp-iht-h error {eh:.2e} (< 1e-3), dp-iht-l error {el:.2e} (< 1e-2)"),
    )
}

/// Default experiment at `d = 1000` with the given noise index.
fn base_config(zeta: f64, n: usize) -> ExperimentConfig {
    RawConfig {
        n: Some(n),
        d: Some(D),
        zeta: Some(zeta),
        ..RawConfig::default()
    }
    .resolve(TauDefault::Fill)
    .unwrap()
}

fn sweep(axis: SweepAxis, values: &[f64], base: ExperimentConfig) -> SweepResult {
    run_sweep(&SweepSpec {
        axis,
        values: values.to_vec(),
        base,
        repeats: REPEATS,
        estimators: vec![
            EstimatorKind::DpIhtH,
            EstimatorKind::DpIhtL,
            EstimatorKind::DpSlrLite,
        ],
        record_timing: false,
        workers: None,
    })
    .unwrap()
}

fn means(r: &SweepResult, values: &[f64], kind: EstimatorKind) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            r.aggregate_for(v, kind)
                .unwrap()
                .l2_mean
                .unwrap_or(f64::NAN)
        })
        .collect()
}

fn fmt(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join("/")
}

/// Criterion 5: Huber beats the squared-loss baseline at every n (ζ = 0.5).
fn huber_beats_slr(z05: &SweepResult) -> Outcome {
    let h = means(z05, &NS, EstimatorKind::DpIhtH);
    let s = means(z05, &NS, EstimatorKind::DpSlrLite);
    let ok = h.iter().zip(&s).all(|(a, b)| a < b) && z05.failed() == 0;
    (
        ok,
        format!("mean l2 over n: dp-iht-h {} vs dp-slr {}", fmt(&h), fmt(&s)),
    )
}

/// Criterion 6: absolute loss no worse than Huber at ζ = 0.5, within 20%
/// at ζ = 1.
fn l1_vs_huber(z05: &SweepResult, z1: &SweepResult) -> Outcome {
    let h05 = means(z05, &NS, EstimatorKind::DpIhtH);
    let l05 = means(z05, &NS, EstimatorKind::DpIhtL);
    let h1 = means(z1, &NS, EstimatorKind::DpIhtH);
    let l1 = means(z1, &NS, EstimatorKind::DpIhtL);
    let ordering = l05.iter().zip(&h05).all(|(l, h)| l <= h);
    let rel: Vec<f64> = l1.iter().zip(&h1).map(|(l, h)| (l - h).abs() / h).collect();
    let close = rel.iter().all(|r| *r < 0.2);
    (
        ordering && close && z05.failed() == 0 && z1.failed() == 0,
        format!(
            "zeta=0.5 L<=H {} (L {} vs H {}); zeta=1 relative gaps {} (< 0.2) {}",
            if ordering { "holds" } else { "VIOLATED" },
            fmt(&l05),
            fmt(&h05),
            fmt(&rel),
            if close { "hold" } else { "VIOLATED" }
        ),
    )
}

/// Criterion 7: error falls with n (Spearman of medians) and with ε (means).
fn monotonicity(z1: &SweepResult, eps: &SweepResult) -> Outcome {
    let mut ok = z1.failed() == 0 && eps.failed() == 0;
    let mut parts = Vec::new();
    for kind in [EstimatorKind::DpIhtH, EstimatorKind::DpIhtL] {
        let medians: Vec<f64> = NS.iter().map(|&n| median(&z1.l2_errors(n, kind))).collect();
        let rho = spearman(&NS, &medians);
        let by_eps = means(eps, &EPSILONS, kind);
        let eps_ok = by_eps.windows(2).all(|w| w[1] <= w[0]);
        ok &= rho.is_some_and(|r| r < 0.0) && eps_ok;
        parts.push(format!(
            "{kind}: rho(n, median) {} [{}], means over eps {} {}",
            rho.map_or("undefined".into(), |r| format!("{r:.3}")),
            fmt(&medians),
            fmt(&by_eps),
            if eps_ok {
                "non-increasing"
            } else {
                "NOT non-increasing"
            }
        ));
    }
    (ok, parts.join("; "))
}

/// Criterion 8: Laplace moments.
fn laplace_moments() -> Outcome {
    let mut rng = RngHandle::new(808, 0);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| laplace(1.0, &mut rng).unwrap()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (
        mean.abs() <= 0.01 && (var - 2.0).abs() <= 0.05,
        format!("mean {mean:.5} (|.| <= 0.01), variance {var:.5} (2 +- 0.05)"),
    )
}

/// Criterion 9: CSV round trip, perfect single-feature recovery and the
/// `real` output schema.
fn real_data_substitute() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let syn = SyntheticConfig {
        n: 300,
        d: 25,
        s_star: 3,
        zeta: 0.5,
        beta_scale: 1.0,
        noise_scale: 1.0,
        seed: 909,
    };
    let (ds, _) = generate_synthetic(&syn).unwrap();
    let path = dir.path().join("syn.csv");
    write_csv(&ds, &path).unwrap();
    let back = read_csv(&path, "y").unwrap().dataset;
    let max_diff = ds
        .samples()
        .iter()
        .zip(back.samples())
        .flat_map(|(a, b)| {
            a.features
                .iter()
                .zip(&b.features)
                .map(|(x, y)| (x - y).abs())
                .chain(std::iter::once((a.response - b.response).abs()))
        })
        .fold(0.0f64, f64::max);
    let round_trip = back.n() == ds.n() && back.d() == ds.d() && max_diff <= 1e-12;

    let mut rng = RngHandle::new(910, 0);
    let samples: Vec<Sample> = (0..200)
        .map(|_| {
            let x: Vec<f64> = (0..8).map(|_| rng.standard_normal()).collect();
            let y = x[0];
            Sample::new(x, y)
        })
        .collect();
    let single = dir.path().join("single.csv");
    write_csv(&Dataset::new(samples, 8).unwrap(), &single).unwrap();
    let cfg = ExperimentConfig {
        sparsity: Some(1),
        eta: 0.5,
        iterations: 40,
        clip: Some(100.0),
        ..base_config(1.0, 200)
    };
    let report = run_real(
        &RealDataSpec {
            csv: single.clone(),
            response_col: "y".into(),
            settings: RealSettings {
                standardize: false,
                estimators: vec![EstimatorKind::AdaHuberLite],
                ..RealSettings::default()
            },
        },
        &cfg,
    )
    .unwrap();
    let row = &report.rows[0];
    let perfect = row.selected == ["x1"] && row.mae < 1e-6;

    let out = dir.path().join("real");
    let code = dpsparse(&[
        "real",
        "--csv",
        path.to_str().unwrap(),
        "--response-col",
        "y",
        "--out",
        out.to_str().unwrap(),
    ]);
    let table = std::fs::read_to_string(out.join("real_results.csv")).unwrap_or_default();
    let header = table.lines().next().unwrap_or("");
    let schema = code == 0
        && header == "estimator,mae,size,selected,l2_to_proxy"
        && table.lines().count() == 1 + EstimatorKind::ALL.len()
        && out.join("effective_config.json").exists();
    (
        round_trip && perfect && schema,
        format!(
            "round trip max diff {max_diff:.1e}; single feature selected {:?} mae {:.1e}; real exit {code} header '{header}'",
            row.selected, row.mae
        ),
    )
}

/// Criterion 10: a CLI sweep run twice gives byte-identical results.csv.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(
        &config,
        r#"{"n": 500, "d": 1000, "zeta": 0.5,
            "sweep": {"axis": "n", "values": [500, 1000, 2000, 4000], "repeats": 20,
                      "estimators": ["dp-iht-h", "dp-iht-l", "ada-huber", "dp-slr"]}}"#,
    )
    .unwrap();
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let code = dpsparse(&[
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "sweep exit code");
        files.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    let rows = String::from_utf8_lossy(&files[0]).lines().count() - 1;
    (
        files[0] == files[1],
        format!(
            "{rows} rows, {} bytes, runs {}",
            files[0].len(),
            if files[0] == files[1] {
                "identical"
            } else {
                "DIFFER"
            }
        ),
    )
}

fn report(id: &str, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "{} criterion {id} {title}: {detail} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    pass
}

fn main() {
    let mut results = vec![
        report("1", "huber gradient", huber_gradient),
        report("2", "peeling zero-noise oracle", peeling_oracle),
        report("3", "sensitivity bounds", sensitivity),
        report("4", "noiseless recovery", noiseless_recovery),
    ];

    let start = Instant::now();
    let z05 = sweep(SweepAxis::N, &NS, base_config(0.5, 500));
    let z1 = sweep(SweepAxis::N, &NS, base_config(1.0, 500));
    let eps = sweep(SweepAxis::Epsilon, &EPSILONS, base_config(1.0, 2000));
    println!(
        "     synthetic sweeps (3 x 4 points x {REPEATS} repeats) ran in {:.1}s",
        start.elapsed().as_secs_f64()
    );
    results.push(report("5", "huber below squared-loss baseline", || {
        huber_beats_slr(&z05)
    }));
    results.push(report("6", "absolute loss vs huber", || {
        l1_vs_huber(&z05, &z1)
    }));
    results.push(report("7", "monotone in n and epsilon", || {
        monotonicity(&z1, &eps)
    }));
    results.push(report("8", "laplace moments", laplace_moments));
    results.push(report("9", "real-data substitute", real_data_substitute));
    results.push(report("10", "sweep determinism", determinism));

    let failed = results.iter().filter(|p| !**p).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

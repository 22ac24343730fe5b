//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail. Runs under `cargo test`; the two coverage runs
//! dominate the runtime (roughly ten minutes on a single core).

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use coxncv::ncv::{bias_factor, width_factor};
use coxncv::rng::rng_from_seed;
use coxncv::simulation::{sparse_beta, write_summary_csv, SummaryRow, FIG2_MEASURES, SUMMARY_COLUMNS};
use coxncv::*;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

const GRADIENT_REL_TOL: f64 = 1e-6;
const NEWTON_TOL: f64 = 1e-4;
const IJ_REL_TOL: f64 = 1e-5;
const IJ_SUM_REL_TOL: f64 = 1e-10;
const FIG2_P_VALUE: f64 = 0.01;
const FIG2_RATIO: f64 = 0.20;

const COVERAGE_SEED: u64 = 2024;
/// True effect in the p = 10 coverage run, tuned so the mean CV point
/// estimate lands near 0.6.
const SIGNAL_P10: f64 = 0.36;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn gradient_check() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let mut rng = rng_from_seed(1000 + case);
        let n = rng.random_range(4..=30);
        let p = rng.random_range(1..=5);
        let ds = random_dataset(&mut rng, n, p, case % 2 == 0);
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = log_pl_gradient(&ds, &beta).unwrap();
        let h = 1e-5;
        for k in 0..p {
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (log_partial_likelihood(&ds, &up).unwrap() - log_partial_likelihood(&ds, &down).unwrap()) / (2.0 * h);
            worst = worst.max((g[k] - fd).abs() / g[k].abs().max(1.0));
        }
    }
    (worst < GRADIENT_REL_TOL, format!("100 instances, worst rel err {worst:.2e} (< {GRADIENT_REL_TOL:e})"))
}

fn newton_check() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for case in 0..20u64 {
        let mut rng = rng_from_seed(2000 + case);
        let p = 1 + (case as usize % 4);
        let n = 10 * p + rng.random_range(10..60);
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-0.8..0.8)).collect();
        let ds = cox_dataset(&mut rng, n, &beta);
        let fit = fit_lambda(&ds, 1.0, 0.0, FitControl { tol: 1e-10, max_iter: 10_000 }, None).unwrap();
        worst = worst.max(max_abs_diff(&fit.beta, &newton_mle(&ds)));
    }
    (worst < NEWTON_TOL, format!("20 instances, worst |dbeta|inf {worst:.2e} (< {NEWTON_TOL:e})"))
}

fn censored_sample(seed: u64) -> (Vec<f64>, Vec<u8>, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(2..=50);
    loop {
        let t: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..15u8))).collect();
        let s: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.6))).collect();
        let e: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..8u8)) * 0.5).collect();
        if brute_c(&t, &s, &e, &vec![1.0; n]).1 > 0.0 {
            return (t, s, e);
        }
    }
}

fn concordance_check() -> (bool, String) {
    let mismatches = (0..200u64)
        .filter(|&case| {
            let (t, s, e) = censored_sample(3000 + case);
            c_index(&t, &s, &e, None).unwrap().c_index != brute_c_index(&t, &s, &e)
        })
        .count();
    (mismatches == 0, format!("200 instances, {mismatches} differ from pair enumeration"))
}

fn influence_check() -> (bool, String) {
    let (mut worst, mut worst_sum): (f64, f64) = (0.0, 0.0);
    for case in 0..50u64 {
        let (t, s, e) = censored_sample(4000 + case);
        let r = c_index(&t, &s, &e, None).unwrap();
        let numeric = numeric_influences(&t, &s, &e, 1e-6);
        let scale = max_abs(&numeric);
        if scale > 0.0 {
            worst = worst.max(max_abs_diff(&r.influences, &numeric) / scale);
        }
        let mass: f64 = r.influences.iter().map(|u| u.abs()).sum();
        if mass > 0.0 {
            worst_sum = worst_sum.max(r.influences.iter().sum::<f64>().abs() / mass);
        }
    }
    (
        worst < IJ_REL_TOL && worst_sum < IJ_SUM_REL_TOL,
        format!("50 instances, worst rel err {worst:.2e}, worst |sum U|/sum|U| {worst_sum:.2e}"),
    )
}

fn null_predictor_check() -> (bool, String) {
    let (t, s, _) = censored_sample(5000);
    let flat = vec![1.25; t.len()];
    let r = c_index(&t, &s, &flat, None).unwrap();
    let anti: Vec<f64> = t.iter().map(|v| -v).collect();
    let c_anti = c_index(&t, &s, &anti, None).unwrap().c_index;
    (
        r.c_index == 0.5 && r.ij_variance == 0.0 && c_anti == 1.0,
        format!("constant C {} var {}, anti-ordered C {c_anti}", r.c_index, r.ij_variance),
    )
}

fn factor_check() -> (bool, String) {
    let exact = bias_factor(10) == 1.8 && width_factor(10) == 0.9f64.sqrt();
    let (point, err_cv, mse) = (0.64, 0.61, 0.0025);
    let est = NcvEstimate {
        point,
        a_values: vec![0.003],
        b_values: vec![0.0005],
        mse_raw: mse,
        mse,
        mse_floored: false,
        mse_alt_mean_first: mse,
        bias: 1.8 * (point - err_cv),
        err_cv,
        err_cv_by_repetition: vec![err_cv],
        se: (0.9 * mse).sqrt(),
        interval: (0.0, 0.0),
        k: 10,
        repetitions: 1,
        alpha: 0.10,
        trace: vec![],
        failures: vec![],
        warnings: vec![],
    };
    let (lo, hi) = ncv_interval(&est, 0.10).unwrap();
    let center = 0.64 - 1.8 * 0.03;
    let half = 1.6448536269514722 * (0.9f64 * 0.0025).sqrt();
    let ok = exact && (lo - (center - half)).abs() < 1e-12 && (hi - (center + half)).abs() < 1e-12;
    (ok, format!("bias factor {}, width factor {}, fixture interval ({lo:.6}, {hi:.6})", bias_factor(10), width_factor(10)))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn determinism_check() -> (bool, String) {
    let spec = SimSpec { trials: 3, seed: 5, ..SimSpec::new(60, 200, 6) };
    let (train, _) = generate(&spec, 0).unwrap();
    let learner = CoxLearner::default();
    let cfg = NcvConfig { k: 5, repetitions: 3, seed: 8, ..Default::default() };
    let ncv_a = in_pool(1, || ncv_estimate(&train, &cfg, &learner).unwrap());
    let ncv_b = in_pool(4, || ncv_estimate(&train, &cfg, &learner).unwrap());
    let ncv_same = serde_json::to_string(&ncv_a).unwrap() == serde_json::to_string(&ncv_b).unwrap();

    let cov = CoverageConfig { k: 5, repetitions: 2, ..Default::default() };
    let sim_a = in_pool(1, || run_coverage(&spec, &cov).unwrap());
    let sim_b = in_pool(4, || run_coverage(&spec, &cov).unwrap());
    let sim_same = serde_json::to_string(&sim_a).unwrap() == serde_json::to_string(&sim_b).unwrap();
    (ncv_same && sim_same, format!("ncv identical: {ncv_same}, simulate identical: {sim_same} (1 vs 4 threads)"))
}

/// OLS slope of `y` on `x` with its two-sided p-value for slope = 0.
fn slope_test(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 2.0).unwrap();
    (slope, 2.0 * t.sf((slope / se).abs()))
}

fn fig2_check(report: &mut Report) {
    let base = SimSpec { seed: 31, ..SimSpec::new(2, 2, 10) };
    let rows = figure2_data(&base, &[100, 200, 400, 800], 20).unwrap();
    let fits: Vec<(f64, f64)> = FIG2_MEASURES
        .iter()
        .map(|m| {
            let (x, y): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.measure == *m).map(|r| ((r.n as f64).ln(), r.value)).unzip();
            slope_test(&x, &y)
        })
        .collect();
    let (s_pl, p_pl) = fits[0];
    let ratios = (fits[1].0.abs() / s_pl.abs(), fits[2].0.abs() / s_pl.abs());
    let flat = ratios.0 < FIG2_RATIO && ratios.1 < FIG2_RATIO;
    report.line(
        "8",
        s_pl > 0.0 && p_pl < FIG2_P_VALUE && flat,
        format!(
            "slope of l/n on log n = {s_pl:.4} (p = {p_pl:.1e}), required positive with p < {FIG2_P_VALUE}; \
             l/(n log n) and null-diff/n slope ratios {:.3}, {:.3} (< {FIG2_RATIO})",
            ratios.0, ratios.1
        ),
    );
    // The log partial likelihood sums -log|risk set| terms, so l/n moves
    // like -(events/n) log n and its slope is negative. Report the
    // magnitude version alongside for reference.
    println!(
        "    info: |slope| of l/n = {:.4} (p = {p_pl:.1e}); magnitude reading {}",
        s_pl.abs(),
        if p_pl < FIG2_P_VALUE && flat { "holds" } else { "does not hold" }
    );
}

fn coverage_config() -> CoverageConfig {
    CoverageConfig {
        k: 10,
        repetitions: 50,
        alpha: 0.10,
        lambda_scope: LambdaScope::PerTrial,
        ..Default::default()
    }
}

fn describe(report: &CoverageReport) -> String {
    format!(
        "truth {:.3}, CV point {:.3} se {:.3} miss {:.3}/{:.3}, NCV point {:.3} se {:.3} miss {:.3}/{:.3}, failed trials {}",
        report.mean_truth,
        report.mean_point_cv,
        report.mean_se_cv,
        report.cv.upper,
        report.cv.lower,
        report.mean_point_ncv,
        report.mean_se_ncv,
        report.ncv.upper,
        report.ncv.lower,
        report.failures.len()
    )
}

fn coverage_low_dim(report: &mut Report) {
    let spec = SimSpec {
        beta_true: sparse_beta(10, 1, SIGNAL_P10),
        trials: 200,
        seed: COVERAGE_SEED,
        ..SimSpec::new(100, 1000, 10)
    };
    let start = Instant::now();
    let r = run_coverage(&spec, &coverage_config()).unwrap();
    println!("    n=100, p=10, 200 trials in {:.0?}: {}", start.elapsed(), describe(&r));
    let (cv_total, ncv_total) = (r.cv.total(), r.ncv.total());
    report.line(
        "9",
        cv_total >= 0.16 && (0.04..=0.16).contains(&ncv_total),
        format!("CV total miscoverage {cv_total:.3} (>= 0.16), NCV total {ncv_total:.3} (in [0.04, 0.16])"),
    );
    let (cv_pt, ncv_pt) = (r.mean_point_cv, r.mean_point_ncv);
    report.line(
        "11",
        (cv_pt - 0.605).abs() <= 0.04 && (ncv_pt - 0.594).abs() <= 0.04,
        format!("mean CV point {cv_pt:.3} (0.605 +/- 0.04), mean NCV point {ncv_pt:.3} (0.594 +/- 0.04)"),
    );
}

fn coverage_high_dim(report: &mut Report) {
    let spec = SimSpec {
        trials: 100,
        seed: COVERAGE_SEED,
        ..SimSpec::new(100, 1000, 150)
    };
    let start = Instant::now();
    let r = run_coverage(&spec, &coverage_config()).unwrap();
    println!("    n=100, p=150, 100 trials in {:.0?}: {}", start.elapsed(), describe(&r));
    let ratio = r.mean_se_ncv / r.mean_se_cv;
    report.line(
        "10",
        r.cv.upper >= 0.25 && (0.05..=0.21).contains(&r.ncv.total()) && ratio > 1.5,
        format!(
            "CV upper miscoverage {:.3} (>= 0.25), NCV total {:.3} (in [0.05, 0.21]), NCV/CV mean SE {ratio:.2} (> 1.5)",
            r.cv.upper,
            r.ncv.total()
        ),
    );
}

fn real_data_smoke() -> (bool, String) {
    let spec = SimSpec { seed: 929, ..SimSpec::new(929, 2, 11) };
    let (colon, _) = generate(&spec, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("colon_like.csv");
    write_csv(&colon, &data).unwrap();
    let loaded = load_csv(&data, "time", "status").unwrap();
    let report = run_real_data(&loaded, 150, 20, 7, &coverage_config()).unwrap();
    let summary = dir.path().join("summary.csv");
    write_summary_csv(&[SummaryRow::from_report("colon-shaped", &report)], &summary).unwrap();
    let text = std::fs::read_to_string(&summary).unwrap();
    let header_ok = text.lines().next() == Some(SUMMARY_COLUMNS.join(",").as_str());
    let completed = report.records.len();
    (
        header_ok && text.lines().count() == 2 && completed + report.failures.len() == 20,
        format!("n={} p={}, {completed}/20 trials completed, summary header matches: {header_ok}", loaded.n_samples(), loaded.n_features()),
    )
}

fn main() -> ExitCode {
    let mut report = Report { failed: 0 };
    let fast: [(&str, fn() -> (bool, String)); 7] = [
        ("1", gradient_check),
        ("2", newton_check),
        ("3", concordance_check),
        ("4", influence_check),
        ("5", null_predictor_check),
        ("6", factor_check),
        ("7", determinism_check),
    ];
    for (id, check) in fast {
        let start = Instant::now();
        let (pass, detail) = check();
        report.line(id, pass, format!("{detail} [{:.1?}]", start.elapsed()));
    }
    fig2_check(&mut report);
    coverage_low_dim(&mut report);
    coverage_high_dim(&mut report);
    let (pass, detail) = real_data_smoke();
    report.line("12", pass, detail);

    println!("acceptance: {} of 12 criteria failed", report.failed);
    if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Synthetic survival data and Monte-Carlo coverage experiments for naive
//! CV and nested-CV confidence intervals of the C-index.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concordance::c_index;
use crate::cox::{fit_lambda, FitControl};
use crate::cv::{cv_c_index, CoxLearner, LambdaStrategy, Learner, Pooling};
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::measures::{test_error, ErrorMeasureKind};
use crate::ncv::{ncv_estimate, MseFloorPolicy, NcvConfig};
use crate::rng::{derive_seed, rng_from_seed, TAG_CV, TAG_DATA, TAG_FIT, TAG_NCV, TAG_SUBSAMPLE, TAG_TRIAL};
use crate::stats::mean;

/// Generator settings: latent time `t = x'beta + c * eps` with iid standard
/// normal covariates and noise, then independent uniform censoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub p: usize,
    pub beta_true: Vec<f64>,
    pub noise_c: f64,
    /// Expected fraction of censored observations, in [0, 1).
    pub censoring_rate: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Magnitude of the non-zero true coefficients in [`SimSpec::new`].
pub const DEFAULT_SIGNAL: f64 = 0.5;

impl SimSpec {
    /// Defaults: the first `ceil(p/10)` coefficients equal
    /// [`DEFAULT_SIGNAL`], the rest zero; `c = 1`; 30% censoring.
    pub fn new(n_train: usize, n_test: usize, p: usize) -> Self {
        SimSpec {
            n_train,
            n_test,
            p,
            beta_true: sparse_beta(p, p.div_ceil(10), DEFAULT_SIGNAL),
            noise_c: 1.0,
            censoring_rate: 0.3,
            trials: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_true.len() != self.p {
            return Err(Error::InvalidParameter(format!(
                "beta_true has length {} but p = {}",
                self.beta_true.len(),
                self.p
            )));
        }
        if self.n_train < 2 || self.n_test < 2 {
            return Err(Error::InvalidParameter("n_train and n_test must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.censoring_rate) {
            return Err(Error::InvalidParameter(format!(
                "censoring_rate = {} not in [0, 1)",
                self.censoring_rate
            )));
        }
        if !self.noise_c.is_finite() || self.beta_true.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("noise_c and beta_true must be finite".into()));
        }
        Ok(())
    }
}

/// `count` leading coefficients equal to `value`, the rest zero.
pub fn sparse_beta(p: usize, count: usize, value: f64) -> Vec<f64> {
    (0..p).map(|j| if j < count { value } else { 0.0 }).collect()
}

/// Scale `s` such that censoring times `C = t_min + U * s * (t_max - t_min)`,
/// `U ~ Uniform(0, 1)`, censor a `rate` fraction of `latent` in expectation.
pub fn calibrate_censoring(latent: &[f64], rate: f64) -> Result<f64> {
    let t_min = latent.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = latent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = t_max - t_min;
    let expected = |s: f64| {
        latent
            .iter()
            .map(|t| ((t - t_min) / (s * range)).min(1.0))
            .sum::<f64>()
            / latent.len() as f64
    };
    let ceiling = latent.iter().filter(|&&t| t > t_min).count() as f64 / latent.len() as f64;
    if range <= 0.0 || rate >= ceiling {
        return Err(Error::Numerical(format!(
            "censoring rate {rate} is not attainable (at most {ceiling:.3} for these latent times)"
        )));
    }
    let (mut lo, mut hi) = (1e-12, 1.0);
    while expected(hi) > rate {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if expected(mid) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

fn draw_dataset(spec: &SimSpec, n: usize, rng: &mut crate::rng::Rng) -> (Array2<f64>, Vec<f64>) {
    let x = Array2::from_shape_fn((n, spec.p), |_| StandardNormal.sample(rng));
    let latent = x
        .outer_iter()
        .map(|row| {
            let signal: f64 = row.iter().zip(&spec.beta_true).map(|(a, b)| a * b).sum();
            let eps: f64 = StandardNormal.sample(rng);
            signal + spec.noise_c * eps
        })
        .collect();
    (x, latent)
}

/// Train and test draws for `trial`; deterministic in `(spec.seed, trial)`.
/// Both draws share one censoring distribution calibrated on their pooled
/// latent times.
pub fn generate(spec: &SimSpec, trial: usize) -> Result<(SurvivalDataset, SurvivalDataset)> {
    spec.validate()?;
    let mut rng = rng_from_seed(derive_seed(spec.seed, TAG_DATA, trial as u64));
    let (x_train, t_train) = draw_dataset(spec, spec.n_train, &mut rng);
    let (x_test, t_test) = draw_dataset(spec, spec.n_test, &mut rng);
    let all: Vec<f64> = t_train.iter().chain(&t_test).copied().collect();
    let censor = if spec.censoring_rate > 0.0 {
        let t_min = all.iter().copied().fold(f64::INFINITY, f64::min);
        let t_max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((t_min, calibrate_censoring(&all, spec.censoring_rate)? * (t_max - t_min)))
    } else {
        None
    };
    let mut finish = |x: Array2<f64>, latent: Vec<f64>| {
        let (times, status) = latent
            .into_iter()
            .map(|t| match censor {
                Some((start, width)) => {
                    let c = start + rng.random::<f64>() * width;
                    if t <= c {
                        (t, 1u8)
                    } else {
                        (c, 0u8)
                    }
                }
                None => (t, 1u8),
            })
            .unzip();
        SurvivalDataset::new(x, times, status)
    };
    let train = finish(x_train, t_train)?;
    let test = finish(x_test, t_test)?;
    Ok((train, test))
}

/// Where lambda is selected during a coverage trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaScope {
    /// The learner's own strategy runs inside every training set.
    #[default]
    PerFit,
    /// CV-PL picks lambda once on the trial's full training set; every CV
    /// and NCV fit then uses that lambda.
    PerTrial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub k: usize,
    pub repetitions: usize,
    pub alpha: f64,
    pub learner: CoxLearner,
    pub lambda_scope: LambdaScope,
    pub cv_pooling: Pooling,
    pub mse_floor: MseFloorPolicy,
    /// Largest tolerated fraction of failed trials.
    pub max_failure_rate: f64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            k: 10,
            repetitions: 50,
            alpha: 0.10,
            learner: CoxLearner::default(),
            lambda_scope: LambdaScope::PerFit,
            cv_pooling: Pooling::PerFold,
            mse_floor: MseFloorPolicy::ZeroFloor,
            max_failure_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Miss {
    Covered,
    /// The interval lies entirely above the truth.
    Upper,
    /// The interval lies entirely below the truth.
    Lower,
}

pub fn classify_miss(truth: f64, interval: (f64, f64)) -> Miss {
    if truth < interval.0 {
        Miss::Upper
    } else if truth > interval.1 {
        Miss::Lower
    } else {
        Miss::Covered
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Test-set C-index of the model trained on the full training set.
    pub truth: f64,
    pub lambda: Option<f64>,
    pub cv_point: f64,
    pub cv_se: f64,
    pub cv_interval: (f64, f64),
    pub cv_miss: Miss,
    pub ncv_point: f64,
    pub ncv_bias: f64,
    pub ncv_se: f64,
    pub ncv_interval: (f64, f64),
    pub ncv_miss: Miss,
    pub ncv_mse_floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub reason: String,
}

/// Rates for one interval method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiscoverageRates {
    pub upper: f64,
    pub lower: f64,
    pub coverage: f64,
}

impl MiscoverageRates {
    pub fn total(&self) -> f64 {
        self.upper + self.lower
    }

    fn from_misses(misses: impl Iterator<Item = Miss>) -> Self {
        let (mut up, mut low, mut n) = (0usize, 0usize, 0usize);
        for m in misses {
            n += 1;
            match m {
                Miss::Upper => up += 1,
                Miss::Lower => low += 1,
                Miss::Covered => {}
            }
        }
        let nf = n.max(1) as f64;
        MiscoverageRates {
            upper: up as f64 / nf,
            lower: low as f64 / nf,
            coverage: (n - up - low) as f64 / nf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// States the upper/lower miscoverage convention.
    pub convention: String,
    pub alpha: f64,
    pub k: usize,
    pub repetitions: usize,
    pub trials_requested: usize,
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
    pub cv: MiscoverageRates,
    pub ncv: MiscoverageRates,
    pub mean_point_cv: f64,
    pub mean_point_ncv: f64,
    pub mean_se_cv: f64,
    pub mean_se_ncv: f64,
    pub mean_truth: f64,
    /// Fraction of trials where the NCV interval is wider than the CV interval.
    pub ncv_wider_fraction: f64,
}

pub const MISS_CONVENTION: &str =
    "upper = truth below the interval (interval too high); lower = truth above the interval";

impl CoverageReport {
    fn assemble(config: &CoverageConfig, requested: usize, results: Vec<std::result::Result<TrialRecord, TrialFailure>>) -> Result<Self> {
        let mut records = Vec::new();
        let mut failures = Vec::new();
        for r in results {
            match r {
                Ok(rec) => records.push(rec),
                Err(f) => failures.push(f),
            }
        }
        if !failures.is_empty() && failures.len() as f64 > config.max_failure_rate * requested as f64 {
            return Err(Error::TooManyFailures {
                failed: failures.len(),
                total: requested,
                limit: config.max_failure_rate * 100.0,
            });
        }
        if records.is_empty() {
            return Err(Error::Numerical("no trial completed".into()));
        }
        let col = |f: &dyn Fn(&TrialRecord) -> f64| mean(&records.iter().map(f).collect::<Vec<_>>());
        let wider = records
            .iter()
            .filter(|r| r.ncv_interval.1 - r.ncv_interval.0 > r.cv_interval.1 - r.cv_interval.0)
            .count() as f64
            / records.len() as f64;
        Ok(CoverageReport {
            convention: MISS_CONVENTION.to_string(),
            alpha: config.alpha,
            k: config.k,
            repetitions: config.repetitions,
            trials_requested: requested,
            cv: MiscoverageRates::from_misses(records.iter().map(|r| r.cv_miss)),
            ncv: MiscoverageRates::from_misses(records.iter().map(|r| r.ncv_miss)),
            mean_point_cv: col(&|r| r.cv_point),
            mean_point_ncv: col(&|r| r.ncv_point),
            mean_se_cv: col(&|r| r.cv_se),
            mean_se_ncv: col(&|r| r.ncv_se),
            mean_truth: col(&|r| r.truth),
            ncv_wider_fraction: wider,
            records,
            failures,
        })
    }
}

/// One coverage trial: intervals from `train`, truth from `test`.
pub fn run_trial(
    train: &SurvivalDataset,
    test: &SurvivalDataset,
    config: &CoverageConfig,
    trial: usize,
    trial_seed: u64,
) -> Result<TrialRecord> {
    let fit_seed = derive_seed(trial_seed, TAG_FIT, 0);
    let (learner, final_model) = match (config.lambda_scope, &config.learner.strategy) {
        (LambdaScope::PerTrial, LambdaStrategy::CvPl { rule, folds }) => {
            let model = config.learner.select_by_cvpl(train, *rule, *folds, fit_seed)?;
            let fixed = CoxLearner {
                strategy: LambdaStrategy::Fixed { lambda: model.lambda },
                warm_start: Some(model.beta.clone()),
                ..config.learner.clone()
            };
            (fixed, model)
        }
        _ => {
            let model = config.learner.fit(train, fit_seed)?;
            (config.learner.clone(), model)
        }
    };
    let eta = learner.predict(&final_model, test.covariates())?;
    let truth = c_index(test.times(), test.status(), &eta, None)?.c_index;

    let cv = cv_c_index(train, &learner, config.k, config.alpha, derive_seed(trial_seed, TAG_CV, 0), config.cv_pooling)?;
    let ncv_config = NcvConfig {
        k: config.k,
        repetitions: config.repetitions,
        alpha: config.alpha,
        seed: derive_seed(trial_seed, TAG_NCV, 0),
        mse_floor: config.mse_floor,
        ..Default::default()
    };
    let ncv = ncv_estimate(train, &ncv_config, &learner)?;
    Ok(TrialRecord {
        trial,
        truth,
        lambda: match config.lambda_scope {
            LambdaScope::PerTrial => Some(final_model.lambda),
            LambdaScope::PerFit => None,
        },
        cv_point: cv.point,
        cv_se: cv.naive_se,
        cv_interval: cv.interval,
        cv_miss: classify_miss(truth, cv.interval),
        ncv_point: ncv.point,
        ncv_bias: ncv.bias,
        ncv_se: ncv.se,
        ncv_interval: ncv.interval,
        ncv_miss: classify_miss(truth, ncv.interval),
        ncv_mse_floored: ncv.mse_floored,
    })
}

fn validate_coverage(config: &CoverageConfig) -> Result<()> {
    NcvConfig {
        k: config.k,
        repetitions: config.repetitions,
        alpha: config.alpha,
        ..Default::default()
    }
    .validate()?;
    if config.lambda_scope == LambdaScope::PerTrial && !matches!(config.learner.strategy, LambdaStrategy::CvPl { .. }) {
        return Err(Error::InvalidParameter("per-trial lambda selection needs a CV-PL learner strategy".into()));
    }
    Ok(())
}

/// Simulated coverage experiment over `spec.trials` independent draws.
pub fn run_coverage(spec: &SimSpec, config: &CoverageConfig) -> Result<CoverageReport> {
    spec.validate()?;
    validate_coverage(config)?;
    let results: Vec<_> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(spec.seed, TAG_TRIAL, trial as u64);
            generate(spec, trial)
                .and_then(|(train, test)| run_trial(&train, &test, config, trial, seed))
                .map_err(|e| {
                    log::warn!("trial {trial} failed: {e}");
                    TrialFailure {
                        trial,
                        reason: e.to_string(),
                    }
                })
        })
        .collect();
    CoverageReport::assemble(config, spec.trials, results)
}

/// Row indices `(train, test)` of a random subsample split.
pub fn subsample_split(n: usize, n_train: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Coverage on a real dataset: each trial draws `n_train` rows for the
/// intervals and scores the truth on the remaining rows.
pub fn run_real_data(
    dataset: &SurvivalDataset,
    n_train: usize,
    trials: usize,
    seed: u64,
    config: &CoverageConfig,
) -> Result<CoverageReport> {
    validate_coverage(config)?;
    if n_train >= dataset.n_samples() || n_train < config.k {
        return Err(Error::InvalidParameter(format!(
            "n_train = {n_train} must be in [K, n) with n = {}",
            dataset.n_samples()
        )));
    }
    let results: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let (train_idx, test_idx) = subsample_split(
                dataset.n_samples(),
                n_train,
                derive_seed(seed, TAG_SUBSAMPLE, trial as u64),
            );
            let trial_seed = derive_seed(seed, TAG_TRIAL, trial as u64);
            dataset
                .subset(&train_idx)
                .and_then(|train| Ok((train, dataset.subset(&test_idx)?)))
                .and_then(|(train, test)| run_trial(&train, &test, config, trial, trial_seed))
                .map_err(|e| {
                    log::warn!("trial {trial} failed: {e}");
                    TrialFailure {
                        trial,
                        reason: e.to_string(),
                    }
                })
        })
        .collect();
    CoverageReport::assemble(config, trials, results)
}

/// One row of the point-estimate / mean-SE / miscoverage summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting: String,
    pub point_cv: f64,
    pub point_ncv: f64,
    pub mean_se_cv: f64,
    pub mean_se_ncv: f64,
    pub cv_upper: f64,
    pub cv_lower: f64,
    pub ncv_upper: f64,
    pub ncv_lower: f64,
}

impl SummaryRow {
    pub fn from_report(setting: &str, report: &CoverageReport) -> Self {
        SummaryRow {
            setting: setting.to_string(),
            point_cv: report.mean_point_cv,
            point_ncv: report.mean_point_ncv,
            mean_se_cv: report.mean_se_cv,
            mean_se_ncv: report.mean_se_ncv,
            cv_upper: report.cv.upper,
            cv_lower: report.cv.lower,
            ncv_upper: report.ncv.upper,
            ncv_lower: report.ncv.lower,
        }
    }
}

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "setting",
    "point_cv",
    "point_ncv",
    "mean_se_cv",
    "mean_se_ncv",
    "cv_upper",
    "cv_lower",
    "ncv_upper",
    "ncv_lower",
];

pub fn write_summary_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path.as_ref())?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One cell of the sample-size sensitivity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub n: usize,
    pub replicate: usize,
    pub measure: String,
    pub value: f64,
}

pub const FIG2_MEASURES: [&str; 3] = ["log_pl_per_n", "log_pl_per_nlogn", "null_deviance_diff_per_n"];

/// For each `n` in `n_grid` and each replicate: fit the unpenalized Cox
/// model on a training draw of size `n` and evaluate `l/n`, `l/(n ln n)` and
/// `(l(0) - l)/n` on an independent test draw of size `n`.
pub fn figure2_data(base: &SimSpec, n_grid: &[usize], replicates: usize) -> Result<Vec<Fig2Row>> {
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("n_grid must be strictly increasing".into()));
    }
    if n_grid.first().is_some_and(|&n| n < 2) {
        return Err(Error::InvalidParameter("sample sizes must be >= 2".into()));
    }
    let cells: Vec<(usize, usize)> = n_grid
        .iter()
        .flat_map(|&n| (0..replicates).map(move |r| (n, r)))
        .collect();
    let rows: Vec<Result<Vec<Fig2Row>>> = cells
        .par_iter()
        .map(|&(n, rep)| {
            let spec = SimSpec {
                n_train: n,
                n_test: n,
                seed: derive_seed(base.seed, n as u64, rep as u64),
                ..base.clone()
            };
            let (train, test) = generate(&spec, 0)?;
            let fit = fit_lambda(&train, 1.0, 0.0, FitControl::default(), None)?;
            let nf = n as f64;
            let values = [
                test_error(ErrorMeasureKind::LogPlPerN, &fit.beta, &test)?,
                test_error(ErrorMeasureKind::LogPlPerNLogN, &fit.beta, &test)?,
                test_error(ErrorMeasureKind::NullDevianceDiff, &fit.beta, &test)? / nf,
            ];
            Ok(FIG2_MEASURES
                .iter()
                .zip(values)
                .map(|(m, value)| Fig2Row {
                    n,
                    replicate: rep,
                    measure: m.to_string(),
                    value,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

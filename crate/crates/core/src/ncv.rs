//! Nested cross-validation estimate of the mean squared error of the CV
//! C-index, with bias correction and the resulting confidence interval.
//!
//! For each of `r` random partitions into `K` folds and each held-out fold:
//!
//! * `err_in`  - pooled C-index of an inner (K-1)-fold CV over the remaining folds,
//! * `e_out`   - C-index on the held-out fold of the model trained on the remaining folds,
//! * `var_out` - infinitesimal-jackknife variance of `e_out`.
//!
//! Then `a = mean (err_in - e_out)^2`, `b = mean var_out`, `MSE = a - b`,
//! the point estimate is the mean of `err_in`, the bias is
//! `(1 + (K-2)/K) (Err_NCV - Err_CV)` and the interval is
//! `point - bias +- q_{1-alpha/2} sqrt((K-1)/K) sqrt(MSE)`.

use std::io::Write;

use ndarray::Axis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concordance::c_index;
use crate::cv::Learner;
use crate::data::{assign_folds, FoldAssignment, SurvivalDataset};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, TAG_FIT, TAG_REPETITION};
use crate::stats::{mean, two_sided_z};

/// What to do when `mean(a) - mean(b)` comes out negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseFloorPolicy {
    /// Clamp at zero.
    #[default]
    ZeroFloor,
    /// Use `mean(a)` alone.
    AFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcvConfig {
    pub k: usize,
    pub repetitions: usize,
    pub alpha: f64,
    pub seed: u64,
    pub mse_floor: MseFloorPolicy,
    /// Largest tolerated fraction of failed splits.
    pub max_failure_rate: f64,
}

impl Default for NcvConfig {
    fn default() -> Self {
        NcvConfig {
            k: 10,
            repetitions: 50,
            alpha: 0.10,
            seed: 0,
            mse_floor: MseFloorPolicy::ZeroFloor,
            max_failure_rate: 0.05,
        }
    }
}

impl NcvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::InvalidParameter(format!(
                "nested CV needs K >= 3 (inner CV uses K - 1 folds), got {}",
                self.k
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.max_failure_rate) {
            return Err(Error::InvalidParameter("max_failure_rate must be in [0, 1)".into()));
        }
        two_sided_z(self.alpha)?;
        Ok(())
    }
}

/// Result of one held-out fold of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub repetition: usize,
    pub fold: usize,
    pub err_in: f64,
    pub e_out: f64,
    pub var_out: f64,
    pub n_out: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFailure {
    pub repetition: usize,
    pub fold: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcvEstimate {
    /// Mean of all `err_in`.
    pub point: f64,
    /// `(err_in - e_out)^2` per successful split, in trace order.
    pub a_values: Vec<f64>,
    /// `var_out` per successful split, in trace order.
    pub b_values: Vec<f64>,
    /// `mean(a) - mean(b)` before the floor policy.
    pub mse_raw: f64,
    pub mse: f64,
    pub mse_floored: bool,
    /// Alternative reading of the `a` term: per repetition, the squared
    /// difference of the fold-averaged `err_in` and `e_out`, averaged over
    /// repetitions, minus `mean(b) / K`. Reported for sensitivity only.
    pub mse_alt_mean_first: f64,
    pub bias: f64,
    /// Standard K-fold CV C-index averaged over repetitions (same partitions).
    pub err_cv: f64,
    pub err_cv_by_repetition: Vec<f64>,
    /// `sqrt((K-1)/K * mse)`.
    pub se: f64,
    pub interval: (f64, f64),
    pub k: usize,
    pub repetitions: usize,
    pub alpha: f64,
    pub trace: Vec<SplitRecord>,
    pub failures: Vec<SplitFailure>,
    pub warnings: Vec<String>,
}

/// Bias scaling `1 + (K-2)/K`.
pub fn bias_factor(k: usize) -> f64 {
    1.0 + (k as f64 - 2.0) / k as f64
}

/// Width scaling `sqrt((K-1)/K)` applied to `sqrt(MSE)`.
pub fn width_factor(k: usize) -> f64 {
    ((k as f64 - 1.0) / k as f64).sqrt()
}

/// `point - bias +- q_{1-alpha/2} * sqrt((K-1)/K * mse)`.
pub fn ncv_interval(estimate: &NcvEstimate, alpha: f64) -> Result<(f64, f64)> {
    interval_from_parts(estimate.point, estimate.bias, estimate.mse, estimate.k, alpha)
}

pub fn interval_from_parts(point: f64, bias: f64, mse: f64, k: usize, alpha: f64) -> Result<(f64, f64)> {
    if !(mse >= 0.0) {
        return Err(Error::InvalidParameter(format!("mse = {mse} must be >= 0")));
    }
    let half = two_sided_z(alpha)? * width_factor(k) * mse.sqrt();
    let center = point - bias;
    Ok((center - half, center + half))
}

/// The three statistics of one nested split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStats {
    pub err_in: f64,
    pub e_out: f64,
    pub var_out: f64,
}

struct SplitWork {
    stats: Result<SplitStats>,
    /// Held-out fold members and their scores from the outer model.
    outer: Option<(Vec<usize>, Vec<f64>)>,
}

fn concordance_of(dataset: &SurvivalDataset, idx: &[usize], preds: &[f64]) -> Result<crate::concordance::ConcordanceResult> {
    let t: Vec<f64> = idx.iter().map(|&i| dataset.times()[i]).collect();
    let s: Vec<u8> = idx.iter().map(|&i| dataset.status()[i]).collect();
    c_index(&t, &s, preds, None)
}

fn fit_and_predict<L: Learner>(
    dataset: &SurvivalDataset,
    learner: &L,
    train_idx: &[usize],
    test_idx: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let train = dataset.subset(train_idx)?;
    let model = learner.fit(&train, seed)?;
    let x = dataset.covariates().select(Axis(0), test_idx);
    learner.predict(&model, x.view())
}

fn run_split<L: Learner>(
    dataset: &SurvivalDataset,
    held_out: usize,
    folds: &FoldAssignment,
    learner: &L,
    seed: u64,
) -> SplitWork {
    let k = folds.k;
    let members = folds.members(held_out);
    let outer_train = folds.complement(held_out);
    let outer = fit_and_predict(dataset, learner, &outer_train, &members, derive_seed(seed, TAG_FIT, 0));
    let outer = match outer {
        Ok(preds) => (members.clone(), preds),
        Err(e) => return SplitWork { stats: Err(e), outer: None },
    };

    let stats = (|| {
        let mut inner_pred = vec![f64::NAN; dataset.n_samples()];
        for inner in (0..k).filter(|&f| f != held_out) {
            let test_idx = folds.members(inner);
            let train_idx: Vec<usize> = (0..dataset.n_samples())
                .filter(|&i| folds.fold_of[i] != held_out && folds.fold_of[i] != inner)
                .collect();
            let preds = fit_and_predict(dataset, learner, &train_idx, &test_idx, derive_seed(seed, TAG_FIT, 1 + inner as u64))?;
            for (i, p) in test_idx.into_iter().zip(preds) {
                inner_pred[i] = p;
            }
        }
        let inner_idx = &outer_train;
        let pooled: Vec<f64> = inner_idx.iter().map(|&i| inner_pred[i]).collect();
        let err_in = concordance_of(dataset, inner_idx, &pooled)?.c_index;
        let out = concordance_of(dataset, &outer.0, &outer.1)?;
        Ok(SplitStats {
            err_in,
            e_out: out.c_index,
            var_out: out.ij_variance,
        })
    })();
    SplitWork { stats, outer: Some(outer) }
}

/// Runs one held-out fold: inner (K-1)-fold CV on the remaining folds, and
/// the held-out evaluation of the model trained on all of them.
pub fn ncv_single_split<L: Learner>(
    dataset: &SurvivalDataset,
    held_out: usize,
    folds: &FoldAssignment,
    learner: &L,
    seed: u64,
) -> Result<SplitStats> {
    if folds.k < 3 {
        return Err(Error::InvalidParameter(format!("nested CV needs K >= 3, got {}", folds.k)));
    }
    if held_out >= folds.k {
        return Err(Error::InvalidParameter(format!("fold {held_out} out of range for K = {}", folds.k)));
    }
    if folds.fold_of.len() != dataset.n_samples() {
        return Err(Error::InvalidParameter("fold assignment does not match dataset size".into()));
    }
    run_split(dataset, held_out, folds, learner, seed).stats
}

/// Fold partition used by repetition `rep` of [`ncv_estimate`].
pub fn repetition_folds(dataset: &SurvivalDataset, config: &NcvConfig, rep: usize) -> Result<FoldAssignment> {
    assign_folds(
        dataset.n_samples(),
        config.k,
        dataset.status(),
        derive_seed(config.seed, TAG_REPETITION, rep as u64),
    )
}

/// Full nested-CV estimate over `config.repetitions` random partitions.
///
/// Splits run in parallel; every random draw is keyed by (seed, repetition,
/// fold) and aggregation follows trace order, so the result does not depend
/// on the thread count.
pub fn ncv_estimate<L: Learner>(dataset: &SurvivalDataset, config: &NcvConfig, learner: &L) -> Result<NcvEstimate> {
    config.validate()?;
    let k = config.k;
    let partitions = (0..config.repetitions)
        .map(|rep| repetition_folds(dataset, config, rep))
        .collect::<Result<Vec<_>>>()?;

    let units: Vec<(usize, usize)> = (0..config.repetitions)
        .flat_map(|rep| (0..k).map(move |f| (rep, f)))
        .collect();
    let work: Vec<SplitWork> = units
        .par_iter()
        .map(|&(rep, fold)| {
            let rep_seed = derive_seed(config.seed, TAG_REPETITION, rep as u64);
            let split_seed = derive_seed(rep_seed, TAG_FIT, fold as u64);
            run_split(dataset, fold, &partitions[rep], learner, split_seed)
        })
        .collect();

    let mut trace = Vec::new();
    let mut failures = Vec::new();
    let mut err_cv_by_repetition = Vec::new();
    let mut warnings = Vec::new();
    let mut alt_terms = Vec::new();
    for rep in 0..config.repetitions {
        let rep_work = &work[rep * k..(rep + 1) * k];
        let mut rep_records = Vec::new();
        for (fold, w) in rep_work.iter().enumerate() {
            match &w.stats {
                Ok(s) => rep_records.push(SplitRecord {
                    repetition: rep,
                    fold,
                    err_in: s.err_in,
                    e_out: s.e_out,
                    var_out: s.var_out,
                    n_out: partitions[rep].fold_of.iter().filter(|&&f| f == fold).count(),
                }),
                Err(e) => failures.push(SplitFailure {
                    repetition: rep,
                    fold,
                    reason: e.to_string(),
                }),
            }
        }
        // Standard K-fold CV on the full data reuses the outer models.
        if rep_work.iter().all(|w| w.outer.is_some()) {
            let mut preds = vec![f64::NAN; dataset.n_samples()];
            for w in rep_work {
                let (members, p) = w.outer.as_ref().expect("checked above");
                for (&i, &v) in members.iter().zip(p) {
                    preds[i] = v;
                }
            }
            match c_index(dataset.times(), dataset.status(), &preds, None) {
                Ok(r) => err_cv_by_repetition.push(r.c_index),
                Err(e) => warnings.push(format!("repetition {rep}: CV estimate unavailable ({e})")),
            }
        }
        if !rep_records.is_empty() {
            let ins: Vec<f64> = rep_records.iter().map(|r| r.err_in).collect();
            let outs: Vec<f64> = rep_records.iter().map(|r| r.e_out).collect();
            alt_terms.push((mean(&ins) - mean(&outs)).powi(2));
        }
        trace.extend(rep_records);
    }

    let total = units.len();
    if failures.len() as f64 >= config.max_failure_rate * total as f64 && !failures.is_empty() {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total,
            limit: config.max_failure_rate * 100.0,
        });
    }
    if err_cv_by_repetition.is_empty() {
        return Err(Error::Numerical("no repetition produced a CV estimate".into()));
    }

    let a_values: Vec<f64> = trace.iter().map(|r| (r.err_in - r.e_out).powi(2)).collect();
    let b_values: Vec<f64> = trace.iter().map(|r| r.var_out).collect();
    let point = mean(&trace.iter().map(|r| r.err_in).collect::<Vec<_>>());
    let mse_raw = mean(&a_values) - mean(&b_values);
    let (mse, mse_floored) = if mse_raw >= 0.0 {
        (mse_raw, false)
    } else {
        let fallback = match config.mse_floor {
            MseFloorPolicy::ZeroFloor => 0.0,
            MseFloorPolicy::AFallback => mean(&a_values),
        };
        warnings.push(format!(
            "mean(a) - mean(b) = {mse_raw:.3e} < 0; using {fallback:.3e} ({:?})",
            config.mse_floor
        ));
        (fallback, true)
    };
    let err_cv = mean(&err_cv_by_repetition);
    let bias = bias_factor(k) * (point - err_cv);
    let interval = interval_from_parts(point, bias, mse, k, config.alpha)?;
    Ok(NcvEstimate {
        point,
        mse_alt_mean_first: mean(&alt_terms) - mean(&b_values) / k as f64,
        a_values,
        b_values,
        mse_raw,
        mse,
        mse_floored,
        bias,
        err_cv,
        err_cv_by_repetition,
        se: width_factor(k) * mse.sqrt(),
        interval,
        k,
        repetitions: config.repetitions,
        alpha: config.alpha,
        trace,
        failures,
        warnings,
    })
}

/// Writes one JSON object per split record.
pub fn write_trace_jsonl<W: Write>(estimate: &NcvEstimate, mut out: W) -> Result<()> {
    for record in &estimate.trace {
        let line = serde_json::to_string(record).map_err(|e| Error::Numerical(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

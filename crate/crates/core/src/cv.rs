//! K-fold cross-validation of the C-index and the naive interval built from it.
//!
//! The procedure being validated is a [`Learner`]: anything that maps a
//! training set to a model producing risk scores. [`CoxLearner`] wraps the
//! penalized Cox fitter together with its lambda-selection step, so the
//! selection is repeated inside every training set.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concordance::c_index;
use crate::cox::{fit_lambda, fit_path, linear_predictor, FitControl, PenaltySpec};
use crate::data::{assign_folds, FoldAssignment, SurvivalDataset};
use crate::error::{Error, Result};
use crate::measures::{cv_partial_likelihood, select_lambda, LambdaRule};
use crate::rng::{derive_seed, TAG_FIT, TAG_FOLDS};
use crate::stats::{mean, sample_sd, two_sided_z};

/// A fitting procedure producing risk scores (higher = shorter survival).
pub trait Learner: Sync {
    type Model: Send + Sync;

    /// Trains on `train`. `seed` drives any internal randomness.
    fn fit(&self, train: &SurvivalDataset, seed: u64) -> Result<Self::Model>;

    fn predict(&self, model: &Self::Model, covariates: ArrayView2<'_, f64>) -> Result<Vec<f64>>;
}

/// How [`CoxLearner`] picks lambda on each training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LambdaStrategy {
    /// Maximize (or one-SE) the K-fold CV partial likelihood on the training set.
    CvPl { rule: LambdaRule, folds: usize },
    /// Always use this lambda.
    Fixed { lambda: f64 },
}

impl Default for LambdaStrategy {
    fn default() -> Self {
        LambdaStrategy::CvPl {
            rule: LambdaRule::Max,
            folds: 10,
        }
    }
}

/// Penalized Cox regression with its lambda-selection step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxLearner {
    pub penalty: PenaltySpec,
    pub control: FitControl,
    pub strategy: LambdaStrategy,
    /// Original-scale coefficients used to warm-start fixed-lambda fits.
    #[serde(skip)]
    pub warm_start: Option<Vec<f64>>,
}

impl Default for CoxLearner {
    fn default() -> Self {
        CoxLearner {
            penalty: PenaltySpec::default(),
            control: FitControl::default(),
            strategy: LambdaStrategy::default(),
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxModel {
    pub beta: Vec<f64>,
    pub lambda: f64,
}

impl CoxLearner {
    pub fn new(penalty: PenaltySpec, strategy: LambdaStrategy) -> Self {
        CoxLearner {
            penalty,
            strategy,
            ..Default::default()
        }
    }

    /// Runs the CV-PL selection on `train`, returning the chosen lambda and
    /// the full-data coefficients at it.
    pub fn select_by_cvpl(&self, train: &SurvivalDataset, rule: LambdaRule, folds: usize, seed: u64) -> Result<CoxModel> {
        let assignment = assign_folds(train.n_samples(), folds, train.status(), seed)?;
        let curve = cv_partial_likelihood(train, &self.penalty, self.control, &assignment)?;
        let index = select_lambda(&curve.total, rule, Some(&curve.per_fold))?;
        let path = PenaltySpec {
            lambda_path: Some(curve.lambdas[..=index].to_vec()),
            ..self.penalty.clone()
        };
        let fit = fit_path(train, &path, self.control)?;
        Ok(CoxModel {
            beta: fit.beta(index),
            lambda: curve.lambdas[index],
        })
    }
}

impl Learner for CoxLearner {
    type Model = CoxModel;

    fn fit(&self, train: &SurvivalDataset, seed: u64) -> Result<CoxModel> {
        match &self.strategy {
            LambdaStrategy::CvPl { rule, folds } => self.select_by_cvpl(train, *rule, *folds, seed),
            LambdaStrategy::Fixed { lambda } => {
                let fit = fit_lambda(train, self.penalty.alpha, *lambda, self.control, self.warm_start.as_deref())?;
                if !fit.converged {
                    log::warn!("fixed-lambda fit did not converge at lambda = {lambda:.4e}");
                }
                Ok(CoxModel {
                    beta: fit.beta,
                    lambda: *lambda,
                })
            }
        }
    }

    fn predict(&self, model: &CoxModel, covariates: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        linear_predictor(&model.beta, covariates)
    }
}

/// How fold predictions are turned into a CV C-index and its naive SE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// One C over all out-of-fold predictions; SE from its IJ variance.
    Pooled,
    /// Mean of the per-fold C values; SE = sd / sqrt(K).
    #[default]
    PerFold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEstimate {
    pub point: f64,
    /// Held-out C of each fold (NaN where a fold has no comparable pair under pooling).
    pub fold_values: Vec<f64>,
    pub naive_se: f64,
    pub interval: (f64, f64),
    pub alpha: f64,
    pub pooling: Pooling,
    pub k: usize,
    pub seed: u64,
}

/// Out-of-fold risk scores: entry `i` comes from the model trained without
/// observation `i`'s fold. `fit_seed` labels each fold's training run.
pub fn out_of_fold_predictions<L: Learner>(
    dataset: &SurvivalDataset,
    learner: &L,
    folds: &FoldAssignment,
    fit_seed: u64,
) -> Result<Vec<f64>> {
    let per_fold: Vec<Result<(Vec<usize>, Vec<f64>)>> = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let members = folds.members(f);
            let train = dataset.subset(&folds.complement(f))?;
            let model = learner.fit(&train, derive_seed(fit_seed, TAG_FIT, f as u64))?;
            let held_out = dataset.covariates().select(ndarray::Axis(0), &members);
            let preds = learner.predict(&model, held_out.view())?;
            Ok((members, preds))
        })
        .collect();
    let mut out = vec![f64::NAN; dataset.n_samples()];
    for r in per_fold {
        let (members, preds) = r?;
        for (i, p) in members.into_iter().zip(preds) {
            out[i] = p;
        }
    }
    Ok(out)
}

fn fold_c(dataset: &SurvivalDataset, members: &[usize], preds: &[f64]) -> Result<f64> {
    let t: Vec<f64> = members.iter().map(|&i| dataset.times()[i]).collect();
    let s: Vec<u8> = members.iter().map(|&i| dataset.status()[i]).collect();
    let e: Vec<f64> = members.iter().map(|&i| preds[i]).collect();
    Ok(c_index(&t, &s, &e, None)?.c_index)
}

/// Standard K-fold CV estimate of the C-index with its naive interval.
pub fn cv_c_index<L: Learner>(
    dataset: &SurvivalDataset,
    learner: &L,
    k: usize,
    alpha: f64,
    seed: u64,
    pooling: Pooling,
) -> Result<CvEstimate> {
    two_sided_z(alpha)?;
    let folds = assign_folds(dataset.n_samples(), k, dataset.status(), derive_seed(seed, TAG_FOLDS, 0))?;
    let preds = out_of_fold_predictions(dataset, learner, &folds, seed)?;
    let (point, fold_values, naive_se) = match pooling {
        Pooling::PerFold => {
            let values = (0..k)
                .map(|f| fold_c(dataset, &folds.members(f), &preds))
                .collect::<Result<Vec<f64>>>()?;
            let se = sample_sd(&values) / (k as f64).sqrt();
            (mean(&values), values, se)
        }
        Pooling::Pooled => {
            let r = c_index(dataset.times(), dataset.status(), &preds, None)?;
            let values = (0..k)
                .map(|f| fold_c(dataset, &folds.members(f), &preds).unwrap_or(f64::NAN))
                .collect();
            (r.c_index, values, r.ij_variance.sqrt())
        }
    };
    Ok(CvEstimate {
        point,
        fold_values,
        naive_se,
        interval: naive_interval(point, naive_se, alpha)?,
        alpha,
        pooling,
        k,
        seed,
    })
}

/// `point +- q_{1-alpha/2} * se`.
pub fn naive_interval(point: f64, se: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(se >= 0.0) {
        return Err(Error::InvalidParameter(format!("standard error {se} must be >= 0")));
    }
    let half = two_sided_z(alpha)? * se;
    Ok((point - half, point + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_interval_at_zero_se() {
        assert_eq!(naive_interval(0.6, 0.0, 0.1).unwrap(), (0.6, 0.6));
    }

    #[test]
    fn interval_width_uses_normal_quantile() {
        let (lo, hi) = naive_interval(0.0, 1.0, 0.10).unwrap();
        assert!((hi - lo - 2.0 * 1.6449).abs() < 1e-4);
    }

    #[test]
    fn table_row_arithmetic() {
        let (lo, hi) = naive_interval(0.605, 0.037, 0.1).unwrap();
        assert!((lo - 0.544).abs() < 5e-4, "{lo}");
        assert!((hi - 0.666).abs() < 5e-4, "{hi}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(naive_interval(0.5, -1.0, 0.1).is_err());
        assert!(naive_interval(0.5, 0.1, 1.5).is_err());
        assert!(naive_interval(0.5, f64::NAN, 0.1).is_err());
    }
}

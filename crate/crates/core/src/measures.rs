//! Test-error measures for fitted Cox models and the cross-validated
//! partial likelihood used for lambda selection.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concordance::c_index;
use crate::cox::{fit_path, linear_predictor, log_pl_of_predictor, FitControl, PenaltySpec};
use crate::data::{FoldAssignment, SurvivalDataset};
use crate::error::{Error, Result};
use crate::stats::sample_sd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMeasureKind {
    /// Harrell's C of the linear predictor.
    CIndex,
    /// `l(beta) / n`.
    LogPlPerN,
    /// `l(beta) / (n ln n)`.
    LogPlPerNLogN,
    /// `l(0) - l(beta)`.
    NullDevianceDiff,
}

impl ErrorMeasureKind {
    pub const ALL: [ErrorMeasureKind; 4] = [
        ErrorMeasureKind::CIndex,
        ErrorMeasureKind::LogPlPerN,
        ErrorMeasureKind::LogPlPerNLogN,
        ErrorMeasureKind::NullDevianceDiff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorMeasureKind::CIndex => "c_index",
            ErrorMeasureKind::LogPlPerN => "log_pl_per_n",
            ErrorMeasureKind::LogPlPerNLogN => "log_pl_per_nlogn",
            ErrorMeasureKind::NullDevianceDiff => "null_deviance_diff",
        }
    }
}

/// Evaluates `beta` on `test` under the chosen measure.
pub fn test_error(kind: ErrorMeasureKind, beta: &[f64], test: &SurvivalDataset) -> Result<f64> {
    let eta = linear_predictor(beta, test.covariates())?;
    let n = test.n_samples() as f64;
    let model = || log_pl_of_predictor(test.times(), test.status(), &eta);
    Ok(match kind {
        ErrorMeasureKind::CIndex => c_index(test.times(), test.status(), &eta, None)?.c_index,
        ErrorMeasureKind::LogPlPerN => model() / n,
        ErrorMeasureKind::LogPlPerNLogN => model() / (n * n.ln()),
        ErrorMeasureKind::NullDevianceDiff => {
            let null = log_pl_of_predictor(test.times(), test.status(), &vec![0.0; eta.len()]);
            null - model()
        }
    })
}

/// Cross-validated partial likelihood along a lambda path.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPlCurve {
    pub lambdas: Vec<f64>,
    /// Sum over folds, per lambda.
    pub total: Vec<f64>,
    /// K x n_lambda fold contributions `l_full(b_f) - l_{-f}(b_f)`.
    pub per_fold: Array2<f64>,
}

/// K-fold van Houwelingen CV partial likelihood.
///
/// The lambda path is resolved once on the full data and shared by all fold
/// fits. Fold `f` contributes `l(b_f) - l_{-f}(b_f)` where `b_f` is fit
/// without fold `f`, `l` is evaluated on all observations and `l_{-f}` on
/// the observations outside fold `f`.
pub fn cv_partial_likelihood(
    dataset: &SurvivalDataset,
    penalty: &PenaltySpec,
    control: FitControl,
    folds: &FoldAssignment,
) -> Result<CvPlCurve> {
    if folds.fold_of.len() != dataset.n_samples() {
        return Err(Error::InvalidParameter(format!(
            "fold assignment covers {} observations, dataset has {}",
            folds.fold_of.len(),
            dataset.n_samples()
        )));
    }
    let lambdas = penalty.resolve_path(dataset)?;
    let fold_penalty = PenaltySpec {
        lambda_path: Some(lambdas.clone()),
        ..penalty.clone()
    };
    let eta_full_of = |beta: &[f64]| linear_predictor(beta, dataset.covariates());

    let contributions: Vec<Result<Vec<f64>>> = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let train_idx = folds.complement(f);
            if train_idx.is_empty() || folds.members(f).iter().all(|&i| dataset.status()[i] == 0) {
                return Err(Error::Degenerate(format!("fold {f} has no events")));
            }
            let train = dataset.subset(&train_idx)?;
            let fit = fit_path(&train, &fold_penalty, control)?;
            (0..fit.n_lambda())
                .map(|l| {
                    let beta = fit.beta(l);
                    let eta_full = eta_full_of(&beta)?;
                    let full = log_pl_of_predictor(dataset.times(), dataset.status(), &eta_full);
                    let eta_train: Vec<f64> = train_idx.iter().map(|&i| eta_full[i]).collect();
                    let reduced = log_pl_of_predictor(train.times(), train.status(), &eta_train);
                    Ok(full - reduced)
                })
                .collect()
        })
        .collect();

    let mut per_fold = Array2::zeros((folds.k, lambdas.len()));
    for (f, row) in contributions.into_iter().enumerate() {
        for (l, v) in row?.into_iter().enumerate() {
            per_fold[[f, l]] = v;
        }
    }
    let total = (0..lambdas.len()).map(|l| per_fold.column(l).sum()).collect();
    Ok(CvPlCurve {
        lambdas,
        total,
        per_fold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// Largest CV score; the earliest path index wins ties.
    #[default]
    Max,
    /// Sparsest model within one standard error of the best.
    OneSe,
}

/// Index of the selected lambda. `per_fold` (K x n_lambda) is needed for the
/// one-SE rule and ignored by the max rule.
///
/// The one-SE rule works on the per-fold mean: the threshold is
/// `mean_f(best) - sd_f(best) / sqrt(K)`, and the first (largest-lambda)
/// path position whose mean reaches it is chosen.
pub fn select_lambda(cvpl: &[f64], rule: LambdaRule, per_fold: Option<&Array2<f64>>) -> Result<usize> {
    let best = cvpl
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |acc: Option<(usize, f64)>, (i, &v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Numerical("no finite CV score along the path".into()))?;
    match rule {
        LambdaRule::Max => Ok(best),
        LambdaRule::OneSe => {
            let per_fold = per_fold
                .ok_or_else(|| Error::InvalidParameter("one-SE rule needs per-fold scores".into()))?;
            if per_fold.ncols() != cvpl.len() {
                return Err(Error::InvalidParameter(format!(
                    "per-fold matrix has {} columns for {} path points",
                    per_fold.ncols(),
                    cvpl.len()
                )));
            }
            let k = per_fold.nrows() as f64;
            let fold_values = per_fold.column(best).to_vec();
            let se = sample_sd(&fold_values) / k.sqrt();
            let threshold = cvpl[best] / k - se;
            Ok(cvpl
                .iter()
                .position(|v| v.is_finite() && v / k >= threshold)
                .unwrap_or(best))
        }
    }
}

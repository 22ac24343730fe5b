//! Penalized Cox proportional-hazards models, Harrell's C-index with its
//! infinitesimal-jackknife variance, and confidence intervals for the
//! cross-validated C-index: the naive K-fold interval and the nested-CV
//! interval built from an estimate of the CV estimator's mean squared error.
//!
//! ```no_run
//! use coxncv::{cv_c_index, ncv_estimate, generate, CoxLearner, NcvConfig, Pooling, SimSpec};
//!
//! # fn main() -> coxncv::Result<()> {
//! let spec = SimSpec::new(100, 1000, 10);
//! let (train, _test) = generate(&spec, 0)?;
//! let learner = CoxLearner::default();
//! let cv = cv_c_index(&train, &learner, 10, 0.10, 1, Pooling::PerFold)?;
//! let ncv = ncv_estimate(&train, &NcvConfig::default(), &learner)?;
//! println!("CV {:?}  NCV {:?}", cv.interval, ncv.interval);
//! # Ok(())
//! # }
//! ```

pub mod concordance;
pub mod cox;
pub mod cv;
pub mod data;
pub mod error;
pub mod measures;
pub mod ncv;
pub mod rng;
pub mod simulation;
pub mod stats;

pub use concordance::{c_index, classify_pair, ij_variance, ConcordanceResult, PairClass};
pub use cox::{
    fit_lambda, fit_path, lambda_max, linear_predictor, log_partial_likelihood, log_pl_gradient, null_fit, CoxFit,
    FitControl, PenaltySpec,
};
pub use cv::{cv_c_index, naive_interval, CoxLearner, CoxModel, CvEstimate, LambdaStrategy, Learner, Pooling};
pub use data::{
    assign_folds, build_risk_sets, load_csv, variance_filter, write_csv, FoldAssignment, RiskSetIndex,
    SurvivalDataset,
};
pub use error::{Error, ErrorCategory, Result};
pub use measures::{cv_partial_likelihood, select_lambda, test_error, CvPlCurve, ErrorMeasureKind, LambdaRule};
pub use ncv::{ncv_estimate, ncv_interval, ncv_single_split, MseFloorPolicy, NcvConfig, NcvEstimate, SplitRecord};
pub use simulation::{
    figure2_data, generate, run_coverage, run_real_data, CoverageConfig, CoverageReport, LambdaScope, SimSpec,
};

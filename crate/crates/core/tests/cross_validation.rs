mod common;

use common::*;
use coxncv::cv::out_of_fold_predictions;
use coxncv::rng::{derive_seed, TAG_FOLDS};
use coxncv::*;

fn signal_data(seed: u64) -> SurvivalDataset {
    let spec = SimSpec { seed, ..SimSpec::new(120, 10, 8) };
    generate(&spec, 0).unwrap().0
}

#[test]
fn cvpl_fold_terms_match_direct_evaluation() {
    let ds = signal_data(1);
    let folds = assign_folds(ds.n_samples(), 5, ds.status(), 3).unwrap();
    let penalty = PenaltySpec::default().with_n_lambda(20);
    let curve = cv_partial_likelihood(&ds, &penalty, FitControl::default(), &folds).unwrap();
    assert_eq!(curve.per_fold.dim(), (5, 20));
    assert_eq!(curve.lambdas, penalty.resolve_path(&ds).unwrap());

    let f = 2;
    let train = ds.subset(&folds.complement(f)).unwrap();
    let fit = fit_path(&train, &penalty.clone().with_lambdas(curve.lambdas.clone()), FitControl::default()).unwrap();
    for l in [0, 7, 19] {
        let beta = fit.beta(l);
        let full = naive_log_pl(ds.times(), ds.status(), &eta_of(&ds, &beta));
        let reduced = naive_log_pl(train.times(), train.status(), &eta_of(&train, &beta));
        assert!((curve.per_fold[[f, l]] - (full - reduced)).abs() < 1e-9);
    }
    for l in 0..20 {
        let s: f64 = curve.per_fold.column(l).sum();
        assert!((curve.total[l] - s).abs() < 1e-12);
    }
}

#[test]
fn cvpl_prefers_some_signal_over_none() {
    let ds = signal_data(2);
    let folds = assign_folds(ds.n_samples(), 10, ds.status(), 5).unwrap();
    let curve = cv_partial_likelihood(&ds, &PenaltySpec::default(), FitControl::default(), &folds).unwrap();
    let best = select_lambda(&curve.total, LambdaRule::Max, None).unwrap();
    assert!(best > 0);
    assert!(curve.total[best] > curve.total[0]);
    let one_se = select_lambda(&curve.total, LambdaRule::OneSe, Some(&curve.per_fold)).unwrap();
    assert!(one_se <= best);
}

#[test]
fn cvpl_learner_returns_a_path_lambda() {
    let ds = signal_data(3);
    let learner = CoxLearner::default();
    let model = learner.fit(&ds, 11).unwrap();
    let path = PenaltySpec::default().resolve_path(&ds).unwrap();
    assert!(path.contains(&model.lambda));
    let direct = fit_lambda(&ds, 1.0, model.lambda, FitControl::default(), None).unwrap();
    assert!(max_abs_diff(&direct.beta, &model.beta) < 1e-5);
    assert_eq!(learner.fit(&ds, 11).unwrap(), model);
}

#[test]
fn per_fold_and_pooled_estimates() {
    let ds = signal_data(4);
    let learner = CoxLearner::new(PenaltySpec::default(), LambdaStrategy::Fixed { lambda: 0.03 });
    let seed = 99;
    let folds = assign_folds(ds.n_samples(), 5, ds.status(), derive_seed(seed, TAG_FOLDS, 0)).unwrap();
    let preds = out_of_fold_predictions(&ds, &learner, &folds, seed).unwrap();
    assert!(preds.iter().all(|p| p.is_finite()));

    let per_fold = cv_c_index(&ds, &learner, 5, 0.1, seed, Pooling::PerFold).unwrap();
    let manual: Vec<f64> = (0..5)
        .map(|f| {
            let m = folds.members(f);
            let t: Vec<f64> = m.iter().map(|&i| ds.times()[i]).collect();
            let s: Vec<u8> = m.iter().map(|&i| ds.status()[i]).collect();
            let e: Vec<f64> = m.iter().map(|&i| preds[i]).collect();
            brute_c_index(&t, &s, &e)
        })
        .collect();
    assert_eq!(per_fold.fold_values, manual);
    let mean = manual.iter().sum::<f64>() / 5.0;
    let sd = (manual.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / 4.0).sqrt();
    assert!((per_fold.point - mean).abs() < 1e-15);
    assert!((per_fold.naive_se - sd / 5f64.sqrt()).abs() < 1e-15);
    let half = 1.6448536269514722 * per_fold.naive_se;
    assert!((per_fold.interval.1 - per_fold.interval.0 - 2.0 * half).abs() < 1e-12);

    let pooled = cv_c_index(&ds, &learner, 5, 0.1, seed, Pooling::Pooled).unwrap();
    assert_eq!(pooled.point, brute_c_index(ds.times(), ds.status(), &preds));
    let (_, var) = ij_variance(ds.times(), ds.status(), &preds).unwrap();
    assert!((pooled.naive_se - var.sqrt()).abs() < 1e-15);
}

#[test]
fn invalid_cv_settings() {
    let ds = signal_data(5);
    let learner = CoxLearner::default();
    assert!(cv_c_index(&ds, &learner, 1, 0.1, 0, Pooling::PerFold).is_err());
    assert!(cv_c_index(&ds, &learner, 5, 1.5, 0, Pooling::PerFold).is_err());
    assert!(naive_interval(0.5, -1.0, 0.1).is_err());
}

#[test]
fn test_error_measures() {
    let spec = SimSpec::new(100, 400, 4);
    let (train, test) = generate(&spec, 0).unwrap();
    let fit = fit_lambda(&train, 1.0, 0.0, FitControl::default(), None).unwrap();
    let c = test_error(ErrorMeasureKind::CIndex, &fit.beta, &test).unwrap();
    assert!(c > 0.5);
    let ll = naive_log_pl(test.times(), test.status(), &eta_of(&test, &fit.beta));
    let n = test.n_samples() as f64;
    let per_n = test_error(ErrorMeasureKind::LogPlPerN, &fit.beta, &test).unwrap();
    assert!((per_n - ll / n).abs() < 1e-10);
    let per_nlogn = test_error(ErrorMeasureKind::LogPlPerNLogN, &fit.beta, &test).unwrap();
    assert!((per_nlogn - ll / (n * n.ln())).abs() < 1e-10);
    let null = naive_log_pl(test.times(), test.status(), &vec![0.0; test.n_samples()]);
    let diff = test_error(ErrorMeasureKind::NullDevianceDiff, &fit.beta, &test).unwrap();
    assert!((diff - (null - ll)).abs() < 1e-8);
    assert!(diff < 0.0);
}

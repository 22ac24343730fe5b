//! Harrell's concordance index for right-censored data and its
//! infinitesimal-jackknife variance.
//!
//! A pair is comparable when one observation has a strictly smaller time and
//! an observed event. Equal times are never comparable, whatever the status.
//! A comparable pair is concordant when the earlier failure carries the
//! strictly larger predictor (higher risk, shorter survival); equal
//! predictors score one half.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    Concordant,
    Discordant,
    TiedPrediction,
    Incomparable,
}

impl PairClass {
    /// Pair score: 1, 0 or 1/2 for comparable pairs.
    pub fn score(self) -> Option<f64> {
        match self {
            PairClass::Concordant => Some(1.0),
            PairClass::Discordant => Some(0.0),
            PairClass::TiedPrediction => Some(0.5),
            PairClass::Incomparable => None,
        }
    }
}

/// Classifies observations `(t, status, eta)` `i` and `j`.
pub fn classify_pair(ti: f64, si: u8, ei: f64, tj: f64, sj: u8, ej: f64) -> PairClass {
    let (early_eta, early_status, late_eta) = if ti < tj {
        (ei, si, ej)
    } else if tj < ti {
        (ej, sj, ei)
    } else {
        return PairClass::Incomparable;
    };
    if early_status != 1 {
        PairClass::Incomparable
    } else if early_eta > late_eta {
        PairClass::Concordant
    } else if early_eta < late_eta {
        PairClass::Discordant
    } else {
        PairClass::TiedPrediction
    }
}

/// Weighted pair counts, the C-index and its IJ variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceResult {
    pub c_index: f64,
    pub concordant: f64,
    pub discordant: f64,
    pub tied_predictions: f64,
    pub comparable_pairs: f64,
    /// dC/dw_i at the supplied weights.
    pub influences: Vec<f64>,
    /// Sum of squared influences.
    pub ij_variance: f64,
}

fn check_lengths(times: &[f64], status: &[u8], predictors: &[f64]) -> Result<()> {
    if status.len() != times.len() || predictors.len() != times.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} times, {} statuses, {} predictors",
            times.len(),
            status.len(),
            predictors.len()
        )));
    }
    Ok(())
}

/// Weighted Harrell C over all pairs, pair weight `w_i * w_j` (unit weights
/// when `weights` is `None`).
///
/// Also returns the case-weight influences `U_i = (S_i - C * D_i) / D`,
/// where `S_i` is i's weighted score total over its comparable pairs and
/// `D_i` its weighted comparable count.
pub fn c_index(times: &[f64], status: &[u8], predictors: &[f64], weights: Option<&[f64]>) -> Result<ConcordanceResult> {
    check_lengths(times, status, predictors)?;
    let n = times.len();
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::InvalidParameter(format!("{} weights for {n} observations", w.len())));
        }
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);

    // Visiting observations in time order means only later entries can be
    // the censored/later member of a pair led by an earlier event.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let (mut conc, mut disc, mut tied) = (0.0, 0.0, 0.0);
    let mut score_sum = vec![0.0; n];
    let mut pair_sum = vec![0.0; n];
    for (a, &i) in order.iter().enumerate() {
        if status[i] != 1 {
            continue;
        }
        let wi = weight(i);
        for &j in &order[a + 1..] {
            if times[j] == times[i] {
                continue;
            }
            let wj = weight(j);
            let s = if predictors[i] > predictors[j] {
                conc += wi * wj;
                1.0
            } else if predictors[i] < predictors[j] {
                disc += wi * wj;
                0.0
            } else {
                tied += wi * wj;
                0.5
            };
            score_sum[i] += wj * s;
            score_sum[j] += wi * s;
            pair_sum[i] += wj;
            pair_sum[j] += wi;
        }
    }
    let comparable = conc + disc + tied;
    if comparable <= 0.0 {
        return Err(Error::Degenerate("no comparable pairs".into()));
    }
    let c = (conc + 0.5 * tied) / comparable;
    let influences: Vec<f64> = (0..n).map(|i| (score_sum[i] - c * pair_sum[i]) / comparable).collect();
    let ij_variance = influences.iter().map(|u| u * u).sum();
    Ok(ConcordanceResult {
        c_index: c,
        concordant: conc,
        discordant: disc,
        tied_predictions: tied,
        comparable_pairs: comparable,
        influences,
        ij_variance,
    })
}

/// Per-observation influences and the infinitesimal-jackknife variance of
/// the unweighted C-index.
pub fn ij_variance(times: &[f64], status: &[u8], predictors: &[f64]) -> Result<(Vec<f64>, f64)> {
    let r = c_index(times, status, predictors, None)?;
    Ok((r.influences, r.ij_variance))
}

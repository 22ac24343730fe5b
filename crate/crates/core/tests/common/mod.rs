//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerical code.
#![allow(dead_code)]

use coxncv::SurvivalDataset;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random censored dataset. With `coarse` the times and covariates are
/// drawn from small grids so ties are frequent.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize, coarse: bool) -> SurvivalDataset {
    loop {
        let x = Array2::from_shape_fn((n, p), |_| {
            let z: f64 = StandardNormal.sample(rng);
            if coarse {
                (z * 2.0).round() / 2.0
            } else {
                z
            }
        });
        let times: Vec<f64> = (0..n)
            .map(|_| {
                let t: f64 = rng.random_range(0.1..5.0);
                if coarse {
                    (t * 2.0).round() / 2.0 + 0.5
                } else {
                    t
                }
            })
            .collect();
        let status: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.7))).collect();
        if status.iter().filter(|&&s| s == 1).count() >= 2 {
            return SurvivalDataset::new(x, times, status).unwrap();
        }
    }
}

/// Dataset from a Cox model with exponential baseline, so the MLE is well defined.
pub fn cox_dataset(rng: &mut ChaCha8Rng, n: usize, beta: &[f64]) -> SurvivalDataset {
    let p = beta.len();
    let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(rng));
    let mut times = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    for row in x.outer_iter() {
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let event = -u.ln() / eta.exp();
        let censor: f64 = rng.random_range(0.0..3.0);
        times.push(event.min(censor));
        status.push(u8::from(event <= censor));
    }
    SurvivalDataset::new(x, times, status).unwrap()
}

pub fn eta_of(ds: &SurvivalDataset, beta: &[f64]) -> Vec<f64> {
    ds.covariates()
        .outer_iter()
        .map(|row| row.iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect()
}

/// Breslow log partial likelihood by direct double loop.
pub fn naive_log_pl(times: &[f64], status: &[u8], eta: &[f64]) -> f64 {
    let n = times.len();
    let mut total = 0.0;
    for j in 0..n {
        if status[j] == 1 {
            let denom: f64 = (0..n).filter(|&i| times[i] >= times[j]).map(|i| eta[i].exp()).sum();
            total += eta[j] - denom.ln();
        }
    }
    total
}

/// Gradient and negative Hessian of the log partial likelihood in beta.
pub fn naive_score_information(ds: &SurvivalDataset, beta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let x = ds.covariates();
    let (t, s) = (ds.times(), ds.status());
    let (n, p) = (t.len(), beta.len());
    let eta = eta_of(ds, beta);
    let mut grad = vec![0.0; p];
    let mut info = vec![vec![0.0; p]; p];
    for j in 0..n {
        if s[j] != 1 {
            continue;
        }
        let risk: Vec<usize> = (0..n).filter(|&i| t[i] >= t[j]).collect();
        let w: Vec<f64> = risk.iter().map(|&i| eta[i].exp()).collect();
        let total: f64 = w.iter().sum();
        let mut mean = vec![0.0; p];
        for (&i, wi) in risk.iter().zip(&w) {
            for a in 0..p {
                mean[a] += wi * x[[i, a]] / total;
            }
        }
        for a in 0..p {
            grad[a] += x[[j, a]] - mean[a];
            for b in 0..p {
                let second: f64 = risk.iter().zip(&w).map(|(&i, wi)| wi * x[[i, a]] * x[[i, b]]).sum::<f64>() / total;
                info[a][b] += second - mean[a] * mean[b];
            }
        }
    }
    (grad, info)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    x
}

/// Unpenalized Cox MLE by Newton-Raphson with step halving.
pub fn newton_mle(ds: &SurvivalDataset) -> Vec<f64> {
    let p = ds.n_features();
    let mut beta = vec![0.0; p];
    let objective = |b: &[f64]| naive_log_pl(ds.times(), ds.status(), &eta_of(ds, b));
    let mut current = objective(&beta);
    for _ in 0..100 {
        let (g, info) = naive_score_information(ds, &beta);
        let step = solve(info, g);
        let mut t = 1.0;
        let mut next: Vec<f64>;
        loop {
            next = beta.iter().zip(&step).map(|(b, d)| b + t * d).collect();
            let value = objective(&next);
            if value >= current || t < 1e-10 {
                current = value;
                break;
            }
            t *= 0.5;
        }
        let change = beta.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        if change < 1e-12 {
            break;
        }
    }
    beta
}

/// Weighted Harrell C straight from the pair definition, returned as
/// `(numerator, comparable weight)`.
pub fn brute_c(times: &[f64], status: &[u8], eta: &[f64], w: &[f64]) -> (f64, f64) {
    let n = times.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            // i is the earlier member with an observed event
            if times[i] < times[j] && status[i] == 1 {
                let weight = w[i] * w[j];
                den += weight;
                if eta[i] > eta[j] {
                    num += weight;
                } else if eta[i] == eta[j] {
                    num += 0.5 * weight;
                }
            }
        }
    }
    (num, den)
}

pub fn brute_c_index(times: &[f64], status: &[u8], eta: &[f64]) -> f64 {
    let (num, den) = brute_c(times, status, eta, &vec![1.0; times.len()]);
    num / den
}

/// Central-difference derivative of the weighted C in each case weight at w = 1.
pub fn numeric_influences(times: &[f64], status: &[u8], eta: &[f64], h: f64) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|i| {
            let mut w = vec![1.0; n];
            w[i] = 1.0 + h;
            let (a, b) = brute_c(times, status, eta, &w);
            w[i] = 1.0 - h;
            let (c, d) = brute_c(times, status, eta, &w);
            (a / b - c / d) / (2.0 * h)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

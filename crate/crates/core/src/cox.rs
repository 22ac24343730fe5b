//! Elastic-net penalized Cox proportional hazards fitting.
//!
//! The log partial likelihood uses the Breslow convention for tied event
//! times: every event in a tie group shares the risk-set denominator
//! `sum_{i : t_i >= t} exp(eta_i)`.
//!
//! Fitting is proximal Newton: at the current coefficients the log partial
//! likelihood is replaced by its quadratic expansion on a working set of
//! coordinates, and the penalized quadratic is solved by cyclic coordinate
//! descent with soft thresholding. Covariates are standardized internally
//! and the objective is
//!
//! ```text
//!     l(beta) / n  -  lambda * ( alpha * |beta|_1 + (1 - alpha) * |beta|_2^2 / 2 )
//! ```
//!
//! on the standardized scale, so a given `lambda` has the same meaning for
//! datasets of different size.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

/// Elastic-net penalty and the lambda sequence to fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    /// Mixing weight: 1 is the lasso, 0 is ridge.
    pub alpha: f64,
    /// Number of path points when `lambda_path` is not given.
    pub n_lambda: usize,
    /// Smallest lambda as a fraction of lambda_max. `None` picks 0.01 when
    /// n > p and 0.05 otherwise.
    pub lambda_min_ratio: Option<f64>,
    /// Explicit strictly decreasing lambda sequence; overrides the generated path.
    pub lambda_path: Option<Vec<f64>>,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec {
            alpha: 1.0,
            n_lambda: 100,
            lambda_min_ratio: None,
            lambda_path: None,
        }
    }
}

impl PenaltySpec {
    pub fn lasso() -> Self {
        Self::default()
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_n_lambda(mut self, n_lambda: usize) -> Self {
        self.n_lambda = n_lambda;
        self
    }

    pub fn with_lambda_min_ratio(mut self, ratio: f64) -> Self {
        self.lambda_min_ratio = Some(ratio);
        self
    }

    pub fn with_lambdas(mut self, lambdas: Vec<f64>) -> Self {
        self.lambda_path = Some(lambdas);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha = {} not in [0, 1]", self.alpha)));
        }
        if let Some(path) = &self.lambda_path {
            if path.is_empty() {
                return Err(Error::InvalidParameter("empty lambda path".into()));
            }
            if path.iter().any(|l| !l.is_finite() || *l < 0.0) {
                return Err(Error::InvalidParameter("lambda values must be finite and >= 0".into()));
            }
            if path.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::InvalidParameter("lambda path must be strictly decreasing".into()));
            }
        } else {
            if self.n_lambda == 0 {
                return Err(Error::InvalidParameter("n_lambda must be >= 1".into()));
            }
            if let Some(r) = self.lambda_min_ratio {
                if !(r > 0.0 && r < 1.0) {
                    return Err(Error::InvalidParameter(format!("lambda_min_ratio = {r} not in (0, 1)")));
                }
            }
        }
        Ok(())
    }

    /// The lambda sequence this spec resolves to on `dataset`.
    pub fn resolve_path(&self, dataset: &SurvivalDataset) -> Result<Vec<f64>> {
        self.validate()?;
        if let Some(path) = &self.lambda_path {
            return Ok(path.clone());
        }
        let lmax = lambda_max(dataset, self.alpha);
        let ratio = self.lambda_min_ratio.unwrap_or(if dataset.n_samples() > dataset.n_features() {
            0.01
        } else {
            0.05
        });
        Ok(log_spaced_path(lmax, ratio, self.n_lambda))
    }
}

/// `n` log-spaced values from `lmax` down to `ratio * lmax`.
pub fn log_spaced_path(lmax: f64, ratio: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lmax];
    }
    let (hi, lo) = (lmax.ln(), (lmax * ratio).ln());
    (0..n)
        .map(|k| {
            if k == 0 {
                lmax
            } else {
                (hi + (lo - hi) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Convergence controls for coordinate descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitControl {
    /// Converged when the largest standardized coefficient change drops below this.
    pub tol: f64,
    /// Budget of coordinate sweeps per lambda.
    pub max_iter: usize,
}

impl Default for FitControl {
    fn default() -> Self {
        FitControl {
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

/// Coefficient path returned by [`fit_path`]. Coefficients are on the
/// original covariate scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    /// p x n_lambda.
    pub beta_path: Array2<f64>,
    pub lambda_path: Vec<f64>,
    pub nonzero_counts: Vec<usize>,
    /// Unpenalized log partial likelihood of each solution on the training data.
    pub log_pl_path: Vec<f64>,
    pub converged: Vec<bool>,
    /// Coordinate sweeps used per lambda.
    pub iterations: Vec<usize>,
}

impl CoxFit {
    pub fn n_lambda(&self) -> usize {
        self.lambda_path.len()
    }

    pub fn beta(&self, index: usize) -> Vec<f64> {
        self.beta_path.column(index).to_vec()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Single-lambda solution from [`fit_lambda`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingleFit {
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub log_pl: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Log partial likelihood of a linear predictor `eta` (Breslow ties).
pub fn log_pl_of_predictor(times: &[f64], status: &[u8], eta: &[f64]) -> f64 {
    let order = sort_by_time(times);
    let groups = tie_groups(times, &order);
    let eta_sorted: Vec<f64> = order.iter().map(|&i| eta[i]).collect();
    let status_sorted: Vec<u8> = order.iter().map(|&i| status[i]).collect();
    log_pl_sorted(&groups, &status_sorted, &eta_sorted)
}

/// Log partial likelihood at `beta` (original covariate scale).
pub fn log_partial_likelihood(dataset: &SurvivalDataset, beta: &[f64]) -> Result<f64> {
    let eta = linear_predictor(beta, dataset.covariates())?;
    Ok(log_pl_of_predictor(dataset.times(), dataset.status(), &eta))
}

/// Gradient of the log partial likelihood with respect to `beta`.
///
/// Event `j` contributes `x_j - sum_{i in R(j)} pi_ij x_i`, with `pi_ij`
/// the softmax of `eta` over the risk set.
pub fn log_pl_gradient(dataset: &SurvivalDataset, beta: &[f64]) -> Result<Vec<f64>> {
    let x = dataset.covariates();
    let eta = linear_predictor(beta, x)?;
    let deta = eta_derivatives(dataset.times(), dataset.status(), &eta).0;
    let mut grad = vec![0.0; x.ncols()];
    for (row, &d) in x.outer_iter().zip(&deta) {
        for (g, &v) in grad.iter_mut().zip(row.iter()) {
            *g += d * v;
        }
    }
    Ok(grad)
}

/// First derivative and diagonal second derivative of the log partial
/// likelihood with respect to each `eta_i`, in the caller's order.
pub fn eta_derivatives(times: &[f64], status: &[u8], eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let order = sort_by_time(times);
    let groups = tie_groups(times, &order);
    let eta_sorted: Vec<f64> = order.iter().map(|&i| eta[i]).collect();
    let status_sorted: Vec<u8> = order.iter().map(|&i| status[i]).collect();
    let n = times.len();
    let (mut g, mut h) = (vec![0.0; n], vec![0.0; n]);
    derivatives_sorted(&groups, &status_sorted, &eta_sorted, &mut g, &mut h);
    let (mut grad, mut hess) = (vec![0.0; n], vec![0.0; n]);
    for (pos, &i) in order.iter().enumerate() {
        grad[i] = g[pos];
        hess[i] = h[pos];
    }
    (grad, hess)
}

/// `X beta` for an m x p covariate matrix.
pub fn linear_predictor(beta: &[f64], covariates: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if beta.len() != covariates.ncols() {
        return Err(Error::InvalidParameter(format!(
            "coefficient length {} does not match {} covariate columns",
            beta.len(),
            covariates.ncols()
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numerical("non-finite coefficient".into()));
    }
    Ok(covariates
        .outer_iter()
        .map(|row| row.iter().zip(beta).map(|(x, b)| x * b).sum())
        .collect())
}

/// The beta = 0 model and its log partial likelihood.
pub fn null_fit(dataset: &SurvivalDataset) -> CoxFit {
    let p = dataset.n_features();
    let eta = vec![0.0; dataset.n_samples()];
    CoxFit {
        beta_path: Array2::zeros((p, 1)),
        lambda_path: vec![f64::INFINITY],
        nonzero_counts: vec![0],
        log_pl_path: vec![log_pl_of_predictor(dataset.times(), dataset.status(), &eta)],
        converged: vec![true],
        iterations: vec![0],
    }
}

/// Smallest lambda at which every coefficient is zero, for mixing `alpha`.
///
/// Ridge (`alpha = 0`) has no finite such value; as in coxnet the path
/// start is computed with `alpha = 1e-3` in that case.
pub fn lambda_max(dataset: &SurvivalDataset, alpha: f64) -> f64 {
    let problem = CoxProblem::new(dataset);
    let eta = vec![0.0; problem.n];
    let (mut g, mut h) = (vec![0.0; problem.n], vec![0.0; problem.n]);
    derivatives_sorted(&problem.groups, &problem.status, &eta, &mut g, &mut h);
    let max_grad = (0..problem.p)
        .map(|k| problem.column_dot(k, &g).abs() / problem.n as f64)
        .fold(0.0, f64::max);
    // Nudge up so the first path point thresholds every coordinate exactly.
    max_grad / alpha.max(1e-3) * (1.0 + 1e-12)
}

/// Fits the full lambda path, warm-starting each lambda from the previous solution.
pub fn fit_path(dataset: &SurvivalDataset, penalty: &PenaltySpec, control: FitControl) -> Result<CoxFit> {
    check_control(control)?;
    if dataset.n_features() == 0 {
        return Err(Error::InvalidParameter("need at least one covariate".into()));
    }
    let lambdas = penalty.resolve_path(dataset)?;
    let problem = CoxProblem::new(dataset);
    let p = problem.p;
    let mut state = problem.zero_state();
    let mut fit = CoxFit {
        beta_path: Array2::zeros((p, lambdas.len())),
        lambda_path: lambdas.clone(),
        nonzero_counts: Vec::with_capacity(lambdas.len()),
        log_pl_path: Vec::with_capacity(lambdas.len()),
        converged: Vec::with_capacity(lambdas.len()),
        iterations: Vec::with_capacity(lambdas.len()),
    };
    for (col, &lambda) in lambdas.iter().enumerate() {
        let outcome = problem.solve(&mut state, lambda, penalty.alpha, control);
        let beta = problem.to_original(&state.beta);
        for (k, b) in beta.iter().enumerate() {
            fit.beta_path[[k, col]] = *b;
        }
        fit.nonzero_counts.push(beta.iter().filter(|b| **b != 0.0).count());
        fit.log_pl_path.push(outcome.log_pl);
        fit.converged.push(outcome.converged);
        fit.iterations.push(outcome.sweeps);
        if !outcome.converged {
            log::warn!("coordinate descent did not converge at lambda = {lambda:.4e}");
        }
    }
    Ok(fit)
}

/// Fits a single lambda, optionally warm-started from `warm_start`
/// (original covariate scale).
pub fn fit_lambda(
    dataset: &SurvivalDataset,
    alpha: f64,
    lambda: f64,
    control: FitControl,
    warm_start: Option<&[f64]>,
) -> Result<SingleFit> {
    check_control(control)?;
    PenaltySpec::default().with_alpha(alpha).with_lambdas(vec![lambda]).validate()?;
    let problem = CoxProblem::new(dataset);
    let mut state = match warm_start {
        Some(beta) => {
            if beta.len() != problem.p {
                return Err(Error::InvalidParameter(format!(
                    "warm start has length {} but p = {}",
                    beta.len(),
                    problem.p
                )));
            }
            problem.state_from_original(beta)
        }
        None => problem.zero_state(),
    };
    let outcome = problem.solve(&mut state, lambda, alpha, control);
    Ok(SingleFit {
        beta: problem.to_original(&state.beta),
        lambda,
        log_pl: outcome.log_pl,
        converged: outcome.converged,
        iterations: outcome.sweeps,
    })
}

/// Penalized objective `l(beta)/n - lambda * P(beta)` on the standardized scale.
pub fn penalized_objective(dataset: &SurvivalDataset, beta: &[f64], lambda: f64, alpha: f64) -> Result<f64> {
    let problem = CoxProblem::new(dataset);
    let state = problem.state_from_original(beta);
    Ok(problem.objective(&state, lambda, alpha))
}

fn check_control(control: FitControl) -> Result<()> {
    if !(control.tol > 0.0) || control.max_iter == 0 {
        return Err(Error::InvalidParameter(format!(
            "tol = {} and max_iter = {} must both be positive",
            control.tol, control.max_iter
        )));
    }
    Ok(())
}

fn sort_by_time(times: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    order
}

/// Half-open runs `[start, end)` of equal time in time-sorted order.
fn tie_groups(times: &[f64], order: &[usize]) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let t = times[order[start]];
        let mut end = start + 1;
        while end < order.len() && times[order[end]] == t {
            end += 1;
        }
        groups.push((start, end));
        start = end;
    }
    groups
}

fn log_pl_sorted(groups: &[(usize, usize)], status: &[u8], eta: &[f64]) -> f64 {
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut at_risk = 0.0;
    let mut total = 0.0;
    for &(start, end) in groups.iter().rev() {
        let mut events = 0.0;
        let mut event_eta = 0.0;
        for i in start..end {
            at_risk += (eta[i] - shift).exp();
            if status[i] == 1 {
                events += 1.0;
                event_eta += eta[i];
            }
        }
        if events > 0.0 {
            total += event_eta - events * (at_risk.ln() + shift);
        }
    }
    total
}

/// Fills `grad[i] = dl/deta_i` and `hess[i] = -d2l/deta_i^2` (time-sorted order).
fn derivatives_sorted(groups: &[(usize, usize)], status: &[u8], eta: &[f64], grad: &mut [f64], hess: &mut [f64]) {
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = eta.len();
    let mut risk = vec![0.0; groups.len()];
    let mut at_risk = 0.0;
    for (g, &(start, end)) in groups.iter().enumerate().rev() {
        for i in start..end {
            at_risk += (eta[i] - shift).exp();
        }
        risk[g] = at_risk;
    }
    let (mut a, mut b) = (0.0, 0.0);
    for (g, &(start, end)) in groups.iter().enumerate() {
        let events = (start..end).filter(|&i| status[i] == 1).count() as f64;
        if events > 0.0 {
            a += events / risk[g];
            b += events / (risk[g] * risk[g]);
        }
        for i in start..end {
            let e = (eta[i] - shift).exp();
            grad[i] = f64::from(status[i]) - e * a;
            hess[i] = e * a - e * e * b;
        }
    }
    debug_assert_eq!(grad.len(), n);
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Standardized, time-sorted copy of a dataset for coordinate descent.
struct CoxProblem {
    n: usize,
    p: usize,
    /// Column-major standardized covariates in time-sorted row order.
    x: Vec<f64>,
    /// Population standard deviation per column; 0 marks a constant column.
    scales: Vec<f64>,
    status: Vec<u8>,
    groups: Vec<(usize, usize)>,
}

struct FitState {
    /// Standardized-scale coefficients.
    beta: Vec<f64>,
    /// Linear predictor in sorted order (centered covariates).
    eta: Vec<f64>,
}

struct SolveOutcome {
    log_pl: f64,
    converged: bool,
    sweeps: usize,
}

const MAX_HALVINGS: usize = 30;

impl CoxProblem {
    fn new(dataset: &SurvivalDataset) -> Self {
        let n = dataset.n_samples();
        let p = dataset.n_features();
        let order = sort_by_time(dataset.times());
        let groups = tie_groups(dataset.times(), &order);
        let cov = dataset.covariates();
        let mut x = vec![0.0; n * p];
        let mut scales = vec![0.0; p];
        for k in 0..p {
            let col = cov.column(k);
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            // Relative threshold so a column that is constant up to rounding is dropped.
            let scale = if sd > 1e-12 * (1.0 + mean.abs()) { sd } else { 0.0 };
            scales[k] = scale;
            if scale > 0.0 {
                for (pos, &i) in order.iter().enumerate() {
                    x[k * n + pos] = (cov[[i, k]] - mean) / scale;
                }
            }
        }
        CoxProblem {
            n,
            p,
            x,
            scales,
            status: order.iter().map(|&i| dataset.status()[i]).collect(),
            groups,
        }
    }

    fn column(&self, k: usize) -> &[f64] {
        &self.x[k * self.n..(k + 1) * self.n]
    }

    fn column_dot(&self, k: usize, v: &[f64]) -> f64 {
        self.column(k).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn zero_state(&self) -> FitState {
        FitState {
            beta: vec![0.0; self.p],
            eta: vec![0.0; self.n],
        }
    }

    fn state_from_original(&self, beta: &[f64]) -> FitState {
        let beta: Vec<f64> = beta
            .iter()
            .zip(&self.scales)
            .map(|(b, s)| if *s > 0.0 { b * s } else { 0.0 })
            .collect();
        let mut eta = vec![0.0; self.n];
        for (k, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (e, x) in eta.iter_mut().zip(self.column(k)) {
                    *e += x * b;
                }
            }
        }
        FitState { beta, eta }
    }

    fn to_original(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter()
            .zip(&self.scales)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect()
    }

    fn penalty(beta: &[f64], lambda: f64, alpha: f64) -> f64 {
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        let l2: f64 = beta.iter().map(|b| b * b).sum();
        lambda * (alpha * l1 + (1.0 - alpha) * l2 / 2.0)
    }

    fn objective(&self, state: &FitState, lambda: f64, alpha: f64) -> f64 {
        log_pl_sorted(&self.groups, &self.status, &state.eta) / self.n as f64
            - Self::penalty(&state.beta, lambda, alpha)
    }

    /// Maximizes the penalized objective at one lambda, updating `state` in place.
    ///
    /// Proximal Newton: the log partial likelihood is replaced by its
    /// second-order expansion on a working set (nonzero coefficients plus
    /// KKT violators), the penalized quadratic is solved by coordinate
    /// descent, and the step is halved until the objective does not drop.
    fn solve(&self, state: &mut FitState, lambda: f64, alpha: f64, control: FitControl) -> SolveOutcome {
        let n = self.n;
        let nf = n as f64;
        let l1 = lambda * alpha;
        let l2 = lambda * (1.0 - alpha);
        let mut grad_eta = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut sweeps = 0;
        let mut converged = false;
        let mut objective = self.objective(state, lambda, alpha);
        let mut last_step = f64::INFINITY;
        let mut last_working: Vec<usize> = Vec::new();

        while sweeps < control.max_iter {
            derivatives_sorted(&self.groups, &self.status, &state.eta, &mut grad_eta, &mut scratch);
            let grad: Vec<f64> = (0..self.p)
                .map(|k| if self.scales[k] > 0.0 { self.column_dot(k, &grad_eta) / nf } else { 0.0 })
                .collect();
            let working: Vec<usize> = (0..self.p)
                .filter(|&k| self.scales[k] > 0.0 && (state.beta[k] != 0.0 || grad[k].abs() > l1))
                .collect();
            if working.is_empty() {
                converged = true;
                break;
            }
            if last_step < control.tol && working.iter().all(|k| last_working.contains(k)) {
                converged = true;
                break;
            }

            let a = working.len();
            let hess = self.hessian(&state.eta, &working);
            let g: Vec<f64> = working.iter().map(|&k| grad[k]).collect();
            let start: Vec<f64> = working.iter().map(|&k| state.beta[k]).collect();
            let mut b = start.clone();
            // hd = H (b - start)
            let mut hd = vec![0.0; a];
            loop {
                let mut max_change: f64 = 0.0;
                for j in 0..a {
                    let hjj = hess[j * a + j];
                    if hjj + l2 <= 0.0 {
                        continue;
                    }
                    let z = g[j] - hd[j] + hjj * b[j];
                    let new = soft_threshold(z, l1) / (hjj + l2);
                    let d = new - b[j];
                    if d != 0.0 {
                        b[j] = new;
                        for (m, v) in hd.iter_mut().enumerate() {
                            *v += hess[m * a + j] * d;
                        }
                        max_change = max_change.max(d.abs());
                    }
                }
                sweeps += 1;
                if max_change < control.tol || sweeps >= control.max_iter {
                    break;
                }
            }

            let step: Vec<f64> = b.iter().zip(&start).map(|(x, y)| x - y).collect();
            let mut eta_step = vec![0.0; n];
            for (&k, &d) in working.iter().zip(&step) {
                if d != 0.0 {
                    for (e, x) in eta_step.iter_mut().zip(self.column(k)) {
                        *e += x * d;
                    }
                }
            }
            let beta_prev = state.beta.clone();
            let eta_prev = state.eta.clone();
            let floor = objective - 1e-12 * objective.abs().max(1.0);
            let mut t = 1.0;
            let mut halvings = 0;
            loop {
                for (&k, &d) in working.iter().zip(&step) {
                    state.beta[k] = beta_prev[k] + t * d;
                }
                for ((e, e0), d) in state.eta.iter_mut().zip(&eta_prev).zip(&eta_step) {
                    *e = e0 + t * d;
                }
                let candidate = self.objective(state, lambda, alpha);
                if candidate >= floor {
                    objective = candidate;
                    break;
                }
                halvings += 1;
                if halvings == MAX_HALVINGS {
                    break;
                }
                t *= 0.5;
            }
            if halvings == MAX_HALVINGS {
                // No ascent direction left at working precision.
                state.beta = beta_prev;
                state.eta = eta_prev;
                converged = true;
                break;
            }
            last_step = t * step.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
            last_working = working;
        }
        SolveOutcome {
            log_pl: log_pl_sorted(&self.groups, &self.status, &state.eta),
            converged,
            sweeps,
        }
    }

    /// Negative Hessian of `l(beta) / n` restricted to `working`, row-major.
    fn hessian(&self, eta: &[f64], working: &[usize]) -> Vec<f64> {
        let a = working.len();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cols: Vec<&[f64]> = working.iter().map(|&k| self.column(k)).collect();
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; a];
        let mut s2 = vec![0.0; a * a];
        let mut h = vec![0.0; a * a];
        let mut xi = vec![0.0; a];
        for &(start, end) in self.groups.iter().rev() {
            let mut events = 0.0;
            for i in start..end {
                let e = (eta[i] - shift).exp();
                s0 += e;
                for (v, c) in xi.iter_mut().zip(&cols) {
                    *v = c[i];
                }
                for j in 0..a {
                    let ex = e * xi[j];
                    s1[j] += ex;
                    for m in j..a {
                        s2[j * a + m] += ex * xi[m];
                    }
                }
                events += f64::from(self.status[i]);
            }
            if events > 0.0 {
                for j in 0..a {
                    let mj = s1[j] / s0;
                    for m in j..a {
                        h[j * a + m] += events * (s2[j * a + m] / s0 - mj * s1[m] / s0);
                    }
                }
            }
        }
        let nf = self.n as f64;
        for j in 0..a {
            for m in j..a {
                let v = h[j * a + m] / nf;
                h[j * a + m] = v;
                h[m * a + j] = v;
            }
        }
        h
    }
}

//! Right-censored survival data, risk sets, fold assignment and CSV ingestion.

use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Covariates plus (time, status) responses for `n` observations.
///
/// Times may be any finite real (only their ordering matters to the Cox
/// machinery). `status[i] == 1` marks an observed event, `0` right censoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    covariates: Array2<f64>,
    times: Vec<f64>,
    status: Vec<u8>,
    feature_names: Option<Vec<String>>,
}

impl SurvivalDataset {
    /// Builds and validates a dataset.
    pub fn new(covariates: Array2<f64>, times: Vec<f64>, status: Vec<u8>) -> Result<Self> {
        let ds = SurvivalDataset {
            covariates,
            times,
            status,
            feature_names: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::InvalidData(format!(
                "{} feature names for {} covariate columns",
                names.len(),
                self.n_features()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    /// Checks every dataset invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 observations, got {n}")));
        }
        if self.status.len() != n {
            return Err(Error::InvalidData(format!(
                "status has length {} but times has length {n}",
                self.status.len()
            )));
        }
        if self.covariates.nrows() != n {
            return Err(Error::InvalidData(format!(
                "covariate matrix has {} rows but times has length {n}",
                self.covariates.nrows()
            )));
        }
        if let Some(i) = self.status.iter().position(|&s| s > 1) {
            return Err(Error::InvalidData(format!(
                "status at index {i} is {}, expected 0 or 1",
                self.status[i]
            )));
        }
        if let Some(i) = self.times.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite time at index {i}")));
        }
        if !self.status.contains(&1) {
            return Err(Error::InvalidData("no events: every observation is censored".into()));
        }
        for ((row, col), v) in self.covariates.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::InvalidData(format!(
                    "non-finite covariate at row {row}, column {col}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.times.len()
    }

    pub fn n_features(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&s| s == 1).count()
    }

    pub fn covariates(&self) -> ArrayView2<'_, f64> {
        self.covariates.view()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn status(&self) -> &[u8] {
        &self.status
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Column labels, falling back to `x1..xp`.
    pub fn feature_labels(&self) -> Vec<String> {
        match &self.feature_names {
            Some(names) => names.clone(),
            None => (1..=self.n_features()).map(|j| format!("x{j}")).collect(),
        }
    }

    /// Rows `indices` (in the given order) as a new validated dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let ds = SurvivalDataset {
            covariates: self.covariates.select(Axis(0), indices),
            times: indices.iter().map(|&i| self.times[i]).collect(),
            status: indices.iter().map(|&i| self.status[i]).collect(),
            feature_names: self.feature_names.clone(),
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Keeps covariate columns `columns` (in the given order).
    pub fn select_features(&self, columns: &[usize]) -> Self {
        SurvivalDataset {
            covariates: self.covariates.select(Axis(1), columns),
            times: self.times.clone(),
            status: self.status.clone(),
            feature_names: {
                let labels = self.feature_labels();
                Some(columns.iter().map(|&j| labels[j].clone()).collect())
            },
        }
    }
}

/// Event-time risk sets under the Breslow convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskSetIndex {
    /// Indices of event observations sorted by time ascending (stable on index).
    pub event_order: Vec<usize>,
    /// `|{i : t_i >= t_j}|` for each event in `event_order`.
    pub risk_set_sizes: Vec<usize>,
    /// Runs of positions in `event_order` that share an event time.
    pub tie_groups: Vec<Vec<usize>>,
}

pub fn build_risk_sets(dataset: &SurvivalDataset) -> RiskSetIndex {
    let times = dataset.times();
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));

    let mut event_order = Vec::new();
    let mut risk_set_sizes = Vec::new();
    let mut tie_groups: Vec<Vec<usize>> = Vec::new();
    let mut start = 0;
    while start < n {
        let t = times[order[start]];
        let mut end = start;
        while end < n && times[order[end]] == t {
            end += 1;
        }
        let at_risk = n - start;
        let mut group = Vec::new();
        for &i in &order[start..end] {
            if dataset.status()[i] == 1 {
                group.push(event_order.len());
                event_order.push(i);
                risk_set_sizes.push(at_risk);
            }
        }
        if !group.is_empty() {
            tie_groups.push(group);
        }
        start = end;
    }
    RiskSetIndex {
        event_order,
        risk_set_sizes,
        tie_groups,
    }
}

/// Random balanced assignment of observations to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    /// Observation indices in fold `fold`, ascending.
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    /// Observation indices outside fold `fold`, ascending.
    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

const FOLD_RETRY_LIMIT: usize = 1000;

/// Shuffles a balanced label vector until every fold holds at least one event.
pub fn assign_folds(n: usize, k: usize, status: &[u8], seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("fold count {k} must satisfy 2 <= K <= n = {n}")));
    }
    if status.len() != n {
        return Err(Error::InvalidParameter(format!(
            "status length {} does not match n = {n}",
            status.len()
        )));
    }
    let events = status.iter().filter(|&&s| s == 1).count();
    if events < k {
        return Err(Error::Degenerate(format!(
            "{events} events cannot cover {k} folds with at least one event each"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    for _ in 0..FOLD_RETRY_LIMIT {
        labels.shuffle(&mut rng);
        let mut has_event = vec![false; k];
        for (i, &f) in labels.iter().enumerate() {
            if status[i] == 1 {
                has_event[f] = true;
            }
        }
        if has_event.iter().all(|&b| b) {
            return Ok(FoldAssignment {
                fold_of: labels,
                k,
                seed,
            });
        }
    }
    Err(Error::Degenerate(format!(
        "no fold assignment with an event in each of {k} folds after {FOLD_RETRY_LIMIT} draws"
    )))
}

/// Reads a CSV with a header row; every column other than the time and
/// status columns becomes a covariate, in file order.
pub fn load_csv(path: impl AsRef<Path>, time_col: &str, status_col: &str) -> Result<SurvivalDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidData(format!("missing column '{name}'")))
    };
    let time_idx = find(time_col)?;
    let status_idx = find(status_col)?;
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&j| j != time_idx && j != status_idx)
        .collect();

    let mut times = Vec::new();
    let mut status = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |j: usize| -> Result<f64> {
            let raw = record.get(j).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|_| {
                Error::InvalidData(format!(
                    "non-numeric value '{raw}' at row {}, column '{}'",
                    row + 1,
                    headers[j]
                ))
            })
        };
        times.push(cell(time_idx)?);
        let s = cell(status_idx)?;
        status.push(match s {
            v if v == 0.0 => 0,
            v if v == 1.0 => 1,
            v => {
                return Err(Error::InvalidData(format!(
                    "status {v} at row {} is not 0 or 1",
                    row + 1
                )))
            }
        });
        for &j in &feature_idx {
            values.push(cell(j)?);
        }
    }
    if times.is_empty() {
        return Err(Error::InvalidData("file contains no data rows".into()));
    }
    let n = times.len();
    let covariates = Array2::from_shape_vec((n, feature_idx.len()), values)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    let names = feature_idx.iter().map(|&j| headers[j].clone()).collect();
    SurvivalDataset::new(covariates, times, status)?.with_feature_names(names)
}

/// Writes `time,status,<features...>` with shortest round-trip float formatting.
pub fn write_csv(dataset: &SurvivalDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["time".to_string(), "status".to_string()];
    header.extend(dataset.feature_labels());
    writer.write_record(&header)?;
    for (i, row) in dataset.covariates().outer_iter().enumerate() {
        let mut record = vec![dataset.times()[i].to_string(), dataset.status()[i].to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn sample_variance(col: ArrayView1<'_, f64>) -> f64 {
    let n = col.len() as f64;
    let mean = col.sum() / n;
    col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Keeps the `top_k` highest-variance covariates, preserving column order.
/// Equal variances favour the lower column index.
pub fn variance_filter(dataset: &SurvivalDataset, top_k: usize) -> Result<SurvivalDataset> {
    let p = dataset.n_features();
    if top_k > p {
        return Err(Error::InvalidParameter(format!("top_k = {top_k} exceeds p = {p}")));
    }
    let variances: Vec<f64> = dataset
        .covariates()
        .axis_iter(Axis(1))
        .map(sample_variance)
        .collect();
    let mut ranked: Vec<usize> = (0..p).collect();
    ranked.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]).then(a.cmp(&b)));
    let mut keep = ranked[..top_k].to_vec();
    keep.sort_unstable();
    Ok(dataset.select_features(&keep))
}

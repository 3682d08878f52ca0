//! Scoring candidate pipelines with Monte-Carlo cross-validation.

mod evaluator;
mod pipeline;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::components::{LearnerRef, Params};
use crate::data::FeatureSet;
use crate::deadline::secs;
use crate::error::{Error, Result};

pub use evaluator::{mccv_score, mccv_splits, EvalRecord, Evaluator, RowTrace, Scorer};
pub use pipeline::{materialize, FittedPipeline, Pipeline};

/// A pipeline encoding: scaler, feature subset, learner and parameters.
/// `None` in the first two slots means the step is skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub scaler: Option<String>,
    pub features: Option<FeatureSet>,
    pub learner: LearnerRef,
    pub params: Params,
}

impl Candidate {
    /// A bare learner with default parameters.
    pub fn base(learner: impl Into<String>) -> Self {
        Candidate {
            scaler: None,
            features: None,
            learner: LearnerRef::base(learner),
            params: Params::Default,
        }
    }

    pub fn with_scaler(mut self, scaler: Option<String>) -> Self {
        self.scaler = scaler;
        self
    }

    pub fn with_features(mut self, features: Option<FeatureSet>) -> Self {
        self.features = features;
        self
    }

    pub fn with_learner(mut self, learner: LearnerRef) -> Self {
        self.learner = learner;
        self
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    pub fn key(&self) -> String {
        candidate_key(self)
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Canonical key `scaler|features|learner|params`.
///
/// Blank slots render as `-`; features are comma-joined ascending indices;
/// a meta learner renders as `meta(meta_params)>base`; params are `default`
/// or `k=v` pairs sorted by key. Example: `standardize|0,2|knn|k=3`.
pub fn candidate_key(c: &Candidate) -> String {
    let scaler = c.scaler.as_deref().unwrap_or("-");
    let features = c.features.as_ref().map_or_else(
        || "-".to_string(),
        |f| f.indices().iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );
    format!("{scaler}|{features}|{}|{}", c.learner, c.params.render())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    ErrorRate,
}

impl Metric {
    pub fn compute(&self, y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
        match self {
            Metric::ErrorRate => error_rate(y_true, y_pred),
        }
    }
}

/// Fraction of positions where the two label vectors differ.
pub fn error_rate(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::MetricLength(y_true.len(), y_pred.len()));
    }
    let wrong = y_true.iter().zip(y_pred).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / y_true.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub repeats: usize,
    pub train_fraction: f64,
    pub metric: Metric,
    pub seed: u64,
    #[serde(with = "secs::opt")]
    pub per_eval_timeout: Option<Duration>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            repeats: 5,
            train_fraction: 0.7,
            metric: Metric::ErrorRate,
            seed: 0,
            per_eval_timeout: Some(Duration::from_secs(60)),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Hash of the fields that influence scores (everything but the timeout).
    pub fn content_hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.repeats as u64).to_le_bytes());
        h.update(self.train_fraction.to_bits().to_le_bytes());
        h.update(format!("{:?}", self.metric).as_bytes());
        h.update(self.seed.to_le_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest length"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    FailedTimeout,
    FailedError,
}

/// Result of one evaluation; lower is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mean: f64,
    pub std: f64,
    pub per_fold: Vec<f64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Score {
    /// Mean and population standard deviation of the fold metrics.
    pub fn from_folds(per_fold: Vec<f64>) -> Self {
        let n = per_fold.len().max(1) as f64;
        let mean = per_fold.iter().sum::<f64>() / n;
        let var = per_fold.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Score {
            mean,
            std: var.sqrt(),
            per_fold,
            status: Status::Ok,
            message: None,
        }
    }

    pub fn failed(status: Status, message: impl Into<String>) -> Self {
        Score {
            mean: f64::NAN,
            std: f64::NAN,
            per_fold: Vec::new(),
            status,
            message: Some(message.into()),
        }
    }

    pub(crate) fn from_error(err: &Error) -> Self {
        match err {
            Error::DeadlineExceeded => Score::failed(Status::FailedTimeout, err.to_string()),
            _ => Score::failed(Status::FailedError, err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

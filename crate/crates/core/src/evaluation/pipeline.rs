use ndarray::{ArrayView2, Axis};

use super::Candidate;
use crate::components::{FittedModel, FittedScaler, LearnerHandle, Registry, ScalerKind};
use crate::data::{Dataset, FeatureSet};
use crate::deadline::Deadline;
use crate::error::{Error, Result};

/// An unfitted scaler → projection → learner chain.
#[derive(Debug, Clone)]
pub struct Pipeline {
    scaler: Option<ScalerKind>,
    features: Option<FeatureSet>,
    learner: LearnerHandle,
}

/// Resolves a candidate against the registry. Ids and explicit params are
/// validated here; feature bounds are checked when fitting.
pub fn materialize(c: &Candidate, registry: &Registry) -> Result<Pipeline> {
    let scaler = c
        .scaler
        .as_deref()
        .map(|id| registry.scaler(id).map(|s| s.implementation))
        .transpose()?;
    let learner = registry.learner_handle(&c.learner, &c.params)?;
    Ok(Pipeline {
        scaler,
        features: c.features.clone(),
        learner,
    })
}

impl Pipeline {
    /// Fits every step on `train` only.
    pub fn fit(&self, train: &Dataset, seed: u64, deadline: Deadline) -> Result<FittedPipeline> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(f) = &self.features {
            f.check_bounds(train.n_cols())?;
        }
        let raw = train.instances();
        let scaler = self.scaler.map(|s| s.fit(raw));
        let scaled = scaler.as_ref().map(|s| s.transform(raw));
        let scaled_view = scaled.as_ref().map_or(raw, |a| a.view());
        let projected = self.features.as_ref().map(|f| scaled_view.select(Axis(1), f.indices()));
        let x = projected.as_ref().map_or(scaled_view, |a| a.view());
        deadline.check()?;
        let model = self
            .learner
            .fit_matrix(x, train.labels(), train.n_classes(), seed, deadline)?;
        Ok(FittedPipeline {
            n_input: train.n_cols(),
            scaler,
            features: self.features.clone(),
            model,
        })
    }
}

#[derive(Debug)]
pub struct FittedPipeline {
    n_input: usize,
    scaler: Option<FittedScaler>,
    features: Option<FeatureSet>,
    model: FittedModel,
}

impl FittedPipeline {
    pub fn scaler(&self) -> Option<&FittedScaler> {
        self.scaler.as_ref()
    }

    /// Predicts rows laid out like the training data's columns.
    pub fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if rows.ncols() != self.n_input {
            return Err(Error::ColumnMismatch {
                expected: self.n_input,
                actual: rows.ncols(),
            });
        }
        let scaled = self.scaler.as_ref().map(|s| s.transform(rows));
        let scaled_view = scaled.as_ref().map_or(rows, |a| a.view());
        let projected = self.features.as_ref().map(|f| scaled_view.select(Axis(1), f.indices()));
        self.model.predict(projected.as_ref().map_or(scaled_view, |a| a.view()))
    }
}

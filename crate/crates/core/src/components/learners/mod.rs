//! Classifiers implemented from scratch.
//!
//! Every learner takes its randomness from an explicit seed and polls the
//! fit [`Deadline`] between coarse units of work (trees, epochs, rounds).
//! Labels are global class indices; models only ever predict classes seen
//! during training.

mod ensemble;
mod forest;
mod knn;
mod logistic;
mod naive_bayes;
mod tree;

use std::fmt::Debug;

use ndarray::ArrayView2;

use crate::deadline::Deadline;
use crate::error::Result;
use crate::rng::SeededRng;

pub use ensemble::{AdaBoost, Bagging};
pub use forest::{FeatureSubsample, RandomForest};
pub use knn::Knn;
pub use logistic::LogisticRegression;
pub use naive_bayes::GaussianNb;
pub use tree::DecisionTree;

pub struct FitContext<'a> {
    pub n_classes: usize,
    /// Per-row weights, only passed to learners that support them.
    pub weights: Option<&'a [f64]>,
    pub seed: u64,
    pub deadline: Deadline,
}

impl FitContext<'_> {
    pub fn unweighted(n_classes: usize, seed: u64, deadline: Deadline) -> FitContext<'static> {
        FitContext {
            n_classes,
            weights: None,
            seed,
            deadline,
        }
    }
}

pub trait Learner: Send + Sync + Debug {
    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], ctx: &FitContext<'_>) -> Result<Box<dyn Model>>;

    /// Whether `FitContext::weights` is honored. Boosting resamples rows
    /// for learners that return `false`.
    fn supports_weights(&self) -> bool {
        false
    }
}

pub trait Model: Send + Sync + Debug {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize>;
}

/// Predicts a single class everywhere.
#[derive(Debug, Clone)]
pub struct ConstantModel(pub usize);

impl Model for ConstantModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        vec![self.0; x.nrows()]
    }
}

/// Index of the largest score; the lowest index wins ties.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn class_weights(y: &[usize], weights: Option<&[f64]>, n_classes: usize) -> Vec<f64> {
    let mut totals = vec![0.0; n_classes];
    for (i, &c) in y.iter().enumerate() {
        totals[c] += weights.map_or(1.0, |w| w[i]);
    }
    totals
}

/// The class when `y` contains exactly one distinct value.
pub(crate) fn single_class(y: &[usize]) -> Option<usize> {
    let first = *y.first()?;
    y.iter().all(|&c| c == first).then_some(first)
}

/// `n` row indices drawn with probability proportional to `weights`.
pub(crate) fn weighted_resample(weights: &[f64], n: usize, rng: &mut SeededRng) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w / total;
        cumulative.push(acc);
    }
    (0..n)
        .map(|_| {
            let u = rng.unit();
            cumulative.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    #[test]
    fn resample_respects_zero_weight() {
        let mut rng = SeededRng::new(3);
        let idx = weighted_resample(&[0.0, 1.0, 0.0], 50, &mut rng);
        assert!(idx.iter().all(|&i| i == 1));
    }
}

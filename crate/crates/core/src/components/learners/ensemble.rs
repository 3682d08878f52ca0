//! Homogeneous ensembles over a single base learner.

use std::sync::Arc;

use ndarray::{ArrayView2, Axis};

use super::{argmax, class_weights, weighted_resample, FitContext, Learner, Model};
use crate::error::Result;
use crate::rng::SeededRng;
use crate::seed;

/// Majority vote over copies of `base` fit on random row samples.
#[derive(Debug, Clone)]
pub struct Bagging {
    pub base: Arc<dyn Learner>,
    pub n_estimators: usize,
    pub sample_fraction: f64,
    /// Sample rows with replacement; without it, each copy gets a random
    /// subset (kept in original row order).
    pub bootstrap: bool,
}

#[derive(Debug)]
struct VoteModel {
    members: Vec<(f64, Box<dyn Model>)>,
    n_classes: usize,
}

impl Model for VoteModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let n = x.nrows();
        let mut scores = vec![vec![0.0; self.n_classes]; n];
        for (alpha, m) in &self.members {
            for (row, c) in m.predict(x).into_iter().enumerate() {
                scores[row][c] += alpha;
            }
        }
        scores.iter().map(|s| argmax(s)).collect()
    }
}

impl Learner for Bagging {
    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], ctx: &FitContext<'_>) -> Result<Box<dyn Model>> {
        let n = y.len();
        let m = ((self.sample_fraction * n as f64).round() as usize).clamp(1, n.max(1));
        let mut members = Vec::with_capacity(self.n_estimators);
        for e in 0..self.n_estimators.max(1) {
            ctx.deadline.check()?;
            let member_seed = seed!(ctx.seed, "bag", e);
            let mut rng = SeededRng::new(member_seed);
            let rows: Vec<usize> = if self.bootstrap {
                (0..m).map(|_| rng.below(n)).collect()
            } else {
                let mut all: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut all);
                all.truncate(m);
                all.sort_unstable();
                all
            };
            let xb = x.select(Axis(0), &rows);
            let yb: Vec<usize> = rows.iter().map(|&i| y[i]).collect();
            let sub = FitContext::unweighted(ctx.n_classes, member_seed, ctx.deadline);
            members.push((1.0, self.base.fit(xb.view(), &yb, &sub)?));
        }
        Ok(Box::new(VoteModel {
            members,
            n_classes: ctx.n_classes,
        }))
    }
}

/// Multi-class AdaBoost (SAMME).
///
/// Each round fits `base` on the current row weights (or on a weighted
/// resample when the base ignores weights), then boosts misclassified rows
/// by `exp(alpha)` with
/// `alpha = learning_rate * (ln((1 - err) / err) + ln(K - 1))`.
/// Boosting stops early on a perfect round or once the weighted error
/// reaches chance level `1 - 1/K`.
#[derive(Debug, Clone)]
pub struct AdaBoost {
    pub base: Arc<dyn Learner>,
    pub n_estimators: usize,
    pub learning_rate: f64,
}

impl Learner for AdaBoost {
    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], ctx: &FitContext<'_>) -> Result<Box<dyn Model>> {
        let n = y.len();
        let present = class_weights(y, None, ctx.n_classes)
            .iter()
            .filter(|&&c| c > 0.0)
            .count();
        let k = present.max(2) as f64;
        let mut w = vec![1.0 / n as f64; n];
        let mut members: Vec<(f64, Box<dyn Model>)> = Vec::new();

        for round in 0..self.n_estimators.max(1) {
            ctx.deadline.check()?;
            let round_seed = seed!(ctx.seed, "boost", round);
            let model = if self.base.supports_weights() {
                let sub = FitContext {
                    n_classes: ctx.n_classes,
                    weights: Some(&w),
                    seed: round_seed,
                    deadline: ctx.deadline,
                };
                self.base.fit(x, y, &sub)?
            } else {
                let mut rng = SeededRng::new(round_seed);
                let rows = weighted_resample(&w, n, &mut rng);
                let xb = x.select(Axis(0), &rows);
                let yb: Vec<usize> = rows.iter().map(|&i| y[i]).collect();
                let sub = FitContext::unweighted(ctx.n_classes, round_seed, ctx.deadline);
                self.base.fit(xb.view(), &yb, &sub)?
            };
            let pred = model.predict(x);
            let miss: Vec<bool> = pred.iter().zip(y).map(|(p, t)| p != t).collect();
            let total: f64 = w.iter().sum();
            let err = miss.iter().zip(&w).filter(|(m, _)| **m).map(|(_, w)| w).sum::<f64>() / total;

            if err <= 0.0 {
                members.push((1.0, model));
                break;
            }
            if err >= 1.0 - 1.0 / k {
                if members.is_empty() {
                    members.push((1.0, model));
                }
                break;
            }
            let alpha = self.learning_rate * (((1.0 - err) / err).ln() + (k - 1.0).ln());
            for (wi, &m) in w.iter_mut().zip(&miss) {
                if m {
                    *wi *= alpha.exp();
                }
            }
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= sum);
            members.push((alpha, model));
        }
        Ok(Box::new(VoteModel {
            members,
            n_classes: ctx.n_classes,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::train_error;
    use super::super::{DecisionTree, Knn};
    use super::*;
    use crate::deadline::Deadline;
    use ndarray::Array2;

    fn ctx() -> FitContext<'static> {
        FitContext::unweighted(2, 1, Deadline::none())
    }

    fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = SeededRng::new(seed);
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            rng.normal() + if y[i] == 1 && j == 0 { 1.5 } else { 0.0 }
        });
        (x, y)
    }

    #[test]
    fn single_unperturbed_copy_matches_base() {
        let (x, y) = blobs(60, 2);
        for base in [
            Arc::new(Knn { k: 3 }) as Arc<dyn Learner>,
            Arc::new(DecisionTree::default()) as Arc<dyn Learner>,
        ] {
            let bag = Bagging {
                base: base.clone(),
                n_estimators: 1,
                sample_fraction: 1.0,
                bootstrap: false,
            };
            let direct = base.fit(x.view(), &y, &ctx()).unwrap().predict(x.view());
            let wrapped = bag.fit(x.view(), &y, &ctx()).unwrap().predict(x.view());
            assert_eq!(direct, wrapped);
        }
    }

    #[test]
    fn boosting_stumps_does_not_hurt_training_error() {
        // Oracle: a lone stump's training error on the same toy set.
        let mut rng = SeededRng::new(4);
        let n = 80;
        let x = Array2::from_shape_fn((n, 2), |_| rng.unit());
        let y: Vec<usize> = (0..n).map(|i| usize::from(x[[i, 0]] + x[[i, 1]] > 1.0)).collect();
        let stump = Arc::new(DecisionTree {
            max_depth: Some(1),
            ..Default::default()
        });
        let stump_err = train_error(stump.fit(x.view(), &y, &ctx()).unwrap().as_ref(), &x, &y);
        let boost = AdaBoost {
            base: stump,
            n_estimators: 10,
            learning_rate: 1.0,
        };
        let boost_err = train_error(boost.fit(x.view(), &y, &ctx()).unwrap().as_ref(), &x, &y);
        assert!(boost_err <= stump_err, "boost {boost_err} vs stump {stump_err}");
        assert!(boost_err < stump_err);
    }

    #[test]
    fn bagging_knn_is_deterministic() {
        let (x, y) = blobs(50, 3);
        let bag = Bagging {
            base: Arc::new(Knn { k: 1 }),
            n_estimators: 25,
            sample_fraction: 1.0,
            bootstrap: true,
        };
        let a = bag.fit(x.view(), &y, &ctx()).unwrap().predict(x.view());
        let b = bag.fit(x.view(), &y, &ctx()).unwrap().predict(x.view());
        assert_eq!(a, b);
    }

    #[test]
    fn boosting_resamples_for_unweighted_base() {
        let (x, y) = blobs(40, 5);
        let boost = AdaBoost {
            base: Arc::new(Knn { k: 3 }),
            n_estimators: 5,
            learning_rate: 1.0,
        };
        let pred = boost.fit(x.view(), &y, &ctx()).unwrap().predict(x.view());
        assert_eq!(pred.len(), 40);
    }
}

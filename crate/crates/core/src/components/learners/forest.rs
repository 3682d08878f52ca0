use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeModel};
use super::{argmax, FitContext, Learner, Model};
use crate::error::Result;
use crate::rng::SeededRng;
use crate::seed;

/// How many features each split examines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureSubsample {
    Sqrt,
    Fraction(f64),
}

impl FeatureSubsample {
    fn count(&self, d: usize) -> usize {
        let k = match self {
            FeatureSubsample::Sqrt => (d as f64).sqrt().round() as usize,
            FeatureSubsample::Fraction(f) => (f * d as f64).round() as usize,
        };
        k.clamp(1, d.max(1))
    }
}

/// Bootstrap-aggregated CART trees with per-split feature subsampling.
#[derive(Debug, Clone)]
pub struct RandomForest {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub feature_subsample: FeatureSubsample,
}

#[derive(Debug)]
struct ForestModel {
    trees: Vec<TreeModel>,
    n_classes: usize,
}

impl Learner for RandomForest {
    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], ctx: &FitContext<'_>) -> Result<Box<dyn Model>> {
        let n = y.len();
        let tree = DecisionTree {
            max_depth: self.max_depth,
            min_split: 2,
            max_features: Some(self.feature_subsample.count(x.ncols())),
        };
        let mut trees = Vec::with_capacity(self.n_trees);
        for t in 0..self.n_trees.max(1) {
            ctx.deadline.check()?;
            let tree_seed = seed!(ctx.seed, "tree", t);
            let mut rng = SeededRng::new(tree_seed);
            let rows: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
            let xb = x.select(Axis(0), &rows);
            let yb: Vec<usize> = rows.iter().map(|&i| y[i]).collect();
            let wb: Option<Vec<f64>> = ctx.weights.map(|w| rows.iter().map(|&i| w[i]).collect());
            let sub = FitContext {
                n_classes: ctx.n_classes,
                weights: wb.as_deref(),
                seed: tree_seed,
                deadline: ctx.deadline,
            };
            trees.push(tree.grow(xb.view(), &yb, wb.as_deref(), &sub)?);
        }
        Ok(Box::new(ForestModel {
            trees,
            n_classes: ctx.n_classes,
        }))
    }

    fn supports_weights(&self) -> bool {
        true
    }
}

impl Model for ForestModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let mut votes = vec![0.0; self.n_classes];
        x.rows()
            .into_iter()
            .map(|row| {
                votes.iter_mut().for_each(|v| *v = 0.0);
                for t in &self.trees {
                    votes[t.predict_row(row)] += 1.0;
                }
                argmax(&votes)
            })
            .collect()
    }
}

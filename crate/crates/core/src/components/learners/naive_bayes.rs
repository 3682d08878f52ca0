use ndarray::ArrayView2;

use super::{argmax, class_weights, FitContext, Learner, Model};
use crate::error::Result;

/// Relative variance floor, scaled by the largest feature variance.
const VAR_SMOOTHING: f64 = 1e-9;
const MIN_VARIANCE: f64 = 1e-12;

/// Gaussian naive Bayes with (optionally weighted) class statistics.
#[derive(Debug, Clone, Default)]
pub struct GaussianNb;

#[derive(Debug)]
struct GaussianNbModel {
    /// (class, log prior, means, variances) for classes seen in training.
    classes: Vec<(usize, f64, Vec<f64>, Vec<f64>)>,
}

impl Learner for GaussianNb {
    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], ctx: &FitContext<'_>) -> Result<Box<dyn Model>> {
        let d = x.ncols();
        let w = |i: usize| ctx.weights.map_or(1.0, |w| w[i]);
        let totals = class_weights(y, ctx.weights, ctx.n_classes);
        let grand: f64 = totals.iter().sum();

        let mut max_var: f64 = 0.0;
        for col in x.columns() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            max_var = max_var.max(var);
        }
        let epsilon = (VAR_SMOOTHING * max_var).max(MIN_VARIANCE);

        let mut classes = Vec::new();
        for (c, &total) in totals.iter().enumerate() {
            if total <= 0.0 {
                continue;
            }
            let mut mean = vec![0.0; d];
            for (i, row) in x.rows().into_iter().enumerate() {
                if y[i] == c {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += w(i) * v;
                    }
                }
            }
            mean.iter_mut().for_each(|m| *m /= total);
            let mut var = vec![0.0; d];
            for (i, row) in x.rows().into_iter().enumerate() {
                if y[i] == c {
                    for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                        *s += w(i) * (v - m) * (v - m);
                    }
                }
            }
            var.iter_mut().for_each(|s| *s = *s / total + epsilon);
            classes.push((c, (total / grand).ln(), mean, var));
        }
        Ok(Box::new(GaussianNbModel { classes }))
    }

    fn supports_weights(&self) -> bool {
        true
    }
}

impl Model for GaussianNbModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let mut scores = vec![0.0; self.classes.len()];
        x.rows()
            .into_iter()
            .map(|row| {
                for (s, (_, log_prior, mean, var)) in scores.iter_mut().zip(&self.classes) {
                    *s = *log_prior
                        + row
                            .iter()
                            .zip(mean)
                            .zip(var)
                            .map(|((v, m), s2)| {
                                -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2)
                            })
                            .sum::<f64>();
                }
                self.classes[argmax(&scores)].0
            })
            .collect()
    }
}

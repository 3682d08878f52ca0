use ndarray::{Array2, ArrayView2};

use super::{argmax, FitContext, Learner, Model};
use crate::error::Result;

/// Brute-force k-nearest neighbours under Euclidean distance.
///
/// Equidistant neighbours are ordered by training row; vote ties go to the
/// lowest class index. `k` is clipped to the training size, so a model fit
/// on fewer than `k` rows votes over all of them.
#[derive(Debug, Clone)]
pub struct Knn {
    pub k: usize,
}

#[derive(Debug)]
struct KnnModel {
    k: usize,
    x: Array2<f64>,
    y: Vec<usize>,
    n_classes: usize,
}

impl Learner for Knn {
    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], ctx: &FitContext<'_>) -> Result<Box<dyn Model>> {
        Ok(Box::new(KnnModel {
            k: self.k.max(1).min(y.len()),
            x: x.to_owned(),
            y: y.to_vec(),
            n_classes: ctx.n_classes,
        }))
    }
}

impl Model for KnnModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let n_train = self.y.len();
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n_train);
        let mut votes = vec![0.0; self.n_classes];
        x.rows()
            .into_iter()
            .map(|row| {
                dist.clear();
                for (i, t) in self.x.rows().into_iter().enumerate() {
                    let d: f64 = row.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    dist.push((d, i));
                }
                let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if self.k < n_train {
                    dist.select_nth_unstable_by(self.k - 1, by_dist);
                }
                votes.iter_mut().for_each(|v| *v = 0.0);
                for &(_, i) in &dist[..self.k] {
                    votes[self.y[i]] += 1.0;
                }
                argmax(&votes)
            })
            .collect()
    }
}

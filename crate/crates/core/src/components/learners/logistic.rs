use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{argmax, class_weights, FitContext, Learner, Model};
use crate::error::Result;

/// Multinomial logistic regression trained by full-batch gradient descent.
///
/// Features are standardized internally with training statistics so the
/// step size means the same thing on every dataset. Weights start at zero.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

#[derive(Debug)]
struct LogisticModel {
    classes: Vec<usize>,
    mean: Array1<f64>,
    scale: Array1<f64>,
    weights: Array2<f64>,
    bias: Array1<f64>,
}

impl Learner for LogisticRegression {
    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], ctx: &FitContext<'_>) -> Result<Box<dyn Model>> {
        let (n, d) = x.dim();
        let totals = class_weights(y, ctx.weights, ctx.n_classes);
        let classes: Vec<usize> = (0..ctx.n_classes).filter(|&c| totals[c] > 0.0).collect();
        let k = classes.len();
        let mut slot = vec![usize::MAX; ctx.n_classes];
        for (s, &c) in classes.iter().enumerate() {
            slot[c] = s;
        }

        let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(d));
        let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
        let xs = (&x - &mean) / &scale;

        let row_w: Array1<f64> = match ctx.weights {
            Some(w) => {
                let total: f64 = w.iter().sum();
                w.iter().map(|v| v / total).collect()
            }
            None => Array1::from_elem(n, 1.0 / n as f64),
        };
        let mut target = Array2::<f64>::zeros((n, k));
        for (i, &c) in y.iter().enumerate() {
            target[[i, slot[c]]] = 1.0;
        }

        let mut weights = Array2::<f64>::zeros((d, k));
        let mut bias = Array1::<f64>::zeros(k);
        if k > 1 {
            let xs = xs.as_standard_layout();
            let rows = xs.as_slice().expect("standard layout");
            let (tw, rw) = (target.as_slice().expect("owned"), row_w.as_slice().expect("owned"));
            let mut w = vec![0.0; d * k];
            let mut b = vec![0.0; k];
            let mut grad_w = vec![0.0; d * k];
            let mut grad_b = vec![0.0; k];
            let mut p = vec![0.0; k];
            for _ in 0..self.epochs {
                ctx.deadline.check()?;
                grad_w.iter_mut().zip(&w).for_each(|(g, v)| *g = self.l2 * v);
                grad_b.fill(0.0);
                for i in 0..n {
                    let row = &rows[i * d..(i + 1) * d];
                    p.copy_from_slice(&b);
                    for (j, &xv) in row.iter().enumerate() {
                        for (pc, wc) in p.iter_mut().zip(&w[j * k..(j + 1) * k]) {
                            *pc += xv * wc;
                        }
                    }
                    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for v in p.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    for (c, v) in p.iter_mut().enumerate() {
                        *v = (*v / sum - tw[i * k + c]) * rw[i];
                        grad_b[c] += *v;
                    }
                    for (j, &xv) in row.iter().enumerate() {
                        for (g, pc) in grad_w[j * k..(j + 1) * k].iter_mut().zip(&p) {
                            *g += xv * pc;
                        }
                    }
                }
                w.iter_mut()
                    .zip(&grad_w)
                    .for_each(|(v, g)| *v -= self.learning_rate * g);
                b.iter_mut()
                    .zip(&grad_b)
                    .for_each(|(v, g)| *v -= self.learning_rate * g);
            }
            weights = Array2::from_shape_vec((d, k), w).expect("shape");
            bias = Array1::from(b);
        }
        Ok(Box::new(LogisticModel {
            classes,
            mean,
            scale,
            weights,
            bias,
        }))
    }

    fn supports_weights(&self) -> bool {
        true
    }
}

impl Model for LogisticModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        if self.classes.len() == 1 || x.nrows() == 0 {
            return vec![self.classes[0]; x.nrows()];
        }
        let xs = (&x - &self.mean) / &self.scale;
        let logits = xs.dot(&self.weights) + &self.bias;
        logits
            .rows()
            .into_iter()
            .map(|r| {
                let scores: Vec<f64> = r.iter().map(|v| if v.is_finite() { *v } else { f64::MIN }).collect();
                self.classes[argmax(&scores)]
            })
            .collect()
    }
}

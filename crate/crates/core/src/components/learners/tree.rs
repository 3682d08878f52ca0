use ndarray::ArrayView2;

use super::{argmax, FitContext, Learner, Model};
use crate::error::Result;
use crate::rng::SeededRng;

/// CART classification tree with Gini impurity.
///
/// A node is split whenever it is impure, deeper than `max_depth` is not
/// reached, it holds at least `min_split` rows, and some feature is
/// non-constant on it. The best split is taken even if it does not lower
/// the impurity, so an unbounded tree fits any consistent dataset exactly.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    pub max_depth: Option<usize>,
    pub min_split: usize,
    /// Features examined per node; `None` examines all of them.
    pub max_features: Option<usize>,
}

impl Default for DecisionTree {
    fn default() -> Self {
        DecisionTree {
            max_depth: None,
            min_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct TreeModel {
    nodes: Vec<Node>,
}

impl TreeModel {
    pub(crate) fn predict_row(&self, row: ndarray::ArrayView1<'_, f64>) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(c) => return *c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Model for TreeModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl DecisionTree {
    pub(crate) fn grow(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        weights: Option<&[f64]>,
        ctx: &FitContext<'_>,
    ) -> Result<TreeModel> {
        let n_classes = ctx.n_classes;
        let w = |i: usize| weights.map_or(1.0, |w| w[i]);
        let mut rng = SeededRng::new(ctx.seed);
        let mut nodes = vec![Node::Leaf(0)];
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, (0..y.len()).collect(), 0)];
        let mut expanded = 0usize;
        let mut features: Vec<usize> = (0..x.ncols()).collect();
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(y.len());

        while let Some((node, rows, depth)) = stack.pop() {
            expanded += 1;
            if expanded.is_multiple_of(32) {
                ctx.deadline.check()?;
            }
            let mut counts = vec![0.0; n_classes];
            for &i in &rows {
                counts[y[i]] += w(i);
            }
            let total: f64 = counts.iter().sum();
            let leaf = argmax(&counts);
            let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
            let depth_capped = self.max_depth.is_some_and(|m| depth >= m);
            if pure || depth_capped || rows.len() < self.min_split.max(2) {
                nodes[node] = Node::Leaf(leaf);
                continue;
            }

            if self.max_features.is_some() {
                rng.shuffle(&mut features);
            }
            let budget = self.max_features.unwrap_or(features.len()).max(1);
            let mut examined = 0;
            let mut best: Option<SplitChoice> = None;
            for &f in &features {
                if examined >= budget {
                    break;
                }
                sorted.clear();
                sorted.extend(rows.iter().map(|&i| (x[[i, f]], i)));
                sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                if sorted[0].0 == sorted[sorted.len() - 1].0 {
                    continue;
                }
                examined += 1;
                let mut left = vec![0.0; n_classes];
                let mut left_total = 0.0;
                for p in 0..sorted.len() - 1 {
                    let (v, i) = sorted[p];
                    left[y[i]] += w(i);
                    left_total += w(i);
                    let next = sorted[p + 1].0;
                    if v == next {
                        continue;
                    }
                    let right: Vec<f64> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                    let right_total = total - left_total;
                    let impurity = left_total * gini(&left, left_total) + right_total * gini(&right, right_total);
                    if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                        let mid = 0.5 * (v + next);
                        let threshold = if mid < next { mid } else { v };
                        best = Some(SplitChoice {
                            feature: f,
                            threshold,
                            impurity,
                        });
                    }
                }
            }

            let Some(choice) = best else {
                nodes[node] = Node::Leaf(leaf);
                continue;
            };
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x[[i, choice.feature]] <= choice.threshold);
            let left_id = nodes.len();
            nodes.push(Node::Leaf(leaf));
            let right_id = nodes.len();
            nodes.push(Node::Leaf(leaf));
            nodes[node] = Node::Split {
                feature: choice.feature,
                threshold: choice.threshold,
                left: left_id,
                right: right_id,
            };
            stack.push((right_id, right_rows, depth + 1));
            stack.push((left_id, left_rows, depth + 1));
        }
        Ok(TreeModel { nodes })
    }
}

impl Learner for DecisionTree {
    fn fit(&self, x: ArrayView2<'_, f64>, y: &[usize], ctx: &FitContext<'_>) -> Result<Box<dyn Model>> {
        Ok(Box::new(self.grow(x, y, ctx.weights, ctx)?))
    }

    fn supports_weights(&self) -> bool {
        true
    }
}

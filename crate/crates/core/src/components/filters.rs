//! Learner-free feature relevance rankings.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

/// Equal-width bins used by the information-based filters.
pub const N_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// Prior-weighted mean of |r| against one-vs-rest class indicators;
    /// for two classes this is |r| against the label.
    PearsonCorrelation,
    MutualInformation,
    ChiSquared,
    Variance,
}

impl FilterKind {
    /// Relevance of every column; larger is better.
    pub fn scores(&self, x: ArrayView2<'_, f64>, y: &[usize], n_classes: usize) -> Vec<f64> {
        x.columns()
            .into_iter()
            .map(|col| {
                let s = match self {
                    FilterKind::PearsonCorrelation => pearson(col, y, n_classes),
                    FilterKind::MutualInformation => mutual_information(&contingency(col, y, n_classes)),
                    FilterKind::ChiSquared => chi_squared(&contingency(col, y, n_classes)),
                    FilterKind::Variance => variance(col),
                };
                if s.is_finite() {
                    s
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    /// Column indices best first; ties go to the lower index.
    pub fn rank(&self, x: ArrayView2<'_, f64>, y: &[usize], n_classes: usize) -> Vec<usize> {
        let scores = self.scores(x, y, n_classes);
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        order
    }
}

fn variance(col: ArrayView1<'_, f64>) -> f64 {
    let n = col.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mean = col.sum() / n;
    col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

fn pearson(col: ArrayView1<'_, f64>, y: &[usize], n_classes: usize) -> f64 {
    let n = col.len() as f64;
    let mean = col.sum() / n;
    let sxx: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sxx <= 0.0 {
        return 0.0;
    }
    let mut score = 0.0;
    for c in 0..n_classes {
        let count = y.iter().filter(|&&l| l == c).count() as f64;
        if count == 0.0 || count == n {
            continue;
        }
        let p = count / n;
        let sxy: f64 = col
            .iter()
            .zip(y)
            .map(|(v, &l)| (v - mean) * (if l == c { 1.0 } else { 0.0 } - p))
            .sum();
        let syy = n * p * (1.0 - p);
        score += p * (sxy / (sxx * syy).sqrt()).abs();
    }
    score
}

/// Counts of (bin, class) over equal-width bins on the column's range.
fn contingency(col: ArrayView1<'_, f64>, y: &[usize], n_classes: usize) -> Vec<Vec<f64>> {
    let min = col.iter().copied().fold(f64::INFINITY, f64::min);
    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / N_BINS as f64;
    let mut table = vec![vec![0.0; n_classes]; N_BINS];
    for (&v, &c) in col.iter().zip(y) {
        let bin = if width > 0.0 {
            (((v - min) / width) as usize).min(N_BINS - 1)
        } else {
            0
        };
        table[bin][c] += 1.0;
    }
    table
}

fn mutual_information(table: &[Vec<f64>]) -> f64 {
    let total: f64 = table.iter().flatten().sum();
    if total == 0.0 {
        return 0.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let n_classes = table.first().map_or(0, Vec::len);
    let cols: Vec<f64> = (0..n_classes).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let mut mi = 0.0;
    for (b, row) in table.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            if count > 0.0 {
                mi += count / total * (count * total / (rows[b] * cols[c])).ln();
            }
        }
    }
    mi
}

fn chi_squared(table: &[Vec<f64>]) -> f64 {
    let total: f64 = table.iter().flatten().sum();
    if total == 0.0 {
        return 0.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let n_classes = table.first().map_or(0, Vec::len);
    let cols: Vec<f64> = (0..n_classes).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let mut chi = 0.0;
    for (b, row) in table.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            let expected = rows[b] * cols[c] / total;
            if expected > 0.0 {
                chi += (count - expected) * (count - expected) / expected;
            }
        }
    }
    chi
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    #[test]
    fn variance_ranking() {
        let x = ndarray::array![[4.0, 0.0, 0.0], [4.0, 3.0, 1.0], [4.0, 0.0, 0.0], [4.0, 3.0, 1.0]];
        let y = [0, 1, 0, 1];
        assert_eq!(FilterKind::Variance.scores(x.view(), &y, 2), vec![0.0, 2.25, 0.25]);
        assert_eq!(FilterKind::Variance.rank(x.view(), &y, 2), vec![1, 2, 0]);
    }

    #[test]
    fn pearson_perfect_column_first() {
        let y = vec![0, 1, 1, 0, 1, 0];
        let x = Array2::from_shape_fn((6, 3), |(i, j)| match j {
            0 => 0.3 * i as f64,
            1 => {
                if y[i] == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => ((i * 7) % 5) as f64,
        });
        let ranking = FilterKind::PearsonCorrelation.rank(x.view(), &y, 2);
        assert_eq!(ranking[0], 1);
        let s = FilterKind::PearsonCorrelation.scores(x.view(), &y, 2);
        assert!((s[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_columns_tie_to_lower_index() {
        let y = vec![0, 1, 0, 1, 1];
        let x = Array2::from_shape_fn((5, 3), |(i, j)| if j == 0 { 0.0 } else { (i * i) as f64 });
        for f in [
            FilterKind::PearsonCorrelation,
            FilterKind::MutualInformation,
            FilterKind::ChiSquared,
            FilterKind::Variance,
        ] {
            assert_eq!(f.rank(x.view(), &y, 2)[..2], [1, 2], "{f:?}");
        }
    }

    #[test]
    fn information_filters_find_the_label_column() {
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((40, 2), |(i, j)| {
            if j == 1 {
                y[i] as f64 * 5.0
            } else {
                ((i * 13) % 11) as f64
            }
        });
        assert_eq!(FilterKind::MutualInformation.rank(x.view(), &y, 2)[0], 1);
        assert_eq!(FilterKind::ChiSquared.rank(x.view(), &y, 2)[0], 1);
    }

    proptest! {
        #[test]
        fn rankings_are_permutations(
            values in proptest::collection::vec(-5f64..5.0, 12..48),
            kind in 0usize..4,
        ) {
            let n = values.len() / 4;
            let x = Array2::from_shape_vec((n, 4), values[..n * 4].to_vec()).unwrap();
            let y: Vec<usize> = (0..n).map(|i| i % 3).collect();
            let f = [FilterKind::PearsonCorrelation, FilterKind::MutualInformation, FilterKind::ChiSquared, FilterKind::Variance][kind];
            let mut r = f.rank(x.view(), &y, 3);
            prop_assert_eq!(r.len(), 4);
            r.sort();
            prop_assert_eq!(r, vec![0, 1, 2, 3]);
        }
    }
}

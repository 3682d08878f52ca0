//! Column-wise feature scalers.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerKind {
    /// Mean 0, population standard deviation 1. Zero-variance columns pass through.
    Standardize,
    /// Range mapped onto `[0, 1]`. Zero-range columns map to the fitted constant.
    MinMax,
    /// Empirical CDF rank in `[0, 1]`, interpolated between fitted values.
    QuantileRank,
}

#[derive(Debug, Clone)]
enum ColumnStats {
    Affine {
        shift: f64,
        scale: f64,
    },
    Constant(f64),
    Passthrough,
    /// Sorted distinct values and their average rank / (n - 1).
    Knots(Vec<f64>, Vec<f64>),
}

/// A scaler with statistics fitted on one dataset.
#[derive(Debug, Clone)]
pub struct FittedScaler {
    columns: Vec<ColumnStats>,
}

impl ScalerKind {
    pub fn fit(&self, x: ArrayView2<'_, f64>) -> FittedScaler {
        let columns = x
            .columns()
            .into_iter()
            .map(|col| {
                let n = col.len();
                if n == 0 {
                    return ColumnStats::Passthrough;
                }
                match self {
                    ScalerKind::Standardize => {
                        let mean = col.sum() / n as f64;
                        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                        if var > 0.0 {
                            ColumnStats::Affine {
                                shift: mean,
                                scale: var.sqrt(),
                            }
                        } else {
                            ColumnStats::Passthrough
                        }
                    }
                    ScalerKind::MinMax => {
                        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
                        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        if max > min {
                            ColumnStats::Affine {
                                shift: min,
                                scale: max - min,
                            }
                        } else {
                            ColumnStats::Constant(min)
                        }
                    }
                    ScalerKind::QuantileRank => {
                        let mut sorted: Vec<f64> = col.to_vec();
                        sorted.sort_by(f64::total_cmp);
                        let denom = (n.max(2) - 1) as f64;
                        let mut values = Vec::new();
                        let mut ranks = Vec::new();
                        let mut start = 0;
                        while start < n {
                            let mut end = start;
                            while end + 1 < n && sorted[end + 1] == sorted[start] {
                                end += 1;
                            }
                            values.push(sorted[start]);
                            let avg = if n == 1 {
                                0.5
                            } else {
                                0.5 * (start + end) as f64 / denom
                            };
                            ranks.push(avg);
                            start = end + 1;
                        }
                        ColumnStats::Knots(values, ranks)
                    }
                }
            })
            .collect();
        FittedScaler { columns }
    }
}

impl FittedScaler {
    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (mut col, stats) in out.columns_mut().into_iter().zip(&self.columns) {
            match stats {
                ColumnStats::Affine { shift, scale } => col.mapv_inplace(|v| (v - shift) / scale),
                ColumnStats::Constant(c) => col.fill(*c),
                ColumnStats::Passthrough => {}
                ColumnStats::Knots(values, ranks) => col.mapv_inplace(|v| interpolate(values, ranks, v)),
            }
        }
        out
    }

    /// Undoes affine columns; other columns are returned unchanged.
    pub fn inverse_transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (mut col, stats) in out.columns_mut().into_iter().zip(&self.columns) {
            if let ColumnStats::Affine { shift, scale } = stats {
                col.mapv_inplace(|v| v * scale + shift);
            }
        }
        out
    }
}

fn interpolate(values: &[f64], ranks: &[f64], v: f64) -> f64 {
    let last = values.len() - 1;
    if v <= values[0] {
        return ranks[0];
    }
    if v >= values[last] {
        return ranks[last];
    }
    let hi = values.partition_point(|&u| u < v);
    if values[hi] == v {
        return ranks[hi];
    }
    let lo = hi - 1;
    let t = (v - values[lo]) / (values[hi] - values[lo]);
    ranks[lo] + t * (ranks[hi] - ranks[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn standardize_two_values() {
        // mean 3, population std 1
        let x = array![[2.0], [4.0]];
        let t = ScalerKind::Standardize.fit(x.view()).transform(x.view());
        assert_eq!(t, array![[-1.0], [1.0]]);
    }

    #[test]
    fn minmax_constant_column() {
        let x = array![[5.0], [5.0], [5.0]];
        let s = ScalerKind::MinMax.fit(x.view());
        assert_eq!(s.transform(x.view()), x);
        assert_eq!(s.transform(array![[9.0]].view()), array![[5.0]]);
    }

    #[test]
    fn quantile_three_values() {
        let x = array![[10.0], [20.0], [30.0]];
        let s = ScalerKind::QuantileRank.fit(x.view());
        assert_eq!(s.transform(x.view()), array![[0.0], [0.5], [1.0]]);
        assert_eq!(
            s.transform(array![[15.0], [-1.0], [99.0]].view()),
            array![[0.25], [0.0], [1.0]]
        );
    }

    #[test]
    fn standardize_zero_variance_passthrough() {
        let x = array![[1.0, 7.0], [3.0, 7.0]];
        let t = ScalerKind::Standardize.fit(x.view()).transform(x.view());
        assert_eq!(t.column(1).to_vec(), vec![7.0, 7.0]);
    }

    #[test]
    fn unseen_rows_use_fitted_statistics() {
        let fit = array![[0.0], [10.0]];
        let s = ScalerKind::MinMax.fit(fit.view());
        assert_eq!(s.transform(array![[20.0]].view()), array![[2.0]]);
    }

    proptest! {
        #[test]
        fn standardize_roundtrip(values in proptest::collection::vec(-1e3f64..1e3, 2..30)) {
            let n = values.len();
            let x = Array2::from_shape_vec((n, 1), values).unwrap();
            let s = ScalerKind::Standardize.fit(x.view());
            let back = s.inverse_transform(s.transform(x.view()).view());
            for (a, b) in back.iter().zip(x.iter()) {
                assert_relative_eq!(a, b, epsilon = 1e-9, max_relative = 1e-9);
            }
        }

        #[test]
        fn quantile_output_in_unit_interval(values in proptest::collection::vec(-50f64..50.0, 1..30), probe in -100f64..100.0) {
            let n = values.len();
            let x = Array2::from_shape_vec((n, 1), values).unwrap();
            let s = ScalerKind::QuantileRank.fit(x.view());
            let t = s.transform(array![[probe]].view());
            prop_assert!((0.0..=1.0).contains(&t[[0, 0]]));
        }
    }
}

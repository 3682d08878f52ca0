//! Tabular datasets: representation, ingestion, splitting and projection.

mod ingest;
pub mod synth;

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub use ingest::{load_dataset, parse_arff, parse_csv, write_csv, DataFormat, LabelColumn};

/// How an encoded column was derived from the raw input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    Numeric,
    /// Indicator of one level of a categorical column.
    OneHot {
        level: String,
    },
    /// Index into the sorted `levels` of a high-cardinality categorical column.
    Ordinal {
        levels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceColumn {
    pub column: String,
    pub encoding: Encoding,
}

impl SourceColumn {
    pub fn numeric(column: impl Into<String>) -> Self {
        SourceColumn {
            column: column.into(),
            encoding: Encoding::Numeric,
        }
    }
}

/// A fully numeric classification dataset.
///
/// Rows are examples, columns are encoded features. Values are immutable
/// after construction; `row_ids` remembers which row of the originally
/// loaded data each row came from, and survives splitting and projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Array2<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    source_columns: Vec<SourceColumn>,
    class_names: Vec<String>,
    label_name: String,
    row_ids: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset with plain numeric columns named `x0..`.
    pub fn from_parts(instances: Array2<f64>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let names: Vec<String> = (0..instances.ncols()).map(|j| format!("x{j}")).collect();
        let sources = names.iter().map(SourceColumn::numeric).collect();
        Dataset::new(instances, labels, names, sources, class_names, "class".into())
    }

    pub fn new(
        instances: Array2<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        source_columns: Vec<SourceColumn>,
        class_names: Vec<String>,
        label_name: String,
    ) -> Result<Self> {
        if instances.nrows() != labels.len() {
            return Err(Error::Parse(format!(
                "{} rows but {} labels",
                instances.nrows(),
                labels.len()
            )));
        }
        if feature_names.len() != instances.ncols() || source_columns.len() != instances.ncols() {
            return Err(Error::Parse("column metadata does not match column count".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Parse(format!(
                "label index {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if instances.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite value in instance matrix".into()));
        }
        let row_ids = (0..labels.len()).collect();
        Ok(Dataset {
            instances,
            labels,
            feature_names,
            source_columns,
            class_names,
            label_name,
            row_ids,
        })
    }

    pub fn instances(&self) -> ArrayView2<'_, f64> {
        self.instances.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn source_columns(&self) -> &[SourceColumn] {
        &self.source_columns
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    /// Original row index of every row.
    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.instances.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Examples per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Number of classes with at least one example.
    pub fn n_present_classes(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            instances: self.instances.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
            source_columns: self.source_columns.clone(),
            class_names: self.class_names.clone(),
            label_name: self.label_name.clone(),
            row_ids: rows.iter().map(|&r| self.row_ids[r]).collect(),
        }
    }

    /// Stable content hash over shape, values, labels and class names.
    pub fn content_hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.n_rows() as u64).to_le_bytes());
        h.update((self.n_cols() as u64).to_le_bytes());
        for v in self.instances.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        for &l in &self.labels {
            h.update((l as u64).to_le_bytes());
        }
        for name in &self.class_names {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
        }
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest length"))
    }
}

/// A sorted, duplicate-free, non-empty set of encoded-column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FeatureSet(Vec<usize>);

impl FeatureSet {
    /// Sorts and deduplicates `indices`. Empty sets are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyFeatureSet);
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(FeatureSet(indices))
    }

    pub fn all(n_cols: usize) -> Result<Self> {
        FeatureSet::new((0..n_cols).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_bounds(&self, n_cols: usize) -> Result<()> {
        match self.0.last() {
            Some(&max) if max >= n_cols => Err(Error::FeatureOutOfRange {
                index: max,
                columns: n_cols,
            }),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for FeatureSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        FeatureSet::new(v)
    }
}

impl From<FeatureSet> for Vec<usize> {
    fn from(f: FeatureSet) -> Self {
        f.0
    }
}

/// Parameters of a random train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidSplit(format!(
                "train fraction {train_fraction} outside (0, 1)"
            )));
        }
        Ok(SplitSpec { train_fraction, seed })
    }
}

/// Row indices of a deterministic train/test partition.
///
/// The train part has `round(train_fraction * N)` rows. With `stratified`,
/// each class contributes `floor` or `ceil` of its proportional share; the
/// leftover rows go to the classes with the largest fractional remainders
/// (lowest class index on ties). Both index lists are returned sorted.
pub fn split_indices(
    labels: &[usize],
    n_classes: usize,
    spec: &SplitSpec,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let target = (spec.train_fraction * n as f64).round() as usize;
    let mut rng = SeededRng::new(spec.seed);

    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(n - target);
    if !stratified {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        train.extend_from_slice(&order[..target]);
        test.extend_from_slice(&order[target..]);
    } else {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (i, &l) in labels.iter().enumerate() {
            by_class[l].push(i);
        }
        if let Some((class, rows)) = by_class.iter().enumerate().find(|(_, r)| r.len() == 1) {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count: rows.len(),
            });
        }
        let shares: Vec<f64> = by_class
            .iter()
            .map(|rows| spec.train_fraction * rows.len() as f64)
            .collect();
        let mut quotas: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
        let assigned: usize = quotas.iter().sum();
        let mut order: Vec<usize> = (0..n_classes).filter(|&c| !by_class[c].is_empty()).collect();
        order.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut extra = target.saturating_sub(assigned);
        for &c in &order {
            if extra == 0 {
                break;
            }
            if quotas[c] < by_class[c].len() {
                quotas[c] += 1;
                extra -= 1;
            }
        }
        for (c, rows) in by_class.iter_mut().enumerate() {
            rng.shuffle(rows);
            train.extend_from_slice(&rows[..quotas[c]]);
            test.extend_from_slice(&rows[quotas[c]..]);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits a dataset into (train, test) parts.
pub fn split(d: &Dataset, spec: &SplitSpec, stratified: bool) -> Result<(Dataset, Dataset)> {
    if stratified {
        let counts = d.class_counts();
        if let Some((c, &count)) = counts.iter().enumerate().find(|(_, &k)| k == 1) {
            return Err(Error::ClassTooSmall {
                class: d.class_names()[c].clone(),
                count,
            });
        }
    }
    let (train, test) = split_indices(d.labels(), d.n_classes(), spec, stratified)?;
    Ok((d.select_rows(&train), d.select_rows(&test)))
}

/// Keeps only the columns in `f`, in the order of `f`.
pub fn project(d: &Dataset, f: &FeatureSet) -> Result<Dataset> {
    f.check_bounds(d.n_cols())?;
    let cols = f.indices();
    Ok(Dataset {
        instances: d.instances.select(Axis(1), cols),
        labels: d.labels.clone(),
        feature_names: cols.iter().map(|&j| d.feature_names[j].clone()).collect(),
        source_columns: cols.iter().map(|&j| d.source_columns[j].clone()).collect(),
        class_names: d.class_names.clone(),
        label_name: d.label_name.clone(),
        row_ids: d.row_ids.clone(),
    })
}

/// Per-class counts keyed by class name, for diagnostics.
pub fn class_distribution(d: &Dataset) -> BTreeMap<String, usize> {
    d.class_names().iter().cloned().zip(d.class_counts()).collect()
}

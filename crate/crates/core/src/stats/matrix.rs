use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use crate::bench::BenchInfo as Row;
use crate::error::{Error, Result};

/// Per-split test errors keyed by dataset and approach. `None` marks a
/// split where the approach produced no result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultMatrix {
    cells: BTreeMap<String, BTreeMap<String, BTreeMap<usize, Option<f64>>>>,
    approach_order: Vec<String>,
}

impl ResultMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, dataset: &str, approach: &str, split: usize, error: Option<f64>) {
        if !self.approach_order.iter().any(|a| a == approach) {
            self.approach_order.push(approach.to_string());
        }
        self.cells
            .entry(dataset.to_string())
            .or_default()
            .entry(approach.to_string())
            .or_default()
            .insert(split, error);
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn datasets(&self) -> impl Iterator<Item = &str> {
        self.cells.keys().map(String::as_str)
    }

    /// Approaches in first-seen order.
    pub fn approaches(&self) -> &[String] {
        &self.approach_order
    }

    pub fn get(&self, dataset: &str, approach: &str) -> Option<&BTreeMap<usize, Option<f64>>> {
        self.cells.get(dataset)?.get(approach)
    }

    /// Errors ordered by split when every split has a value.
    pub fn complete(&self, dataset: &str, approach: &str) -> Option<Vec<f64>> {
        let splits = self.get(dataset, approach)?;
        if splits.is_empty() {
            return None;
        }
        splits.values().copied().collect()
    }

    /// Every approach of a dataset must cover the same split indices.
    pub fn check_paired(&self) -> Result<()> {
        for (dataset, approaches) in &self.cells {
            let mut expected: Option<(&String, BTreeSet<usize>)> = None;
            for (approach, splits) in approaches {
                let keys: BTreeSet<usize> = splits.keys().copied().collect();
                match &expected {
                    None => expected = Some((approach, keys)),
                    Some((first, e)) if *e != keys => {
                        return Err(Error::Stats(format!(
                            "unpaired splits on `{dataset}`: `{first}` has {e:?}, `{approach}` has {keys:?}"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut m = ResultMatrix::new();
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: Row = row?;
            m.insert(&row.dataset_id, &row.approach_id, row.split_index, row.error);
        }
        Ok(m)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    /// Header `dataset_id,approach_id,split_index,error`; a missing error is
    /// an empty field. Rows go dataset, approach (first-seen order), split.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (dataset, approaches) in &self.cells {
            for approach in &self.approach_order {
                let Some(splits) = approaches.get(approach) else {
                    continue;
                };
                for (&split, &error) in splits {
                    w.serialize(Row {
                        dataset_id: dataset.clone(),
                        approach_id: approach.clone(),
                        split_index: split,
                        error,
                    })?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    /// Collects the `bench` sections of every `*.json` report below `dir`.
    pub fn from_report_dir(dir: &Path) -> Result<Self> {
        let mut files = Vec::new();
        collect_json(dir, &mut files)?;
        files.sort();
        let mut m = ResultMatrix::new();
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let Some(bench) = value.get("bench") else { continue };
            let row: Row = serde_json::from_value(bench.clone())?;
            m.insert(&row.dataset_id, &row.approach_id, row.split_index, row.error);
        }
        if m.is_empty() {
            return Err(Error::Stats(format!("no benchmark reports under {}", dir.display())));
        }
        Ok(m)
    }
}

fn collect_json(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_json(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}

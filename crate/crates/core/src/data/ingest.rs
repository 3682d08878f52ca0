//! CSV and ARFF ingestion.
//!
//! Numeric columns keep their values; categorical columns are one-hot
//! encoded up to [`ONE_HOT_MAX_LEVELS`] levels and ordinal-encoded above.
//! Levels are sorted lexicographically so that writing a dataset back with
//! [`write_csv`] and reloading it reproduces the same encoding. Missing cells
//! (empty or `?`) are imputed: numeric columns by the observed mean,
//! categorical ones by the most frequent level (smallest level on ties).
//! Class labels are numbered in order of first appearance.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::{Dataset, Encoding, SourceColumn};
use crate::error::{Error, Result};

/// Categorical columns with more levels than this are ordinal-encoded.
pub const ONE_HOT_MAX_LEVELS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Arff,
}

impl DataFormat {
    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("arff") => DataFormat::Arff,
            _ => DataFormat::Csv,
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "arff" => Ok(DataFormat::Arff),
            other => Err(Error::Parse(format!("unknown data format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl LabelColumn {
    /// A header name, or a zero-based index when `s` is all digits.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }

    fn resolve(&self, headers: &[String]) -> Result<usize> {
        match self {
            LabelColumn::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::LabelColumnMissing(name.clone())),
            // A header literally named like the index wins over positional lookup.
            LabelColumn::Index(i) => headers
                .iter()
                .position(|h| h == &i.to_string())
                .or((*i < headers.len()).then_some(*i))
                .ok_or_else(|| Error::LabelColumnMissing(i.to_string())),
            LabelColumn::Last => headers
                .len()
                .checked_sub(1)
                .ok_or_else(|| Error::LabelColumnMissing("<last>".into())),
        }
    }
}

#[derive(Debug, Clone)]
enum ColumnKind {
    /// Decide from the values.
    Infer,
    Numeric,
    Nominal(Vec<String>),
}

struct RawTable {
    headers: Vec<String>,
    kinds: Vec<ColumnKind>,
    rows: Vec<Vec<Option<String>>>,
}

fn missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "?"
}

pub fn load_dataset(path: &Path, format: DataFormat, label: &LabelColumn) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        DataFormat::Csv => parse_csv(&text, label),
        DataFormat::Arff => parse_arff(&text, label),
    }
}

pub fn parse_csv(text: &str, label: &LabelColumn) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        rows.push(
            record
                .iter()
                .map(|c| (!missing(c)).then(|| c.trim().to_string()))
                .collect(),
        );
    }
    let kinds = vec![ColumnKind::Infer; headers.len()];
    encode(RawTable { headers, kinds, rows }, label)
}

pub fn parse_arff(text: &str, label: &LabelColumn) -> Result<Dataset> {
    let mut headers = Vec::new();
    let mut kinds = Vec::new();
    let mut rows = Vec::new();
    let mut in_data = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            if line.starts_with('{') {
                return Err(Error::Parse(format!(
                    "line {}: sparse ARFF rows are not supported",
                    lineno + 1
                )));
            }
            let cells = split_arff_values(line);
            rows.push(cells.into_iter().map(|c| (!missing(&c)).then_some(c)).collect());
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            continue;
        } else if lower.starts_with("@attribute") {
            let rest = line["@attribute".len()..].trim();
            let (name, ty) = take_arff_name(rest)
                .ok_or_else(|| Error::Parse(format!("line {}: malformed @attribute", lineno + 1)))?;
            let ty_lower = ty.trim().to_ascii_lowercase();
            let kind = if ty_lower.starts_with('{') {
                let inner = ty.trim().trim_start_matches('{').trim_end_matches('}');
                ColumnKind::Nominal(split_arff_values(inner))
            } else if matches!(ty_lower.as_str(), "numeric" | "real" | "integer") {
                ColumnKind::Numeric
            } else {
                return Err(Error::Parse(format!(
                    "line {}: unsupported attribute type `{}`",
                    lineno + 1,
                    ty.trim()
                )));
            };
            headers.push(name);
            kinds.push(kind);
        } else if lower.starts_with("@data") {
            in_data = true;
        } else {
            return Err(Error::Parse(format!("line {}: unexpected `{line}`", lineno + 1)));
        }
    }
    if !in_data {
        return Err(Error::Parse("missing @data section".into()));
    }
    encode(RawTable { headers, kinds, rows }, label)
}

fn take_arff_name(rest: &str) -> Option<(String, &str)> {
    let first = rest.chars().next()?;
    if first == '\'' || first == '"' {
        let end = rest[1..].find(first)? + 1;
        Some((rest[1..end].to_string(), &rest[end + 1..]))
    } else {
        let end = rest.find(char::is_whitespace)?;
        Some((rest[..end].to_string(), &rest[end..]))
    }
}

fn split_arff_values(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    for ch in line.chars() {
        match quote {
            Some(q) if ch == q => quote = None,
            Some(_) => cur.push(ch),
            None if ch == '\'' || ch == '"' => quote = Some(ch),
            None if ch == ',' => out.push(std::mem::take(&mut cur).trim().to_string()),
            None => cur.push(ch),
        }
    }
    out.push(cur.trim().to_string());
    out
}

fn encode(table: RawTable, label: &LabelColumn) -> Result<Dataset> {
    let RawTable { headers, kinds, rows } = table;
    let label_idx = label.resolve(&headers)?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                row.len(),
                headers.len()
            )));
        }
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let value = row[label_idx]
            .as_ref()
            .ok_or_else(|| Error::Parse(format!("row {}: missing label", i + 1)))?;
        let next = class_names.len();
        let idx = *class_index.entry(value.clone()).or_insert_with(|| {
            class_names.push(value.clone());
            next
        });
        labels.push(idx);
    }

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    let mut sources = Vec::new();
    for (j, header) in headers.iter().enumerate() {
        if j == label_idx {
            continue;
        }
        let cells: Vec<Option<&str>> = rows.iter().map(|r| r[j].as_deref()).collect();
        let numeric = match &kinds[j] {
            ColumnKind::Numeric => {
                let parsed = parse_numeric(&cells)
                    .ok_or_else(|| Error::Parse(format!("numeric attribute `{header}` has a non-numeric value")))?;
                Some(parsed)
            }
            ColumnKind::Nominal(_) => None,
            ColumnKind::Infer => parse_numeric(&cells),
        };
        if let Some(values) = numeric {
            columns.push(impute_mean(&values));
            names.push(header.clone());
            sources.push(SourceColumn::numeric(header));
            continue;
        }
        let levels = match &kinds[j] {
            ColumnKind::Nominal(declared) => declared.clone(),
            _ => {
                let mut seen: Vec<String> = cells.iter().flatten().map(|s| s.to_string()).collect();
                seen.sort();
                seen.dedup();
                seen
            }
        };
        let filled = impute_mode(&cells, &levels);
        let level_pos: HashMap<&str, usize> = levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let codes: Vec<usize> = filled
            .iter()
            .map(|v| {
                level_pos
                    .get(v.as_str())
                    .copied()
                    .ok_or_else(|| Error::Parse(format!("value `{v}` not declared for `{header}`")))
            })
            .collect::<Result<_>>()?;
        if levels.len() <= ONE_HOT_MAX_LEVELS {
            for (li, level) in levels.iter().enumerate() {
                columns.push(codes.iter().map(|&c| if c == li { 1.0 } else { 0.0 }).collect());
                names.push(format!("{header}={level}"));
                sources.push(SourceColumn {
                    column: header.clone(),
                    encoding: Encoding::OneHot { level: level.clone() },
                });
            }
        } else {
            columns.push(codes.iter().map(|&c| c as f64).collect());
            names.push(header.clone());
            sources.push(SourceColumn {
                column: header.clone(),
                encoding: Encoding::Ordinal { levels: levels.clone() },
            });
        }
    }

    let n = rows.len();
    let instances = Array2::from_shape_fn((n, columns.len()), |(i, j)| columns[j][i]);
    Dataset::new(
        instances,
        labels,
        names,
        sources,
        class_names,
        headers[label_idx].clone(),
    )
}

/// `None` unless every present cell parses as a finite number.
fn parse_numeric(cells: &[Option<&str>]) -> Option<Vec<Option<f64>>> {
    cells
        .iter()
        .map(|c| match c {
            None => Some(None),
            Some(s) => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
        })
        .collect()
}

fn impute_mean(values: &[Option<f64>]) -> Vec<f64> {
    let observed: Vec<f64> = values.iter().flatten().copied().collect();
    let mean = if observed.is_empty() {
        0.0
    } else {
        observed.iter().sum::<f64>() / observed.len() as f64
    };
    values.iter().map(|v| v.unwrap_or(mean)).collect()
}

fn impute_mode(cells: &[Option<&str>], levels: &[String]) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in cells.iter().flatten() {
        *counts.entry(c).or_default() += 1;
    }
    // BTreeMap iterates in sorted order, so max_by_key's last-wins rule would
    // prefer larger levels; reverse to keep the smallest on ties.
    let mode = counts
        .iter()
        .rev()
        .max_by_key(|(_, &n)| n)
        .map(|(l, _)| l.to_string())
        .or_else(|| levels.first().cloned())
        .unwrap_or_else(|| "?".to_string());
    cells
        .iter()
        .map(|c| c.map_or_else(|| mode.clone(), str::to_string))
        .collect()
}

/// Writes `d` as CSV with original columns restored where possible.
///
/// Complete one-hot groups and ordinal columns are decoded back to their
/// levels; anything else (for example a projection that kept only part of a
/// one-hot group) is written as its encoded numeric column. The label
/// column comes last.
pub fn write_csv<W: Write>(d: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let x = d.instances();
    let n_cols = d.n_cols();

    enum Out {
        Numeric(usize),
        Group(String, Vec<(usize, String)>),
        Ordinal(usize, Vec<String>),
    }
    let mut plan = Vec::new();
    let mut j = 0;
    while j < n_cols {
        let src = &d.source_columns()[j];
        match &src.encoding {
            Encoding::Numeric => {
                plan.push(Out::Numeric(j));
                j += 1;
            }
            Encoding::Ordinal { levels } => {
                let decodable = x
                    .column(j)
                    .iter()
                    .all(|&v| v >= 0.0 && v.fract() == 0.0 && (v as usize) < levels.len());
                plan.push(if decodable {
                    Out::Ordinal(j, levels.clone())
                } else {
                    Out::Numeric(j)
                });
                j += 1;
            }
            Encoding::OneHot { .. } => {
                let mut group = Vec::new();
                let mut k = j;
                while k < n_cols {
                    match &d.source_columns()[k] {
                        SourceColumn {
                            column,
                            encoding: Encoding::OneHot { level },
                        } if column == &src.column => {
                            group.push((k, level.clone()));
                            k += 1;
                        }
                        _ => break,
                    }
                }
                let decodable = (0..d.n_rows()).all(|r| {
                    let row = x.row(r);
                    let ones = group.iter().filter(|(c, _)| row[*c] == 1.0).count();
                    let zeros = group.iter().filter(|(c, _)| row[*c] == 0.0).count();
                    ones == 1 && ones + zeros == group.len()
                });
                if decodable {
                    plan.push(Out::Group(src.column.clone(), group));
                } else {
                    plan.extend(group.into_iter().map(|(c, _)| Out::Numeric(c)));
                }
                j = k;
            }
        }
    }

    let mut header: Vec<String> = plan
        .iter()
        .map(|p| match p {
            Out::Numeric(c) => d.feature_names()[*c].clone(),
            Out::Group(name, _) => name.clone(),
            Out::Ordinal(c, _) => d.source_columns()[*c].column.clone(),
        })
        .collect();
    header.push(d.label_name().to_string());
    w.write_record(&header)?;

    for r in 0..d.n_rows() {
        let row = x.row(r);
        let mut record: Vec<String> = plan
            .iter()
            .map(|p| match p {
                Out::Numeric(c) => format!("{}", row[*c]),
                Out::Group(_, group) => group
                    .iter()
                    .find(|(c, _)| row[*c] == 1.0)
                    .map(|(_, l)| l.clone())
                    .unwrap_or_default(),
                Out::Ordinal(c, levels) => levels[row[*c] as usize].clone(),
            })
            .collect();
        record.push(d.class_names()[d.labels()[r]].clone());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

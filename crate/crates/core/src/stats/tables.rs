use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{trimmed_mean, verdict, wilcoxon_signed_rank, Outcome, ResultMatrix, VerdictRule};
use crate::error::{Error, Result};
use crate::stages::StageId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TournamentRow {
    pub approach: String,
    pub wins: usize,
    /// Datasets on which this approach was the only winning variant.
    pub unique_wins: usize,
    pub losses: usize,
    pub draws: usize,
}

/// A multi-stage approach and the single-stage approaches it combines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynergyRange {
    pub range: String,
    pub singles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynergyRow {
    pub range: String,
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub dataset: String,
    pub approach: String,
    /// `None` when some split has no result.
    pub trimmed_mean: Option<f64>,
    pub std: Option<f64>,
    pub best: bool,
    /// The paired test against the best approach is not significant.
    pub indistinguishable: bool,
}

fn require(matrix: &ResultMatrix, ids: &[&str]) -> Result<()> {
    for id in ids {
        if !matrix.approaches().iter().any(|a| a == id) {
            return Err(Error::Stats(format!("approach `{id}` not in results")));
        }
    }
    matrix.check_paired()
}

/// Datasets where every listed approach has all splits, with their errors.
fn complete_rows<'a>(matrix: &'a ResultMatrix, ids: &[&str]) -> Vec<(&'a str, Vec<Vec<f64>>)> {
    matrix
        .datasets()
        .filter_map(|d| {
            let rows: Option<Vec<Vec<f64>>> = ids.iter().map(|id| matrix.complete(d, id)).collect();
            rows.map(|r| (d, r))
        })
        .collect()
}

/// Win/loss/draw counts of each variant against `baseline`.
pub fn tournament(
    matrix: &ResultMatrix,
    baseline: &str,
    variants: &[String],
    rule: &VerdictRule,
) -> Result<Vec<TournamentRow>> {
    let mut ids = vec![baseline];
    ids.extend(variants.iter().map(String::as_str));
    require(matrix, &ids)?;
    let mut rows: Vec<TournamentRow> = variants
        .iter()
        .map(|v| TournamentRow {
            approach: v.clone(),
            wins: 0,
            unique_wins: 0,
            losses: 0,
            draws: 0,
        })
        .collect();
    for (dataset, errors) in complete_rows(matrix, &ids) {
        let base = &errors[0];
        let mut winners = Vec::new();
        for (i, row) in rows.iter_mut().enumerate() {
            let v = verdict(&errors[i + 1], base, rule)
                .map_err(|e| Error::Stats(format!("{dataset}/{}: {e}", row.approach)))?;
            match v.outcome {
                Outcome::Better => {
                    row.wins += 1;
                    winners.push(i);
                }
                Outcome::Worse => row.losses += 1,
                Outcome::Draw => row.draws += 1,
            }
        }
        if let [only] = winners[..] {
            rows[only].unique_wins += 1;
        }
    }
    Ok(rows)
}

/// A range wins when it beats the baseline substantially and its improvement
/// exceeds that of each constituent single by at least `delta`.
pub fn synergy(
    matrix: &ResultMatrix,
    ranges: &[SynergyRange],
    baseline: &str,
    rule: &VerdictRule,
) -> Result<Vec<SynergyRow>> {
    let mut out = Vec::with_capacity(ranges.len());
    for range in ranges {
        let mut ids = vec![baseline, range.range.as_str()];
        ids.extend(range.singles.iter().map(String::as_str));
        require(matrix, &ids)?;
        let mut row = SynergyRow {
            range: range.range.clone(),
            wins: 0,
            losses: 0,
            draws: 0,
        };
        for (_, errors) in complete_rows(matrix, &ids) {
            let base = &errors[0];
            let v = verdict(&errors[1], base, rule)?;
            let base_mean = trimmed_mean(base, rule.trim)?;
            let mut exceeds = true;
            for single in &errors[2..] {
                let gain = base_mean - trimmed_mean(single, rule.trim)?;
                if v.mean_difference < gain + rule.delta {
                    exceeds = false;
                }
            }
            match v.outcome {
                Outcome::Better if exceeds => row.wins += 1,
                Outcome::Worse => row.losses += 1,
                _ => row.draws += 1,
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Pairs each `monotone-<stage>` approach spanning at least two stages after
/// probing with the `single-<stage>` approaches it contains. Only approaches
/// present in `approaches` are used.
pub fn default_synergy_ranges(approaches: &[String]) -> Vec<SynergyRange> {
    let has = |id: &str| approaches.iter().any(|a| a == id);
    let mut out = Vec::new();
    for (i, stage) in StageId::ALL.iter().enumerate().skip(2) {
        let range = format!("monotone-{stage}");
        if !has(&range) {
            continue;
        }
        let singles: Vec<String> = StageId::ALL[1..=i]
            .iter()
            .map(|s| format!("single-{s}"))
            .filter(|s| has(s))
            .collect();
        if !singles.is_empty() {
            out.push(SynergyRange { range, singles });
        }
    }
    out
}

fn population_std(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Per-dataset trimmed mean and spread for each approach, flagging the best
/// approach and those the paired test cannot separate from it.
pub fn summary_table(matrix: &ResultMatrix, rule: &VerdictRule) -> Result<Vec<SummaryCell>> {
    matrix.check_paired()?;
    let mut cells = Vec::new();
    for dataset in matrix.datasets() {
        let stats: Vec<(String, Option<Vec<f64>>, Option<f64>)> = matrix
            .approaches()
            .iter()
            .filter(|a| matrix.get(dataset, a).is_some())
            .map(|a| {
                let errors = matrix.complete(dataset, a);
                let tm = errors.as_deref().map(|e| trimmed_mean(e, rule.trim)).transpose()?;
                Ok((a.clone(), errors, tm))
            })
            .collect::<Result<_>>()?;
        let best = stats
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.2.map(|m| (i, m)))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        for (approach, errors, tm) in &stats {
            let (is_best, indistinguishable) = match (best, errors) {
                (Some((b, best_mean)), Some(e)) => {
                    let reference = stats[b].1.as_ref().expect("best has errors");
                    let p = wilcoxon_signed_rank(e, reference)?.p_value;
                    (tm == &Some(best_mean), p >= rule.alpha)
                }
                _ => (false, false),
            };
            cells.push(SummaryCell {
                dataset: dataset.to_string(),
                approach: approach.clone(),
                trimmed_mean: *tm,
                std: errors.as_deref().map(population_std),
                best: is_best,
                indistinguishable,
            });
        }
    }
    Ok(cells)
}

fn csv_err(e: std::io::Error) -> Error {
    Error::io("<csv output>", e)
}

pub fn write_tournament_csv<W: Write>(rows: &[TournamentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_synergy_csv<W: Write>(rows: &[SynergyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_summary_csv<W: Write>(cells: &[SummaryCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush().map_err(csv_err)
}

/// Left-aligned first column, right-aligned rest.
fn align(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, &w))| {
                if i == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

pub fn render_tournament(rows: &[TournamentRow]) -> String {
    let header = ["approach", "wins", "unique", "losses", "draws"].map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.approach.clone(),
                r.wins.to_string(),
                r.unique_wins.to_string(),
                r.losses.to_string(),
                r.draws.to_string(),
            ]
        })
        .collect();
    align(&header, &body)
}

pub fn render_synergy(rows: &[SynergyRow]) -> String {
    let header = ["range", "wins", "losses", "draws"].map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.range.clone(),
                r.wins.to_string(),
                r.losses.to_string(),
                r.draws.to_string(),
            ]
        })
        .collect();
    align(&header, &body)
}

/// Datasets as rows, approaches as columns. `*` marks the best cell and `~`
/// cells indistinguishable from it; `n/a` marks incomplete results.
pub fn render_summary(cells: &[SummaryCell]) -> String {
    let mut approaches: Vec<&str> = Vec::new();
    let mut datasets: Vec<&str> = Vec::new();
    for c in cells {
        if !approaches.contains(&c.approach.as_str()) {
            approaches.push(&c.approach);
        }
        if !datasets.contains(&c.dataset.as_str()) {
            datasets.push(&c.dataset);
        }
    }
    let mut header = vec!["dataset".to_string()];
    header.extend(approaches.iter().map(|a| a.to_string()));
    let body: Vec<Vec<String>> = datasets
        .iter()
        .map(|d| {
            let mut row = vec![d.to_string()];
            for a in &approaches {
                let cell = cells.iter().find(|c| c.dataset == *d && c.approach == *a);
                row.push(match cell {
                    Some(SummaryCell {
                        trimmed_mean: Some(m),
                        std: Some(s),
                        best,
                        indistinguishable,
                        ..
                    }) => {
                        let mark = if *best {
                            "*"
                        } else if *indistinguishable {
                            "~"
                        } else {
                            " "
                        };
                        format!("{m:.4} ± {s:.4}{mark}")
                    }
                    Some(_) => "n/a ".to_string(),
                    None => String::new(),
                });
            }
            row
        })
        .collect();
    align(&header, &body)
}

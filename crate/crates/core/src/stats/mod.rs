//! Paired comparisons of benchmark results.

mod matrix;
mod tables;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub use matrix::ResultMatrix;
pub use tables::{
    default_synergy_ranges, render_summary, render_synergy, render_tournament, summary_table, synergy, tournament,
    write_summary_csv, write_synergy_csv, write_tournament_csv, SummaryCell, SynergyRange, SynergyRow, TournamentRow,
};

/// Largest sample (after dropping zero differences) tested exactly.
pub const EXACT_MAX_N: usize = 12;

/// Mean after dropping `floor(trim * n)` values from each tail.
pub fn trimmed_mean(values: &[f64], trim: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Stats("trimmed mean of an empty sample".into()));
    }
    if !(0.0..0.5).contains(&trim) {
        return Err(Error::Stats(format!("trim {trim} outside [0, 0.5)")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = (trim * sorted.len() as f64).floor() as usize;
    let kept = &sorted[cut..sorted.len() - cut];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    Normal,
    /// Every difference was zero.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)` over the non-zero differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub method: TestMethod,
}

/// Absolute non-zero differences with average ranks, and the signs.
fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<bool>, Vec<usize>)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Stats(format!(
            "paired samples must be non-empty and of equal length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0; diffs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && diffs[order[end + 1]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        let avg = (start + end) as f64 / 2.0 + 1.0;
        for &i in &order[start..=end] {
            ranks[i] = avg;
        }
        ties.push(end - start + 1);
        start = end + 1;
    }
    let positive = diffs.iter().map(|d| *d > 0.0).collect();
    Ok((ranks, positive, ties))
}

fn statistic(ranks: &[f64], positive: &[bool]) -> f64 {
    let plus: f64 = ranks.iter().zip(positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
    let total: f64 = ranks.iter().sum();
    plus.min(total - plus)
}

/// Two-sided exact p-value: `min(1, 2 * P(W+ <= w))` under random signs.
/// Average ranks are doubled so the subset-sum table stays integral.
fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let limit = (w * 2.0).round() as usize;
    let at_most: f64 = counts[..=limit.min(total)].iter().sum();
    (2.0 * at_most / 2f64.powi(ranks.len() as i32)).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity correction.
fn normal_p(n: usize, ties: &[usize], w: f64) -> f64 {
    let n = n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((mean - w).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

/// Wilcoxon signed-rank test on paired samples, zero differences dropped.
/// Exact for up to [`EXACT_MAX_N`] non-zero differences, normal above.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let (ranks, positive, ties) = signed_ranks(a, b)?;
    let n = ranks.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n,
            method: TestMethod::Degenerate,
        });
    }
    let w = statistic(&ranks, &positive);
    let (p_value, method) = if n <= EXACT_MAX_N {
        (exact_p(&ranks, w), TestMethod::Exact)
    } else {
        (normal_p(n, &ties, w), TestMethod::Normal)
    };
    Ok(WilcoxonResult {
        statistic: w,
        p_value,
        n,
        method,
    })
}

/// The normal-approximation p-value regardless of sample size.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let (ranks, positive, ties) = signed_ranks(a, b)?;
    let n = ranks.len();
    let w = statistic(&ranks, &positive);
    Ok(WilcoxonResult {
        statistic: w,
        p_value: if n == 0 { 1.0 } else { normal_p(n, &ties, w) },
        n,
        method: TestMethod::Normal,
    })
}

/// Thresholds for calling a difference substantial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerdictRule {
    pub alpha: f64,
    pub delta: f64,
    pub trim: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        VerdictRule {
            alpha: 0.05,
            delta: 0.01,
            trim: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Better,
    Worse,
    Draw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub p_value: f64,
    /// Trimmed mean of the reference minus that of the tested approach;
    /// positive means the tested approach has lower error.
    pub mean_difference: f64,
}

/// Better needs `p < alpha` and an error reduction of at least `delta`;
/// worse is the mirror image.
pub fn decide(p_value: f64, mean_difference: f64, rule: &VerdictRule) -> Outcome {
    if p_value < rule.alpha && mean_difference >= rule.delta {
        Outcome::Better
    } else if p_value < rule.alpha && -mean_difference >= rule.delta {
        Outcome::Worse
    } else {
        Outcome::Draw
    }
}

/// Compares per-split errors of `a` (tested) against `b` (reference).
pub fn verdict(a: &[f64], b: &[f64], rule: &VerdictRule) -> Result<Verdict> {
    let test = wilcoxon_signed_rank(a, b)?;
    let mean_difference = trimmed_mean(b, rule.trim)? - trimmed_mean(a, rule.trim)?;
    Ok(Verdict {
        outcome: decide(test.p_value, mean_difference, rule),
        p_value: test.p_value,
        mean_difference,
    })
}

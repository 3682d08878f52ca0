use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CandidatePool, ScoredCandidate, StageContext, StageDetails, StageId, ValidationScore};
use crate::deadline::secs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    #[serde(with = "secs::opt")]
    pub timeout: Option<Duration>,
    /// Holdout size at which the holdout score is fully trusted.
    pub n_bar: usize,
    /// Number of finalists re-trained and scored on the holdout.
    pub m: usize,
    /// Share of the data reserved as holdout before any other stage runs.
    pub holdout_fraction: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            timeout: None,
            n_bar: 10_000,
            m: 10,
            holdout_fraction: 0.10,
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.n_bar == 0 || self.m == 0 {
            return Err(crate::Error::Config("n_bar and m must be positive".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 0.5) {
            return Err(crate::Error::Config(format!(
                "holdout_fraction {} outside (0, 0.5)",
                self.holdout_fraction
            )));
        }
        Ok(())
    }
}

/// Trust in a holdout of `n` rows: `min(1, n / n_bar)`.
pub fn tau(n: usize, n_bar: usize) -> f64 {
    (n as f64 / n_bar as f64).min(1.0)
}

/// Weight of the holdout score: `tau + (n / total) * (1 - tau)`.
pub fn omega(n: usize, total: usize, n_bar: usize) -> f64 {
    let t = tau(n, n_bar);
    t + (n as f64 / total as f64) * (1.0 - t)
}

/// Convex combination of the internal and holdout scores.
pub fn final_score(internal: f64, holdout: f64, weight: f64) -> f64 {
    internal * (1.0 - weight) + holdout * weight
}

/// Re-trains the `m` internally best candidates on all optimization data,
/// scores them once on the holdout and orders them by final score. The
/// result is terminal: its order no longer follows internal scores.
///
/// Without a holdout, or if no finalist could be validated, the pool is
/// returned unchanged.
pub(super) fn run(
    pool: CandidatePool,
    ctx: &StageContext<'_>,
    cfg: &ValidationConfig,
) -> (CandidatePool, StageDetails) {
    let Some(holdout) = ctx.holdout.filter(|h| !h.is_empty()) else {
        log::warn!("validation skipped: no holdout data");
        return (pool, StageDetails::None);
    };
    let n = holdout.n_rows();
    let weight = omega(n, n + ctx.data.n_rows(), cfg.n_bar.max(1));
    let mut finalists: Vec<ScoredCandidate> = Vec::new();
    for entry in pool.ranked().into_iter().take(cfg.m.max(1)) {
        if ctx.out_of_time() {
            break;
        }
        let s = ctx.scorer.holdout(
            &entry.candidate,
            ctx.data,
            holdout,
            StageId::Validation.as_str(),
            ctx.deadline,
        );
        ctx.count(&entry.candidate, &s);
        if !s.is_ok() {
            continue;
        }
        let mut e = entry.clone();
        e.validation = Some(ValidationScore {
            holdout_error: s.mean,
            weight,
            final_score: final_score(entry.score.mean, s.mean, weight),
        });
        finalists.push(e);
    }
    let details = StageDetails::Validation {
        weight,
        holdout_rows: n,
        validated: finalists.len(),
    };
    if finalists.is_empty() {
        return (pool, details);
    }
    let final_of = |e: &ScoredCandidate| e.validation.as_ref().map_or(f64::INFINITY, |v| v.final_score);
    finalists.sort_by(|a, b| final_of(a).total_cmp(&final_of(b)));
    (finalists.into(), details)
}

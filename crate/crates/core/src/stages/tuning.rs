use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CandidatePool, StageContext, StageId};
use crate::components::params::{enumerate_grid, grid_size, sample_space};
use crate::components::{ParamMap, Params};
use crate::deadline::{secs, Deadline};
use crate::evaluation::Candidate;
use crate::rng::SeededRng;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    #[serde(with = "secs::opt")]
    pub timeout: Option<Duration>,
    /// Parameter settings tried per candidate.
    pub max_evals: usize,
    #[serde(with = "secs::opt")]
    pub per_candidate_budget: Option<Duration>,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            timeout: Some(Duration::from_secs(300)),
            max_evals: 30,
            per_candidate_budget: Some(Duration::from_secs(120)),
        }
    }
}

/// Parameter settings to try for one candidate: the whole grid when it has
/// fewer than `max_evals` points, otherwise `max_evals` random draws.
fn proposals(space: &crate::components::ParamSpace, max_evals: usize, rng: &mut SeededRng) -> Vec<ParamMap> {
    match grid_size(space) {
        Some(n) if n < max_evals => enumerate_grid(space).unwrap_or_default(),
        _ => (0..max_evals).map(|_| sample_space(space, rng)).collect(),
    }
}

/// Random search (or grid enumeration) around each pooled candidate, best
/// first. Only settings that beat the candidate's best score so far are
/// added; the original candidate stays in the pool.
pub(super) fn run(mut pool: CandidatePool, ctx: &StageContext<'_>, cfg: &TuningConfig) -> CandidatePool {
    let sources: Vec<(Candidate, f64)> = pool
        .ranked()
        .into_iter()
        .map(|e| (e.candidate.clone(), e.score.mean))
        .collect();
    for (c, score) in sources {
        if ctx.out_of_time() {
            break;
        }
        let base = c.learner.base_id();
        let Ok(spec) = ctx.registry.learner(base) else { continue };
        if spec.param_space.is_empty() {
            continue;
        }
        let Ok(current) = ctx.registry.resolve_params(base, &c.params) else {
            continue;
        };
        let key = c.key();
        let mut rng = SeededRng::new(seed!(ctx.seed, key.as_str()));
        let budget = ctx.deadline.min(Deadline::after_opt(cfg.per_candidate_budget));
        let mut best = score;
        for map in proposals(&spec.param_space, cfg.max_evals, &mut rng) {
            if map == current {
                continue;
            }
            let params = if map == spec.default_params {
                Params::Default
            } else {
                Params::Explicit(map)
            };
            let tuned = c.clone().with_params(params);
            if pool.contains(&tuned.key()) {
                continue;
            }
            if budget.expired() {
                break;
            }
            let Some(s) = ctx.evaluate_until(&tuned, StageId::Tuning, budget) else {
                break;
            };
            if s.is_ok() && s.mean < best {
                best = s.mean;
                pool.insert(tuned, s, StageId::Tuning);
            }
        }
    }
    pool
}

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CandidatePool, StageContext, StageId};
use crate::deadline::secs;
use crate::evaluation::Candidate;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbingConfig {
    #[serde(default, with = "secs::opt")]
    pub timeout: Option<Duration>,
}

/// Every registered base learner with default parameters and no preprocessing.
pub(super) fn run(mut pool: CandidatePool, ctx: &StageContext<'_>, _cfg: &ProbingConfig) -> CandidatePool {
    for spec in ctx.registry.base_learners() {
        if !ctx.try_add(&mut pool, Candidate::base(&spec.id), StageId::Probing) {
            break;
        }
    }
    pool
}

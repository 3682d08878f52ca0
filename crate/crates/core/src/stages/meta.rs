use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CandidatePool, StageContext, StageId};
use crate::components::{LearnerRef, Params};
use crate::deadline::secs;
use crate::evaluation::Candidate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaConfig {
    #[serde(with = "secs::opt")]
    pub timeout: Option<Duration>,
    /// Meta-learners to apply, in order; all registered ones when `None`.
    pub metas: Option<Vec<String>>,
}

impl Default for MetaConfig {
    fn default() -> Self {
        MetaConfig {
            timeout: Some(Duration::from_secs(300)),
            metas: None,
        }
    }
}

/// Wraps each pooled learner, best first, in every meta-learner. Scaler and
/// feature slots are kept; candidates that are already wrapped are skipped.
pub(super) fn run(mut pool: CandidatePool, ctx: &StageContext<'_>, cfg: &MetaConfig) -> CandidatePool {
    let metas: Vec<String> = match &cfg.metas {
        Some(ids) => ids
            .iter()
            .filter(|id| ctx.registry.learner(id).is_ok_and(|l| l.is_meta))
            .cloned()
            .collect(),
        None => ctx.registry.meta_learners().map(|l| l.id.clone()).collect(),
    };
    let sources: Vec<Candidate> = pool
        .ranked()
        .into_iter()
        .filter(|e| !e.candidate.learner.is_meta())
        .map(|e| e.candidate.clone())
        .collect();
    'outer: for c in sources {
        for meta in &metas {
            let wrapped = c.clone().with_learner(LearnerRef::Meta {
                meta: meta.clone(),
                meta_params: Params::Default,
                base: c.learner.base_id().to_string(),
            });
            if !ctx.try_add(&mut pool, wrapped, StageId::Meta) {
                break 'outer;
            }
        }
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::*;
    use crate::components::registry_default;
    use crate::evaluation::Score;

    #[test]
    fn each_candidate_gets_each_meta() {
        let r = registry_default();
        let d = tiny();
        let stub = StubScorer {
            default: Some(0.2),
            ..StubScorer::new(&[])
        };
        let mut pool = CandidatePool::new();
        pool.insert(
            Candidate::base("knn").with_scaler(Some("minmax".into())),
            Score::from_folds(vec![0.3]),
            StageId::Scaling,
        );
        let ctx = StageContext::new(&stub, &r, &d, 0);
        let out = run(pool, &ctx, &MetaConfig::default());
        assert_eq!(
            stub.calls(),
            [
                "minmax|-|bagging(default)>knn|default",
                "minmax|-|adaboost(default)>knn|default"
            ]
        );
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn wrapped_candidates_are_skipped() {
        let r = registry_default();
        let d = tiny();
        let stub = StubScorer {
            default: Some(0.2),
            ..StubScorer::new(&[])
        };
        let mut pool = CandidatePool::new();
        pool.insert(
            Candidate::base("x").with_learner(LearnerRef::meta("bagging", "knn")),
            Score::from_folds(vec![0.3]),
            StageId::Meta,
        );
        let ctx = StageContext::new(&stub, &r, &d, 0);
        let out = run(pool.clone(), &ctx, &MetaConfig::default());
        assert!(stub.calls().is_empty());
        assert_eq!(out, pool);
    }
}

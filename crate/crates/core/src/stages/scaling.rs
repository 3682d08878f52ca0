use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CandidatePool, StageContext, StageId};
use crate::deadline::secs;
use crate::evaluation::Candidate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    #[serde(with = "secs::opt")]
    pub timeout: Option<Duration>,
    /// Cheap learners used to judge each scaler, with default parameters.
    pub pilots: Vec<String>,
    /// Also use the best candidate found by probing as a pilot.
    pub include_best_probing: bool,
    /// A scaler counts as helpful when some pilot's scaled mean is below
    /// its unscaled mean by more than this.
    pub epsilon: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            timeout: None,
            pilots: vec!["knn".into(), "gaussian_nb".into()],
            include_best_probing: true,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotComparison {
    pub pilot: String,
    pub unscaled: Option<f64>,
    pub scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDecision {
    pub scaler: String,
    pub pilots: Vec<PilotComparison>,
    pub expanded: bool,
}

/// Whether any pilot improved strictly by more than `epsilon`. Pairs with a
/// failed side never count. Only the ordering of the two means matters.
pub fn scaling_gate(pairs: &[(Option<f64>, Option<f64>)], epsilon: f64) -> bool {
    pairs.iter().any(|pair| match *pair {
        (Some(unscaled), Some(scaled)) => scaled < unscaled - epsilon,
        _ => false,
    })
}

fn pooled_or_evaluated(pool: &mut CandidatePool, ctx: &StageContext<'_>, c: Candidate) -> Option<f64> {
    if let Some(e) = pool.get(&c.key()) {
        return Some(e.score.mean);
    }
    let score = ctx.evaluate(&c, StageId::Scaling)?;
    let mean = score.is_ok().then_some(score.mean);
    pool.insert(c, score, StageId::Scaling);
    mean
}

pub(super) fn run(
    mut pool: CandidatePool,
    ctx: &StageContext<'_>,
    cfg: &ScalingConfig,
) -> (CandidatePool, Vec<ScalingDecision>) {
    let mut pilots: Vec<String> = cfg
        .pilots
        .iter()
        .filter(|id| ctx.registry.learner(id).is_ok_and(|l| !l.is_meta))
        .cloned()
        .collect();
    if cfg.include_best_probing {
        let best_probe = pool
            .entries()
            .iter()
            .filter(|e| e.origin == StageId::Probing && e.candidate == Candidate::base(e.candidate.learner.base_id()))
            .fold(None, |best: Option<&super::ScoredCandidate>, e| match best {
                Some(b) if b.score.mean <= e.score.mean => Some(b),
                _ => Some(e),
            })
            .map(|e| e.candidate.learner.base_id().to_string());
        if let Some(id) = best_probe {
            if !pilots.contains(&id) {
                pilots.push(id);
            }
        }
    }

    let baselines: Vec<Option<f64>> = pilots
        .iter()
        .map(|p| pooled_or_evaluated(&mut pool, ctx, Candidate::base(p)))
        .collect();

    let mut decisions = Vec::new();
    for scaler in ctx.registry.scalers() {
        if ctx.out_of_time() {
            break;
        }
        let scaled: Vec<Option<f64>> = pilots
            .iter()
            .map(|p| pooled_or_evaluated(&mut pool, ctx, Candidate::base(p).with_scaler(Some(scaler.id.clone()))))
            .collect();
        let pairs: Vec<(Option<f64>, Option<f64>)> = baselines.iter().copied().zip(scaled.iter().copied()).collect();
        let expanded = scaling_gate(&pairs, cfg.epsilon);
        if expanded {
            for learner in ctx.registry.base_learners() {
                if pilots.contains(&learner.id) {
                    continue;
                }
                let c = Candidate::base(&learner.id).with_scaler(Some(scaler.id.clone()));
                if !ctx.try_add(&mut pool, c, StageId::Scaling) {
                    break;
                }
            }
        }
        decisions.push(ScalingDecision {
            scaler: scaler.id.clone(),
            pilots: pilots
                .iter()
                .zip(pairs)
                .map(|(p, (unscaled, scaled))| PilotComparison {
                    pilot: p.clone(),
                    unscaled,
                    scaled,
                })
                .collect(),
            expanded,
        });
    }
    (pool, decisions)
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::*;
    use crate::components::registry_default;
    use crate::evaluation::Scorer;
    use proptest::prelude::*;

    #[test]
    fn gate_rule() {
        assert!(scaling_gate(&[(Some(0.3), Some(0.2))], 0.0));
        assert!(!scaling_gate(&[(Some(0.3), Some(0.3))], 0.0));
        assert!(!scaling_gate(&[(Some(0.3), Some(0.25))], 0.1));
        assert!(!scaling_gate(&[(None, Some(0.1)), (Some(0.1), None)], 0.0));
        assert!(scaling_gate(&[(Some(0.1), Some(0.2)), (Some(0.4), Some(0.3))], 0.0));
    }

    proptest! {
        #[test]
        fn gate_ignores_score_shifts(
            pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..5),
            shift in -0.5f64..0.5,
        ) {
            let raw: Vec<_> = pairs.iter().map(|&(a, b)| (Some(a), Some(b))).collect();
            let shifted: Vec<_> = pairs.iter().map(|&(a, b)| (Some(a + shift), Some(b + shift))).collect();
            let strict_order = pairs.iter().all(|&(a, b)| (a - b).abs() > 1e-9);
            if strict_order {
                prop_assert_eq!(scaling_gate(&raw, 0.0), scaling_gate(&shifted, 0.0));
            }
        }
    }

    fn stub_with_scaler_helping(helps: &str) -> StubScorer {
        let mut stub = StubScorer::new(&[]);
        for l in [
            "knn",
            "gaussian_nb",
            "decision_tree",
            "logistic_regression",
            "random_forest",
        ] {
            stub.scores.insert(format!("-|-|{l}|default"), 0.3);
            for s in ["standardize", "minmax", "quantile_rank"] {
                let v = if s == helps && l == "knn" { 0.1 } else { 0.3 };
                stub.scores.insert(format!("{s}|-|{l}|default"), v);
            }
        }
        // best probing candidate: logistic regression
        stub.scores.insert("-|-|logistic_regression|default".into(), 0.2);
        stub
    }

    #[test]
    fn expansion_only_for_the_helpful_scaler() {
        let r = registry_default();
        let d = tiny();
        let stub = stub_with_scaler_helping("minmax");
        let mut pool = CandidatePool::new();
        for l in r.base_learners() {
            let c = Candidate::base(&l.id);
            let s = stub.score(&c, &d, &stub.cfg, "probing", crate::deadline::Deadline::none());
            pool.insert(c, s, StageId::Probing);
        }
        let before = stub.calls().len();
        let ctx = StageContext::new(&stub, &r, &d, 0);
        let (pool, decisions) = run(pool, &ctx, &ScalingConfig::default());
        let expanded: Vec<_> = decisions
            .iter()
            .filter(|d| d.expanded)
            .map(|d| d.scaler.as_str())
            .collect();
        assert_eq!(expanded, ["minmax"]);
        // 3 scalers x 3 pilots (knn, gaussian_nb, best probing) + 2 expansions
        assert_eq!(stub.calls().len() - before, 9 + 2);
        assert!(pool.contains("minmax|-|decision_tree|default"));
        assert!(pool.contains("minmax|-|random_forest|default"));
        assert!(!pool.contains("standardize|-|decision_tree|default"));
    }

    #[test]
    fn pilots_are_evaluated_raw_when_missing() {
        let r = registry_default();
        let d = tiny();
        let stub = stub_with_scaler_helping("none");
        let ctx = StageContext::new(&stub, &r, &d, 0);
        let cfg = ScalingConfig {
            include_best_probing: false,
            ..ScalingConfig::default()
        };
        let (pool, decisions) = run(CandidatePool::new(), &ctx, &cfg);
        assert!(pool.contains("-|-|knn|default"));
        assert!(decisions.iter().all(|d| !d.expanded));
        // 2 raw pilots + 3 x 2 scaled
        assert_eq!(stub.calls().len(), 8);
    }
}

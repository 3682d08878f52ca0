use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CandidatePool, StageContext, StageId};
use crate::components::FilterSpec;
use crate::data::FeatureSet;
use crate::deadline::secs;
use crate::evaluation::{Candidate, EvalConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilteringConfig {
    #[serde(with = "secs::opt")]
    pub timeout: Option<Duration>,
    /// Learner used to score ranking prefixes, with default parameters.
    pub pilot: String,
    /// Filters to try, in order; all registered filters when `None`.
    pub filters: Option<Vec<String>>,
    /// A prefix is worse when it scores above the best seen plus `tol`.
    pub tol: f64,
    /// Consecutive worse prefixes that end a curve.
    pub patience: usize,
    /// MCCV repeats for prefix scoring.
    pub cheap_repeats: usize,
}

impl Default for FilteringConfig {
    fn default() -> Self {
        FilteringConfig {
            timeout: None,
            pilot: "knn".into(),
            filters: None,
            tol: 0.005,
            patience: 2,
            cheap_repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub prefix: usize,
    /// `None` when the pilot failed on this prefix.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCurve {
    pub filter: String,
    pub ranking: Vec<usize>,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub features: FeatureSet,
    /// Winning filter and prefix length; `None` when every prefix failed.
    pub filter: Option<String>,
    pub prefix: usize,
    pub curves: Vec<PerformanceCurve>,
}

/// Prefix lengths 1, 2, 4, ... below `d`, then `d` itself.
pub fn prefix_schedule(d: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut l = 1;
    while l < d {
        out.push(l);
        l *= 2;
    }
    if d > 0 {
        out.push(d);
    }
    out
}

/// Stopping rule for one performance curve.
#[derive(Debug, Clone)]
pub struct CurveWalker {
    tol: f64,
    patience: usize,
    best: Option<f64>,
    worse_run: usize,
}

impl CurveWalker {
    pub fn new(tol: f64, patience: usize) -> Self {
        CurveWalker {
            tol,
            patience: patience.max(1),
            best: None,
            worse_run: 0,
        }
    }

    /// Feeds the next point; returns whether to keep going. A failed point
    /// counts as worse.
    pub fn push(&mut self, score: Option<f64>) -> bool {
        match (score, self.best) {
            (Some(s), Some(b)) if s > b + self.tol => self.worse_run += 1,
            (Some(s), best) => {
                self.worse_run = 0;
                if best.is_none_or(|b| s < b) {
                    self.best = Some(s);
                }
            }
            (None, _) => self.worse_run += 1,
        }
        self.worse_run < self.patience
    }
}

/// `(curve index, prefix)` of the lowest score over all curves; ties go to
/// the shorter prefix, then to the earlier curve.
pub fn select_prefix(curves: &[Vec<CurvePoint>]) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (ci, curve) in curves.iter().enumerate() {
        for p in curve {
            let Some(s) = p.score else { continue };
            let better = match best {
                None => true,
                Some((bs, bl, _)) => s < bs || (s == bs && p.prefix < bl),
            };
            if better {
                best = Some((s, p.prefix, ci));
            }
        }
    }
    best.map(|(_, l, ci)| (ci, l))
}

/// Picks a feature subset from filter-ranking prefixes scored by a pilot.
///
/// Rankings are computed on `ctx.data`, which never contains holdout rows.
pub fn compute_feature_set(
    ctx: &StageContext<'_>,
    filters: &[&FilterSpec],
    pilot: &str,
    cfg: &FilteringConfig,
) -> FeatureSelection {
    let d = ctx.data.n_cols();
    let cheap = EvalConfig {
        repeats: cfg.cheap_repeats.max(1),
        ..ctx.scorer.config().clone()
    };
    let mut curves = Vec::new();
    for filter in filters {
        let ranking = filter
            .implementation
            .rank(ctx.data.instances(), ctx.data.labels(), ctx.data.n_classes());
        let mut walker = CurveWalker::new(cfg.tol, cfg.patience);
        let mut points = Vec::new();
        for l in prefix_schedule(d) {
            if ctx.out_of_time() {
                break;
            }
            let features = FeatureSet::new(ranking[..l].to_vec()).expect("non-empty prefix");
            let c = Candidate::base(pilot).with_features(Some(features));
            let score = ctx
                .scorer
                .score(&c, ctx.data, &cheap, StageId::Filtering.as_str(), ctx.deadline);
            ctx.count(&c, &score);
            let value = score.is_ok().then_some(score.mean);
            points.push(CurvePoint {
                prefix: l,
                score: value,
            });
            if !walker.push(value) {
                break;
            }
        }
        curves.push(PerformanceCurve {
            filter: filter.id.clone(),
            ranking,
            points,
        });
    }
    let point_lists: Vec<Vec<CurvePoint>> = curves.iter().map(|c| c.points.clone()).collect();
    match select_prefix(&point_lists) {
        Some((ci, l)) => FeatureSelection {
            features: FeatureSet::new(curves[ci].ranking[..l].to_vec()).expect("non-empty prefix"),
            filter: Some(curves[ci].filter.clone()),
            prefix: l,
            curves,
        },
        None => FeatureSelection {
            features: FeatureSet::all(d.max(1)).expect("at least one column"),
            filter: None,
            prefix: d,
            curves,
        },
    }
}

pub(super) fn run(
    mut pool: CandidatePool,
    ctx: &StageContext<'_>,
    cfg: &FilteringConfig,
) -> (CandidatePool, Option<FeatureSelection>) {
    if ctx.out_of_time() || ctx.data.n_cols() == 0 {
        return (pool, None);
    }
    let filters: Vec<&FilterSpec> = match &cfg.filters {
        Some(ids) => ids.iter().filter_map(|id| ctx.registry.filter(id).ok()).collect(),
        None => ctx.registry.filters().iter().collect(),
    };
    if filters.is_empty() {
        log::warn!("no filters available; filtering skipped");
        return (pool, None);
    }
    let selection = compute_feature_set(ctx, &filters, &cfg.pilot, cfg);
    if selection.features.len() == ctx.data.n_cols() {
        // projecting onto every column is the identity
        return (pool, Some(selection));
    }
    let sources: Vec<Candidate> = pool
        .ranked()
        .into_iter()
        .filter(|e| e.candidate.features.is_none())
        .map(|e| e.candidate.clone())
        .collect();
    for c in sources {
        let twin = c.with_features(Some(selection.features.clone()));
        if !ctx.try_add(&mut pool, twin, StageId::Filtering) {
            break;
        }
    }
    (pool, Some(selection))
}

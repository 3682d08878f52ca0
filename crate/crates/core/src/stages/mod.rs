//! The stage contract and the six stages of the default scheme.
//!
//! A stage takes a [`CandidatePool`], evaluates new candidates through the
//! shared [`Scorer`] and returns the augmented pool. Stages never fail: a
//! candidate whose evaluation fails is simply not added, and a lapsed
//! deadline ends the stage with whatever it has completed.

mod filtering;
mod meta;
mod pool;
mod probing;
mod scaling;
mod tuning;
mod validation;

use std::cell::Cell;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::components::Registry;
use crate::data::Dataset;
use crate::deadline::{secs, Deadline};
use crate::error::{Error, Result};
use crate::evaluation::{Candidate, Score, Scorer, Status};

pub use filtering::{
    compute_feature_set, prefix_schedule, select_prefix, CurvePoint, CurveWalker, FeatureSelection, FilteringConfig,
    PerformanceCurve,
};
pub use meta::MetaConfig;
pub use pool::{CandidatePool, ScoredCandidate, ValidationScore};
pub use probing::ProbingConfig;
pub use scaling::{scaling_gate, ScalingConfig, ScalingDecision};
pub use tuning::TuningConfig;
pub use validation::{final_score, omega, tau, ValidationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageId {
    Probing,
    Scaling,
    Filtering,
    Meta,
    Tuning,
    Validation,
}

impl StageId {
    pub const ALL: [StageId; 6] = [
        StageId::Probing,
        StageId::Scaling,
        StageId::Filtering,
        StageId::Meta,
        StageId::Tuning,
        StageId::Validation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageId::Probing => "probing",
            StageId::Scaling => "scaling",
            StageId::Filtering => "filtering",
            StageId::Meta => "meta",
            StageId::Tuning => "tuning",
            StageId::Validation => "validation",
        }
    }

    /// The stage's configuration with default settings.
    pub fn default_config(self) -> StageConfig {
        match self {
            StageId::Probing => StageConfig::Probing(ProbingConfig::default()),
            StageId::Scaling => StageConfig::Scaling(ScalingConfig::default()),
            StageId::Filtering => StageConfig::Filtering(FilteringConfig::default()),
            StageId::Meta => StageConfig::Meta(MetaConfig::default()),
            StageId::Tuning => StageConfig::Tuning(TuningConfig::default()),
            StageId::Validation => StageConfig::Validation(ValidationConfig::default()),
        }
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StageId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// A stage together with its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum StageConfig {
    Probing(ProbingConfig),
    Scaling(ScalingConfig),
    Filtering(FilteringConfig),
    Meta(MetaConfig),
    Tuning(TuningConfig),
    Validation(ValidationConfig),
}

impl StageConfig {
    pub fn id(&self) -> StageId {
        match self {
            StageConfig::Probing(_) => StageId::Probing,
            StageConfig::Scaling(_) => StageId::Scaling,
            StageConfig::Filtering(_) => StageId::Filtering,
            StageConfig::Meta(_) => StageId::Meta,
            StageConfig::Tuning(_) => StageId::Tuning,
            StageConfig::Validation(_) => StageId::Validation,
        }
    }

    /// The stage's own time budget.
    pub fn timeout(&self) -> Option<Duration> {
        match self {
            StageConfig::Probing(c) => c.timeout,
            StageConfig::Scaling(c) => c.timeout,
            StageConfig::Filtering(c) => c.timeout,
            StageConfig::Meta(c) => c.timeout,
            StageConfig::Tuning(c) => c.timeout,
            StageConfig::Validation(c) => c.timeout,
        }
    }

    pub fn set_timeout(&mut self, timeout: Option<Duration>) {
        match self {
            StageConfig::Probing(c) => c.timeout = timeout,
            StageConfig::Scaling(c) => c.timeout = timeout,
            StageConfig::Filtering(c) => c.timeout = timeout,
            StageConfig::Meta(c) => c.timeout = timeout,
            StageConfig::Tuning(c) => c.timeout = timeout,
            StageConfig::Validation(c) => c.timeout = timeout,
        }
    }
}

/// Everything a stage may use. Counters are interior so stage functions
/// can take the context by shared reference.
pub struct StageContext<'a> {
    pub scorer: &'a dyn Scorer,
    pub registry: &'a Registry,
    /// Data for internal scoring; never includes holdout rows.
    pub data: &'a Dataset,
    pub holdout: Option<&'a Dataset>,
    pub seed: u64,
    pub deadline: Deadline,
    pub run_start: Instant,
    evaluations: Cell<usize>,
    deadline_hit: Cell<bool>,
}

impl<'a> StageContext<'a> {
    pub fn new(scorer: &'a dyn Scorer, registry: &'a Registry, data: &'a Dataset, seed: u64) -> Self {
        StageContext {
            scorer,
            registry,
            data,
            holdout: None,
            seed,
            deadline: Deadline::none(),
            run_start: Instant::now(),
            evaluations: Cell::new(0),
            deadline_hit: Cell::new(false),
        }
    }

    pub fn with_holdout(mut self, holdout: Option<&'a Dataset>) -> Self {
        self.holdout = holdout;
        self
    }

    pub fn with_deadline(mut self, deadline: Deadline) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn with_run_start(mut self, start: Instant) -> Self {
        self.run_start = start;
        self
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    pub fn deadline_hit(&self) -> bool {
        self.deadline_hit.get()
    }

    /// True (and remembered) once the stage deadline has lapsed.
    fn out_of_time(&self) -> bool {
        if self.deadline.expired() {
            self.deadline_hit.set(true);
        }
        self.deadline_hit.get()
    }

    /// Scores `c` with the regular config, or `None` if time is up.
    fn evaluate(&self, c: &Candidate, stage: StageId) -> Option<Score> {
        self.evaluate_until(c, stage, self.deadline)
    }

    fn evaluate_until(&self, c: &Candidate, stage: StageId, deadline: Deadline) -> Option<Score> {
        if self.out_of_time() || deadline.expired() {
            return None;
        }
        let score = self
            .scorer
            .score(c, self.data, self.scorer.config(), stage.as_str(), deadline);
        self.count(c, &score);
        Some(score)
    }

    fn count(&self, c: &Candidate, score: &Score) {
        self.evaluations.set(self.evaluations.get() + 1);
        if !score.is_ok() {
            log::debug!("{} failed: {}", c.key(), score.message.as_deref().unwrap_or("?"));
        }
        if score.status == Status::FailedTimeout {
            self.out_of_time();
        }
    }

    /// Evaluates `c` unless its key is pooled already; adds it when ok.
    /// Returns `false` once the deadline has lapsed.
    fn try_add(&self, pool: &mut CandidatePool, c: Candidate, stage: StageId) -> bool {
        if pool.contains(&c.key()) {
            return true;
        }
        match self.evaluate(&c, stage) {
            Some(score) => {
                pool.insert(c, score, stage);
                true
            }
            None => false,
        }
    }

    fn millis_since_start(&self) -> u64 {
        self.run_start.elapsed().as_millis() as u64
    }
}

/// Per-stage bookkeeping for the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage_id: StageId,
    /// Milliseconds since the run started.
    pub started: u64,
    pub ended: u64,
    pub evaluations: usize,
    pub added: usize,
    pub removed: usize,
    pub deadline_hit: bool,
    #[serde(with = "secs::opt")]
    pub budget: Option<Duration>,
}

/// Stage-specific findings worth reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageDetails {
    None,
    Scaling {
        decisions: Vec<ScalingDecision>,
    },
    Filtering {
        selection: FeatureSelection,
    },
    Validation {
        weight: f64,
        holdout_rows: usize,
        validated: usize,
    },
}

#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub pool: CandidatePool,
    pub trace: StageTrace,
    pub details: StageDetails,
}

/// Runs one stage and records its trace.
pub fn run_stage(cfg: &StageConfig, pool: CandidatePool, ctx: &StageContext<'_>) -> StageOutcome {
    let started = ctx.millis_since_start();
    let before: BTreeSet<String> = pool.keys().map(String::from).collect();
    let (pool, details) = match cfg {
        StageConfig::Probing(c) => (probing::run(pool, ctx, c), StageDetails::None),
        StageConfig::Scaling(c) => {
            let (pool, decisions) = scaling::run(pool, ctx, c);
            (pool, StageDetails::Scaling { decisions })
        }
        StageConfig::Filtering(c) => match filtering::run(pool, ctx, c) {
            (pool, Some(selection)) => (pool, StageDetails::Filtering { selection }),
            (pool, None) => (pool, StageDetails::None),
        },
        StageConfig::Meta(c) => (meta::run(pool, ctx, c), StageDetails::None),
        StageConfig::Tuning(c) => (tuning::run(pool, ctx, c), StageDetails::None),
        StageConfig::Validation(c) => validation::run(pool, ctx, c),
    };
    let after: BTreeSet<String> = pool.keys().map(String::from).collect();
    let trace = StageTrace {
        stage_id: cfg.id(),
        started,
        ended: ctx.millis_since_start(),
        evaluations: ctx.evaluations(),
        added: after.difference(&before).count(),
        removed: before.difference(&after).count(),
        deadline_hit: ctx.deadline_hit(),
        budget: cfg.timeout(),
    };
    StageOutcome { pool, trace, details }
}

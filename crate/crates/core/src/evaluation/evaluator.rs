use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{materialize, Candidate, EvalConfig, Score, Status};
use crate::components::Registry;
use crate::data::{split_indices, Dataset, SplitSpec};
use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::seed;

/// One line of the evaluation journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub candidate_key: String,
    pub stage: String,
    pub mean: f64,
    pub std: f64,
    pub per_fold: Vec<f64>,
    pub status: Status,
    pub wall_ms: u64,
    pub seed: u64,
}

/// The train/validation row indices of every MCCV repeat.
///
/// Splits depend only on the dataset labels, `cfg.seed` and the repeat
/// index, so all candidates scored under one config see the same folds.
/// Stratified unless some class has a single example.
pub fn mccv_splits(d: &Dataset, cfg: &EvalConfig) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    cfg.validate()?;
    let stratified = d.class_counts().iter().all(|&c| c != 1);
    (0..cfg.repeats)
        .map(|r| {
            let spec = SplitSpec::new(cfg.train_fraction, seed!(cfg.seed, "mccv", r))?;
            split_indices(d.labels(), d.n_classes(), &spec, stratified)
        })
        .collect()
}

/// Uncached MCCV score of `c` on `d`.
///
/// The deadline is checked before and after every fold; a lapse discards
/// the partial folds and yields `failed_timeout`.
pub fn mccv_score(c: &Candidate, d: &Dataset, cfg: &EvalConfig, registry: &Registry, deadline: Deadline) -> Score {
    if let Err(e) = cfg.validate() {
        return Score::from_error(&e);
    }
    if d.n_present_classes() == 1 {
        return Score::from_folds(vec![0.0; cfg.repeats]);
    }
    match score_folds(c, d, cfg, registry, deadline) {
        Ok(folds) => Score::from_folds(folds),
        Err(e) => Score::from_error(&e),
    }
}

fn score_folds(
    c: &Candidate,
    d: &Dataset,
    cfg: &EvalConfig,
    registry: &Registry,
    deadline: Deadline,
) -> Result<Vec<f64>> {
    let pipeline = materialize(c, registry)?;
    let key = c.key();
    let mut folds = Vec::with_capacity(cfg.repeats);
    for (r, (train_idx, test_idx)) in mccv_splits(d, cfg)?.into_iter().enumerate() {
        deadline.check()?;
        let train = d.select_rows(&train_idx);
        let test = d.select_rows(&test_idx);
        let fitted = pipeline.fit(&train, seed!(cfg.seed, key.as_str(), r), deadline)?;
        let pred = fitted.predict(test.instances())?;
        folds.push(cfg.metric.compute(test.labels(), &pred)?);
        deadline.check()?;
    }
    Ok(folds)
}

/// Anything that can score candidates; stages only talk to this trait.
pub trait Scorer: Sync {
    /// The config used for regular pool evaluations.
    fn config(&self) -> &EvalConfig;

    /// MCCV score of `c` on `data` under `cfg`.
    fn score(&self, c: &Candidate, data: &Dataset, cfg: &EvalConfig, stage: &str, deadline: Deadline) -> Score;

    /// Single-fold score: fit on `train`, measure on `test`.
    fn holdout(&self, c: &Candidate, train: &Dataset, test: &Dataset, stage: &str, deadline: Deadline) -> Score;
}

/// Row ids seen by an evaluator, for leakage checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowTrace {
    /// Rows used to fit or internally score any model.
    pub internal: BTreeSet<usize>,
    /// Rows only ever predicted by the holdout scorer.
    pub holdout: BTreeSet<usize>,
}

type CacheKey = (String, u64, u64);

/// The shared, thread-safe scorer: MCCV with a result cache, an in-memory
/// journal and an optional JSON-lines spill file.
pub struct Evaluator {
    registry: Registry,
    cfg: EvalConfig,
    cache_enabled: bool,
    cache: Mutex<HashMap<CacheKey, Score>>,
    journal: Mutex<Vec<EvalRecord>>,
    spill: Option<Mutex<BufWriter<File>>>,
    trace: Option<Mutex<RowTrace>>,
}

impl std::fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Evaluator")
            .field("cfg", &self.cfg)
            .field("cache_enabled", &self.cache_enabled)
            .finish_non_exhaustive()
    }
}

impl Evaluator {
    pub fn new(registry: Registry, cfg: EvalConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Evaluator {
            registry,
            cfg,
            cache_enabled: true,
            cache: Mutex::default(),
            journal: Mutex::default(),
            spill: None,
            trace: None,
        })
    }

    pub fn without_cache(mut self) -> Self {
        self.cache_enabled = false;
        self
    }

    /// Also appends every journal record to `path` as it is produced.
    pub fn with_spill(mut self, path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.spill = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    pub fn with_row_trace(mut self) -> Self {
        self.trace = Some(Mutex::default());
        self
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn journal(&self) -> Vec<EvalRecord> {
        self.journal.lock().expect("journal lock").clone()
    }

    pub fn row_trace(&self) -> Option<RowTrace> {
        self.trace.as_ref().map(|t| t.lock().expect("trace lock").clone())
    }

    fn record(&self, c: &Candidate, stage: &str, score: &Score, started: Instant) {
        let rec = EvalRecord {
            candidate_key: c.key(),
            stage: stage.into(),
            mean: score.mean,
            std: score.std,
            per_fold: score.per_fold.clone(),
            status: score.status,
            wall_ms: started.elapsed().as_millis() as u64,
            seed: self.cfg.seed,
        };
        if let Some(spill) = &self.spill {
            let mut w = spill.lock().expect("spill lock");
            let line = serde_json::to_string(&rec).expect("journal records serialize");
            if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                log::warn!("journal spill failed: {e}");
            }
        }
        self.journal.lock().expect("journal lock").push(rec);
    }

    fn trace_rows(&self, internal: &[usize], holdout: &[usize]) {
        if let Some(t) = &self.trace {
            let mut t = t.lock().expect("trace lock");
            t.internal.extend(internal);
            t.holdout.extend(holdout);
        }
    }
}

impl Scorer for Evaluator {
    fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    fn score(&self, c: &Candidate, data: &Dataset, cfg: &EvalConfig, stage: &str, deadline: Deadline) -> Score {
        let key = (c.key(), data.content_hash(), cfg.content_hash());
        if self.cache_enabled {
            if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
                return hit.clone();
            }
        }
        let started = Instant::now();
        self.trace_rows(data.row_ids(), &[]);
        let deadline = deadline.min(Deadline::after_opt(cfg.per_eval_timeout));
        let score = mccv_score(c, data, cfg, &self.registry, deadline);
        self.record(c, stage, &score, started);
        if self.cache_enabled && score.status != Status::FailedTimeout {
            self.cache.lock().expect("cache lock").insert(key, score.clone());
        }
        score
    }

    fn holdout(&self, c: &Candidate, train: &Dataset, test: &Dataset, stage: &str, deadline: Deadline) -> Score {
        let started = Instant::now();
        self.trace_rows(train.row_ids(), test.row_ids());
        let deadline = deadline.min(Deadline::after_opt(self.cfg.per_eval_timeout));
        let result = (|| {
            let fitted = materialize(c, &self.registry)?.fit(
                train,
                seed!(self.cfg.seed, c.key().as_str(), "holdout"),
                deadline,
            )?;
            let pred = fitted.predict(test.instances())?;
            deadline.check()?;
            self.cfg.metric.compute(test.labels(), &pred)
        })();
        let score = match result {
            Ok(v) => Score::from_folds(vec![v]),
            Err(e) => Score::from_error(&e),
        };
        self.record(c, stage, &score, started);
        score
    }
}

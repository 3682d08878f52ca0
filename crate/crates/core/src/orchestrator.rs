//! End-to-end runs of a stage scheme under a global budget.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bench::BenchInfo;
use crate::components::registry_default;
use crate::data::{split_indices, Dataset, SplitSpec};
use crate::deadline::{secs, Deadline};
use crate::error::{Error, Result};
use crate::evaluation::{Candidate, EvalConfig, EvalRecord, Evaluator, Score};
use crate::seed;
use crate::stages::{
    run_stage, CandidatePool, ScoredCandidate, StageConfig, StageContext, StageDetails, StageId, StageTrace,
    ValidationConfig, ValidationScore,
};

/// Version of every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// When to carve a holdout off the data before the first stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldoutPolicy {
    /// Only when the scheme ends in a validation stage.
    #[default]
    Auto,
    /// Always, so schemes with and without validation see the same data.
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub stages: Vec<StageConfig>,
    #[serde(with = "secs::opt")]
    pub global_timeout: Option<Duration>,
    pub eval: EvalConfig,
    #[serde(default)]
    pub holdout: HoldoutPolicy,
    pub seed: u64,
}

impl SchemeConfig {
    pub fn from_stages(stages: &[StageId]) -> Self {
        SchemeConfig {
            stages: stages.iter().map(|s| s.default_config()).collect(),
            global_timeout: Some(Duration::from_secs(3600)),
            eval: EvalConfig::default(),
            holdout: HoldoutPolicy::Auto,
            seed: 0,
        }
    }

    /// Sets the run seed and the evaluation seed together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.eval.seed = seed;
        self
    }

    pub fn stage_ids(&self) -> Vec<StageId> {
        self.stages.iter().map(StageConfig::id).collect()
    }

    pub fn validation(&self) -> Option<&ValidationConfig> {
        self.stages.iter().find_map(|s| match s {
            StageConfig::Validation(v) => Some(v),
            _ => None,
        })
    }

    pub fn validation_mut(&mut self) -> Option<&mut ValidationConfig> {
        self.stages.iter_mut().find_map(|s| match s {
            StageConfig::Validation(v) => Some(v),
            _ => None,
        })
    }

    pub fn stage_mut(&mut self, id: StageId) -> Option<&mut StageConfig> {
        self.stages.iter_mut().find(|s| s.id() == id)
    }

    pub fn validate(&self) -> Result<()> {
        self.eval.validate()?;
        let ids = self.stage_ids();
        let n_val = ids.iter().filter(|&&s| s == StageId::Validation).count();
        if n_val > 1 || (n_val == 1 && ids.last() != Some(&StageId::Validation)) {
            return Err(Error::Config(
                "validation must appear at most once, as the last stage".into(),
            ));
        }
        if let Some(v) = self.validation() {
            v.validate()?;
        }
        Ok(())
    }

    fn holdout_fraction(&self) -> Option<f64> {
        let fraction = self
            .validation()
            .map_or(ValidationConfig::default().holdout_fraction, |v| v.holdout_fraction);
        match self.holdout {
            HoldoutPolicy::Never => None,
            HoldoutPolicy::Always => Some(fraction),
            HoldoutPolicy::Auto => self.validation().map(|_| fraction),
        }
    }
}

/// Names of all presets, in display order.
pub fn preset_names() -> Vec<String> {
    let mut names = vec!["primitive".to_string(), "full".to_string()];
    names.extend(StageId::ALL.iter().map(|s| format!("monotone-{s}")));
    names.extend(StageId::ALL[1..].iter().map(|s| format!("single-{s}")));
    names
}

/// A named scheme:
/// - `primitive`: probing only;
/// - `full`: all six stages;
/// - `monotone-<stage>`: every stage up to and including `<stage>`;
/// - `single-<stage>`: probing followed by `<stage>` alone.
pub fn preset(name: &str) -> Result<SchemeConfig> {
    let order = StageId::ALL;
    let stages: Vec<StageId> = match name {
        "primitive" => vec![StageId::Probing],
        "full" => order.to_vec(),
        _ => {
            let unknown = || {
                Error::Config(format!(
                    "unknown preset `{name}`; valid presets: {}",
                    preset_names().join(", ")
                ))
            };
            if let Some(stage) = name.strip_prefix("monotone-") {
                let id: StageId = stage.parse().map_err(|_| unknown())?;
                order[..=order.iter().position(|&s| s == id).expect("listed")].to_vec()
            } else if let Some(stage) = name.strip_prefix("single-") {
                let id: StageId = stage.parse().map_err(|_| unknown())?;
                if id == StageId::Probing {
                    return Err(unknown());
                }
                vec![StageId::Probing, id]
            } else {
                return Err(unknown());
            }
        }
    };
    Ok(SchemeConfig::from_stages(&stages))
}

/// All presets with their configurations.
pub fn scheme_presets() -> Vec<(String, SchemeConfig)> {
    preset_names()
        .into_iter()
        .map(|n| {
            let cfg = preset(&n).expect("listed preset");
            (n, cfg)
        })
        .collect()
}

/// Settings commonly overridden from the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Overrides {
    #[serde(with = "secs::opt")]
    pub global_timeout: Option<Duration>,
    #[serde(with = "secs::opt")]
    pub per_eval_timeout: Option<Duration>,
    #[serde(with = "secs::opt")]
    pub stage_timeout: Option<Duration>,
    pub repeats: Option<usize>,
    pub n_bar: Option<usize>,
    pub m: Option<usize>,
    pub holdout_fraction: Option<f64>,
    pub max_evals: Option<usize>,
    pub holdout: Option<HoldoutPolicy>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: SchemeConfig) -> SchemeConfig {
        if let Some(seed) = self.seed {
            cfg = cfg.with_seed(seed);
        }
        if self.global_timeout.is_some() {
            cfg.global_timeout = self.global_timeout;
        }
        if self.per_eval_timeout.is_some() {
            cfg.eval.per_eval_timeout = self.per_eval_timeout;
        }
        if let Some(r) = self.repeats {
            cfg.eval.repeats = r;
        }
        if let Some(h) = self.holdout {
            cfg.holdout = h;
        }
        for stage in &mut cfg.stages {
            if self.stage_timeout.is_some() {
                stage.set_timeout(self.stage_timeout);
            }
            match stage {
                StageConfig::Validation(v) => {
                    if let Some(n) = self.n_bar {
                        v.n_bar = n;
                    }
                    if let Some(m) = self.m {
                        v.m = m;
                    }
                    if let Some(f) = self.holdout_fraction {
                        v.holdout_fraction = f;
                    }
                }
                StageConfig::Tuning(t) => {
                    if let Some(k) = self.max_evals {
                        t.max_evals = k;
                    }
                }
                _ => {}
            }
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionBasis {
    AnyStageBest,
    ValidationFinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    NoModelFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCandidate {
    pub key: String,
    pub candidate: Candidate,
    pub score: Score,
    pub basis: SelectionBasis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    #[serde(flatten)]
    pub trace: StageTrace,
    pub details: StageDetails,
    /// Best internal mean seen so far, after this stage.
    pub incumbent: Option<f64>,
    pub pool: CandidatePool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub columns: usize,
    pub classes: usize,
    pub content_hash: String,
}

impl DatasetSummary {
    pub fn of(d: &Dataset) -> Self {
        DatasetSummary {
            rows: d.n_rows(),
            columns: d.n_cols(),
            classes: d.n_classes(),
            content_hash: format!("{:016x}", d.content_hash()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub status: RunStatus,
    pub best: Option<BestCandidate>,
    /// Lowest internal score over every pre-validation pool.
    pub best_internal: Option<f64>,
    pub stages: Vec<StageReport>,
    pub config: SchemeConfig,
    pub dataset: DatasetSummary,
    /// Row ids reserved as holdout (empty when none was carved off).
    pub holdout_rows: Vec<usize>,
    pub total_wall_ms: u64,
    pub warnings: Vec<String>,
    /// Set when the run is one cell of a benchmark.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchInfo>,
    /// Written separately as JSON lines.
    #[serde(skip)]
    pub journal: Vec<EvalRecord>,
}

impl RunReport {
    pub fn traces(&self) -> Vec<StageTrace> {
        self.stages.iter().map(|s| s.trace.clone()).collect()
    }

    pub fn journal_jsonl(&self) -> String {
        self.journal
            .iter()
            .map(|r| serde_json::to_string(r).expect("journal records serialize") + "\n")
            .collect()
    }
}

/// Splits off the holdout, stratified when every class has two examples.
fn carve_holdout(d: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let stratified = d.class_counts().iter().all(|&c| c != 1);
    let spec = SplitSpec::new(1.0 - fraction, seed)?;
    let (opt, holdout) = split_indices(d.labels(), d.n_classes(), &spec, stratified)?;
    Ok((d.select_rows(&opt), d.select_rows(&holdout)))
}

/// Runs `cfg` on `d` with the default registry.
pub fn run(d: &Dataset, cfg: &SchemeConfig) -> Result<RunReport> {
    cfg.validate()?;
    let evaluator = Evaluator::new(registry_default(), cfg.eval.clone())?;
    run_with_evaluator(d, cfg, &evaluator)
}

/// Runs `cfg` on `d` through a caller-supplied evaluator, which should be
/// configured with `cfg.eval`.
pub fn run_with_evaluator(d: &Dataset, cfg: &SchemeConfig, evaluator: &Evaluator) -> Result<RunReport> {
    cfg.validate()?;
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let global = Deadline::after_opt(cfg.global_timeout);
    let mut warnings = Vec::new();

    let (opt, holdout) = match cfg.holdout_fraction() {
        Some(f) => {
            let (opt, h) = carve_holdout(d, f, seed!(cfg.seed, "holdout"))?;
            (opt, Some(h))
        }
        None => (d.clone(), None),
    };

    let registry = evaluator.registry();
    let mut pool = CandidatePool::new();
    let mut stage_reports = Vec::new();
    let mut incumbent: Option<ScoredCandidate> = None;
    let mut validated = false;
    for stage in &cfg.stages {
        let id = stage.id();
        let ctx = StageContext::new(evaluator, registry, &opt, seed!(cfg.seed, id.as_str()))
            .with_holdout(holdout.as_ref())
            .with_deadline(global.min(Deadline::after_opt(stage.timeout())))
            .with_run_start(start);
        let outcome = run_stage(stage, pool, &ctx);
        pool = outcome.pool;
        if id == StageId::Validation {
            validated = pool.entries().iter().any(|e| e.validation.is_some());
            if !validated {
                warnings
                    .push("validation produced no finalists; falling back to the best candidate of any stage".into());
            }
        } else if let Some(best) = pool.best() {
            if incumbent.as_ref().is_none_or(|i| best.score.mean < i.score.mean) {
                incumbent = Some(best.clone());
            }
        }
        stage_reports.push(StageReport {
            trace: outcome.trace,
            details: outcome.details,
            incumbent: incumbent.as_ref().map(|i| i.score.mean),
            pool: pool.clone(),
        });
    }

    let best = if validated {
        pool.entries().first().map(|e| BestCandidate {
            key: e.key.clone(),
            candidate: e.candidate.clone(),
            score: e.score.clone(),
            basis: SelectionBasis::ValidationFinal,
            validation: e.validation.clone(),
        })
    } else {
        incumbent.as_ref().map(|e| BestCandidate {
            key: e.key.clone(),
            candidate: e.candidate.clone(),
            score: e.score.clone(),
            basis: SelectionBasis::AnyStageBest,
            validation: None,
        })
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        status: if best.is_some() {
            RunStatus::Success
        } else {
            RunStatus::NoModelFound
        },
        best,
        best_internal: incumbent.map(|i| i.score.mean),
        stages: stage_reports,
        config: cfg.clone(),
        dataset: DatasetSummary::of(d),
        holdout_rows: holdout.map(|h| h.row_ids().to_vec()).unwrap_or_default(),
        total_wall_ms: start.elapsed().as_millis() as u64,
        warnings,
        bench: None,
        journal: evaluator.journal(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{synthesize, SynthKind, SynthSpec};

    fn data(seed: u64) -> Dataset {
        synthesize(&SynthSpec {
            kind: SynthKind::MadelonLike,
            n: 120,
            d: 6,
            informative: 3,
            seed,
        })
        .unwrap()
        .dataset
    }

    #[test]
    fn preset_shapes() {
        assert_eq!(preset("primitive").unwrap().stages.len(), 1);
        let full = preset("full").unwrap();
        assert_eq!(full.stage_ids().len(), 6);
        assert_eq!(full.stage_ids().last(), Some(&StageId::Validation));
        let v = full.validation().unwrap();
        assert_eq!((v.n_bar, v.m), (10_000, 10));
        assert_eq!(
            preset("monotone-filtering").unwrap().stage_ids(),
            [StageId::Probing, StageId::Scaling, StageId::Filtering]
        );
        assert_eq!(
            preset("single-meta").unwrap().stage_ids(),
            [StageId::Probing, StageId::Meta]
        );
        assert_eq!(preset("monotone-validation").unwrap(), full);
        let err = preset("fast").unwrap_err().to_string();
        assert!(err.contains("primitive") && err.contains("monotone-tuning"));
        assert!(preset("single-probing").is_err());
        assert_eq!(scheme_presets().len(), 2 + 6 + 5);
    }

    #[test]
    fn validation_must_be_last() {
        let cfg = SchemeConfig::from_stages(&[StageId::Probing, StageId::Validation, StageId::Tuning]);
        assert!(cfg.validate().is_err());
        let twice = SchemeConfig::from_stages(&[StageId::Validation, StageId::Validation]);
        assert!(twice.validate().is_err());
    }

    #[test]
    fn zero_budget_finds_no_model() {
        let mut cfg = preset("full").unwrap();
        cfg.global_timeout = Some(Duration::ZERO);
        let report = run(&data(0), &cfg).unwrap();
        assert_eq!(report.status, RunStatus::NoModelFound);
        assert!(report.best.is_none());
    }

    #[test]
    fn primitive_picks_the_probing_argmin() {
        let d = data(1);
        let report = run(&d, &preset("primitive").unwrap().with_seed(3)).unwrap();
        let best = report.best.unwrap();
        assert_eq!(best.basis, SelectionBasis::AnyStageBest);
        let pool = &report.stages[0].pool;
        assert_eq!(pool.best().unwrap().key, best.key);
        assert!(report.holdout_rows.is_empty());
    }

    #[test]
    fn report_json_roundtrip() {
        let d = data(2);
        let mut cfg = preset("single-validation").unwrap().with_seed(5);
        cfg.validation_mut().unwrap().m = 3;
        let report = run(&d, &cfg).unwrap();
        assert_eq!(report.best.as_ref().unwrap().basis, SelectionBasis::ValidationFinal);
        assert_eq!(report.holdout_rows.len(), 12);
        let json = serde_json::to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.best, report.best);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(value["stages"][1]["stage_id"], "validation");
    }

    #[test]
    fn overrides_apply_everywhere() {
        let o = Overrides {
            global_timeout: Some(Duration::from_secs(5)),
            stage_timeout: Some(Duration::from_secs(2)),
            n_bar: Some(50),
            seed: Some(9),
            ..Overrides::default()
        };
        let cfg = o.apply(preset("full").unwrap());
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.eval.seed, 9);
        assert_eq!(cfg.validation().unwrap().n_bar, 50);
        assert!(cfg.stages.iter().all(|s| s.timeout() == Some(Duration::from_secs(2))));
    }
}

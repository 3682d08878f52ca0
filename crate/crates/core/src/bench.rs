//! Paired multi-split benchmarks of scheme presets.
//!
//! Every preset sees the same outer train/test splits of a dataset and the
//! same scheme seed per split, so the per-split errors are paired.

use serde::{Deserialize, Serialize};

use crate::components::registry_default;
use crate::data::{split_indices, Dataset, SplitSpec};
use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::evaluation::{materialize, Evaluator};
use crate::orchestrator::{preset, run_with_evaluator, Overrides, RunReport, SchemeConfig};
use crate::seed;
use crate::stats::ResultMatrix;

/// One cell of a benchmark: the test error of an approach on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchInfo {
    pub dataset_id: String,
    pub approach_id: String,
    pub split_index: usize,
    /// `None` when the run failed or found no model.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub presets: Vec<String>,
    pub n_splits: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub overrides: Overrides,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            presets: vec!["primitive".into(), "full".into()],
            n_splits: 10,
            train_fraction: 0.7,
            seed: 0,
            overrides: Overrides::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchDataset {
    pub id: String,
    pub data: Dataset,
}

/// A single (dataset, preset, split) run with its seeds fixed up front.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchTask {
    pub dataset_index: usize,
    pub dataset_id: String,
    pub approach_id: String,
    pub split_index: usize,
    pub split: SplitSpec,
    pub scheme: SchemeConfig,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub info: BenchInfo,
    /// Absent when the run itself errored.
    pub report: Option<RunReport>,
    pub failure: Option<String>,
}

/// Expands the benchmark into tasks ordered by dataset, preset, split.
/// Presets and overrides are checked before anything runs.
pub fn plan(cfg: &BenchConfig, datasets: &[BenchDataset]) -> Result<Vec<BenchTask>> {
    if datasets.is_empty() {
        return Err(Error::Config("benchmark needs at least one dataset".into()));
    }
    if cfg.presets.is_empty() {
        return Err(Error::Config("benchmark needs at least one preset".into()));
    }
    if cfg.n_splits == 0 {
        return Err(Error::Config("n_splits must be at least 1".into()));
    }
    SplitSpec::new(cfg.train_fraction, 0)?;
    let mut seen = std::collections::BTreeSet::new();
    for d in datasets {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::Config(format!("duplicate dataset id `{}`", d.id)));
        }
    }
    let schemes: Vec<SchemeConfig> = cfg
        .presets
        .iter()
        .map(|name| {
            let scheme = cfg.overrides.apply(preset(name)?);
            scheme.validate()?;
            Ok(scheme)
        })
        .collect::<Result<_>>()?;

    let mut tasks = Vec::new();
    for (dataset_index, d) in datasets.iter().enumerate() {
        for (name, scheme) in cfg.presets.iter().zip(&schemes) {
            for split_index in 0..cfg.n_splits {
                tasks.push(BenchTask {
                    dataset_index,
                    dataset_id: d.id.clone(),
                    approach_id: name.clone(),
                    split_index,
                    split: SplitSpec::new(cfg.train_fraction, seed!(cfg.seed, &d.id, "outer", split_index))?,
                    scheme: scheme.clone().with_seed(seed!(cfg.seed, &d.id, "run", split_index)),
                });
            }
        }
    }
    Ok(tasks)
}

/// Runs the scheme on the train part, refits the chosen candidate on the
/// whole train part and scores it on the test part. Failures become a
/// missing cell.
pub fn run_task(task: &BenchTask, data: &Dataset) -> BenchOutcome {
    let mut info = BenchInfo {
        dataset_id: task.dataset_id.clone(),
        approach_id: task.approach_id.clone(),
        split_index: task.split_index,
        error: None,
    };
    let report = match run_and_score(task, data) {
        Ok((mut report, error)) => {
            info.error = error;
            report.bench = Some(info.clone());
            report
        }
        Err(e) => {
            log::warn!("{}/{}/{}: {e}", task.dataset_id, task.approach_id, task.split_index);
            return BenchOutcome {
                info,
                report: None,
                failure: Some(e.to_string()),
            };
        }
    };
    let failure = match (&info.error, &report.best) {
        (None, None) => Some("no model found".to_string()),
        _ => None,
    };
    BenchOutcome {
        info,
        report: Some(report),
        failure,
    }
}

fn run_and_score(task: &BenchTask, data: &Dataset) -> Result<(RunReport, Option<f64>)> {
    let stratified = data.class_counts().iter().all(|&c| c != 1);
    let (train_rows, test_rows) = split_indices(data.labels(), data.n_classes(), &task.split, stratified)?;
    let train = data.select_rows(&train_rows);
    let test = data.select_rows(&test_rows);

    let evaluator = Evaluator::new(registry_default(), task.scheme.eval.clone())?;
    let report = run_with_evaluator(&train, &task.scheme, &evaluator)?;
    let Some(best) = &report.best else {
        return Ok((report, None));
    };
    let pipeline = materialize(&best.candidate, evaluator.registry())?;
    let deadline = Deadline::after_opt(task.scheme.eval.per_eval_timeout);
    let fitted = pipeline.fit(&train, seed!(task.scheme.seed, &best.key, "refit"), deadline)?;
    let predicted = fitted.predict(test.instances())?;
    let error = task.scheme.eval.metric.compute(test.labels(), &predicted)?;
    Ok((report, Some(error)))
}

/// Runs every task in order on the current thread.
pub fn run_bench(cfg: &BenchConfig, datasets: &[BenchDataset]) -> Result<Vec<BenchOutcome>> {
    Ok(plan(cfg, datasets)?
        .iter()
        .map(|t| run_task(t, &datasets[t.dataset_index].data))
        .collect())
}

/// Collects outcomes into a matrix; row order follows the outcome order.
pub fn to_matrix(outcomes: &[BenchOutcome]) -> ResultMatrix {
    let mut m = ResultMatrix::new();
    for o in outcomes {
        let i = &o.info;
        m.insert(&i.dataset_id, &i.approach_id, i.split_index, i.error);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{synthesize, SynthKind, SynthSpec};
    use std::time::Duration;

    fn separable(seed: u64) -> BenchDataset {
        BenchDataset {
            id: "sep".into(),
            data: synthesize(&SynthSpec::new(SynthKind::Separable, 80, 3, seed))
                .unwrap()
                .dataset,
        }
    }

    fn quick() -> Overrides {
        Overrides {
            repeats: Some(2),
            max_evals: Some(2),
            global_timeout: Some(Duration::from_secs(120)),
            ..Overrides::default()
        }
    }

    #[test]
    fn plan_counts_and_pairs_splits() {
        let cfg = BenchConfig {
            n_splits: 3,
            overrides: quick(),
            ..BenchConfig::default()
        };
        let tasks = plan(&cfg, &[separable(0)]).unwrap();
        assert_eq!(tasks.len(), 6);
        for s in 0..3 {
            let same: Vec<_> = tasks.iter().filter(|t| t.split_index == s).collect();
            assert_eq!(same.len(), 2);
            assert_eq!(same[0].split, same[1].split);
            assert_eq!(same[0].scheme.seed, same[1].scheme.seed);
        }
        assert_ne!(tasks[0].split, tasks[1].split);
    }

    #[test]
    fn plan_rejects_bad_input() {
        let d = [separable(0)];
        let bad = BenchConfig {
            presets: vec!["fast".into()],
            ..BenchConfig::default()
        };
        assert!(plan(&bad, &d).is_err());
        assert!(plan(&BenchConfig::default(), &[]).is_err());
        let zero = BenchConfig {
            n_splits: 0,
            ..BenchConfig::default()
        };
        assert!(plan(&zero, &d).is_err());
        assert!(plan(&BenchConfig::default(), &[separable(0), separable(1)]).is_err());
    }

    #[test]
    fn bench_rows_and_report_tag() {
        let cfg = BenchConfig {
            presets: vec!["primitive".into()],
            n_splits: 2,
            overrides: quick(),
            ..BenchConfig::default()
        };
        let outcomes = run_bench(&cfg, &[separable(0)]).unwrap();
        assert_eq!(outcomes.len(), 2);
        for o in &outcomes {
            let report = o.report.as_ref().unwrap();
            assert_eq!(report.bench.as_ref(), Some(&o.info));
            assert!(o.info.error.unwrap() <= 0.1);
            let json = serde_json::to_value(report).unwrap();
            assert_eq!(json["bench"]["approach_id"], "primitive");
        }
        let m = to_matrix(&outcomes);
        assert_eq!(m.complete("sep", "primitive").unwrap().len(), 2);
    }

    #[test]
    fn zero_budget_gives_missing_cells() {
        let cfg = BenchConfig {
            presets: vec!["primitive".into()],
            n_splits: 1,
            overrides: Overrides {
                global_timeout: Some(Duration::ZERO),
                ..Overrides::default()
            },
            ..BenchConfig::default()
        };
        let outcomes = run_bench(&cfg, &[separable(0)]).unwrap();
        assert_eq!(outcomes[0].info.error, None);
        assert!(outcomes[0].failure.is_some());
    }
}

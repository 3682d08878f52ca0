//! Python module `staged_automl`.

use std::path::PathBuf;
use std::time::Duration;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use staged_automl::bench::{run_bench, to_matrix, BenchConfig, BenchDataset};
use staged_automl::data::synth::{synthesize, SynthKind, SynthSpec};
use staged_automl::data::{load_dataset, DataFormat, LabelColumn};
use staged_automl::evaluation::{mccv_score, Candidate, EvalConfig};
use staged_automl::orchestrator::{preset, preset_names, run, HoldoutPolicy, Overrides, RunStatus};
use staged_automl::stages::{final_score, omega, tau};
use staged_automl::stats::{self, Outcome, VerdictRule};
use staged_automl::{registry_default, Deadline, FeatureSet};

create_exception!(staged_automl, StagedAutomlError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    StagedAutomlError::new_err(e.to_string())
}

/// A labelled numeric table.
#[pyclass(name = "Dataset", frozen, from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: staged_automl::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Loads CSV or ARFF; the label defaults to the last column.
    #[staticmethod]
    #[pyo3(signature = (path, label=None))]
    fn load(path: PathBuf, label: Option<&str>) -> PyResult<Self> {
        let label = label.map_or(LabelColumn::Last, LabelColumn::parse);
        let inner = load_dataset(&path, DataFormat::from_path(&path), &label).map_err(err)?;
        Ok(PyDataset { inner })
    }

    /// `kind` is one of separable, madelon_like, scale_sensitive, noise_only.
    #[staticmethod]
    #[pyo3(signature = (kind, n, d, seed=0, informative=5))]
    fn synthetic(kind: &str, n: usize, d: usize, seed: u64, informative: usize) -> PyResult<Self> {
        let kind: SynthKind = kind.parse().map_err(err)?;
        let spec = SynthSpec {
            informative,
            ..SynthSpec::new(kind, n, d, seed)
        };
        Ok(PyDataset {
            inner: synthesize(&spec).map_err(err)?.dataset,
        })
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(rows={}, columns={}, classes={})",
            self.inner.n_rows(),
            self.inner.n_cols(),
            self.inner.n_classes()
        )
    }
}

/// Outcome of a scheme run.
#[pyclass(name = "RunReport", frozen)]
struct PyRunReport {
    inner: staged_automl::orchestrator::RunReport,
}

#[pymethods]
impl PyRunReport {
    #[getter]
    fn success(&self) -> bool {
        self.inner.status == RunStatus::Success
    }

    #[getter]
    fn best_key(&self) -> Option<String> {
        self.inner.best.as_ref().map(|b| b.key.clone())
    }

    /// Mean internal error of the selected candidate.
    #[getter]
    fn best_error(&self) -> Option<f64> {
        self.inner.best.as_ref().map(|b| b.score.mean)
    }

    #[getter]
    fn best_internal(&self) -> Option<f64> {
        self.inner.best_internal
    }

    #[getter]
    fn stages(&self) -> Vec<String> {
        self.inner.stages.iter().map(|s| s.trace.stage_id.to_string()).collect()
    }

    #[getter]
    fn evaluations(&self) -> usize {
        self.inner.journal.len()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(err)
    }

    fn journal_jsonl(&self) -> String {
        self.inner.journal_jsonl()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunReport(best={:?}, error={:?})",
            self.best_key().unwrap_or_default(),
            self.best_error()
        )
    }
}

fn holdout_policy(s: &str) -> PyResult<HoldoutPolicy> {
    match s {
        "auto" => Ok(HoldoutPolicy::Auto),
        "always" => Ok(HoldoutPolicy::Always),
        "never" => Ok(HoldoutPolicy::Never),
        other => Err(err(format!("unknown holdout policy `{other}`"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn overrides(
    seed: Option<u64>,
    global_timeout: Option<f64>,
    per_eval_timeout: Option<f64>,
    repeats: Option<usize>,
    max_evals: Option<usize>,
    n_bar: Option<usize>,
    m: Option<usize>,
    holdout: Option<&str>,
) -> PyResult<Overrides> {
    let secs = |s: Option<f64>| s.map(|v| Duration::try_from_secs_f64(v).map_err(err)).transpose();
    Ok(Overrides {
        global_timeout: secs(global_timeout)?,
        per_eval_timeout: secs(per_eval_timeout)?,
        repeats,
        max_evals,
        n_bar,
        m,
        holdout: holdout.map(holdout_policy).transpose()?,
        seed,
        ..Overrides::default()
    })
}

/// Runs a scheme preset on a dataset.
#[pyfunction(name = "run")]
#[pyo3(signature = (data, preset_name="full", seed=0, global_timeout=None, per_eval_timeout=None, repeats=None, max_evals=None, n_bar=None, m=None, holdout=None))]
#[allow(clippy::too_many_arguments)]
fn run_py(
    py: Python<'_>,
    data: &PyDataset,
    preset_name: &str,
    seed: u64,
    global_timeout: Option<f64>,
    per_eval_timeout: Option<f64>,
    repeats: Option<usize>,
    max_evals: Option<usize>,
    n_bar: Option<usize>,
    m: Option<usize>,
    holdout: Option<&str>,
) -> PyResult<PyRunReport> {
    let o = overrides(
        Some(seed),
        global_timeout,
        per_eval_timeout,
        repeats,
        max_evals,
        n_bar,
        m,
        holdout,
    )?;
    let cfg = o.apply(preset(preset_name).map_err(err)?);
    let d = &data.inner;
    let inner = py.detach(|| run(d, &cfg)).map_err(err)?;
    Ok(PyRunReport { inner })
}

/// MCCV error of one candidate: returns (mean, std).
#[pyfunction]
#[pyo3(signature = (data, learner, scaler=None, features=None, repeats=5, seed=0))]
fn evaluate(
    py: Python<'_>,
    data: &PyDataset,
    learner: &str,
    scaler: Option<String>,
    features: Option<Vec<usize>>,
    repeats: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let features = features.map(FeatureSet::new).transpose().map_err(err)?;
    let c = Candidate::base(learner).with_scaler(scaler).with_features(features);
    let cfg = EvalConfig {
        repeats,
        seed,
        per_eval_timeout: None,
        ..EvalConfig::default()
    };
    cfg.validate().map_err(err)?;
    let registry = registry_default();
    let d = &data.inner;
    let score = py.detach(|| mccv_score(&c, d, &cfg, &registry, Deadline::none()));
    if !score.is_ok() {
        return Err(err(score.message.unwrap_or_else(|| "evaluation failed".into())));
    }
    Ok((score.mean, score.std))
}

/// Paired benchmark; returns the results CSV.
#[pyfunction(name = "bench")]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (datasets, presets, n_splits=10, seed=0, repeats=None, max_evals=None, global_timeout=None))]
fn bench_py(
    py: Python<'_>,
    datasets: Vec<(String, PyDataset)>,
    presets: Vec<String>,
    n_splits: usize,
    seed: u64,
    repeats: Option<usize>,
    max_evals: Option<usize>,
    global_timeout: Option<f64>,
) -> PyResult<String> {
    let cfg = BenchConfig {
        presets,
        n_splits,
        seed,
        overrides: overrides(None, global_timeout, None, repeats, max_evals, None, None, None)?,
        ..BenchConfig::default()
    };
    let datasets: Vec<BenchDataset> = datasets
        .into_iter()
        .map(|(id, d)| BenchDataset { id, data: d.inner })
        .collect();
    let outcomes = py.detach(|| run_bench(&cfg, &datasets)).map_err(err)?;
    let mut buf = Vec::new();
    to_matrix(&outcomes).write_csv(&mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(err)
}

#[pyfunction]
fn presets() -> Vec<String> {
    preset_names()
}

#[pyfunction]
#[pyo3(signature = (values, trim=0.1))]
fn trimmed_mean(values: Vec<f64>, trim: f64) -> PyResult<f64> {
    stats::trimmed_mean(&values, trim).map_err(err)
}

/// Returns (statistic, two-sided p-value).
#[pyfunction]
fn wilcoxon(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = stats::wilcoxon_signed_rank(&a, &b).map_err(err)?;
    Ok((r.statistic, r.p_value))
}

/// "better", "worse" or "draw" for `a` (tested) against `b` (reference).
#[pyfunction]
#[pyo3(signature = (a, b, alpha=0.05, delta=0.01, trim=0.1))]
fn verdict(a: Vec<f64>, b: Vec<f64>, alpha: f64, delta: f64, trim: f64) -> PyResult<&'static str> {
    let v = stats::verdict(&a, &b, &VerdictRule { alpha, delta, trim }).map_err(err)?;
    Ok(match v.outcome {
        Outcome::Better => "better",
        Outcome::Worse => "worse",
        Outcome::Draw => "draw",
    })
}

/// Holdout weight for `n` holdout rows out of `total`.
#[pyfunction]
#[pyo3(signature = (n, total, n_bar=10000))]
fn validation_weight(n: usize, total: usize, n_bar: usize) -> (f64, f64) {
    (tau(n, n_bar), omega(n, total, n_bar))
}

#[pyfunction]
fn blend(internal: f64, holdout: f64, weight: f64) -> f64 {
    final_score(internal, holdout, weight)
}

#[pymodule]
#[pyo3(name = "staged_automl")]
fn staged_automl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StagedAutomlError", m.py().get_type::<StagedAutomlError>())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyRunReport>()?;
    m.add_function(wrap_pyfunction!(run_py, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(bench_py, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(trimmed_mean, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(verdict, m)?)?;
    m.add_function(wrap_pyfunction!(validation_weight, m)?)?;
    m.add_function(wrap_pyfunction!(blend, m)?)?;
    Ok(())
}

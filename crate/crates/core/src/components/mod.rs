//! Pipeline building blocks and the registry that names them.

pub mod filters;
pub mod learners;
pub mod params;
pub mod scalers;

use std::fmt;
use std::sync::Arc;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub use filters::FilterKind;
pub use learners::{FitContext, Learner, Model};
pub use params::{Domain, ParamMap, ParamSpace, ParamValue, Params};
pub use scalers::{FittedScaler, ScalerKind};

use learners::{
    AdaBoost, Bagging, ConstantModel, DecisionTree, FeatureSubsample, GaussianNb, Knn, LogisticRegression, RandomForest,
};
use params::ParamReader;

/// The implementation behind a learner id. Several ids may share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Knn,
    GaussianNb,
    DecisionTree,
    LogisticRegression,
    RandomForest,
    Bagging,
    AdaBoost,
}

impl LearnerKind {
    pub fn is_meta(self) -> bool {
        matches!(self, LearnerKind::Bagging | LearnerKind::AdaBoost)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub id: String,
    pub implementation: LearnerKind,
    pub default_params: ParamMap,
    pub param_space: ParamSpace,
    pub is_meta: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalerSpec {
    pub id: String,
    pub implementation: ScalerKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterSpec {
    pub id: String,
    pub implementation: FilterKind,
}

/// The learner slot of a candidate: a base learner, or a meta-learner
/// wrapped around one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerRef {
    Base {
        id: String,
    },
    Meta {
        meta: String,
        meta_params: Params,
        base: String,
    },
}

impl LearnerRef {
    pub fn base(id: impl Into<String>) -> Self {
        LearnerRef::Base { id: id.into() }
    }

    pub fn meta(meta: impl Into<String>, base: impl Into<String>) -> Self {
        LearnerRef::Meta {
            meta: meta.into(),
            meta_params: Params::Default,
            base: base.into(),
        }
    }

    /// Id of the learner whose parameters the candidate's params slot holds.
    pub fn base_id(&self) -> &str {
        match self {
            LearnerRef::Base { id } => id,
            LearnerRef::Meta { base, .. } => base,
        }
    }

    pub fn is_meta(&self) -> bool {
        matches!(self, LearnerRef::Meta { .. })
    }
}

impl fmt::Display for LearnerRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerRef::Base { id } => f.write_str(id),
            LearnerRef::Meta {
                meta,
                meta_params,
                base,
            } => write!(f, "{meta}({})>{base}", meta_params.render()),
        }
    }
}

/// A trained learner that checks the column count of its input.
#[derive(Debug)]
pub struct FittedModel {
    model: Box<dyn Model>,
    n_features: usize,
}

impl FittedModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if rows.ncols() != self.n_features {
            return Err(Error::ColumnMismatch {
                expected: self.n_features,
                actual: rows.ncols(),
            });
        }
        if rows.nrows() == 0 {
            return Ok(Vec::new());
        }
        Ok(self.model.predict(rows))
    }
}

/// A learner ready to be fitted, produced by [`Registry::learner_handle`].
#[derive(Debug, Clone)]
pub struct LearnerHandle {
    learner: Arc<dyn Learner>,
}

impl LearnerHandle {
    /// Trains on `x`, `y`. A single-class training set yields a constant model.
    pub fn fit_matrix(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        n_classes: usize,
        seed: u64,
        deadline: Deadline,
    ) -> Result<FittedModel> {
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let model: Box<dyn Model> = match learners::single_class(y) {
            Some(c) => Box::new(ConstantModel(c)),
            None => self
                .learner
                .fit(x, y, &FitContext::unweighted(n_classes, seed, deadline))?,
        };
        Ok(FittedModel {
            model,
            n_features: x.ncols(),
        })
    }

    pub fn fit(&self, train: &Dataset, seed: u64, deadline: Deadline) -> Result<FittedModel> {
        self.fit_matrix(
            train.instances().view(),
            train.labels(),
            train.n_classes(),
            seed,
            deadline,
        )
    }
}

/// The immutable catalog of learners, scalers and filters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registry {
    learners: Vec<LearnerSpec>,
    scalers: Vec<ScalerSpec>,
    filters: Vec<FilterSpec>,
}

impl Default for Registry {
    fn default() -> Self {
        registry_default()
    }
}

fn cat(values: impl IntoIterator<Item = ParamValue>) -> Domain {
    Domain::Categorical {
        values: values.into_iter().collect(),
    }
}

fn depth_domain() -> Domain {
    cat(std::iter::once(ParamValue::None).chain([2, 3, 4, 6, 8, 12, 16].map(ParamValue::Int)))
}

fn spec(id: &str, implementation: LearnerKind, entries: Vec<(&str, Domain, ParamValue)>) -> LearnerSpec {
    let mut default_params = ParamMap::new();
    let mut param_space = ParamSpace::new();
    for (name, domain, default) in entries {
        default_params.insert(name.into(), default);
        param_space.insert(name.into(), domain);
    }
    LearnerSpec {
        id: id.into(),
        implementation,
        default_params,
        param_space,
        is_meta: implementation.is_meta(),
    }
}

/// The built-in catalog: five base learners, two meta-learners, three
/// scalers and four filters.
pub fn registry_default() -> Registry {
    use LearnerKind as K;
    use ParamValue::{Bool, Int, Real, Text};
    let learners = vec![
        spec(
            "knn",
            K::Knn,
            vec![("k", cat([1, 3, 5, 7, 11, 15, 21].map(Int)), Int(5))],
        ),
        spec("gaussian_nb", K::GaussianNb, vec![]),
        spec(
            "decision_tree",
            K::DecisionTree,
            vec![
                ("max_depth", depth_domain(), ParamValue::None),
                ("min_split", Domain::IntRange { low: 2, high: 20 }, Int(2)),
            ],
        ),
        spec(
            "logistic_regression",
            K::LogisticRegression,
            vec![
                ("learning_rate", Domain::LogUniform { low: 1e-4, high: 1.0 }, Real(0.1)),
                ("epochs", Domain::IntRange { low: 10, high: 500 }, Int(100)),
                ("l2", Domain::LogUniform { low: 1e-6, high: 1e-1 }, Real(1e-4)),
            ],
        ),
        spec(
            "random_forest",
            K::RandomForest,
            vec![
                ("n_trees", Domain::IntRange { low: 10, high: 100 }, Int(20)),
                ("max_depth", depth_domain(), ParamValue::None),
                (
                    "feature_subsample",
                    cat([Text("sqrt".into()), Real(0.25), Real(0.5), Real(0.75), Real(1.0)]),
                    Text("sqrt".into()),
                ),
            ],
        ),
        spec(
            "bagging",
            K::Bagging,
            vec![
                ("n_estimators", Domain::IntRange { low: 5, high: 50 }, Int(10)),
                ("sample_fraction", Domain::LogUniform { low: 0.3, high: 1.0 }, Real(1.0)),
                ("bootstrap", cat([Bool(true), Bool(false)]), Bool(true)),
            ],
        ),
        spec(
            "adaboost",
            K::AdaBoost,
            vec![
                ("n_estimators", Domain::IntRange { low: 10, high: 100 }, Int(20)),
                ("learning_rate", Domain::LogUniform { low: 0.01, high: 2.0 }, Real(1.0)),
            ],
        ),
    ];
    let scalers = [
        ("standardize", ScalerKind::Standardize),
        ("minmax", ScalerKind::MinMax),
        ("quantile_rank", ScalerKind::QuantileRank),
    ]
    .map(|(id, implementation)| ScalerSpec {
        id: id.into(),
        implementation,
    })
    .to_vec();
    let filters = [
        ("pearson_correlation", FilterKind::PearsonCorrelation),
        ("mutual_information", FilterKind::MutualInformation),
        ("chi_squared", FilterKind::ChiSquared),
        ("variance", FilterKind::Variance),
    ]
    .map(|(id, implementation)| FilterSpec {
        id: id.into(),
        implementation,
    })
    .to_vec();
    Registry {
        learners,
        scalers,
        filters,
    }
}

impl Registry {
    /// Builds a registry, checking id uniqueness and that defaults lie in
    /// their spaces.
    pub fn new(learners: Vec<LearnerSpec>, scalers: Vec<ScalerSpec>, filters: Vec<FilterSpec>) -> Result<Self> {
        let registry = Registry {
            learners,
            scalers,
            filters,
        };
        registry.check()?;
        Ok(registry)
    }

    fn check(&self) -> Result<()> {
        fn unique<'a>(kind: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
            let mut seen = std::collections::BTreeSet::new();
            for id in ids {
                if !seen.insert(id) {
                    return Err(Error::Config(format!("duplicate {kind} id `{id}`")));
                }
            }
            Ok(())
        }
        unique("learner", self.learners.iter().map(|l| l.id.as_str()))?;
        unique("scaler", self.scalers.iter().map(|s| s.id.as_str()))?;
        unique("filter", self.filters.iter().map(|f| f.id.as_str()))?;
        for l in &self.learners {
            if l.is_meta != l.implementation.is_meta() {
                return Err(Error::Config(format!(
                    "learner `{}` has an inconsistent meta flag",
                    l.id
                )));
            }
            params::validate(&l.id, &l.param_space, &l.default_params)?;
            if l.default_params.len() != l.param_space.len() {
                return Err(Error::Config(format!(
                    "learner `{}` lacks a default for some parameter",
                    l.id
                )));
            }
        }
        Ok(())
    }

    pub fn learners(&self) -> &[LearnerSpec] {
        &self.learners
    }

    pub fn base_learners(&self) -> impl Iterator<Item = &LearnerSpec> {
        self.learners.iter().filter(|l| !l.is_meta)
    }

    pub fn meta_learners(&self) -> impl Iterator<Item = &LearnerSpec> {
        self.learners.iter().filter(|l| l.is_meta)
    }

    pub fn scalers(&self) -> &[ScalerSpec] {
        &self.scalers
    }

    pub fn filters(&self) -> &[FilterSpec] {
        &self.filters
    }

    pub fn learner(&self, id: &str) -> Result<&LearnerSpec> {
        self.learners
            .iter()
            .find(|l| l.id == id)
            .ok_or_else(|| Error::UnknownComponent {
                kind: "learner",
                id: id.into(),
            })
    }

    pub fn scaler(&self, id: &str) -> Result<&ScalerSpec> {
        self.scalers
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::UnknownComponent {
                kind: "scaler",
                id: id.into(),
            })
    }

    pub fn filter(&self, id: &str) -> Result<&FilterSpec> {
        self.filters
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| Error::UnknownComponent {
                kind: "filter",
                id: id.into(),
            })
    }

    pub fn default_params(&self, id: &str) -> Result<&ParamMap> {
        Ok(&self.learner(id)?.default_params)
    }

    /// Replaces a learner's defaults; the new map must be complete and in-space.
    pub fn set_default_params(&mut self, id: &str, defaults: ParamMap) -> Result<()> {
        let spec = self
            .learners
            .iter_mut()
            .find(|l| l.id == id)
            .ok_or_else(|| Error::UnknownComponent {
                kind: "learner",
                id: id.into(),
            })?;
        params::validate(id, &spec.param_space, &defaults)?;
        if defaults.len() != spec.param_space.len() {
            return Err(Error::Config(format!("defaults for `{id}` must name every parameter")));
        }
        spec.default_params = defaults;
        Ok(())
    }

    /// Draws each parameter independently from its domain.
    pub fn sample_params(&self, id: &str, rng: &mut SeededRng) -> Result<ParamMap> {
        Ok(params::sample_space(&self.learner(id)?.param_space, rng))
    }

    /// Defaults overlaid with `params`, validated against the space.
    pub fn resolve_params(&self, id: &str, params: &Params) -> Result<ParamMap> {
        let spec = self.learner(id)?;
        let mut map = spec.default_params.clone();
        if let Params::Explicit(explicit) = params {
            params::validate(id, &spec.param_space, explicit)?;
            map.extend(explicit.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        Ok(map)
    }

    fn build_base(&self, spec: &LearnerSpec, map: &ParamMap) -> Result<Arc<dyn Learner>> {
        let p = ParamReader { learner: &spec.id, map };
        Ok(match spec.implementation {
            LearnerKind::Knn => Arc::new(Knn {
                k: p.usize("k")?.max(1),
            }),
            LearnerKind::GaussianNb => Arc::new(GaussianNb),
            LearnerKind::DecisionTree => Arc::new(DecisionTree {
                max_depth: p.opt_usize("max_depth")?,
                min_split: p.usize("min_split")?.max(2),
                max_features: None,
            }),
            LearnerKind::LogisticRegression => Arc::new(LogisticRegression {
                learning_rate: p.real("learning_rate")?,
                epochs: p.usize("epochs")?,
                l2: p.real("l2")?,
            }),
            LearnerKind::RandomForest => Arc::new(RandomForest {
                n_trees: p.usize("n_trees")?.max(1),
                max_depth: p.opt_usize("max_depth")?,
                feature_subsample: match p.value("feature_subsample")? {
                    ParamValue::Text(t) if t == "sqrt" => FeatureSubsample::Sqrt,
                    _ => FeatureSubsample::Fraction(p.real("feature_subsample")?),
                },
            }),
            LearnerKind::Bagging | LearnerKind::AdaBoost => {
                return Err(Error::InvalidMeta {
                    meta: spec.id.clone(),
                    base: String::new(),
                    reason: "a meta-learner needs a base learner".into(),
                })
            }
        })
    }

    /// Wraps a base learner in a meta-learner. Meta-of-meta is rejected.
    pub fn wrap_meta(
        &self,
        meta_id: &str,
        meta_params: &Params,
        base_id: &str,
        base_params: &Params,
    ) -> Result<LearnerHandle> {
        let meta = self.learner(meta_id)?;
        let base = self.learner(base_id)?;
        let invalid = |reason: &str| Error::InvalidMeta {
            meta: meta_id.into(),
            base: base_id.into(),
            reason: reason.into(),
        };
        if !meta.is_meta {
            return Err(invalid("not a meta-learner"));
        }
        if base.is_meta {
            return Err(invalid("the base is itself a meta-learner"));
        }
        let inner = self.build_base(base, &self.resolve_params(base_id, base_params)?)?;
        let map = self.resolve_params(meta_id, meta_params)?;
        let p = ParamReader {
            learner: meta_id,
            map: &map,
        };
        let learner: Arc<dyn Learner> = match meta.implementation {
            LearnerKind::Bagging => Arc::new(Bagging {
                base: inner,
                n_estimators: p.usize("n_estimators")?.max(1),
                sample_fraction: p.real("sample_fraction")?,
                bootstrap: p.bool("bootstrap")?,
            }),
            LearnerKind::AdaBoost => Arc::new(AdaBoost {
                base: inner,
                n_estimators: p.usize("n_estimators")?.max(1),
                learning_rate: p.real("learning_rate")?,
            }),
            _ => unreachable!("checked by is_meta"),
        };
        Ok(LearnerHandle { learner })
    }

    /// A fit-ready learner for a candidate's learner and params slots.
    pub fn learner_handle(&self, learner: &LearnerRef, params: &Params) -> Result<LearnerHandle> {
        match learner {
            LearnerRef::Base { id } => {
                let spec = self.learner(id)?;
                if spec.is_meta {
                    return Err(Error::InvalidMeta {
                        meta: id.clone(),
                        base: String::new(),
                        reason: "a meta-learner needs a base learner".into(),
                    });
                }
                let map = self.resolve_params(id, params)?;
                Ok(LearnerHandle {
                    learner: self.build_base(spec, &map)?,
                })
            }
            LearnerRef::Meta {
                meta,
                meta_params,
                base,
            } => self.wrap_meta(meta, meta_params, base, params),
        }
    }

    pub fn fit(&self, learner: &LearnerRef, params: &Params, train: &Dataset, seed: u64) -> Result<FittedModel> {
        self.learner_handle(learner, params)?.fit(train, seed, Deadline::none())
    }

    pub fn apply_scaler(&self, id: &str, fit_data: &Dataset) -> Result<FittedScaler> {
        Ok(self.scaler(id)?.implementation.fit(fit_data.instances().view()))
    }

    pub fn rank_features(&self, id: &str, d: &Dataset) -> Result<Vec<usize>> {
        Ok(self
            .filter(id)?
            .implementation
            .rank(d.instances().view(), d.labels(), d.n_classes()))
    }

    /// The catalog as a JSON document (ids, implementations, defaults, domains).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn ids<'a>(it: impl Iterator<Item = &'a LearnerSpec>) -> Vec<&'a str> {
        it.map(|l| l.id.as_str()).collect()
    }

    #[test]
    fn default_catalog_contents() {
        let r = registry_default();
        assert_eq!(
            ids(r.base_learners()),
            [
                "knn",
                "gaussian_nb",
                "decision_tree",
                "logistic_regression",
                "random_forest"
            ]
        );
        assert_eq!(ids(r.meta_learners()), ["bagging", "adaboost"]);
        assert_eq!(r.scalers().len(), 3);
        assert_eq!(r.filters().len(), 4);
        let mut knn = ParamMap::new();
        knn.insert("k".into(), ParamValue::Int(5));
        assert_eq!(r.default_params("knn").unwrap(), &knn);
        assert!(r.check().is_ok());
    }

    #[test]
    fn unknown_ids_error() {
        let r = registry_default();
        let mut rng = SeededRng::new(0);
        assert!(matches!(
            r.sample_params("svm", &mut rng),
            Err(Error::UnknownComponent { .. })
        ));
        assert!(r.scaler("zscore").is_err());
    }

    #[test]
    fn meta_of_meta_rejected() {
        let r = registry_default();
        let err = r.wrap_meta("bagging", &Params::Default, "adaboost", &Params::Default);
        assert!(matches!(err, Err(Error::InvalidMeta { .. })));
        assert!(r.wrap_meta("knn", &Params::Default, "knn", &Params::Default).is_err());
        assert!(r
            .learner_handle(&LearnerRef::base("bagging"), &Params::Default)
            .is_err());
    }

    #[test]
    fn params_outside_space_rejected() {
        let r = registry_default();
        let mut m = ParamMap::new();
        m.insert("k".into(), ParamValue::Int(4));
        assert!(r
            .learner_handle(&LearnerRef::base("knn"), &Params::Explicit(m))
            .is_err());
        let mut bad = r.default_params("knn").unwrap().clone();
        bad.insert("k".into(), ParamValue::Int(2));
        let mut r2 = r.clone();
        assert!(r2.set_default_params("knn", bad).is_err());
    }

    #[test]
    fn predict_checks_columns_and_handles_empty() {
        let r = registry_default();
        let d = Dataset::from_parts(
            array![[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]],
            vec![0, 1, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let m = r.fit(&LearnerRef::base("knn"), &Params::Default, &d, 0).unwrap();
        assert!(matches!(
            m.predict(Array2::zeros((1, 3)).view()),
            Err(Error::ColumnMismatch { expected: 2, actual: 3 })
        ));
        assert!(m.predict(Array2::zeros((0, 2)).view()).unwrap().is_empty());
    }

    #[test]
    fn one_nn_reproduces_training_labels() {
        let r = registry_default();
        let x = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 7 + j * 13) % 17) as f64 + i as f64 * 0.01);
        let y: Vec<usize> = (0..30).map(|i| (i * 5) % 3).collect();
        let d = Dataset::from_parts(x.clone(), y.clone(), vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let mut m = ParamMap::new();
        m.insert("k".into(), ParamValue::Int(1));
        let model = r.fit(&LearnerRef::base("knn"), &Params::Explicit(m), &d, 0).unwrap();
        assert_eq!(model.predict(x.view()).unwrap(), y);
    }

    #[test]
    fn json_dump_lists_everything() {
        let json = registry_default().to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["learners"].as_array().unwrap().len(), 7);
        assert_eq!(v["learners"][0]["param_space"]["k"]["type"], "categorical");
        let back: Registry = serde_json::from_str(&json).unwrap();
        assert_eq!(back.learners().len(), 7);
    }

    #[test]
    fn ids_may_share_an_implementation() {
        let mut learners = registry_default().learners().to_vec();
        let mut alias = learners[0].clone();
        alias.id = "knn_alias".into();
        learners.push(alias);
        let r = Registry::new(learners.clone(), vec![], vec![]).unwrap();
        assert_eq!(r.learner("knn_alias").unwrap().implementation, LearnerKind::Knn);
        learners.push(learners[0].clone());
        assert!(Registry::new(learners, vec![], vec![]).is_err());
    }

    fn all_refs(r: &Registry) -> Vec<LearnerRef> {
        let mut refs: Vec<LearnerRef> = r.base_learners().map(|l| LearnerRef::base(&l.id)).collect();
        for m in r.meta_learners() {
            refs.push(LearnerRef::meta(&m.id, "decision_tree"));
        }
        refs
    }

    #[test]
    fn single_class_training_predicts_that_class() {
        let r = registry_default();
        let x = Array2::from_shape_fn((8, 2), |(i, j)| (i + j) as f64);
        let d = Dataset::from_parts(x.clone(), vec![1; 8], vec!["a".into(), "b".into()]).unwrap();
        for l in all_refs(&r) {
            let m = r.fit(&l, &Params::Default, &d, 3).unwrap();
            assert_eq!(m.predict(x.view()).unwrap(), vec![1; 8], "{l}");
        }
    }

    #[test]
    fn refits_are_bit_identical() {
        let r = registry_default();
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 31 + j * 17) % 23) as f64 / 7.0);
        let y: Vec<usize> = (0..40).map(|i| usize::from((i * 31 % 23) > 11)).collect();
        let d = Dataset::from_parts(x.clone(), y, vec!["a".into(), "b".into()]).unwrap();
        for l in all_refs(&r) {
            let a = r.fit(&l, &Params::Default, &d, 9).unwrap().predict(x.view()).unwrap();
            let b = r.fit(&l, &Params::Default, &d, 9).unwrap().predict(x.view()).unwrap();
            assert_eq!(a, b, "{l}");
        }
    }

    #[test]
    fn learner_ref_rendering() {
        assert_eq!(LearnerRef::base("knn").to_string(), "knn");
        assert_eq!(LearnerRef::meta("bagging", "knn").to_string(), "bagging(default)>knn");
    }

    proptest! {
        #[test]
        fn samples_stay_in_space(seed in any::<u64>()) {
            let r = registry_default();
            let mut rng = SeededRng::new(seed);
            for l in r.learners() {
                let s = r.sample_params(&l.id, &mut rng).unwrap();
                prop_assert!(params::validate(&l.id, &l.param_space, &s).is_ok());
                prop_assert_eq!(s.len(), l.param_space.len());
            }
        }

        // minmax is the identity on columns spanning exactly [0, 1]
        #[test]
        fn minmax_on_unit_data_keeps_predictions(seed in 0u64..50) {
            let r = registry_default();
            let mut rng = SeededRng::new(seed);
            let n = 30;
            let mut x = Array2::from_shape_fn((n, 2), |_| rng.unit());
            for j in 0..2 {
                x[[0, j]] = 0.0;
                x[[1, j]] = 1.0;
            }
            let y: Vec<usize> = (0..n).map(|i| usize::from(x[[i, 0]] + x[[i, 1]] > 1.0)).collect();
            let d = Dataset::from_parts(x.clone(), y, vec!["a".into(), "b".into()]).unwrap();
            let scaled = r.apply_scaler("minmax", &d).unwrap().transform(x.view());
            let ds = Dataset::from_parts(scaled.clone(), d.labels().to_vec(), vec!["a".into(), "b".into()]).unwrap();
            for id in ["knn", "decision_tree"] {
                let a = r.fit(&LearnerRef::base(id), &Params::Default, &d, 1).unwrap().predict(x.view()).unwrap();
                let b = r.fit(&LearnerRef::base(id), &Params::Default, &ds, 1).unwrap().predict(scaled.view()).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}

//! Hyperparameter values, domains, and sampling.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// A single hyperparameter value. `None` stands for "unbounded"/"unset"
/// options such as an unlimited tree depth and serializes as JSON `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    None,
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    /// Canonical rendering used in candidate keys; reals always carry a
    /// decimal point or exponent so `1` and `1.0` stay distinct.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::None => f.write_str("none"),
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r:?}"),
            ParamValue::Text(s) => write!(f, "'{s}'"),
        }
    }
}

pub type ParamMap = BTreeMap<String, ParamValue>;

/// The parameter slot of a candidate: the registry defaults or an explicit map.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Params {
    #[default]
    Default,
    Explicit(ParamMap),
}

impl Params {
    /// Canonical form: `default` or sorted `k=v` pairs.
    pub fn render(&self) -> String {
        match self {
            Params::Default => "default".into(),
            Params::Explicit(m) => render_params(m),
        }
    }
}

/// Renders `a=1,b=0.5` with keys in sorted order.
pub fn render_params(params: &ParamMap) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// The set of values a hyperparameter may take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Categorical {
        values: Vec<ParamValue>,
    },
    /// Inclusive integer range.
    IntRange {
        low: i64,
        high: i64,
    },
    /// Reals in `[low, high]`, sampled uniformly in log space.
    LogUniform {
        low: f64,
        high: f64,
    },
}

impl Domain {
    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (Domain::Categorical { values }, v) => values.contains(v),
            (Domain::IntRange { low, high }, ParamValue::Int(i)) => low <= i && i <= high,
            (Domain::LogUniform { low, high }, ParamValue::Real(r)) => *low <= *r && *r <= *high,
            _ => false,
        }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> ParamValue {
        match self {
            Domain::Categorical { values } => values[rng.below(values.len())].clone(),
            Domain::IntRange { low, high } => {
                let span = (high - low) as usize + 1;
                ParamValue::Int(low + rng.below(span) as i64)
            }
            Domain::LogUniform { low, high } => {
                let (a, b) = (low.ln(), high.ln());
                let v = (a + rng.unit() * (b - a)).exp();
                // exp(ln(x)) can overshoot by an ulp
                ParamValue::Real(v.clamp(*low, *high))
            }
        }
    }

    /// All values when the domain is finite.
    pub fn enumerate(&self) -> Option<Vec<ParamValue>> {
        match self {
            Domain::Categorical { values } => Some(values.clone()),
            Domain::IntRange { low, high } => Some((*low..=*high).map(ParamValue::Int).collect()),
            Domain::LogUniform { .. } => None,
        }
    }

    pub fn cardinality(&self) -> Option<usize> {
        match self {
            Domain::Categorical { values } => Some(values.len()),
            Domain::IntRange { low, high } => Some((high - low) as usize + 1),
            Domain::LogUniform { .. } => None,
        }
    }
}

pub type ParamSpace = BTreeMap<String, Domain>;

/// Draws every parameter independently from its domain, in key order.
pub fn sample_space(space: &ParamSpace, rng: &mut SeededRng) -> ParamMap {
    space.iter().map(|(k, d)| (k.clone(), d.sample(rng))).collect()
}

/// Size of the full grid, or `None` if some domain is continuous.
pub fn grid_size(space: &ParamSpace) -> Option<usize> {
    space
        .values()
        .try_fold(1usize, |acc, d| d.cardinality().map(|c| acc.saturating_mul(c)))
}

/// Cartesian product of all domains in key order (last key varies fastest).
pub fn enumerate_grid(space: &ParamSpace) -> Option<Vec<ParamMap>> {
    let mut grid = vec![ParamMap::new()];
    for (key, domain) in space {
        let values = domain.enumerate()?;
        grid = grid
            .into_iter()
            .flat_map(|partial| {
                values.iter().map(move |v| {
                    let mut next = partial.clone();
                    next.insert(key.clone(), v.clone());
                    next
                })
            })
            .collect();
    }
    Some(grid)
}

pub fn validate(learner: &str, space: &ParamSpace, params: &ParamMap) -> Result<()> {
    for (k, v) in params {
        let domain = space.get(k).ok_or_else(|| Error::InvalidParam {
            learner: learner.into(),
            param: k.clone(),
            reason: "unknown parameter".into(),
        })?;
        if !domain.contains(v) {
            return Err(Error::InvalidParam {
                learner: learner.into(),
                param: k.clone(),
                reason: format!("value {v} outside domain"),
            });
        }
    }
    Ok(())
}

/// Typed accessors that turn a missing or mistyped value into an error.
pub(crate) struct ParamReader<'a> {
    pub learner: &'a str,
    pub map: &'a ParamMap,
}

impl ParamReader<'_> {
    fn get(&self, key: &str) -> Result<&ParamValue> {
        self.map.get(key).ok_or_else(|| self.err(key, "missing"))
    }

    fn err(&self, key: &str, reason: &str) -> Error {
        Error::InvalidParam {
            learner: self.learner.into(),
            param: key.into(),
            reason: reason.into(),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        match self.get(key)? {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(self.err(key, "expected a non-negative integer")),
        }
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key)? {
            ParamValue::None => Ok(None),
            _ => self.usize(key).map(Some),
        }
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            ParamValue::Real(r) => Ok(*r),
            ParamValue::Int(i) => Ok(*i as f64),
            _ => Err(self.err(key, "expected a real number")),
        }
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key)? {
            ParamValue::Bool(b) => Ok(*b),
            _ => Err(self.err(key, "expected a boolean")),
        }
    }

    pub fn value(&self, key: &str) -> Result<&ParamValue> {
        self.get(key)
    }
}

//! A staged AutoML engine for tabular classification.
//!
//! A run moves a pool of scored candidate pipelines (scaler, feature set,
//! learner, parameters) through a fixed sequence of stages. Each stage adds
//! candidates that are cheap to reason about locally; the best candidate
//! seen anywhere, or the winner of a final holdout validation, is returned.

pub mod rng;

pub mod bench;
pub mod components;
pub mod data;
pub mod deadline;
pub mod error;
pub mod evaluation;
pub mod orchestrator;
pub mod stages;
pub mod stats;

pub use components::{registry_default, LearnerRef, Params, Registry};
pub use data::{Dataset, FeatureSet, SplitSpec};
pub use deadline::Deadline;
pub use error::{Error, Result};

//! Hybrid counterfactual explanations for classifiers over mixed-type
//! tabular data, with a gradient-boosted tree model, evaluation utilities
//! and a synthetic event-timeline cohort generator.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

pub mod cf;
pub mod cohort;
pub mod error;
pub mod eval;
pub mod gbm;
pub mod predictor;
pub mod scalar;
pub mod tabular;

pub use error::{Error, Result};
pub use predictor::{FnPredictor, Predictor};
pub use scalar::{logit, sigmoid, Scalar};

pub type Cell = tabular::Cell<f64>;
pub type Instance = tabular::Instance<f64>;
pub type Dataset = tabular::Dataset<f64>;
pub type FeatureSpec = tabular::FeatureSpec<f64>;
pub type FeatureSchema = tabular::FeatureSchema<f64>;
pub type CfQuery = cf::CfQuery<f64>;
pub type Counterfactual = cf::Counterfactual<f64>;
pub type HybridReport = cf::HybridReport<f64>;
pub type GbmModel = gbm::GbmModel<f64>;
pub type EvalReport = eval::EvalReport<f64>;

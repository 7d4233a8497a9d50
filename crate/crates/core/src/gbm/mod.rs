//! Regularized gradient-boosted tree classifier.

mod cv;
mod model;
mod train;
mod tree;

pub use cv::{cross_validate, select_config, stratified_folds, train_test_split, CvResult};
pub use model::{write_importance_csv, FeatureImportance, GbmModel, MODEL_VERSION};
pub use train::{train, GbmConfig};
pub use tree::{Node, SplitRule, Tree};

//! Mixed-type tabular data: schema, rows, binary-feature detection and the
//! Gower metric.

mod binary;
mod cell;
mod dataset;
mod gower;
mod io;
mod schema;

pub use binary::{binary_features, identify_binary_features, BinaryFeature};
pub use cell::{distinct_sorted, Cell};
pub use dataset::{Dataset, Instance, N_CLASSES};
pub use gower::{gower_distance, Gower};
pub use io::{
    instance_from_json, instance_to_json, read_csv, resolve_features, write_csv, FeatureDecl, SchemaFile,
};
pub use schema::{Domain, FeatureKind, FeatureSchema, FeatureSpec};

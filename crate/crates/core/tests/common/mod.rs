#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recourse_core::tabular::{Cell, Dataset, FeatureSchema, FeatureSpec, Instance};

/// Two informative numeric features plus a categorical and a binary nuisance.
/// Label is 1 exactly when `x0 + x1 > 1`.
pub fn separable(n: usize, seed: u64) -> Dataset<f64> {
    let schema = FeatureSchema::new(vec![
        FeatureSpec::numeric("x0", 0.0, 1.0),
        FeatureSpec::numeric("x1", 0.0, 1.0),
        FeatureSpec::categorical("site", &["a", "b", "c"]),
        FeatureSpec::binary01("flag"),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let site = ["a", "b", "c"][rng.random_range(0..3)];
        let flag = rng.random_range(0..2) as f64;
        rows.push(Instance::new(vec![Cell::Num(a), Cell::Num(b), Cell::cat(site), Cell::Num(flag)]));
        labels.push(usize::from(a + b > 1.0));
    }
    Dataset::new(Arc::new(schema), rows, Some(labels)).unwrap()
}

/// `p` binary features; the label is driven by feature 0 only.
pub fn planted_binary(n: usize, p: usize, seed: u64) -> Dataset<f64> {
    let schema = FeatureSchema::new((0..p).map(|j| FeatureSpec::binary01(&format!("b{j}"))).collect()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let v: Vec<f64> = (0..p).map(|_| rng.random_range(0..2) as f64).collect();
        let p1 = if v[0] == 1.0 { 0.9 } else { 0.1 };
        labels.push(usize::from(rng.random_bool(p1)));
        rows.push(Instance::from_numbers(&v));
    }
    Dataset::new(Arc::new(schema), rows, Some(labels)).unwrap()
}

pub fn permuted_labels(d: &Dataset<f64>, seed: u64) -> Dataset<f64> {
    use rand::seq::SliceRandom;
    let mut labels = d.labels().unwrap().to_vec();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    d.clone().with_labels(labels).unwrap()
}

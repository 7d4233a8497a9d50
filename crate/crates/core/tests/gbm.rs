mod common;

use std::sync::Arc;

use recourse_core::eval::auroc;
use recourse_core::gbm::{cross_validate, stratified_folds, train, train_test_split, GbmConfig, GbmModel, Node};
use recourse_core::tabular::{Dataset, FeatureSchema, FeatureSpec, Instance};
use recourse_core::{logit, sigmoid, Error, Predictor};

fn held_out_auroc(d: &Dataset<f64>, cfg: &GbmConfig, seed: u64) -> f64 {
    let (tr, te) = train_test_split(d.labels().unwrap(), 0.3, seed).unwrap();
    let m = train(&d.subset(&tr), cfg).unwrap();
    let test = d.subset(&te);
    let s = m.class_probabilities(test.rows(), 1).unwrap();
    auroc(&s, test.labels().unwrap()).unwrap()
}

#[test]
fn zero_trees_predicts_base_rate() {
    let d = common::planted_binary(200, 3, 1);
    let m = train(&d, &GbmConfig { n_trees: 0, ..Default::default() }).unwrap();
    let rate = d.labels().unwrap().iter().sum::<usize>() as f64 / 200.0;
    for x in d.rows().iter().take(10) {
        let p = m.predict_proba(x).unwrap();
        assert!((p[1] - rate).abs() < 1e-12);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn balanced_prior_is_symmetric() {
    let s = FeatureSchema::<f64>::new(vec![FeatureSpec::binary01("b")]).unwrap();
    let rows = (0..20).map(|i| Instance::from_numbers(&[(i % 2) as f64])).collect();
    let labels = (0..20).map(|i| (i / 10) as usize).collect();
    let d = Dataset::new(Arc::new(s), rows, Some(labels)).unwrap();
    let m = train(&d, &GbmConfig { n_trees: 0, ..Default::default() }).unwrap();
    assert_eq!(m.predict_proba(&Instance::from_numbers(&[0.0])).unwrap(), vec![0.5, 0.5]);
}

#[test]
fn single_stump_matches_hand_computation() {
    // one binary feature, 10 rows: x=1 has 4/5 positives, x=0 has 1/5
    let s = FeatureSchema::<f64>::new(vec![FeatureSpec::binary01("x")]).unwrap();
    let xs = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
    let ys = [1, 1, 1, 1, 0, 1, 0, 0, 0, 0];
    let rows = xs.iter().map(|&x| Instance::from_numbers(&[x as f64])).collect();
    let d = Dataset::new(Arc::new(s), rows, Some(ys.to_vec())).unwrap();
    let cfg = GbmConfig { n_trees: 1, max_depth: 1, min_samples_leaf: 1, learning_rate: 0.5, l2_leaf_penalty: 2.0, ..Default::default() };
    let m = train(&d, &cfg).unwrap();

    let base = logit(0.5f64);
    assert_eq!(m.base_score, base);
    // at p = 0.5: g = y - 0.5, h = 0.25
    let leaf = |pos: f64, n: f64| 0.5 * (pos - 0.5 * n) / (0.25 * n + 2.0);
    let (v1, v0) = (leaf(4.0, 5.0), leaf(1.0, 5.0));
    let gain = 0.5 * ((1.5f64).powi(2) / 3.25 + (-1.5f64).powi(2) / 3.25 - 0.0);
    match &m.trees[0].nodes[0] {
        Node::Split { gain: g, .. } => assert!((g - gain).abs() < 1e-12, "{g} vs {gain}"),
        other => panic!("expected a split, got {other:?}"),
    }
    let p1 = m.predict_proba(&Instance::from_numbers(&[1.0])).unwrap()[1];
    let p0 = m.predict_proba(&Instance::from_numbers(&[0.0])).unwrap()[1];
    assert!((p1 - sigmoid(base + v1)).abs() < 1e-12);
    assert!((p0 - sigmoid(base + v0)).abs() < 1e-12);
}

#[test]
fn deterministic_training() {
    let d = common::separable(300, 4);
    let cfg = GbmConfig { n_trees: 30, subsample: 0.8, seed: 9, ..Default::default() };
    assert_eq!(train(&d, &cfg).unwrap(), train(&d, &cfg).unwrap());
}

#[test]
fn training_loss_never_increases() {
    let d = common::separable(300, 5);
    let m = train(&d, &GbmConfig { n_trees: 40, ..Default::default() }).unwrap();
    let mut prev = f64::INFINITY;
    for t in 0..=40 {
        let l = m.truncated(t).log_loss(&d).unwrap();
        assert!(l <= prev + 1e-12, "loss rose at tree {t}: {prev} -> {l}");
        prev = l;
    }
}

#[test]
fn huge_penalty_stays_at_prior() {
    let d = common::separable(200, 6);
    let m = train(&d, &GbmConfig { n_trees: 50, l2_leaf_penalty: 1e6, ..Default::default() }).unwrap();
    let rate = sigmoid(m.base_score);
    for x in d.rows() {
        assert!((m.predict_proba(x).unwrap()[1] - rate).abs() < 1e-3);
    }
}

#[test]
fn separable_data_is_learned() {
    let d = common::separable(500, 7);
    assert!(held_out_auroc(&d, &GbmConfig::default(), 7) >= 0.95);
}

#[test]
fn permuted_labels_are_near_chance() {
    let d = common::permuted_labels(&common::separable(500, 8), 8);
    let a = held_out_auroc(&d, &GbmConfig::default(), 8);
    assert!((0.40..=0.60).contains(&a), "auroc {a}");
}

#[test]
fn planted_feature_dominates_importance() {
    let d = common::planted_binary(1000, 6, 10);
    let m = train(&d, &GbmConfig::default()).unwrap();
    let imp = m.feature_importance();
    assert!(imp[0].importance >= 0.9, "{imp:?}");
    let total: f64 = imp.iter().map(|i| i.importance).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn json_round_trip_is_bit_exact() {
    let d = common::separable(200, 11);
    let m = train(&d, &GbmConfig { n_trees: 20, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    m.to_json_writer(&mut buf).unwrap();
    let back = GbmModel::<f64>::from_json_reader(&buf[..]).unwrap();
    assert_eq!(back, m);
    for x in d.rows() {
        assert_eq!(back.raw_score(x).unwrap().to_bits(), m.raw_score(x).unwrap().to_bits());
    }
    let mut again = Vec::new();
    back.to_json_writer(&mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn bad_model_files_rejected() {
    let d = common::separable(100, 12);
    let m = train(&d, &GbmConfig { n_trees: 2, ..Default::default() }).unwrap();
    let mut v = serde_json::to_value(&m).unwrap();
    v["version"] = 99.into();
    assert!(matches!(GbmModel::<f64>::from_json_str(&v.to_string()), Err(Error::UnsupportedVersion(99))));
    let mut v = serde_json::to_value(&m).unwrap();
    v["feature_names"] = serde_json::json!(["only"]);
    assert!(GbmModel::<f64>::from_json_str(&v.to_string()).is_err());
}

#[test]
fn wrong_width_instance_errors() {
    let d = common::separable(100, 13);
    let m = train(&d, &GbmConfig { n_trees: 2, ..Default::default() }).unwrap();
    assert!(matches!(m.predict_proba(&Instance::from_numbers(&[0.1])), Err(Error::SchemaMismatch(_))));
    assert!(m.check_schema(d.schema()).is_ok());
    let other = FeatureSchema::new(vec![FeatureSpec::binary01("z")]).unwrap();
    assert!(m.check_schema(&other).is_err());
}

#[test]
fn single_class_labels_rejected() {
    let d = common::separable(50, 14);
    let d = d.with_labels(vec![0; 50]).unwrap();
    assert!(matches!(train(&d, &GbmConfig::default()), Err(Error::DegenerateLabels(_))));
}

#[test]
fn cv_folds_partition_rows() {
    let d = common::separable(500, 15);
    let labels = d.labels().unwrap();
    let a = stratified_folds(labels, 5, 15).unwrap();
    let mut sizes = [0usize; 5];
    for &f in &a {
        sizes[f] += 1;
    }
    assert_eq!(sizes.iter().sum::<usize>(), 500);
    assert!(sizes.iter().all(|&s| s == 100));
    let r = cross_validate(&d, &GbmConfig { n_trees: 50, ..Default::default() }, 5).unwrap();
    assert_eq!(r.fold_auroc.len(), 5);
    assert!(r.mean_auroc > 0.9);
}

#[test]
fn f32_model_trains() {
    let d = common::separable(200, 16);
    let rows: Vec<Instance<f32>> = d
        .rows()
        .iter()
        .map(|r| {
            Instance::new(
                r.values()
                    .iter()
                    .map(|c| match c {
                        recourse_core::tabular::Cell::Num(v) => recourse_core::tabular::Cell::Num(*v as f32),
                        recourse_core::tabular::Cell::Cat(s) => recourse_core::tabular::Cell::Cat(s.clone()),
                    })
                    .collect(),
            )
        })
        .collect();
    let s32 = FeatureSchema::<f32>::new(vec![
        FeatureSpec::numeric("x0", 0.0, 1.0),
        FeatureSpec::numeric("x1", 0.0, 1.0),
        FeatureSpec::categorical("site", &["a", "b", "c"]),
        FeatureSpec::binary01("flag"),
    ])
    .unwrap();
    let d32 = Dataset::new(Arc::new(s32), rows, d.labels().map(<[usize]>::to_vec)).unwrap();
    let m = train(&d32, &GbmConfig { n_trees: 50, ..Default::default() }).unwrap();
    let s = m.class_probabilities(d32.rows(), 1).unwrap();
    assert!(auroc(&s, d32.labels().unwrap()).unwrap() > 0.95);
}

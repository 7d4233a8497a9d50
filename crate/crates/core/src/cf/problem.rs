//! Query, candidate scoring and post-hoc validation shared by all stages.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::Predictor;
use crate::scalar::Scalar;
use crate::tabular::{Cell, FeatureSchema, Gower, Instance};

/// Tolerance for numeric fixed-feature comparisons.
pub const FIXED_EPSILON: f64 = 1e-8;

pub const DEFAULT_M_MAX: usize = 16;

/// A single-instance counterfactual request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CfQuery<T> {
    pub x0: Instance<T>,
    pub target_class: usize,
    pub p_min: T,
    pub p_max: T,
    /// Feature indices that must keep their value.
    pub fixed: BTreeSet<usize>,
    pub k: usize,
    /// Weight on the number of changed features.
    pub alpha: T,
    /// Weight on the probability shift.
    pub beta: T,
    pub m_max: usize,
    pub seed: u64,
}

impl<T: Scalar> CfQuery<T> {
    /// Query with `k = 3`, `alpha = beta = 1`, `m_max = 16`, seed 0 and no
    /// fixed features.
    pub fn new(x0: Instance<T>, target_class: usize, p_min: f64, p_max: f64) -> Self {
        Self {
            x0,
            target_class,
            p_min: T::of(p_min),
            p_max: T::of(p_max),
            fixed: BTreeSet::new(),
            k: 3,
            alpha: T::one(),
            beta: T::one(),
            m_max: DEFAULT_M_MAX,
            seed: 0,
        }
    }

    pub fn with_fixed(mut self, fixed: impl IntoIterator<Item = usize>) -> Self {
        self.fixed = fixed.into_iter().collect();
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_weights(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = T::of(alpha);
        self.beta = T::of(beta);
        self
    }

    pub fn with_m_max(mut self, m_max: usize) -> Self {
        self.m_max = m_max;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn in_band(&self, p: T) -> bool {
        self.p_min <= p && p <= self.p_max
    }

    /// Distance of `p` from the target band; zero inside it.
    pub fn prob_gap(&self, p: T) -> T {
        (self.p_min - p).max(p - self.p_max).max(T::zero())
    }

    /// Structural checks against a schema and class count.
    pub fn validate(&self, schema: &FeatureSchema<T>, n_classes: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidQuery(m));
        if !(T::zero() <= self.p_min && self.p_min < self.p_max && self.p_max <= T::one()) {
            return bad(format!(
                "probability band must satisfy 0 <= p_min < p_max <= 1, got [{}, {}]",
                self.p_min, self.p_max
            ));
        }
        if self.target_class >= n_classes {
            return bad(format!("target class {} out of range", self.target_class));
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if !(self.alpha > T::zero()) || !(self.beta > T::zero()) {
            return bad("alpha and beta must be positive".into());
        }
        if let Some(j) = self.fixed.iter().find(|&&j| j >= schema.len()) {
            return bad(format!("fixed feature index {j} out of range"));
        }
        schema.check_instance(&self.x0)
    }

    /// The query's fixed set plus features the schema marks immutable.
    pub fn effective_fixed(&self, schema: &FeatureSchema<T>) -> BTreeSet<usize> {
        self.fixed.iter().copied().chain(schema.immutable()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Enumeration,
    Nice,
    Moc,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Enumeration => "enumeration",
            Stage::Nice => "nice",
            Stage::Moc => "moc",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Change<T> {
    pub feature: String,
    pub index: usize,
    pub from: Cell<T>,
    pub to: Cell<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Counterfactual<T> {
    pub stage: Stage,
    pub score: T,
    pub p_origin: T,
    pub p_target: T,
    pub distance: T,
    pub changed: Vec<usize>,
    pub changes: Vec<Change<T>>,
    pub x_prime: Instance<T>,
}

/// Export record: `{stage, score, p_origin, p_target, changes:[{feature, from, to}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CounterfactualExport<T> {
    pub stage: Stage,
    pub score: T,
    pub p_origin: T,
    pub p_target: T,
    pub changes: Vec<ExportChange<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ExportChange<T> {
    pub feature: String,
    pub from: Cell<T>,
    pub to: Cell<T>,
}

impl<T: Scalar> Counterfactual<T> {
    pub fn export(&self) -> CounterfactualExport<T> {
        CounterfactualExport {
            stage: self.stage,
            score: self.score,
            p_origin: self.p_origin,
            p_target: self.p_target,
            changes: self
                .changes
                .iter()
                .map(|c| ExportChange {
                    feature: c.feature.clone(),
                    from: c.from.clone(),
                    to: c.to.clone(),
                })
                .collect(),
        }
    }
}

/// `alpha * n_changed - beta * |p - p0|`; lower is better.
pub fn score_value<T: Scalar>(n_changed: usize, p: T, p0: T, alpha: T, beta: T) -> T {
    alpha * T::of(n_changed as f64) - beta * (p - p0).abs()
}

/// Composite score of `candidate` for `query` under predictor `f`.
pub fn score<T: Scalar, P: Predictor<T> + ?Sized>(
    candidate: &Instance<T>,
    query: &CfQuery<T>,
    f: &P,
) -> Result<T> {
    let probs = f.class_probabilities(&[candidate.clone(), query.x0.clone()], query.target_class)?;
    let changed = candidate.diff(&query.x0, T::zero()).len();
    Ok(score_value(changed, probs[0], probs[1], query.alpha, query.beta))
}

/// Deterministic ranking: score, then fewer changes, then smaller Gower
/// distance, then the lexicographically smaller changed-feature list.
pub fn rank_cmp<T: Scalar>(a: &Counterfactual<T>, b: &Counterfactual<T>) -> Ordering {
    a.score
        .total_cmp_nan_last(&b.score)
        .then(a.changed.len().cmp(&b.changed.len()))
        .then(a.distance.total_cmp_nan_last(&b.distance))
        .then_with(|| a.changed.cmp(&b.changed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum Violation<T> {
    /// A feature in the query's fixed set moved beyond tolerance.
    FixedFeatureModified { feature: usize },
    ProbabilityOutOfBand { p: T },
    /// A feature outside the actionable set changed.
    NonActionableChanged { feature: usize },
    SchemaMismatch { message: String },
}

impl<T: Scalar> fmt::Display for Violation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FixedFeatureModified { feature } => {
                write!(f, "fixed feature modified: {feature}")
            }
            Violation::ProbabilityOutOfBand { p } => {
                write!(f, "target probability {p} outside the band")
            }
            Violation::NonActionableChanged { feature } => {
                write!(f, "non-actionable feature changed: {feature}")
            }
            Violation::SchemaMismatch { message } => write!(f, "schema mismatch: {message}"),
        }
    }
}

/// Post-hoc checks on a candidate: fixed features within `epsilon` (numbers)
/// or identical (tokens); target probability inside the closed band; no
/// change outside the actionable set. Returns every violation found.
pub fn validate<T: Scalar, P: Predictor<T> + ?Sized>(
    candidate: &Instance<T>,
    query: &CfQuery<T>,
    f: &P,
    schema: &FeatureSchema<T>,
    epsilon: T,
) -> Result<Vec<Violation<T>>> {
    let mut out = Vec::new();
    if let Err(e) = schema.check_instance(candidate) {
        out.push(Violation::SchemaMismatch {
            message: e.to_string(),
        });
        return Ok(out);
    }
    let changed = candidate.diff(&query.x0, epsilon);
    for &j in &changed {
        if query.fixed.contains(&j) {
            out.push(Violation::FixedFeatureModified { feature: j });
        }
    }
    let p = f.class_probability(candidate, query.target_class)?;
    if !query.in_band(p) {
        out.push(Violation::ProbabilityOutOfBand { p });
    }
    for &j in &changed {
        if !query.fixed.contains(&j) && !schema.feature(j).actionable {
            out.push(Violation::NonActionableChanged { feature: j });
        }
    }
    Ok(out)
}

/// Hashable identity of an instance's values; `-0.0` and `0.0` coincide.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum CellKey {
    Num(u64),
    Cat(Arc<str>),
}

pub(crate) fn instance_key<T: Scalar>(x: &Instance<T>) -> Vec<CellKey> {
    x.values()
        .iter()
        .map(|c| match c {
            Cell::Num(v) => {
                let v = v.as_f64();
                CellKey::Num(if v == 0.0 { 0 } else { v.to_bits() })
            }
            Cell::Cat(s) => CellKey::Cat(Arc::clone(s)),
        })
        .collect()
}

/// Keeps the first occurrence of each distinct instance.
pub(crate) fn dedup_by_instance<T: Scalar, I>(items: Vec<I>, key: impl Fn(&I) -> &Instance<T>) -> Vec<I> {
    let mut seen = HashSet::new();
    items
        .into_iter()
        .filter(|it| seen.insert(instance_key(key(it))))
        .collect()
}

/// Everything a search stage needs, validated once.
pub struct SearchContext<'a, T: Scalar, P: ?Sized> {
    pub query: &'a CfQuery<T>,
    pub predictor: &'a P,
    pub schema: &'a FeatureSchema<T>,
    pub gower: Gower<T>,
    /// Query-fixed plus schema-immutable features.
    pub fixed: BTreeSet<usize>,
    /// `f_{y*}(x0)`.
    pub p_origin: T,
    pub epsilon: T,
}

impl<'a, T: Scalar, P: Predictor<T> + ?Sized> SearchContext<'a, T, P> {
    pub fn new(query: &'a CfQuery<T>, predictor: &'a P, schema: &'a FeatureSchema<T>) -> Result<Self> {
        query.validate(schema, predictor.n_classes())?;
        let p_origin = predictor.class_probability(&query.x0, query.target_class)?;
        Ok(Self {
            query,
            predictor,
            schema,
            gower: Gower::new(schema),
            fixed: query.effective_fixed(schema),
            p_origin,
            epsilon: T::of(FIXED_EPSILON),
        })
    }

    /// Indices of features that may change.
    pub fn actionable(&self) -> Vec<usize> {
        (0..self.schema.len()).filter(|j| !self.fixed.contains(j)).collect()
    }

    /// Builds a scored counterfactual from a candidate and its target probability.
    pub fn counterfactual(&self, x_prime: Instance<T>, p_target: T, stage: Stage) -> Result<Counterfactual<T>> {
        let changed = x_prime.diff(&self.query.x0, self.epsilon);
        let changes = changed
            .iter()
            .map(|&j| Change {
                feature: self.schema.feature(j).name.clone(),
                index: j,
                from: self.query.x0.get(j).clone(),
                to: x_prime.get(j).clone(),
            })
            .collect();
        Ok(Counterfactual {
            stage,
            score: score_value(changed.len(), p_target, self.p_origin, self.query.alpha, self.query.beta),
            p_origin: self.p_origin,
            p_target,
            distance: self.gower.distance(&self.query.x0, &x_prime)?,
            changed,
            changes,
            x_prime,
        })
    }

    /// Whether a counterfactual passes every post-hoc check.
    pub fn is_valid(&self, cf: &Counterfactual<T>) -> Result<bool> {
        Ok(self.fixed.iter().all(|j| !cf.changed.contains(j))
            && validate(&cf.x_prime, self.query, self.predictor, self.schema, self.epsilon)?.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::FnPredictor;
    use crate::tabular::FeatureSpec;

    fn schema() -> FeatureSchema<f64> {
        FeatureSchema::new(vec![
            FeatureSpec::numeric("age", 0.0, 100.0),
            FeatureSpec::binary01("htn"),
            FeatureSpec::binary01("ckd"),
            FeatureSpec::numeric("lab", 0.0, 10.0).fixed(),
        ])
        .unwrap()
    }

    // risk = 0.1 + 0.5 htn + 0.3 ckd
    fn model() -> FnPredictor<impl Fn(&Instance<f64>) -> f64 + Sync> {
        FnPredictor::new(|x: &Instance<f64>| {
            0.1 + 0.5 * x.get(1).as_num().unwrap() + 0.3 * x.get(2).as_num().unwrap()
        })
    }

    fn x0() -> Instance<f64> {
        Instance::from_numbers(&[70.0, 1.0, 1.0, 5.0])
    }

    #[test]
    fn score_of_x0_is_zero() {
        let q = CfQuery::new(x0(), 1, 0.0, 0.4);
        assert_eq!(score(&x0(), &q, &model()).unwrap(), 0.0);
    }

    #[test]
    fn score_formula() {
        assert!((score_value(2, 0.2, 0.77, 1.0, 1.0) - 1.43f64).abs() < 1e-12);
        assert_eq!(score_value(3, 0.1, 0.9, 2.0, 0.0f64), 6.0);
        let q = CfQuery::new(x0(), 1, 0.0, 0.4);
        let c = Instance::from_numbers(&[70.0, 0.0, 0.0, 5.0]);
        // |S| = 2, p drops from 0.9 to 0.1
        assert!((score(&c, &q, &model()).unwrap() - (2.0 - 0.8)).abs() < 1e-12);
    }

    #[test]
    fn score_monotone_in_sparsity_and_shift() {
        for n in 0..5 {
            assert!(score_value(n + 1, 0.3, 0.8, 0.5, 1.0f64) > score_value(n, 0.3, 0.8, 0.5, 1.0));
        }
        assert!(score_value(2, 0.1, 0.8, 1.0, 1.0f64) < score_value(2, 0.3, 0.8, 1.0, 1.0));
    }

    #[test]
    fn fixed_drift_tolerance() {
        let s = schema();
        let q = CfQuery::new(x0(), 1, 0.0, 0.95).with_fixed([0]);
        let eps = FIXED_EPSILON;
        let mut c = x0();
        c.set(0, Cell::Num(70.0 + 1e-9));
        assert!(validate(&c, &q, &model(), &s, eps).unwrap().is_empty());
        c.set(0, Cell::Num(70.0 + 1e-6));
        let v = validate(&c, &q, &model(), &s, eps).unwrap();
        assert_eq!(v, vec![Violation::FixedFeatureModified { feature: 0 }]);
        assert_eq!(v[0].to_string(), "fixed feature modified: 0");
    }

    #[test]
    fn band_is_closed() {
        let s = schema();
        let p0 = model().class_probability(&x0(), 1).unwrap();
        let q = CfQuery::new(x0(), 1, p0, 1.0);
        assert!(validate(&x0(), &q, &model(), &s, FIXED_EPSILON).unwrap().is_empty());
        let q = CfQuery::new(x0(), 1, 0.5, p0);
        assert!(validate(&x0(), &q, &model(), &s, FIXED_EPSILON).unwrap().is_empty());
    }

    #[test]
    fn x0_only_fails_band() {
        let s = schema();
        let q = CfQuery::new(x0(), 1, 0.0, 0.4).with_fixed([0, 1]);
        let v = validate(&x0(), &q, &model(), &s, FIXED_EPSILON).unwrap();
        assert!(matches!(v.as_slice(), [Violation::ProbabilityOutOfBand { .. }]));
    }

    #[test]
    fn schema_immutable_feature_is_not_actionable() {
        let s = schema();
        let q = CfQuery::new(x0(), 1, 0.0, 1.0);
        let mut c = x0();
        c.set(3, Cell::Num(6.0));
        let v = validate(&c, &q, &model(), &s, FIXED_EPSILON).unwrap();
        assert_eq!(v, vec![Violation::NonActionableChanged { feature: 3 }]);
        assert_eq!(q.effective_fixed(&s), BTreeSet::from([3]));
    }

    #[test]
    fn query_validation() {
        let s = schema();
        let ok = CfQuery::new(x0(), 1, 0.0, 0.4);
        assert!(ok.validate(&s, 2).is_ok());
        assert!(CfQuery::new(x0(), 1, 0.6, 0.2).validate(&s, 2).is_err());
        assert!(CfQuery::new(x0(), 1, 0.4, 0.4).validate(&s, 2).is_err());
        assert!(CfQuery::new(x0(), 1, -0.1, 0.4).validate(&s, 2).is_err());
        assert!(CfQuery::new(x0(), 2, 0.0, 0.4).validate(&s, 2).is_err());
        assert!(ok.clone().with_k(0).validate(&s, 2).is_err());
        assert!(ok.clone().with_fixed([9]).validate(&s, 2).is_err());
        assert!(ok.clone().with_weights(1.0, 0.0).validate(&s, 2).is_err());
    }

    #[test]
    fn prob_gap_zero_inside() {
        let q = CfQuery::<f64>::new(x0(), 1, 0.2, 0.4);
        assert_eq!(q.prob_gap(0.3), 0.0);
        assert!((q.prob_gap(0.1) - 0.1).abs() < 1e-12);
        assert!((q.prob_gap(0.7) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn dedup_keeps_first() {
        let a = Instance::<f64>::from_numbers(&[0.0, 1.0]);
        let b = Instance::<f64>::from_numbers(&[-0.0, 1.0]);
        let c = Instance::<f64>::from_numbers(&[1.0, 1.0]);
        let out = dedup_by_instance(vec![(0, a), (1, b), (2, c)], |(_, x)| x);
        assert_eq!(out.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![0, 2]);
    }
}

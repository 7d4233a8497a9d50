//! Stage orchestration: exhaustive enumeration when the binary actionable
//! set is small, otherwise (or on failure) nearest real instances, and
//! finally multi-objective search.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::enumerate::{enumerate, MAX_ENUMERABLE};
use super::moc::{moc_search, GenerationStats, MocConfig};
use super::nice::nice_search;
use super::problem::{CfQuery, Counterfactual, SearchContext, Stage, FIXED_EPSILON};
use crate::error::Result;
use crate::predictor::Predictor;
use crate::scalar::Scalar;
use crate::tabular::{binary_features, Dataset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageUsed {
    Enumeration,
    Nice,
    Moc,
    None,
}

impl From<Stage> for StageUsed {
    fn from(s: Stage) -> Self {
        match s {
            Stage::Enumeration => StageUsed::Enumeration,
            Stage::Nice => StageUsed::Nice,
            Stage::Moc => StageUsed::Moc,
        }
    }
}

impl std::fmt::Display for StageUsed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StageUsed::Enumeration => "enumeration",
            StageUsed::Nice => "nice",
            StageUsed::Moc => "moc",
            StageUsed::None => "none",
        })
    }
}

/// Whether enumeration is attempted for `m` binary actionable features.
pub fn enumeration_gate(m: usize, m_max: usize) -> bool {
    m > 0 && m <= m_max && m <= MAX_ENUMERABLE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridOptions {
    pub moc: MocConfig,
    /// Wall-clock budget applied to each stage separately.
    pub stage_budget: Option<Duration>,
    /// Tolerance for numeric equality in change detection and validation.
    pub epsilon: f64,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self {
            moc: MocConfig::default(),
            stage_budget: None,
            epsilon: FIXED_EPSILON,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub enumeration: Option<f64>,
    pub nice: Option<f64>,
    pub moc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    /// Candidates passed to the model.
    pub evaluated: u64,
    /// Valid counterfactuals returned by the stage.
    pub found: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HybridReport<T> {
    pub stage_used: StageUsed,
    /// Number of binary actionable features.
    pub m: usize,
    pub enumeration_attempted: bool,
    /// Total candidates evaluated across every stage that ran.
    pub candidates_evaluated: u64,
    pub p_origin: T,
    pub counterfactuals: Vec<Counterfactual<T>>,
    pub stages: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moc_trace: Vec<GenerationStats<T>>,
    /// Wall-clock time per stage; callers that need reproducible output
    /// may clear it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<StageTimings>,
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs the staged search for one query against `dataset` (the reference
/// data defining binary features and the instance pool).
///
/// Returns at the first stage producing at least one valid counterfactual;
/// `stage_used` is `None` when all of them come back empty.
pub fn generate<T: Scalar, P: Predictor<T> + ?Sized>(
    query: &CfQuery<T>,
    predictor: &P,
    dataset: &Dataset<T>,
    options: &HybridOptions,
) -> Result<HybridReport<T>> {
    let schema = dataset.schema();
    let mut ctx = SearchContext::new(query, predictor, schema)?;
    ctx.epsilon = T::of(options.epsilon);

    let probs = predictor.predict_proba(&query.x0)?;
    let argmax = (0..probs.len())
        .max_by(|&a, &b| probs[a].total_cmp_nan_last(&probs[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    if argmax == query.target_class {
        log::warn!("target class {} is already the predicted class of x0", query.target_class);
    }

    let binary: Vec<_> = binary_features(dataset)?
        .into_iter()
        .filter(|b| !ctx.fixed.contains(&b.index) && b.other(query.x0.get(b.index)).is_some())
        .collect();
    let m = binary.len();
    let deadline = || options.stage_budget.map(|b| Instant::now() + b);

    let mut report = HybridReport {
        stage_used: StageUsed::None,
        m,
        enumeration_attempted: false,
        candidates_evaluated: 0,
        p_origin: ctx.p_origin,
        counterfactuals: Vec::new(),
        stages: Vec::new(),
        moc_trace: Vec::new(),
        timings_ms: Some(StageTimings::default()),
    };
    let finish = |mut report: HybridReport<T>, stage: Stage, cfs: Vec<Counterfactual<T>>| -> Result<_> {
        let mut kept = Vec::with_capacity(cfs.len());
        for cf in cfs {
            if ctx.is_valid(&cf)? {
                kept.push(cf);
            }
        }
        if kept.is_empty() {
            return Ok((report, false));
        }
        report.stage_used = stage.into();
        report.counterfactuals = kept;
        Ok((report, true))
    };

    if enumeration_gate(m, query.m_max) {
        report.enumeration_attempted = true;
        let t = Instant::now();
        let r = enumerate(&ctx, &binary, deadline())?;
        report.timings_ms.get_or_insert_default().enumeration = Some(elapsed_ms(t));
        report.candidates_evaluated += r.candidates_evaluated;
        report.stages.push(StageRecord {
            stage: Stage::Enumeration,
            evaluated: r.candidates_evaluated,
            found: r.valid.len(),
        });
        let (rep, done) = finish(report, Stage::Enumeration, r.valid)?;
        report = rep;
        if done {
            return Ok(report);
        }
    }

    let t = Instant::now();
    let r = nice_search(&ctx, dataset)?;
    report.timings_ms.get_or_insert_default().nice = Some(elapsed_ms(t));
    report.candidates_evaluated += r.pool_size as u64;
    report.stages.push(StageRecord {
        stage: Stage::Nice,
        evaluated: r.pool_size as u64,
        found: r.counterfactuals.len(),
    });
    let (rep, done) = finish(report, Stage::Nice, r.counterfactuals)?;
    report = rep;
    if done {
        return Ok(report);
    }

    if ctx.actionable().is_empty() {
        log::warn!("no actionable features; skipping multi-objective search");
        return Ok(report);
    }
    let t = Instant::now();
    let cfg = MocConfig {
        seed: query.seed,
        ..options.moc.clone()
    };
    let r = moc_search(&ctx, &cfg, deadline())?;
    report.timings_ms.get_or_insert_default().moc = Some(elapsed_ms(t));
    report.candidates_evaluated += r.evaluations;
    report.stages.push(StageRecord {
        stage: Stage::Moc,
        evaluated: r.evaluations,
        found: r.counterfactuals.len(),
    });
    report.moc_trace = r.trace;
    let (rep, _) = finish(report, Stage::Moc, r.counterfactuals)?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::predictor::FnPredictor;
    use crate::tabular::{FeatureSchema, FeatureSpec, Instance};

    #[test]
    fn gate_table() {
        for m in 0..=25 {
            assert_eq!(enumeration_gate(m, 16), (1..=16).contains(&m), "m={m}");
            assert_eq!(enumeration_gate(m, 30), (1..=20).contains(&m), "m={m}");
        }
    }

    fn data(n_bin: usize, rows: usize) -> Dataset<f64> {
        let mut feats: Vec<FeatureSpec<f64>> = (0..n_bin).map(|j| FeatureSpec::binary01(&format!("b{j}"))).collect();
        feats.push(FeatureSpec::numeric("lab", 0.0, 10.0));
        let s = FeatureSchema::new(feats).unwrap();
        let rows = (0..rows)
            .map(|i| {
                let mut v: Vec<f64> = (0..n_bin).map(|j| ((i >> (j % 8)) & 1) as f64).collect();
                v.push((i % 11) as f64 * 10.0 / 10.0);
                Instance::from_numbers(&v)
            })
            .collect();
        Dataset::new(Arc::new(s), rows, None).unwrap()
    }

    #[test]
    fn enumeration_stage_when_small() {
        let d = data(3, 64);
        let f = FnPredictor::new(|x: &Instance<f64>| 0.2 + 0.6 * x.get(0).as_num().unwrap());
        let q = CfQuery::new(Instance::from_numbers(&[1.0, 0.0, 0.0, 5.0]), 1, 0.0, 0.5);
        let r = generate(&q, &f, &d, &HybridOptions::default()).unwrap();
        assert_eq!(r.stage_used, StageUsed::Enumeration);
        assert_eq!(r.m, 3);
        assert_eq!(r.candidates_evaluated, 7);
        assert_eq!(r.counterfactuals[0].changed, vec![0]);
    }

    #[test]
    fn falls_back_to_nice_above_m_max() {
        let d = data(3, 64);
        let f = FnPredictor::new(|x: &Instance<f64>| 0.2 + 0.6 * x.get(0).as_num().unwrap());
        let q = CfQuery::new(Instance::from_numbers(&[1.0, 0.0, 0.0, 5.0]), 1, 0.0, 0.5).with_m_max(2);
        let r = generate(&q, &f, &d, &HybridOptions::default()).unwrap();
        assert!(!r.enumeration_attempted);
        assert_eq!(r.stage_used, StageUsed::Nice);
    }

    #[test]
    fn none_when_unreachable() {
        let d = data(2, 16);
        let f = FnPredictor::new(|_: &Instance<f64>| 0.9);
        let q = CfQuery::new(Instance::from_numbers(&[1.0, 0.0, 5.0]), 1, 0.0, 0.5);
        let opts = HybridOptions {
            moc: MocConfig { generations: 3, ..Default::default() },
            ..Default::default()
        };
        let r = generate(&q, &f, &d, &opts).unwrap();
        assert_eq!(r.stage_used, StageUsed::None);
        assert!(r.counterfactuals.is_empty());
        assert_eq!(r.stages.len(), 3);
    }

    #[test]
    fn fixed_binary_excluded_from_m() {
        let d = data(4, 64);
        let f = FnPredictor::new(|x: &Instance<f64>| 0.2 + 0.6 * x.get(0).as_num().unwrap());
        let q = CfQuery::new(Instance::from_numbers(&[1.0, 0.0, 0.0, 0.0, 5.0]), 1, 0.0, 0.5).with_fixed([2, 3]);
        let r = generate(&q, &f, &d, &HybridOptions::default()).unwrap();
        assert_eq!(r.m, 2);
        assert!(r.counterfactuals.iter().all(|c| !c.changed.contains(&2) && !c.changed.contains(&3)));
    }
}

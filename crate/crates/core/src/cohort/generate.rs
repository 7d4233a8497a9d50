use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::featurize::{DIAGNOSES, LABS, MEDICATIONS};
use super::timeline::{Event, EventTimeline, Sex, Static};
use crate::error::{Error, Result};
use crate::scalar::sigmoid;

pub const AGE_MEAN: f64 = 70.1;
pub const AGE_SD: f64 = 13.9;
pub const FEMALE_FRACTION: f64 = 0.464;
pub const ECI_MEAN: f64 = 6.19;
pub const ECI_SD: f64 = 2.98;
pub const DEFAULT_N: usize = 2744;
/// Index dates span 2020-03-06 through 2022-06-06.
pub const INDEX_DATE_RANGE: (i32, i32) = (18327, 19150);

/// Generator settings. `coefficients` holds the planted log-odds effect of
/// pre-index presence for each event code, plus `age` and `eci` effects
/// per standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    pub n: usize,
    pub intercept: f64,
    pub coefficients: BTreeMap<String, f64>,
    /// Standard deviation of Gaussian noise added to the log-odds.
    pub noise: f64,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_N,
            intercept: -4.5,
            coefficients: [
                ("HTN", 3.0),
                ("CKD", 1.0),
                ("DM", 0.8),
                ("CAD", 0.6),
                ("HFpEF", 1.2),
                ("loop-diuretic", 0.5),
                ("age", 0.3),
                ("eci", 0.3),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            noise: 0.5,
            seed: 0,
        }
    }
}

impl CohortConfig {
    /// Same settings with every planted effect and the noise set to zero.
    pub fn null(n: usize, intercept: f64, seed: u64) -> Self {
        Self {
            n,
            intercept,
            coefficients: BTreeMap::new(),
            noise: 0.0,
            seed,
        }
    }

    fn coef(&self, key: &str) -> f64 {
        self.coefficients.get(key).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub timelines: Vec<EventTimeline>,
    pub labels: Vec<usize>,
    /// Pre-index presence of each code, as used by the label model.
    pub flags: Vec<BTreeMap<String, bool>>,
}

// pre-index prevalence per code
const PREVALENCE: [(&str, f64); 9] = [
    ("HTN", 0.40),
    ("CKD", 0.20),
    ("DM", 0.28),
    ("CAD", 0.22),
    ("HFpEF", 0.06),
    ("loop-diuretic", 0.18),
    ("ACE-inhibitor", 0.30),
    ("creatinine", 0.70),
    ("A1c", 0.45),
];

fn prevalence(code: &str) -> f64 {
    PREVALENCE.iter().find(|(c, _)| *c == code).map_or(0.0, |(_, p)| *p)
}

fn one_patient(i: usize, cfg: &CohortConfig, rng: &mut ChaCha8Rng) -> (EventTimeline, BTreeMap<String, bool>, usize) {
    let age_d = Normal::new(AGE_MEAN, AGE_SD).expect("valid normal");
    let eci_d = Normal::new(ECI_MEAN, ECI_SD).expect("valid normal");
    let unit = Normal::new(0.0, 1.0).expect("valid normal");

    let age = age_d.sample(rng).clamp(18.0, 105.0);
    let age = (age * 10.0).round() / 10.0;
    let sex = if rng.random_bool(FEMALE_FRACTION) { Sex::F } else { Sex::M };
    let eci = eci_d.sample(rng).round().max(0.0) as u32;
    let index_date = rng.random_range(INDEX_DATE_RANGE.0..=INDEX_DATE_RANGE.1);

    let mut flags = BTreeMap::new();
    let mut events = Vec::new();
    for code in DIAGNOSES.iter().chain(MEDICATIONS.iter()) {
        let present = rng.random_bool(prevalence(code));
        flags.insert(code.to_string(), present);
        if present {
            let n = rng.random_range(1..=4);
            for _ in 0..n {
                events.push(Event { offset: rng.random_range(-365..0), code: code.to_string(), value: None });
            }
        }
    }
    let ckd = flags["CKD"];
    let dm = flags["DM"];
    for code in LABS {
        let p = match code {
            "A1c" if dm => 0.9,
            _ => prevalence(code),
        };
        let present = rng.random_bool(p);
        flags.insert(code.to_string(), present);
        let draw = |rng: &mut ChaCha8Rng| -> f64 {
            let v: f64 = match code {
                "creatinine" => 0.95 + if ckd { 0.9 } else { 0.0 } + 0.2 * unit.sample(rng),
                _ => 5.6 + if dm { 1.6 } else { 0.0 } + 0.4 * unit.sample(rng),
            };
            (v.max(0.3) * 100.0).round() / 100.0
        };
        if present {
            for _ in 0..rng.random_range(1..=3) {
                let v = draw(rng);
                events.push(Event { offset: rng.random_range(-365..0), code: code.to_string(), value: Some(v) });
            }
        }
        // follow-up labs after infection
        if code == "creatinine" && rng.random_bool(0.3) {
            let v = draw(rng);
            events.push(Event { offset: rng.random_range(0..180), code: code.to_string(), value: Some(v) });
        }
    }
    events.sort_by_key(|e| e.offset);

    let mut z = cfg.intercept
        + cfg.coef("age") * (age - AGE_MEAN) / AGE_SD
        + cfg.coef("eci") * (eci as f64 - ECI_MEAN) / ECI_SD;
    for (code, &on) in &flags {
        if on {
            z += cfg.coef(code);
        }
    }
    if cfg.noise > 0.0 {
        z += cfg.noise * unit.sample(rng);
    }
    let label = usize::from(rng.random_bool(sigmoid(z)));

    let t = EventTimeline {
        patient_id: format!("P{i:05}"),
        index_date,
        statics: Static { age, sex, eci },
        events,
    };
    (t, flags, label)
}

/// Samples `n` patients with labels drawn from a logistic model of their
/// pre-index comorbidities. Each patient uses its own RNG stream, so the
/// output depends only on the config.
pub fn generate_cohort(cfg: &CohortConfig) -> Result<Cohort> {
    if cfg.n < 20 {
        return Err(Error::InvalidConfig(format!("cohort size must be >= 20, got {}", cfg.n)));
    }
    if !cfg.noise.is_finite() || cfg.noise < 0.0 {
        return Err(Error::InvalidConfig("noise must be finite and non-negative".into()));
    }
    let mut cohort = Cohort {
        timelines: Vec::with_capacity(cfg.n),
        labels: Vec::with_capacity(cfg.n),
        flags: Vec::with_capacity(cfg.n),
    };
    for i in 0..cfg.n {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let (t, f, y) = one_patient(i, cfg, &mut rng);
        cohort.timelines.push(t);
        cohort.flags.push(f);
        cohort.labels.push(y);
    }
    Ok(cohort)
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::timeline::{EventTimeline, Sex};
use crate::error::{Error, Result};

/// Stratum widths for matching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub age_bin: f64,
    pub eci_band: u32,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { age_bin: 10.0, eci_band: 2 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Pool indices matched to each case, nearest index date first.
    pub controls: Vec<Vec<usize>>,
    /// Cases that received fewer than `ratio` controls.
    pub under_matched: Vec<usize>,
}

impl MatchResult {
    /// All matched pool indices, ascending.
    pub fn matched_pool(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.controls.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

fn stratum(t: &EventTimeline, cfg: &MatchConfig) -> (i64, Sex, u32) {
    (
        (t.statics.age / cfg.age_bin).floor() as i64,
        t.statics.sex,
        t.statics.eci / cfg.eci_band,
    )
}

/// Greedy matching without replacement. Cases are processed in order; each
/// takes up to `ratio` unused pool members from its (age bin, sex, ECI
/// band) stratum, nearest index date first with ties broken by pool order.
pub fn match_controls(
    cases: &[EventTimeline],
    pool: &[EventTimeline],
    ratio: usize,
    cfg: &MatchConfig,
) -> Result<MatchResult> {
    if ratio == 0 {
        return Err(Error::InvalidConfig("matching ratio must be >= 1".into()));
    }
    if !(cfg.age_bin > 0.0) || cfg.eci_band == 0 {
        return Err(Error::InvalidConfig("matching bins must be positive".into()));
    }
    let mut strata: HashMap<(i64, Sex, u32), Vec<usize>> = HashMap::new();
    for (i, t) in pool.iter().enumerate() {
        strata.entry(stratum(t, cfg)).or_default().push(i);
    }
    let mut used = vec![false; pool.len()];
    let mut out = MatchResult::default();
    for (c, case) in cases.iter().enumerate() {
        let mut cands: Vec<(u32, usize)> = strata
            .get(&stratum(case, cfg))
            .map(|members| {
                members
                    .iter()
                    .filter(|&&i| !used[i])
                    .map(|&i| (pool[i].index_date.abs_diff(case.index_date), i))
                    .collect()
            })
            .unwrap_or_default();
        cands.sort_unstable();
        let chosen: Vec<usize> = cands.into_iter().take(ratio).map(|(_, i)| i).collect();
        for &i in &chosen {
            used[i] = true;
        }
        if chosen.len() < ratio {
            out.under_matched.push(c);
        }
        out.controls.push(chosen);
    }
    Ok(out)
}

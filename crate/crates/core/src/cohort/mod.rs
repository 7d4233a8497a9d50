//! Synthetic event-timeline cohorts: generation with planted effects,
//! fixed-window featurization and stratified case-control matching.

mod featurize;
mod generate;
mod matching;
mod timeline;

pub use featurize::{
    cohort_dataset, cohort_schema, feature_name, featurize, Aggregation, CodeKind, Column, WindowSpec, DIAGNOSES,
    LABS, MEDICATIONS, STATIC_FEATURES,
};
pub use generate::{
    generate_cohort, Cohort, CohortConfig, AGE_MEAN, AGE_SD, DEFAULT_N, ECI_MEAN, ECI_SD, FEMALE_FRACTION,
    INDEX_DATE_RANGE,
};
pub use matching::{match_controls, MatchConfig, MatchResult};
pub use timeline::{read_jsonl, write_jsonl, Event, EventTimeline, Sex, Static};

//! Counterfactual search: problem definition, the three stages and the
//! hybrid driver.

pub mod enumerate;
pub mod hybrid;
pub mod moc;
pub mod nice;
pub mod pareto;
pub mod problem;

pub use enumerate::{enumerate, toggle, EnumResult, BLOCK_SIZE, MAX_ENUMERABLE};
pub use hybrid::{enumeration_gate, generate, HybridOptions, HybridReport, StageRecord, StageTimings, StageUsed};
pub use moc::{
    moc_search, moc_search_observed, pareto_front, write_trace_csv, GenerationStats, MocConfig, MocIndividual,
    MocResult,
};
pub use nice::{nice_search, restrict_pool, NiceResult};
pub use pareto::{crowding_distance, dominates, non_dominated_sort, pareto_front_indices};
pub use problem::{
    rank_cmp, score, score_value, validate, Change, CfQuery, Counterfactual, CounterfactualExport, ExportChange,
    SearchContext, Stage, Violation, DEFAULT_M_MAX, FIXED_EPSILON,
};

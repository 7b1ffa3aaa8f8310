//! Estimating the lane advantage in two-day paired sprint races.
//!
//! Each skater races twice, once finishing in each lane. A bivariate
//! mixed-effects model with a shared skater effect separates the lane
//! difference `d` from ability and day effects. Around the fit sit outlier
//! screening, model validation, cross-event combination and counterfactual
//! re-ranking of single-race lists.

pub mod counterfactual;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod meta;
pub mod model;
pub mod optimize;
pub mod pipeline;
pub mod report;
pub mod simulate;
pub mod stats;

pub use counterfactual::{
    parse_olympic, round_trip, speculate, OlympicEntry, OlympicList, RankedEntry, SpeculativeList,
};
pub use dataset::{
    observations, parse_event, Centis, EventDataset, Lane, LaneIndicator, LanePolicy, Observation,
    Run, RunStatus, SkaterPair, UsablePair, UsableSet,
};
pub use diagnostics::{
    adjusted_differences, clean_and_refit, outlier_scan, validate_model, AdjustedDiffs, CleanFit,
    Flag, OutlierReport, ScanOptions, Tails, ValidationReport,
};
pub use error::{Error, Result};
pub use meta::{
    combine, cross_group_correlation, heterogeneity, power_plan, predict_range, split_half,
    EventPairs, EventSummary, MetaResult, PowerSpec, SplitContrast,
};
pub use model::{
    build_moments, fit_at_rho, fit_ml, fit_simple, gls_beta, profile_loglik, q_components,
    variance_report, Constraint, FitResult, Moments, QParts, SimpleFit, VarianceReport,
};
pub use pipeline::{analyze_event, EventAnalysis};
pub use stats::{Bandwidth, KdeCurve, MomentScale};

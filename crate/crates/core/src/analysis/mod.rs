//! Plan-level analyses on top of the unified representation: structural
//! fingerprints and novelty tracking, cardinality checks, per-category
//! metrics and plan diffs.

mod cert;
mod diff;
mod fingerprint;
mod metrics;

pub use cert::{cert_check, cert_compare, root_cardinality, CertVerdict};
pub use diff::{diff, DiffReport, OperationCount};
pub use fingerprint::{
    fingerprint, FingerprintPolicy, NoveltyTracker, Observation, PlanFingerprint, PolicyError,
    SCRUB_PLACEHOLDER,
};
pub use metrics::{category_counts, population_variance, producer_variance, scan_time_share, CategoryMetrics, TOTAL_LABEL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("estimated_rows of the {plan} plan is not numeric: {value}")]
    NonNumericCardinality { plan: &'static str, value: String },
    #[error("inconclusive: the {0} plan has no root estimated_rows")]
    Inconclusive(&'static str),
    #[error("tolerance must be a finite non-negative number, got {0}")]
    BadTolerance(f64),
    #[error("at least one plan is required")]
    NoPlans,
    #[error("no `{TOTAL_LABEL}` entry among the node times")]
    MissingTotal,
    #[error("`{TOTAL_LABEL}` time must be positive, got {0}")]
    NonPositiveTotal(f64),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
}

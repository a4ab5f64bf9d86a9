use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::AnalysisError;
use crate::ir::{OperationCategory, UnifiedPlan};

/// Number of operations per category in one plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryMetrics {
    /// Always holds all seven categories.
    pub counts: BTreeMap<OperationCategory, u64>,
    pub total: u64,
}

impl Default for CategoryMetrics {
    fn default() -> Self {
        CategoryMetrics {
            counts: OperationCategory::ALL.iter().map(|&c| (c, 0)).collect(),
            total: 0,
        }
    }
}

impl CategoryMetrics {
    pub fn get(&self, category: OperationCategory) -> u64 {
        self.counts.get(&category).copied().unwrap_or(0)
    }
}

pub fn category_counts(plan: &UnifiedPlan) -> CategoryMetrics {
    let mut m = CategoryMetrics::default();
    for node in plan.nodes() {
        *m.counts.entry(node.operation.category).or_insert(0) += 1;
        m.total += 1;
    }
    m
}

/// Population variance (divides by n), computed with Welford's update.
pub fn population_variance(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    Some(m2 / values.len() as f64)
}

/// Population variance of the Producer counts across plans, e.g. one plan
/// per DBMS for the same query.
pub fn producer_variance(plans: &[CategoryMetrics]) -> Result<f64, AnalysisError> {
    let counts: Vec<f64> = plans
        .iter()
        .map(|m| m.get(OperationCategory::Producer) as f64)
        .collect();
    population_variance(&counts).ok_or(AnalysisError::NoPlans)
}

pub const TOTAL_LABEL: &str = "TOTAL";

/// Share of the total time spent in the `removed` nodes. `node_times` must
/// include a `TOTAL` entry; repeated labels are summed.
pub fn scan_time_share<S: AsRef<str>>(node_times: &[(S, f64)], removed: &BTreeSet<&str>) -> Result<f64, AnalysisError> {
    let mut times: BTreeMap<&str, f64> = BTreeMap::new();
    for (label, ms) in node_times {
        *times.entry(label.as_ref()).or_insert(0.0) += ms;
    }
    let total = *times.get(TOTAL_LABEL).ok_or(AnalysisError::MissingTotal)?;
    if !(total > 0.0) {
        return Err(AnalysisError::NonPositiveTotal(total));
    }
    let mut sum = 0.0;
    for label in removed {
        if *label == TOTAL_LABEL {
            return Err(AnalysisError::UnknownLabel(label.to_string()));
        }
        sum += times
            .get(label)
            .ok_or_else(|| AnalysisError::UnknownLabel(label.to_string()))?;
    }
    Ok(sum / total)
}

use serde::Serialize;

use super::AnalysisError;
use crate::ir::{PropertyCategory, PropertyValue, UnifiedPlan};

/// Outcome of comparing a base query's estimated rows with those of a more
/// restrictive query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertVerdict {
    pub base_rows: f64,
    pub restricted_rows: f64,
    pub violation: bool,
    /// `restricted_rows / base_rows`, absent when the base estimate is zero.
    pub ratio: Option<f64>,
}

/// The root node's Cardinality `estimated_rows`, if present.
pub fn root_cardinality(plan: &UnifiedPlan) -> Result<Option<f64>, AnalysisError> {
    cardinality(plan, "given")
}

fn cardinality(plan: &UnifiedPlan, which: &'static str) -> Result<Option<f64>, AnalysisError> {
    let Some(root) = &plan.root else {
        return Ok(None);
    };
    match root.property(PropertyCategory::Cardinality, "estimated_rows") {
        None => Ok(None),
        Some(v @ (PropertyValue::Int(_) | PropertyValue::Float(_))) => Ok(v.as_f64()),
        Some(other) => Err(AnalysisError::NonNumericCardinality {
            plan: which,
            value: other.to_string(),
        }),
    }
}

/// The comparison itself: a violation when the restricted estimate exceeds
/// the base estimate by more than `tolerance` (relative).
pub fn cert_compare(base_rows: f64, restricted_rows: f64, tolerance: f64) -> CertVerdict {
    CertVerdict {
        base_rows,
        restricted_rows,
        violation: restricted_rows > base_rows * (1.0 + tolerance),
        ratio: (base_rows > 0.0).then(|| restricted_rows / base_rows),
    }
}

pub fn cert_check(base: &UnifiedPlan, restricted: &UnifiedPlan, tolerance: f64) -> Result<CertVerdict, AnalysisError> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(AnalysisError::BadTolerance(tolerance));
    }
    let b = cardinality(base, "base")?.ok_or(AnalysisError::Inconclusive("base"))?;
    let r = cardinality(restricted, "restricted")?.ok_or(AnalysisError::Inconclusive("restricted"))?;
    Ok(cert_compare(b, r, tolerance))
}

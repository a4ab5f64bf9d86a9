use std::collections::BTreeMap;

use serde::Serialize;

use crate::ir::text::value_literal;
use crate::ir::{OperationCategory, PropertyCategory, PropertyValue, UnifiedPlan};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct OperationCount {
    pub category: OperationCategory,
    pub identifier: String,
    pub count: u64,
}

/// Differences between two plans, typically of one query on two DBMSs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffReport {
    /// `count(a) - count(b)` for every category where the two differ.
    pub category_deltas: BTreeMap<OperationCategory, i64>,
    /// Operations occurring more often in `a` than in `b`, with the excess.
    pub operation_surplus_a: Vec<OperationCount>,
    pub operation_surplus_b: Vec<OperationCount>,
    /// How often each `name_object` is read by a Producer in `a`.
    pub producer_objects_a: BTreeMap<String, u64>,
    pub producer_objects_b: BTreeMap<String, u64>,
}

impl DiffReport {
    /// True when the plans have the same operation multiset and their
    /// Producers read the same objects.
    pub fn is_empty(&self) -> bool {
        self.category_deltas.is_empty()
            && self.operation_surplus_a.is_empty()
            && self.operation_surplus_b.is_empty()
            && self.producer_objects_a == self.producer_objects_b
    }

    /// Objects read more often by `a`'s Producers, and the other way round.
    pub fn producer_object_surplus(&self) -> (BTreeMap<String, u64>, BTreeMap<String, u64>) {
        (
            surplus(&self.producer_objects_a, &self.producer_objects_b),
            surplus(&self.producer_objects_b, &self.producer_objects_a),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("diff report serializes")
    }
}

fn surplus<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> BTreeMap<K, u64> {
    a.iter()
        .filter_map(|(k, &n)| {
            let m = b.get(k).copied().unwrap_or(0);
            (n > m).then(|| (k.clone(), n - m))
        })
        .collect()
}

fn operations(plan: &UnifiedPlan) -> BTreeMap<(OperationCategory, String), u64> {
    let mut out = BTreeMap::new();
    for node in plan.nodes() {
        let key = (node.operation.category, node.operation.identifier.as_str().to_string());
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

fn producer_objects(plan: &UnifiedPlan) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for node in plan.nodes().filter(|n| n.operation.category == OperationCategory::Producer) {
        for p in &node.properties {
            if p.category == PropertyCategory::Configuration && p.identifier.as_str() == "name_object" {
                let name = match &p.value {
                    PropertyValue::String(s) => s.clone(),
                    other => value_literal(other),
                };
                *out.entry(name).or_insert(0) += 1;
            }
        }
    }
    out
}

pub fn diff(a: &UnifiedPlan, b: &UnifiedPlan) -> DiffReport {
    let ops_a = operations(a);
    let ops_b = operations(b);
    let counts = |ops: &BTreeMap<(OperationCategory, String), u64>| {
        let mut by_category: BTreeMap<OperationCategory, i64> = BTreeMap::new();
        for ((c, _), n) in ops {
            *by_category.entry(*c).or_insert(0) += *n as i64;
        }
        by_category
    };
    let (ca, cb) = (counts(&ops_a), counts(&ops_b));
    let category_deltas = OperationCategory::ALL
        .iter()
        .filter_map(|c| {
            let d = ca.get(c).copied().unwrap_or(0) - cb.get(c).copied().unwrap_or(0);
            (d != 0).then_some((*c, d))
        })
        .collect();
    let as_list = |m: BTreeMap<(OperationCategory, String), u64>| {
        m.into_iter()
            .map(|((category, identifier), count)| OperationCount {
                category,
                identifier,
                count,
            })
            .collect()
    };
    DiffReport {
        category_deltas,
        operation_surplus_a: as_list(surplus(&ops_a, &ops_b)),
        operation_surplus_b: as_list(surplus(&ops_b, &ops_a)),
        producer_objects_a: producer_objects(a),
        producer_objects_b: producer_objects(b),
    }
}

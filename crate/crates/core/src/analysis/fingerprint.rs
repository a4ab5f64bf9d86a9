use std::collections::{BTreeSet, HashSet};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ir::text::canonical;
use crate::ir::{validate, InvalidPlan, Keyword, PlanNode, Property, PropertyCategory, PropertyValue, UnifiedPlan};

/// Replaces every scrub-pattern match inside Configuration strings.
pub const SCRUB_PLACEHOLDER: &str = "⟨ID⟩";

/// Which parts of a plan are considered unstable and left out of a
/// fingerprint.
#[derive(Debug, Clone)]
pub struct FingerprintPolicy {
    pub excluded_property_categories: BTreeSet<PropertyCategory>,
    pub excluded_configuration_identifiers: BTreeSet<Keyword>,
    value_scrub_patterns: Vec<Regex>,
}

impl Default for FingerprintPolicy {
    /// Excludes Cardinality, Cost and Status properties.
    fn default() -> Self {
        FingerprintPolicy {
            excluded_property_categories: [
                PropertyCategory::Cardinality,
                PropertyCategory::Cost,
                PropertyCategory::Status,
            ]
            .into_iter()
            .collect(),
            excluded_configuration_identifiers: BTreeSet::new(),
            value_scrub_patterns: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("malformed policy JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scrub pattern `{pattern}`: {source}")]
    Pattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("invalid excluded identifier: {0}")]
    Identifier(#[from] crate::ir::KeywordError),
}

/// On-disk form. Absent keys keep the default policy's value.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    excluded_property_categories: Option<BTreeSet<PropertyCategory>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    excluded_configuration_identifiers: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value_scrub_patterns: Option<Vec<String>>,
}

impl FingerprintPolicy {
    /// A policy that keeps everything.
    pub fn none() -> Self {
        FingerprintPolicy {
            excluded_property_categories: BTreeSet::new(),
            excluded_configuration_identifiers: BTreeSet::new(),
            value_scrub_patterns: Vec::new(),
        }
    }

    pub fn with_excluded_identifier(mut self, identifier: &str) -> Result<Self, PolicyError> {
        self.excluded_configuration_identifiers.insert(Keyword::new(identifier)?);
        Ok(self)
    }

    pub fn with_scrub_pattern(mut self, pattern: &str) -> Result<Self, PolicyError> {
        let re = Regex::new(pattern).map_err(|source| PolicyError::Pattern {
            pattern: pattern.to_string(),
            source,
        })?;
        self.value_scrub_patterns.push(re);
        Ok(self)
    }

    pub fn scrub_patterns(&self) -> impl Iterator<Item = &str> {
        self.value_scrub_patterns.iter().map(Regex::as_str)
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let file: PolicyFile = serde_json::from_str(text)?;
        let mut policy = FingerprintPolicy::default();
        if let Some(categories) = file.excluded_property_categories {
            policy.excluded_property_categories = categories;
        }
        for identifier in file.excluded_configuration_identifiers.unwrap_or_default() {
            policy = policy.with_excluded_identifier(&identifier)?;
        }
        for pattern in file.value_scrub_patterns.unwrap_or_default() {
            policy = policy.with_scrub_pattern(&pattern)?;
        }
        Ok(policy)
    }

    pub fn to_json(&self) -> String {
        let file = PolicyFile {
            excluded_property_categories: Some(self.excluded_property_categories.clone()),
            excluded_configuration_identifiers: Some(
                self.excluded_configuration_identifiers
                    .iter()
                    .map(|k| k.as_str().to_string())
                    .collect(),
            ),
            value_scrub_patterns: Some(self.scrub_patterns().map(str::to_string).collect()),
        };
        serde_json::to_string(&file).expect("policy serializes")
    }

    fn keeps(&self, p: &Property) -> bool {
        !self.excluded_property_categories.contains(&p.category)
            && !(p.category == PropertyCategory::Configuration
                && self.excluded_configuration_identifiers.contains(&p.identifier))
    }

    fn scrub(&self, p: &Property) -> Property {
        let mut p = p.clone();
        if p.category == PropertyCategory::Configuration {
            if let PropertyValue::String(s) = &mut p.value {
                for re in &self.value_scrub_patterns {
                    if let std::borrow::Cow::Owned(replaced) = re.replace_all(s, SCRUB_PLACEHOLDER) {
                        *s = replaced;
                    }
                }
            }
        }
        p
    }

    fn prune_properties(&self, properties: &[Property]) -> Vec<Property> {
        properties
            .iter()
            .filter(|p| self.keeps(p))
            .map(|p| self.scrub(p))
            .collect()
    }

    /// The plan with excluded properties removed and scrub patterns applied.
    pub fn prune(&self, plan: &UnifiedPlan) -> UnifiedPlan {
        UnifiedPlan {
            root: plan.root.as_ref().map(|r| self.prune_node(r)),
            plan_properties: self.prune_properties(&plan.plan_properties),
            dialect: None,
            warnings: Vec::new(),
        }
    }

    fn prune_node(&self, root: &PlanNode) -> PlanNode {
        // Pre-order list with parent links; a reverse sweep then rebuilds
        // every subtree after all of its descendants.
        let mut order: Vec<(&PlanNode, Option<usize>)> = Vec::new();
        let mut stack = vec![(root, None)];
        while let Some((node, parent)) = stack.pop() {
            let id = order.len();
            order.push((node, parent));
            stack.extend(node.children.iter().rev().map(|c| (c, Some(id))));
        }
        let mut children: Vec<Vec<PlanNode>> = (0..order.len()).map(|_| Vec::new()).collect();
        let mut result = None;
        for i in (0..order.len()).rev() {
            let (node, parent) = order[i];
            let mut copy = PlanNode::new(node.operation.clone());
            copy.properties = self.prune_properties(&node.properties);
            copy.children = std::mem::take(&mut children[i]);
            copy.children.reverse();
            match parent {
                Some(p) => children[p].push(copy),
                None => result = Some(copy),
            }
        }
        result.expect("root is visited")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanFingerprint {
    /// SHA-256 of `canonical_form`, lower-case hex.
    pub digest: String,
    pub canonical_form: String,
}

impl fmt::Display for PlanFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digest)
    }
}

pub fn fingerprint(plan: &UnifiedPlan, policy: &FingerprintPolicy) -> Result<PlanFingerprint, InvalidPlan> {
    let violations = validate(plan);
    if !violations.is_empty() {
        return Err(InvalidPlan(violations));
    }
    let canonical_form = canonical(&policy.prune(plan));
    let digest = hex::encode(Sha256::digest(canonical_form.as_bytes()));
    Ok(PlanFingerprint {
        digest,
        canonical_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub novel: bool,
    pub should_mutate: bool,
}

/// Tracks which plan fingerprints have been seen and signals when no new
/// plan has appeared for `mutation_threshold` consecutive queries.
#[derive(Debug, Clone)]
pub struct NoveltyTracker {
    seen: HashSet<String>,
    queries_since_novel: usize,
    mutation_threshold: usize,
}

impl NoveltyTracker {
    /// Panics if `mutation_threshold` is zero.
    pub fn new(mutation_threshold: usize) -> Self {
        assert!(mutation_threshold > 0, "mutation threshold must be positive");
        NoveltyTracker {
            seen: HashSet::new(),
            queries_since_novel: 0,
            mutation_threshold,
        }
    }

    pub fn mutation_threshold(&self) -> usize {
        self.mutation_threshold
    }

    pub fn queries_since_novel(&self) -> usize {
        self.queries_since_novel
    }

    pub fn seen_count(&self) -> usize {
        self.seen.len()
    }

    pub fn observe(&mut self, fp: &PlanFingerprint) -> Observation {
        self.observe_digest(&fp.digest)
    }

    pub fn observe_digest(&mut self, digest: &str) -> Observation {
        let novel = self.seen.insert(digest.to_string());
        if novel {
            self.queries_since_novel = 0;
        } else {
            self.queries_since_novel += 1;
        }
        let should_mutate = self.queries_since_novel >= self.mutation_threshold;
        if should_mutate {
            self.queries_since_novel = 0;
        }
        Observation { novel, should_mutate }
    }
}

//! The unified query plan representation.
//!
//! A [`UnifiedPlan`] is an optional tree of [`PlanNode`]s plus a list of
//! plan-associated [`Property`] values. Every operation carries one of seven
//! [`OperationCategory`] values and every property one of four
//! [`PropertyCategory`] values. Identifiers are [`Keyword`]s: an ASCII letter
//! followed by letters, digits or underscores.

pub(crate) mod json;
pub(crate) mod text;
mod validate;

use std::fmt;
use std::str::FromStr;

pub use json::{parse_unified_json, serialize_json, validate_unified_json, JsonError};
pub use text::{parse_unified_text, serialize_text, TextParseError, TextStyle};
pub use validate::{validate, Violation};

/// Raised when a plan that fails validation is handed to a serializer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid plan: {}", join_violations(.0))]
pub struct InvalidPlan(pub Vec<Violation>);

pub(crate) fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

macro_rules! closed_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => stringify!($variant)),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownCategory;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($variant) => Ok($name::$variant),)+
                    _ => Err(UnknownCategory {
                        kind: stringify!($name),
                        value: s.to_string(),
                    }),
                }
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> serde::Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

closed_enum! {
    /// What an operation does to the tuples flowing through it.
    OperationCategory {
        Producer,
        Combinator,
        Join,
        Folder,
        Executor,
        Projector,
        Consumer,
    }
}

closed_enum! {
    /// What kind of information a property carries.
    PropertyCategory {
        Cardinality,
        Cost,
        Configuration,
        Status,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownCategory {
    pub kind: &'static str,
    pub value: String,
}

/// An operation or property identifier.
///
/// Spaces and hyphens in raw names are stored as underscores; [`Keyword::display`]
/// turns underscores back into spaces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Keyword(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid keyword `{text}`: {reason}")]
pub struct KeywordError {
    pub text: String,
    pub reason: String,
}

impl Keyword {
    /// Canonicalizes spaces and hyphens to underscores, then checks the grammar.
    pub fn new(raw: &str) -> Result<Self, KeywordError> {
        let text = canonicalize(raw);
        match keyword_violation(&text) {
            None => Ok(Keyword(text)),
            Some(reason) => Err(KeywordError { text, reason }),
        }
    }

    /// Wraps `text` verbatim. Used when loading hand-edited files; [`validate`]
    /// reports anything that does not match the grammar.
    pub fn new_unchecked(text: impl Into<String>) -> Self {
        Keyword(text.into())
    }

    /// Lossy conversion that always yields a valid keyword: every character
    /// outside `[A-Za-z0-9_]` becomes `_`, runs of `_` collapse, and a
    /// non-letter start is prefixed with `k_`.
    pub fn sanitize(raw: &str) -> Self {
        let mut out = String::with_capacity(raw.len());
        for c in raw.trim().chars() {
            let c = if c.is_ascii_alphanumeric() { c } else { '_' };
            if c == '_' && (out.is_empty() || out.ends_with('_')) {
                continue;
            }
            out.push(c);
        }
        while out.ends_with('_') {
            out.pop();
        }
        match out.chars().next() {
            None => Keyword("unknown".to_string()),
            Some(c) if !c.is_ascii_alphabetic() => Keyword(format!("k_{out}")),
            Some(_) => Keyword(out),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Human-readable form with underscores shown as spaces.
    pub fn display(&self) -> String {
        self.0.replace('_', " ")
    }

    pub fn violation(&self) -> Option<String> {
        keyword_violation(&self.0)
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Keyword {
    type Err = KeywordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Keyword::new(s)
    }
}

impl serde::Serialize for Keyword {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> serde::Deserialize<'de> for Keyword {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Keyword::new(&s).map_err(serde::de::Error::custom)
    }
}

fn canonicalize(raw: &str) -> String {
    raw.trim().replace([' ', '-'], "_")
}

pub(crate) fn keyword_violation(text: &str) -> Option<String> {
    let mut chars = text.chars();
    match chars.next() {
        None => return Some("identifier must not be empty".to_string()),
        Some(c) if !c.is_ascii_alphabetic() => {
            return Some("identifier must start with a letter".to_string())
        }
        Some(_) => {}
    }
    chars
        .find(|c| !(c.is_ascii_alphanumeric() || *c == '_'))
        .map(|c| format!("identifier contains invalid character {c:?}"))
}

/// A property value. Integers that fit in `i64` keep their integer kind.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertyValue {
    String(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Null,
}

impl PropertyValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            PropertyValue::Int(i) => Some(i as f64),
            PropertyValue::Float(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            PropertyValue::String(s) => Some(s),
            _ => None,
        }
    }

    /// Number from a float, demoted to `Int` when the conversion is lossless.
    pub fn number(value: f64) -> Self {
        let negative_zero = value == 0.0 && value.is_sign_negative();
        if value.fract() == 0.0 && value.abs() <= 9_007_199_254_740_992.0 && !negative_zero {
            PropertyValue::Int(value as i64)
        } else {
            PropertyValue::Float(value)
        }
    }
}

impl From<&str> for PropertyValue {
    fn from(s: &str) -> Self {
        PropertyValue::String(s.to_string())
    }
}

impl From<String> for PropertyValue {
    fn from(s: String) -> Self {
        PropertyValue::String(s)
    }
}

impl From<i64> for PropertyValue {
    fn from(i: i64) -> Self {
        PropertyValue::Int(i)
    }
}

impl From<f64> for PropertyValue {
    fn from(f: f64) -> Self {
        PropertyValue::Float(f)
    }
}

impl From<bool> for PropertyValue {
    fn from(b: bool) -> Self {
        PropertyValue::Bool(b)
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::String(s) => f.write_str(s),
            PropertyValue::Int(i) => write!(f, "{i}"),
            PropertyValue::Float(x) => f.write_str(&format_float(*x)),
            PropertyValue::Bool(b) => write!(f, "{b}"),
            PropertyValue::Null => f.write_str("null"),
        }
    }
}

/// Shortest round-trip decimal; integral floats keep a `.0` so they reparse
/// as floats.
pub(crate) fn format_float(x: f64) -> String {
    let s = format!("{x}");
    if x.is_finite() && !s.contains('.') {
        format!("{s}.0")
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub category: PropertyCategory,
    pub identifier: Keyword,
    pub value: PropertyValue,
}

impl Property {
    pub fn new(
        category: PropertyCategory,
        identifier: Keyword,
        value: impl Into<PropertyValue>,
    ) -> Self {
        Property {
            category,
            identifier,
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Operation {
    pub category: OperationCategory,
    pub identifier: Keyword,
}

impl Operation {
    pub fn new(category: OperationCategory, identifier: Keyword) -> Self {
        Operation {
            category,
            identifier,
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.category, self.identifier.display())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    pub operation: Operation,
    pub properties: Vec<Property>,
    pub children: Vec<PlanNode>,
}

impl PlanNode {
    pub fn new(operation: Operation) -> Self {
        PlanNode {
            operation,
            properties: Vec::new(),
            children: Vec::new(),
        }
    }

    /// Convenience constructor; panics if `identifier` is not a valid keyword.
    pub fn op(category: OperationCategory, identifier: &str) -> Self {
        let identifier = Keyword::new(identifier).expect("valid operation identifier");
        PlanNode::new(Operation::new(category, identifier))
    }

    /// Builder-style property append; panics on an invalid identifier.
    pub fn with_property(
        mut self,
        category: PropertyCategory,
        identifier: &str,
        value: impl Into<PropertyValue>,
    ) -> Self {
        let identifier = Keyword::new(identifier).expect("valid property identifier");
        self.properties
            .push(Property::new(category, identifier, value));
        self
    }

    pub fn with_child(mut self, child: PlanNode) -> Self {
        self.children.push(child);
        self
    }

    /// First property with the given category and identifier.
    pub fn property(&self, category: PropertyCategory, identifier: &str) -> Option<&PropertyValue> {
        self.properties
            .iter()
            .find(|p| p.category == category && p.identifier.as_str() == identifier)
            .map(|p| &p.value)
    }

    /// Pre-order traversal.
    pub fn iter(&self) -> PreOrder<'_> {
        PreOrder { stack: vec![self] }
    }

    pub fn node_count(&self) -> usize {
        self.iter().count()
    }

    /// Number of levels; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(self, 1usize)];
        while let Some((node, d)) = stack.pop() {
            max = max.max(d);
            stack.extend(node.children.iter().map(|c| (c, d + 1)));
        }
        max
    }
}

pub struct PreOrder<'a> {
    stack: Vec<&'a PlanNode>,
}

impl<'a> Iterator for PreOrder<'a> {
    type Item = &'a PlanNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

/// A complete plan. `dialect` and `warnings` are conversion metadata and never
/// take part in equality, fingerprints or the serialized plan body.
#[derive(Debug, Clone, Default)]
pub struct UnifiedPlan {
    pub root: Option<PlanNode>,
    pub plan_properties: Vec<Property>,
    pub dialect: Option<String>,
    pub warnings: Vec<String>,
}

impl UnifiedPlan {
    pub fn new(root: PlanNode) -> Self {
        UnifiedPlan {
            root: Some(root),
            ..Default::default()
        }
    }

    pub fn empty() -> Self {
        UnifiedPlan::default()
    }

    pub fn with_plan_property(
        mut self,
        category: PropertyCategory,
        identifier: &str,
        value: impl Into<PropertyValue>,
    ) -> Self {
        let identifier = Keyword::new(identifier).expect("valid property identifier");
        self.plan_properties
            .push(Property::new(category, identifier, value));
        self
    }

    pub fn nodes(&self) -> PreOrder<'_> {
        PreOrder {
            stack: self.root.iter().collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes().count()
    }

    pub fn plan_property(&self, category: PropertyCategory, identifier: &str) -> Option<&PropertyValue> {
        self.plan_properties
            .iter()
            .find(|p| p.category == category && p.identifier.as_str() == identifier)
            .map(|p| &p.value)
    }
}

impl PartialEq for UnifiedPlan {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.plan_properties == other.plan_properties
    }
}

/// Tree isomorphism under identical child order, ignoring conversion metadata.
pub fn equals_structural(a: &UnifiedPlan, b: &UnifiedPlan) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_canonicalizes_spaces_and_hyphens() {
        assert_eq!(Keyword::new("Full Table Scan").unwrap().as_str(), "Full_Table_Scan");
        assert_eq!(Keyword::new("USE TEMP B-TREE").unwrap().as_str(), "USE_TEMP_B_TREE");
        assert_eq!(Keyword::new("Full_Table_Scan").unwrap().display(), "Full Table Scan");
    }

    #[test]
    fn keyword_rejects_grammar_breaches() {
        assert_eq!(
            Keyword::new("2scan").unwrap_err().reason,
            "identifier must start with a letter"
        );
        assert!(Keyword::new("").is_err());
        assert!(Keyword::new("a.b").is_err());
    }

    #[test]
    fn sanitize_always_valid() {
        for raw in ["Index-only...", "<union1,2>", "2scan", "", "  x  y ", "é"] {
            let k = Keyword::sanitize(raw);
            assert!(k.violation().is_none(), "{raw:?} -> {k}");
        }
        assert_eq!(Keyword::sanitize("Index-only...").as_str(), "Index_only");
    }

    #[test]
    fn categories_are_closed() {
        assert_eq!(OperationCategory::ALL.len(), 7);
        assert_eq!(PropertyCategory::ALL.len(), 4);
        assert!("Scanner".parse::<OperationCategory>().is_err());
        for c in OperationCategory::ALL {
            assert_eq!(c.as_str().parse::<OperationCategory>().unwrap(), *c);
        }
    }

    #[test]
    fn number_keeps_integer_kind() {
        assert_eq!(PropertyValue::number(1050.0), PropertyValue::Int(1050));
        assert_eq!(PropertyValue::number(0.124), PropertyValue::Float(0.124));
        assert_eq!(PropertyValue::number(-0.0), PropertyValue::Float(-0.0));
    }

    #[test]
    fn equality_ignores_metadata() {
        let a = UnifiedPlan::new(PlanNode::op(OperationCategory::Producer, "Full_Table_Scan"));
        let mut b = a.clone();
        b.dialect = Some("tidb_text".into());
        b.warnings.push("w".into());
        assert!(equals_structural(&a, &a));
        assert!(equals_structural(&a, &b));
    }

    #[test]
    fn child_order_matters() {
        let x = PlanNode::op(OperationCategory::Producer, "A");
        let y = PlanNode::op(OperationCategory::Producer, "B");
        let p = UnifiedPlan::new(
            PlanNode::op(OperationCategory::Join, "Hash_Join")
                .with_child(x.clone())
                .with_child(y.clone()),
        );
        let q = UnifiedPlan::new(
            PlanNode::op(OperationCategory::Join, "Hash_Join")
                .with_child(y)
                .with_child(x),
        );
        assert!(!equals_structural(&p, &q));
    }

    #[test]
    fn preorder_and_depth() {
        let tree = PlanNode::op(OperationCategory::Executor, "Collect").with_child(
            PlanNode::op(OperationCategory::Join, "J")
                .with_child(PlanNode::op(OperationCategory::Producer, "A"))
                .with_child(PlanNode::op(OperationCategory::Producer, "B")),
        );
        let names: Vec<_> = tree.iter().map(|n| n.operation.identifier.as_str()).collect();
        assert_eq!(names, ["Collect", "J", "A", "B"]);
        assert_eq!(tree.depth(), 3);
        assert_eq!(tree.node_count(), 4);
    }
}

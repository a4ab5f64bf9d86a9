use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use super::mapping::{map_operation, map_property, DialectFamily, DialectMapping, MappingKind};
use super::Dialect;
use crate::ir::text::parse_number;
use crate::ir::{Keyword, Operation, PlanNode, Property, PropertyCategory, PropertyValue};

/// Per-conversion state: the mapping in use and the warnings collected so far.
pub(crate) struct Ctx<'a> {
    pub dialect: Dialect,
    pub family: DialectFamily,
    mapping: &'a DialectMapping,
    warnings: Vec<String>,
    reported: HashSet<(MappingKind, String)>,
}

impl<'a> Ctx<'a> {
    pub fn new(dialect: Dialect, mapping: &'a DialectMapping) -> Self {
        Ctx {
            dialect,
            family: dialect.family(),
            mapping,
            warnings: Vec::new(),
            reported: HashSet::new(),
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn into_warnings(self) -> Vec<String> {
        self.warnings
    }

    pub fn knows_operation(&self, raw: &str) -> bool {
        self.mapping.contains_operation(self.family, raw)
    }

    pub fn knows_property(&self, raw: &str) -> bool {
        self.mapping.contains_property(self.family, raw)
    }

    pub fn operation_names(&self) -> Vec<&'a str> {
        self.mapping.operation_names(self.family)
    }

    pub fn operation(&mut self, raw: &str) -> Operation {
        let hit = map_operation(self.mapping, self.family, raw);
        if !hit.mapped && self.reported.insert((MappingKind::Operation, raw.to_string())) {
            self.warnings.push(format!(
                "{}: unmapped operation `{raw}`, using {}->{}",
                self.dialect, hit.category, hit.identifier
            ));
        }
        Operation::new(hit.category, hit.identifier)
    }

    pub fn node(&mut self, raw: &str) -> PlanNode {
        PlanNode::new(self.operation(raw))
    }

    /// Maps a raw property name and normalizes its value. String values of
    /// non-Configuration properties are read as numbers, booleans or
    /// quantities with a time or memory unit where possible.
    pub fn property(&mut self, raw: &str, value: impl Into<PropertyValue>) -> Property {
        let hit = map_property(self.mapping, self.family, raw);
        if !hit.mapped && self.reported.insert((MappingKind::Property, raw.to_string())) {
            self.warnings.push(format!(
                "{}: unmapped property `{raw}`, using {}->{}",
                self.dialect, hit.category, hit.identifier
            ));
        }
        let mut identifier = hit.identifier;
        let mut value = value.into();
        if let PropertyValue::String(s) = &value {
            let s = s.trim();
            if hit.category == PropertyCategory::Configuration {
                value = PropertyValue::String(s.to_string());
            } else if let Some((number, unit)) = quantity(s) {
                identifier = with_unit_suffix(identifier, unit);
                value = number;
            } else {
                value = scalar(s);
            }
        }
        Property::new(hit.category, identifier, value)
    }
}

/// Converts a JSON value found in a source plan into a property value.
/// Arrays of scalars are joined with `, `; other composites are kept as
/// compact JSON text.
pub(crate) fn json_scalar(value: &serde_json::Value) -> PropertyValue {
    use serde_json::Value;
    match value {
        Value::Null => PropertyValue::Null,
        Value::Bool(b) => PropertyValue::Bool(*b),
        Value::Number(n) => match n.as_i64() {
            Some(i) => PropertyValue::Int(i),
            None => PropertyValue::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => PropertyValue::String(s.clone()),
        Value::Array(items) if items.iter().all(|v| !v.is_array() && !v.is_object()) => {
            let parts: Vec<String> = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            PropertyValue::String(parts.join(", "))
        }
        other => PropertyValue::String(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Unit {
    Millis,
    Bytes,
}

/// Reads a plain literal: number, boolean, or the trimmed text itself.
pub(crate) fn scalar(s: &str) -> PropertyValue {
    if let Some(n) = parse_number(s) {
        return n;
    }
    match s {
        "true" => PropertyValue::Bool(true),
        "false" => PropertyValue::Bool(false),
        _ => PropertyValue::String(s.to_string()),
    }
}

/// Parses `12.5 ms`, `3s`, `40kB`, `1.2 MB` into milliseconds or bytes.
pub(crate) fn quantity(s: &str) -> Option<(PropertyValue, Unit)> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"^(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*(ns|us|µs|ms|s|min|B|bytes|KB|kB|KiB|MB|MiB|GB|GiB|TB|TiB)$")
            .unwrap()
    });
    let caps = re.captures(s)?;
    let x: f64 = caps[1].parse().ok()?;
    let (factor, unit) = match &caps[2] {
        "ns" => (1e-6, Unit::Millis),
        "us" | "µs" => (1e-3, Unit::Millis),
        "ms" => (1.0, Unit::Millis),
        "s" => (1e3, Unit::Millis),
        "min" => (6e4, Unit::Millis),
        "B" | "bytes" => (1.0, Unit::Bytes),
        "KB" | "kB" | "KiB" => (1024.0, Unit::Bytes),
        "MB" | "MiB" => (1024.0 * 1024.0, Unit::Bytes),
        "GB" | "GiB" => (1024.0 * 1024.0 * 1024.0, Unit::Bytes),
        _ => (1024.0 * 1024.0 * 1024.0 * 1024.0, Unit::Bytes),
    };
    let value = if factor == 1.0 {
        parse_number(&caps[1])?
    } else {
        PropertyValue::number(x * factor)
    };
    Some((value, unit))
}

pub(crate) fn with_unit_suffix(identifier: Keyword, unit: Unit) -> Keyword {
    let suffix = match unit {
        Unit::Millis => "_ms",
        Unit::Bytes => "_bytes",
    };
    if identifier.as_str().ends_with(suffix) {
        identifier
    } else {
        Keyword::new_unchecked(format!("{}{suffix}", identifier.as_str()))
    }
}

struct Draft {
    node: PlanNode,
    depth: usize,
    parent: Option<usize>,
    children: Vec<usize>,
    fold: bool,
}

/// Builds a tree from nodes listed in pre-order with a depth each: a node is
/// the child of the nearest preceding node with a smaller depth.
#[derive(Default)]
pub(crate) struct TreeBuilder {
    drafts: Vec<Draft>,
    open: Vec<usize>,
    roots: Vec<usize>,
}

impl TreeBuilder {
    pub fn push(&mut self, depth: usize, node: PlanNode) -> usize {
        self.push_draft(depth, node, false)
    }

    /// Pushes a placeholder whose properties are moved onto its only child
    /// when the tree is finished.
    pub fn push_folded(&mut self, depth: usize, properties: Vec<Property>, placeholder: PlanNode) -> usize {
        let mut node = placeholder;
        node.properties = properties;
        self.push_draft(depth, node, true)
    }

    fn push_draft(&mut self, depth: usize, node: PlanNode, fold: bool) -> usize {
        while let Some(&top) = self.open.last() {
            if self.drafts[top].depth >= depth {
                self.open.pop();
            } else {
                break;
            }
        }
        let id = self.drafts.len();
        let parent = self.open.last().copied();
        match parent {
            Some(p) => self.drafts[p].children.push(id),
            None => self.roots.push(id),
        }
        self.drafts.push(Draft {
            node,
            depth,
            parent,
            children: Vec::new(),
            fold,
        });
        self.open.push(id);
        id
    }

    pub fn is_empty(&self) -> bool {
        self.drafts.is_empty()
    }




    /// The innermost open node whose depth is at most `depth`.
    pub fn enclosing(&self, depth: usize) -> Option<usize> {
        self.open.iter().rev().copied().find(|&i| self.drafts[i].depth <= depth)
    }

    pub fn node_mut(&mut self, id: usize) -> &mut PlanNode {
        &mut self.drafts[id].node
    }

    /// Assembles the forest. Children always follow their parent in draft
    /// order, so one reverse sweep builds every subtree bottom-up.
    pub fn finish(self) -> Vec<PlanNode> {
        let n = self.drafts.len();
        let mut built: Vec<Option<PlanNode>> = (0..n).map(|_| None).collect();
        let mut inherited: Vec<Vec<Property>> = (0..n).map(|_| Vec::new()).collect();
        let mut drafts: Vec<Option<Draft>> = self.drafts.into_iter().map(Some).collect();
        for i in (0..n).rev() {
            let draft = drafts[i].take().expect("each draft is visited once");
            let mut node = draft.node;
            node.properties.append(&mut inherited[i]);
            node.children = draft
                .children
                .iter()
                .filter_map(|&c| built[c].take())
                .collect();
            if draft.fold {
                if node.children.len() == 1 {
                    let mut child = node.children.pop().expect("one child");
                    child.properties.append(&mut node.properties);
                    built[i] = Some(child);
                    continue;
                }
                if node.children.is_empty() {
                    if let Some(p) = draft.parent {
                        inherited[p].append(&mut node.properties);
                        continue;
                    }
                }
            }
            built[i] = Some(node);
        }
        self.roots.iter().filter_map(|&r| built[r].take()).collect()
    }
}

//! PostgreSQL `EXPLAIN` output in text and JSON formats.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::{Map, Value};

use super::common::{json_scalar, Ctx, TreeBuilder};
use super::{ConvertError, Dialect};
use crate::ir::text::parse_number;
use crate::ir::{Keyword, PlanNode, Property, PropertyCategory, PropertyValue, UnifiedPlan};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed cost literal `{0}`, expected `cost=<start>..<total>`")]
pub struct PgCostError(pub String);

fn cost_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^cost=(\d+(?:\.\d+)?)\.\.(\d+(?:\.\d+)?)$").unwrap())
}

/// Splits `cost=62998.82..63009.32` into its start and total cost.
pub fn parse_pg_cost(text: &str) -> Result<(f64, f64), PgCostError> {
    let (start, total) = split_cost(text.trim()).ok_or_else(|| PgCostError(text.to_string()))?;
    match (start.parse(), total.parse()) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(PgCostError(text.to_string())),
    }
}

fn split_cost(text: &str) -> Option<(&str, &str)> {
    let caps = cost_regex().captures(text)?;
    Some((caps.get(1)?.as_str(), caps.get(2)?.as_str()))
}

fn literal(text: &str) -> PropertyValue {
    parse_number(text).unwrap_or_else(|| PropertyValue::String(text.to_string()))
}

struct Line<'s> {
    number: usize,
    column: usize,
    text: &'s str,
}

fn content_lines(input: &str) -> Vec<Line<'_>> {
    static ROWS: OnceLock<Regex> = OnceLock::new();
    let rows = ROWS.get_or_init(|| Regex::new(r"^\(\d+ rows?\)$").unwrap());
    let mut out = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let raw = raw.trim_end();
        // psql's aligned output marks wrapped cells with a trailing `+`.
        let raw = raw.strip_suffix('+').map(str::trim_end).unwrap_or(raw);
        let text = raw.trim_start();
        if text.is_empty()
            || text == "QUERY PLAN"
            || (text.len() > 2 && text.bytes().all(|b| b == b'-' || b == b'+'))
            || rows.is_match(text)
        {
            continue;
        }
        out.push(Line {
            number: i + 1,
            column: raw.len() - text.len(),
            text,
        });
    }
    out
}

/// Splits a property line into `key: value` pairs. Several pairs may share a
/// line separated by two or more spaces, as in `Buckets: 1024  Batches: 1`.
fn key_values(text: &str) -> Option<Vec<(&str, &str)>> {
    static KEY: OnceLock<Regex> = OnceLock::new();
    let key = KEY.get_or_init(|| Regex::new(r"^([A-Za-z][A-Za-z0-9 /()_-]*?):(?: +|$)").unwrap());
    let one = |segment: &'_ str| -> Option<(usize, usize)> {
        let caps = key.captures(segment)?;
        Some((caps.get(1)?.end(), caps.get(0)?.end()))
    };
    let segments: Vec<&str> = text.split("  ").map(str::trim).filter(|s| !s.is_empty()).collect();
    if segments.len() > 1 && segments.iter().all(|s| one(s).is_some()) {
        return Some(
            segments
                .iter()
                .map(|s| {
                    let (k, v) = one(s).expect("checked above");
                    (&s[..k], s[v..].trim())
                })
                .collect(),
        );
    }
    let (k, v) = one(text)?;
    Some(vec![(&text[..k], text[v..].trim())])
}

pub(crate) fn convert_text(input: &str, ctx: &mut Ctx<'_>) -> Result<UnifiedPlan, ConvertError> {
    let lines = content_lines(input);
    let mut plan = UnifiedPlan::empty();
    let Some(first) = lines.first() else {
        ctx.warn("input contains no plan lines");
        return Ok(plan);
    };
    let root_column = first.column;
    let mut tree = TreeBuilder::default();
    let mut pending_label: Option<String> = None;
    let mut section: Option<String> = None;

    for line in &lines {
        let syntax = |message: String| ConvertError::Syntax {
            dialect: Dialect::PostgresqlText,
            line: line.number,
            message,
        };
        let is_node = line.text.starts_with("->") || tree.is_empty() && section.is_none();
        if is_node {
            if section.is_some() {
                return Err(syntax("operation after plan-level properties".into()));
            }
            let (depth, body) = match line.text.strip_prefix("->") {
                Some(rest) => (line.column, rest.trim_start()),
                None => (line.column, line.text),
            };
            if !tree.is_empty() && depth <= root_column {
                return Err(syntax("operation is not nested under the root operation".into()));
            }
            let mut node = node_line(body, line.number, ctx).map_err(syntax)?;
            if let Some(label) = pending_label.take() {
                node.properties.push(ctx.property("Subplan Name", label));
            }
            tree.push(depth, node);
            continue;
        }

        if line.column <= root_column || section.is_some() {
            // Plan-level attributes such as `Planning Time: 0.124 ms`, or
            // the indented body of a section like `JIT:`.
            let Some(pairs) = key_values(line.text) else {
                return Err(syntax(format!("expected `Key: value` after the plan tree, found `{}`", line.text)));
            };
            let nested = line.column > root_column;
            for (key, value) in pairs {
                let key = match (&section, nested) {
                    (Some(s), true) => format!("{s} {key}"),
                    _ => key.to_string(),
                };
                if value.is_empty() {
                    section = Some(key);
                } else {
                    if !nested {
                        section = None;
                    }
                    plan.plan_properties.push(ctx.property(&key, value.to_string()));
                }
            }
            continue;
        }

        let owner = tree
            .enclosing(line.column - 1)
            .ok_or_else(|| syntax("property line has no enclosing operation".into()))?;
        if is_subplan_label(line.text) {
            pending_label = Some(line.text.to_string());
            continue;
        }
        let properties: Vec<Property> = match key_values(line.text) {
            Some(pairs) => pairs
                .into_iter()
                .map(|(k, v)| ctx.property(k, v.to_string()))
                .collect(),
            None => vec![Property::new(
                PropertyCategory::Configuration,
                Keyword::new_unchecked("detail"),
                line.text,
            )],
        };
        tree.node_mut(owner).properties.extend(properties);
    }

    if let Some(label) = pending_label {
        ctx.warn(format!("label `{label}` is not followed by an operation"));
    }
    let mut roots = tree.finish();
    plan.root = roots.pop();
    Ok(plan)
}

fn is_subplan_label(text: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(InitPlan|SubPlan|CTE) \S").unwrap())
        .is_match(text)
}

/// Parses `Parallel Seq Scan on t0  (cost=0.00..35.50 rows=2550 width=4)`.
fn node_line(body: &str, line: usize, ctx: &mut Ctx<'_>) -> Result<PlanNode, String> {
    static GROUP: OnceLock<Regex> = OnceLock::new();
    let group = GROUP.get_or_init(|| Regex::new(r"\((cost=|actual |never executed)[^)]*\)?").unwrap());
    let (name, groups) = match group.find(body) {
        Some(m) => (body[..m.start()].trim(), &body[m.start()..]),
        None => (body.trim(), ""),
    };
    if name.is_empty() {
        return Err("operation name is missing".into());
    }
    let (raw_name, mut properties) = decompose_name(name, ctx);
    let mut node = ctx.node(&raw_name);
    for m in group.find_iter(groups) {
        let inner = m.as_str().trim_start_matches('(').trim_end_matches(')');
        group_properties(inner, line, ctx, &mut node.properties)?;
    }
    node.properties.append(&mut properties);
    Ok(node)
}

fn group_properties(inner: &str, line: usize, ctx: &mut Ctx<'_>, out: &mut Vec<Property>) -> Result<(), String> {
    if inner == "never executed" {
        out.push(ctx.property("Never Executed", true));
        return Ok(());
    }
    let (actual, body) = match inner.strip_prefix("actual ") {
        Some(rest) => (true, rest),
        None => (false, inner),
    };
    for token in body.split_whitespace() {
        let (token, truncated) = match token.strip_suffix("...") {
            Some(t) => (t, true),
            None => (token, false),
        };
        if truncated {
            ctx.warn(format!("line {line}: truncated value `{token}...` read leniently"));
        }
        let Some((key, value)) = token.split_once('=') else {
            return Err(format!("unexpected token `{token}` in plan estimates"));
        };
        match (key, actual) {
            ("cost", false) | ("time", true) => {
                let names = if actual {
                    ["Actual Startup Time", "Actual Total Time"]
                } else {
                    ["Startup Cost", "Total Cost"]
                };
                match split_cost(&format!("cost={value}")) {
                    Some((a, b)) => {
                        out.push(ctx.property(names[0], literal(a)));
                        out.push(ctx.property(names[1], literal(b)));
                    }
                    None if truncated => {
                        let start = value.trim_end_matches('.');
                        if parse_number(start).is_none() {
                            return Err(format!("malformed {key} literal `{value}`"));
                        }
                        out.push(ctx.property(names[0], literal(start)));
                    }
                    None => return Err(PgCostError(format!("{key}={value}")).to_string()),
                }
            }
            ("rows", _) | ("width", false) | ("loops", true) => {
                let Some(n) = parse_number(value) else {
                    return Err(format!("malformed {key} literal `{value}`"));
                };
                let raw = match (key, actual) {
                    ("rows", false) => "Plan Rows",
                    ("width", _) => "Plan Width",
                    ("rows", true) => "Actual Rows",
                    _ => "Actual Loops",
                };
                out.push(ctx.property(raw, n));
            }
            _ => out.push(ctx.property(key, value.to_string())),
        }
    }
    Ok(())
}

/// Separates decorations from the operation name: the `Parallel` and
/// `Partial`/`Finalize` prefixes, `Backward`, `using <index>`, `on <relation>
/// [alias]`, join types and set-operation commands.
fn decompose_name(name: &str, ctx: &mut Ctx<'_>) -> (String, Vec<Property>) {
    static USING: OnceLock<Regex> = OnceLock::new();
    static JOIN: OnceLock<Regex> = OnceLock::new();
    static LOOP: OnceLock<Regex> = OnceLock::new();
    static SETOP: OnceLock<Regex> = OnceLock::new();
    let using = USING.get_or_init(|| Regex::new(r"^(.+?)( Backward)? using (\S+)(?: on (.+))?$").unwrap());
    let join = JOIN.get_or_init(|| {
        Regex::new(r"^(Hash|Merge|Set) (?:(Left|Right|Full|Semi|Anti|Right Semi|Right Anti) )?Join$").unwrap()
    });
    let nested = LOOP.get_or_init(|| {
        Regex::new(r"^Nested Loop(?: (Left|Right|Full|Semi|Anti|Right Semi|Right Anti) Join)?$").unwrap()
    });
    let setop = SETOP.get_or_init(|| Regex::new(r"^(HashSetOp|SetOp) (.+)$").unwrap());

    let mut props = Vec::new();
    let mut name = name.trim();
    if let Some(rest) = name.strip_prefix("Parallel ") {
        props.push(ctx.property("Parallel Aware", true));
        name = rest;
    }
    for mode in ["Partial", "Finalize"] {
        if let Some(rest) = name.strip_prefix(mode).and_then(|r| r.strip_prefix(' ')) {
            props.push(ctx.property("Partial Mode", mode));
            name = rest;
        }
    }

    let mut target: Option<&str> = None;
    let mut head = name;
    if let Some(caps) = using.captures(name) {
        head = caps.get(1).map_or(name, |m| m.as_str());
        if caps.get(2).is_some() {
            props.push(ctx.property("Scan Direction", "Backward"));
        }
        props.push(ctx.property("Index Name", caps[3].to_string()));
        target = caps.get(4).map(|m| m.as_str());
    } else if let Some((h, t)) = name.split_once(" on ") {
        head = h;
        target = Some(t);
    }
    let head = head.trim();
    if let Some(t) = target {
        let mut parts = t.split_whitespace();
        if let Some(relation) = parts.next() {
            let key = if head == "Bitmap Index Scan" { "Index Name" } else { "Relation Name" };
            props.push(ctx.property(key, relation.to_string()));
        }
        let alias: Vec<&str> = parts.collect();
        if !alias.is_empty() {
            props.push(ctx.property("Alias", alias.join(" ")));
        }
    }

    let raw = if let Some(caps) = join.captures(head) {
        if let Some(kind) = caps.get(2) {
            props.push(ctx.property("Join Type", kind.as_str().to_string()));
        }
        format!("{} Join", &caps[1])
    } else if let Some(caps) = nested.captures(head) {
        if let Some(kind) = caps.get(1) {
            props.push(ctx.property("Join Type", kind.as_str().to_string()));
        }
        "Nested Loop".to_string()
    } else if let Some(caps) = setop.captures(head) {
        props.push(ctx.property("Command", caps[2].to_string()));
        caps[1].to_string()
    } else {
        head.to_string()
    };
    (raw, props)
}

/// Operation name for a JSON node, reconstructed the way the text format
/// prints it so that both formats share one mapping.
fn json_node_name(obj: &Map<String, Value>) -> Option<String> {
    let node_type = obj.get("Node Type")?.as_str()?;
    let strategy = obj.get("Strategy").and_then(Value::as_str);
    Some(match (node_type, strategy) {
        ("Aggregate", Some("Hashed")) => "HashAggregate".into(),
        ("Aggregate", Some("Sorted")) => "GroupAggregate".into(),
        ("Aggregate", Some("Mixed")) => "MixedAggregate".into(),
        ("SetOp", Some("Hashed")) => "HashSetOp".into(),
        (other, _) => other.into(),
    })
}

const KILOBYTE_KEYS: &[&str] = &[
    "Peak Memory Usage",
    "Memory Usage",
    "Disk Usage",
    "Sort Space Used",
];

fn json_property(key: &str, value: &Value, ctx: &mut Ctx<'_>) -> Property {
    let mut prop = ctx.property(key, json_scalar(value));
    if KILOBYTE_KEYS.contains(&key) && prop.identifier.as_str().ends_with("_bytes") {
        if let Some(kb) = value.as_f64() {
            prop.value = PropertyValue::number(kb * 1024.0);
        }
    }
    prop
}

pub(crate) fn convert_json(input: &str, ctx: &mut Ctx<'_>) -> Result<UnifiedPlan, ConvertError> {
    let structure = |message: &str| ConvertError::Structure {
        dialect: Dialect::PostgresqlJson,
        message: message.to_string(),
    };
    let doc = crate::ir::json::parse_value(input).map_err(|source| ConvertError::Json {
        dialect: Dialect::PostgresqlJson,
        source,
    })?;
    let top = match &doc {
        Value::Array(items) => match items.as_slice() {
            [one] => one,
            [] => return Err(structure("top-level array is empty")),
            _ => return Err(structure("expected exactly one plan in the top-level array")),
        },
        other => other,
    };
    let top = top.as_object().ok_or_else(|| structure("expected an object with a `Plan` key"))?;
    let mut plan = UnifiedPlan::empty();
    for (key, value) in top {
        if key == "Plan" {
            continue;
        }
        plan.plan_properties.push(json_property(key, value, ctx));
    }
    let root = top.get("Plan").ok_or_else(|| structure("missing `Plan` key"))?;

    // Explicit stack: (source object, depth). Nodes come out in pre-order.
    let mut tree = TreeBuilder::default();
    let mut stack: Vec<(&Value, usize)> = vec![(root, 0)];
    while let Some((value, depth)) = stack.pop() {
        let obj = value.as_object().ok_or_else(|| structure("plan node is not an object"))?;
        let name = json_node_name(obj).ok_or_else(|| structure("plan node without a `Node Type` string"))?;
        let mut node = ctx.node(&name);
        for (key, v) in obj {
            if key == "Node Type" || key == "Plans" {
                continue;
            }
            node.properties.push(json_property(key, v, ctx));
        }
        tree.push(depth, node);
        if let Some(children) = obj.get("Plans") {
            let children = children.as_array().ok_or_else(|| structure("`Plans` is not an array"))?;
            for child in children.iter().rev() {
                stack.push((child, depth + 1));
            }
        }
    }
    plan.root = tree.finish().pop();
    Ok(plan)
}

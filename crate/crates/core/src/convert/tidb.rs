//! TiDB `EXPLAIN` output: the bordered or tab-separated table printed by
//! the MySQL client, and `FORMAT='tidb_json'`.
//!
//! The `id` column carries the operator name, a random numeric suffix such
//! as `_5`, an optional `(Build)`/`(Probe)` side and a tree-drawing prefix
//! whose width gives the depth. Operators that the mapping lists only as a
//! property (by default `Selection`) are not nodes: their condition is moved
//! onto their single child.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

use super::common::{json_scalar, Ctx, TreeBuilder};
use super::{ConvertError, Dialect};
use crate::ir::{Keyword, Operation, OperationCategory, PlanNode, Property, PropertyValue, UnifiedPlan};

const EST_ROWS: &str = "estRows";
const DEFAULT_COLUMNS: &[&str] = &["id", "estRows", "task", "access object", "operator info"];

struct Row {
    line: usize,
    depth: usize,
    id: String,
    cells: Vec<(String, String)>,
}

/// Splits the `id` cell into depth and operator id.
fn split_tree_prefix(cell: &str) -> Option<(usize, &str)> {
    let start = cell.find(|c: char| c.is_ascii_alphanumeric())?;
    let prefix = &cell[..start];
    if !prefix.chars().all(|c| matches!(c, ' ' | '│' | '├' | '└' | '─' | '|' | '-' | '`')) {
        return None;
    }
    let width = prefix.chars().count();
    if !width.is_multiple_of(2) {
        return None;
    }
    Some((width / 2, cell[start..].trim_end()))
}

/// Removes the `_<n>` suffix and a trailing `(Build)`/`(Probe)` marker.
fn split_id(id: &str) -> (&str, Option<&str>) {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^(.+?)(?:_\d+)?(?:\((Build|Probe|Seq)\))?$").unwrap());
    match re.captures(id) {
        Some(caps) => (caps.get(1).map_or(id, |m| m.as_str()), caps.get(2).map(|m| m.as_str())),
        None => (id, None),
    }
}

/// Cell text without the client's one-space padding. Leading indentation is
/// kept because it is part of the `id` tree prefix.
fn unpad(cell: &str) -> String {
    cell.strip_prefix(' ').unwrap_or(cell).trim_end().to_string()
}

fn split_bordered(line: &str, borders: &[usize]) -> Option<Vec<String>> {
    let chars: Vec<char> = line.chars().collect();
    if borders.iter().all(|&b| chars.get(b) == Some(&'|')) {
        return Some(
            borders
                .windows(2)
                .map(|w| unpad(&chars[w[0] + 1..w[1]].iter().collect::<String>()))
                .collect(),
        );
    }
    let inner = line.trim().strip_prefix('|')?.strip_suffix('|')?;
    Some(inner.split('|').map(unpad).collect())
}

fn rows_from_text(input: &str, ctx: &mut Ctx<'_>) -> Result<Vec<Row>, ConvertError> {
    let syntax = |line: usize, message: String| ConvertError::Syntax {
        dialect: Dialect::TidbText,
        line,
        message,
    };
    let mut header: Option<Vec<String>> = None;
    let mut borders: Vec<usize> = Vec::new();
    let mut bordered = false;
    let mut rows = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let number = i + 1;
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        if line.trim_start().starts_with("+-") {
            bordered = true;
            if borders.is_empty() {
                let offset = line.chars().take_while(|c| *c == ' ').count();
                borders = line
                    .chars()
                    .enumerate()
                    .filter(|(_, c)| *c == '+')
                    .map(|(i, _)| i)
                    .collect();
                debug_assert!(borders.first() == Some(&offset));
            }
            continue;
        }
        if line.trim_start().starts_with("mysql>") || line.contains(" rows in set") || line.contains(" row in set") {
            continue;
        }
        let cells: Vec<String> = if bordered {
            split_bordered(line, &borders).ok_or_else(|| syntax(number, "row does not match the table border".into()))?
        } else {
            line.split('\t').map(|c| c.to_string()).collect()
        };
        if header.is_none() {
            if cells.first().map(|c| c.trim()) == Some("id") {
                header = Some(cells.iter().map(|c| c.trim().to_string()).collect());
                continue;
            }
            ctx.warn(format!("no header row; assuming columns {}", DEFAULT_COLUMNS.join(", ")));
            header = Some(DEFAULT_COLUMNS.iter().map(|c| c.to_string()).collect());
        }
        let columns = header.as_ref().expect("header set above");
        if cells.len() != columns.len() {
            return Err(syntax(
                number,
                format!("expected {} columns, found {}", columns.len(), cells.len()),
            ));
        }
        let (depth, id) = split_tree_prefix(&cells[0])
            .ok_or_else(|| syntax(number, format!("unreadable tree prefix in `{}`", cells[0].trim_end())))?;
        rows.push(Row {
            line: number,
            depth,
            id: id.to_string(),
            cells: columns[1..]
                .iter()
                .cloned()
                .zip(cells[1..].iter().map(|c| c.trim().to_string()))
                .collect(),
        });
    }
    Ok(rows)
}

/// `table:t, index:idx(c0)` style access objects become separate properties
/// when every part is a known key.
fn access_properties(value: &str, ctx: &mut Ctx<'_>, out: &mut Vec<Property>) -> bool {
    let parts: Vec<(&str, &str)> = value
        .split(", ")
        .filter_map(|part| part.split_once(':'))
        .collect();
    let all_known = !parts.is_empty()
        && parts.len() == value.split(", ").count()
        && parts.iter().all(|(k, _)| matches!(*k, "table" | "index" | "partition"));
    if all_known {
        for (k, v) in parts {
            out.push(ctx.property(k, v.to_string()));
        }
    }
    all_known
}

fn pushed_down_filter(info: &str) -> Option<&str> {
    let start = info.find("pushed down filter:")? + "pushed down filter:".len();
    let rest = &info[start..];
    let end = rest.find(", keep order:").unwrap_or(rest.len());
    Some(rest[..end].trim())
}

fn add_rows(rows: Vec<Row>, ctx: &mut Ctx<'_>) -> Result<Option<PlanNode>, ConvertError> {
    let mut tree = TreeBuilder::default();
    for row in rows {
        let (name, side) = split_id(&row.id);
        if !ctx.knows_operation(name) && ctx.knows_property(name) {
            // An operator the mapping treats as a property of its child.
            let condition = row
                .cells
                .iter()
                .find(|(h, _)| h == "operator info" || h == "operatorInfo")
                .map(|(_, v)| v.clone())
                .unwrap_or_default();
            let mut props = vec![ctx.property(name, condition)];
            if let Some((_, rows)) = row.cells.iter().find(|(h, _)| h == "estRows" || h == "count") {
                let estimate = ctx.property(EST_ROWS, rows.clone());
                props.push(Property::new(
                    estimate.category,
                    Keyword::new_unchecked("filtered_rows"),
                    estimate.value,
                ));
            }
            if let Some(side) = side {
                props.push(ctx.property("side", side));
            }
            let placeholder = PlanNode::new(Operation::new(OperationCategory::Executor, Keyword::sanitize(name)));
            tree.push_folded(row.depth, props, placeholder);
            continue;
        }
        let mut node = ctx.node(name);
        if let Some(side) = side {
            node.properties.push(ctx.property("side", side));
        }
        for (header, value) in &row.cells {
            if value.is_empty() {
                continue;
            }
            match header.as_str() {
                "access object" | "accessObject" => {
                    if !access_properties(value, ctx, &mut node.properties) {
                        node.properties.push(ctx.property(header, value.clone()));
                    }
                }
                "operator info" | "operatorInfo" => {
                    node.properties.push(ctx.property(header, value.clone()));
                    if let Some(filter) = pushed_down_filter(value) {
                        node.properties.push(ctx.property("Selection", filter.to_string()));
                    }
                }
                "count" => node.properties.push(ctx.property(EST_ROWS, value.clone())),
                _ => node.properties.push(ctx.property(header, value.clone())),
            }
        }
        if tree.is_empty() && row.depth != 0 {
            return Err(ConvertError::Syntax {
                dialect: ctx.dialect,
                line: row.line,
                message: "first operator must be the root".into(),
            });
        }
        tree.push(row.depth, node);
    }
    let mut roots = tree.finish();
    if roots.len() > 1 {
        return Err(ConvertError::Structure {
            dialect: ctx.dialect,
            message: format!("expected one root operator, found {}", roots.len()),
        });
    }
    Ok(roots.pop())
}

pub(crate) fn convert_text(input: &str, ctx: &mut Ctx<'_>) -> Result<UnifiedPlan, ConvertError> {
    let rows = rows_from_text(input, ctx)?;
    let mut plan = UnifiedPlan::empty();
    if rows.is_empty() {
        ctx.warn("table has no operator rows");
    }
    plan.root = add_rows(rows, ctx)?;
    Ok(plan)
}

pub(crate) fn convert_json(input: &str, ctx: &mut Ctx<'_>) -> Result<UnifiedPlan, ConvertError> {
    let structure = |message: String| ConvertError::Structure {
        dialect: Dialect::TidbJson,
        message,
    };
    let doc = crate::ir::json::parse_value(input).map_err(|source| ConvertError::Json {
        dialect: Dialect::TidbJson,
        source,
    })?;
    let roots: Vec<&Value> = match &doc {
        Value::Array(items) => items.iter().collect(),
        other => vec![other],
    };
    let mut rows = Vec::new();
    let mut stack: Vec<(&Value, usize)> = roots.into_iter().rev().map(|v| (v, 0)).collect();
    while let Some((value, depth)) = stack.pop() {
        let obj = value
            .as_object()
            .ok_or_else(|| structure("operator is not an object".into()))?;
        let id = obj
            .get("id")
            .and_then(Value::as_str)
            .ok_or_else(|| structure("operator without an `id` string".into()))?;
        let mut cells = Vec::new();
        for (key, v) in obj {
            if key == "id" || key == "subOperators" {
                continue;
            }
            let text = match json_scalar(v) {
                PropertyValue::String(s) => s,
                PropertyValue::Null => String::new(),
                other => crate::ir::text::value_literal(&other),
            };
            cells.push((key.clone(), text));
        }
        rows.push(Row {
            line: 0,
            depth,
            id: id.to_string(),
            cells,
        });
        if let Some(children) = obj.get("subOperators") {
            let children = children
                .as_array()
                .ok_or_else(|| structure("`subOperators` is not an array".into()))?;
            for child in children.iter().rev() {
                stack.push((child, depth + 1));
            }
        }
    }
    let mut plan = UnifiedPlan::empty();
    plan.root = add_rows(rows, ctx)?;
    Ok(plan)
}

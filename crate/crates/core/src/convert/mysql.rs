//! MySQL `EXPLAIN FORMAT=JSON` documents.
//!
//! Operations are object keys (`query_block`, `table`, `nested_loop`,
//! `ordering_operation`, ...) rather than a dedicated field, so the walker
//! asks the mapping which keys denote operations. A `table` access is looked
//! up as `table:<access_type>` first.

use serde_json::{Map, Value};

use super::common::{json_scalar, Ctx, TreeBuilder};
use super::{ConvertError, Dialect};
use crate::ir::{PlanNode, UnifiedPlan};

fn structure(message: impl Into<String>) -> ConvertError {
    ConvertError::Structure {
        dialect: Dialect::MysqlJson,
        message: message.into(),
    }
}

/// An operation object waiting to be expanded.
struct Pending<'v> {
    key: &'v str,
    value: &'v Value,
    depth: usize,
    /// Scalar siblings of `query_block` inside a subquery wrapper.
    extra: Vec<(&'v str, &'v Value)>,
}

fn is_subquery_list(key: &str) -> bool {
    key.ends_with("_subqueries") || key == "query_specifications"
}

pub(crate) fn convert_json(input: &str, ctx: &mut Ctx<'_>) -> Result<UnifiedPlan, ConvertError> {
    let doc = crate::ir::json::parse_value(input).map_err(|source| ConvertError::Json {
        dialect: Dialect::MysqlJson,
        source,
    })?;
    let top = doc.as_object().ok_or_else(|| structure("expected a JSON object"))?;
    let block = top
        .get("query_block")
        .ok_or_else(|| structure("missing top-level `query_block`"))?;
    let block_obj = block.as_object().ok_or_else(|| structure("`query_block` is not an object"))?;
    let mut plan = UnifiedPlan::empty();
    for (key, value) in top {
        if key != "query_block" {
            plan.plan_properties.push(ctx.property(key, json_scalar(value)));
        }
    }

    // The outermost query block is a wrapper: with a single operation inside
    // it, its attributes become plan properties and that operation the root.
    let operations = operation_children(block_obj, ctx);
    let mut tree = TreeBuilder::default();
    let mut stack: Vec<Pending<'_>> = Vec::new();
    if operations.len() == 1 && !is_subquery_list(operations[0].0) {
        for (key, value) in block_obj {
            if key == operations[0].0 {
                continue;
            }
            scalar_properties(key, value, ctx, &mut plan.plan_properties);
        }
        let (key, value) = operations[0];
        stack.push(Pending { key, value, depth: 0, extra: Vec::new() });
    } else {
        stack.push(Pending {
            key: "query_block",
            value: block,
            depth: 0,
            extra: Vec::new(),
        });
    }

    while let Some(p) = stack.pop() {
        let mut children: Vec<Pending<'_>> = Vec::new();
        let node = expand(&p, ctx, &mut children)?;
        tree.push(p.depth, node);
        stack.extend(children.into_iter().rev());
    }
    plan.root = tree.finish().pop();
    Ok(plan)
}

/// Keys of `obj` holding operation objects, in document order.
fn operation_children<'v>(obj: &'v Map<String, Value>, ctx: &Ctx<'_>) -> Vec<(&'v str, &'v Value)> {
    obj.iter()
        .filter(|(k, v)| is_operation(k, v, ctx) || is_subquery_list(k))
        .map(|(k, v)| (k.as_str(), v))
        .collect()
}

fn is_operation(key: &str, value: &Value, ctx: &Ctx<'_>) -> bool {
    match value {
        Value::Object(_) => key == "table" || ctx.knows_operation(key),
        Value::Array(_) => key == "nested_loop",
        _ => false,
    }
}

fn scalar_properties(key: &str, value: &Value, ctx: &mut Ctx<'_>, out: &mut Vec<crate::ir::Property>) {
    match (key, value) {
        ("cost_info", Value::Object(costs)) => {
            for (k, v) in costs {
                out.push(ctx.property(k, json_scalar(v)));
            }
        }
        _ => out.push(ctx.property(key, json_scalar(value))),
    }
}

fn expand<'v>(p: &Pending<'v>, ctx: &mut Ctx<'_>, children: &mut Vec<Pending<'v>>) -> Result<PlanNode, ConvertError> {
    let depth = p.depth + 1;
    if p.key == "nested_loop" {
        let items = p.value.as_array().ok_or_else(|| structure("`nested_loop` is not an array"))?;
        let node = ctx.node("nested_loop");
        for item in items {
            let obj = item
                .as_object()
                .ok_or_else(|| structure("`nested_loop` entry is not an object"))?;
            for (key, value) in operation_children(obj, ctx) {
                push_child(key, value, depth, children)?;
            }
        }
        return Ok(node);
    }

    let obj = p
        .value
        .as_object()
        .ok_or_else(|| structure(format!("`{}` is not an object", p.key)))?;
    let name = match (p.key, obj.get("access_type").and_then(Value::as_str)) {
        ("table", Some(access)) if ctx.knows_operation(&format!("table:{access}")) => format!("table:{access}"),
        (key, _) => key.to_string(),
    };
    let mut node = ctx.node(&name);
    for (key, value) in &p.extra {
        scalar_properties(key, value, ctx, &mut node.properties);
    }
    for (key, value) in obj {
        if is_operation(key, value, ctx) || is_subquery_list(key) {
            push_child(key, value, depth, children)?;
        } else {
            scalar_properties(key, value, ctx, &mut node.properties);
        }
    }
    Ok(node)
}

fn push_child<'v>(key: &'v str, value: &'v Value, depth: usize, children: &mut Vec<Pending<'v>>) -> Result<(), ConvertError> {
    if !is_subquery_list(key) {
        children.push(Pending { key, value, depth, extra: Vec::new() });
        return Ok(());
    }
    let items = value
        .as_array()
        .ok_or_else(|| structure(format!("`{key}` is not an array")))?;
    for item in items {
        let obj = item
            .as_object()
            .ok_or_else(|| structure(format!("`{key}` entry is not an object")))?;
        let block = obj
            .get("query_block")
            .ok_or_else(|| structure(format!("`{key}` entry without `query_block`")))?;
        let extra = obj
            .iter()
            .filter(|(k, _)| k.as_str() != "query_block")
            .map(|(k, v)| (k.as_str(), v))
            .collect();
        children.push(Pending {
            key: "query_block",
            value: block,
            depth,
            extra,
        });
    }
    Ok(())
}

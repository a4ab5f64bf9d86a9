//! SQLite `EXPLAIN QUERY PLAN` output as printed by the sqlite3 shell.
//!
//! Each line is `<prefix>|--<detail>` or `` <prefix>`--<detail> `` where the
//! prefix is made of three-character `|  ` or `   ` groups. The detail line
//! starts with the operation keywords (`SCAN`, `USE TEMP B-TREE`, ...)
//! followed by an object name and clauses such as `USING ...` or `FOR ...`.

use std::sync::OnceLock;

use regex::Regex;

use super::common::{Ctx, TreeBuilder};
use super::{ConvertError, Dialect};
use crate::ir::{Property, UnifiedPlan};

/// Operations whose first detail word names a table or subquery.
const TARGETED: &[&str] = &["SCAN", "SEARCH", "SCAN TABLE", "SEARCH TABLE", "MATERIALIZE", "CO-ROUTINE"];

fn split_marker(line: &str) -> Option<(usize, &str)> {
    let pos = line.find("|--").into_iter().chain(line.find("`--")).min()?;
    let prefix = &line[..pos];
    if !prefix.len().is_multiple_of(3) || !prefix.chars().all(|c| c == ' ' || c == '|') {
        return None;
    }
    Some((pos / 3, line[pos + 3..].trim()))
}

/// Longest mapped operation name that is a whole-word prefix of `detail`.
fn split_operation<'d>(detail: &'d str, names: &[&str]) -> (String, &'d str) {
    for name in names {
        if let Some(rest) = detail.strip_prefix(name) {
            if rest.is_empty() || rest.starts_with(' ') {
                return (name.to_string(), rest.trim());
            }
        }
    }
    // Unknown operation: take the leading upper-case words.
    let end = detail
        .split(' ')
        .take_while(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_uppercase() || c == '-'))
        .map(|w| w.len() + 1)
        .sum::<usize>();
    let end = end.min(detail.len());
    if end == 0 {
        return (detail.to_string(), "");
    }
    (detail[..end].trim().to_string(), detail[end..].trim())
}

fn clause_properties(operation: &str, rest: &str, ctx: &mut Ctx<'_>) -> Vec<Property> {
    static CLAUSES: OnceLock<Regex> = OnceLock::new();
    let clauses = CLAUSES.get_or_init(|| Regex::new(r"^(.*?)\s*(?:\b(USING|FOR)\s+(.*))?$").unwrap());
    static INDEX: OnceLock<Regex> = OnceLock::new();
    let index = INDEX.get_or_init(|| Regex::new(r"^(?:AUTOMATIC )?(?:PARTIAL )?(?:COVERING )?INDEX\b").unwrap());

    let mut out = Vec::new();
    if rest.is_empty() {
        return out;
    }
    let caps = clauses.captures(rest).expect("pattern matches any text");
    let lead = caps.get(1).map_or("", |m| m.as_str()).trim();
    if !lead.is_empty() {
        if TARGETED.contains(&operation) {
            let mut words = lead.split_whitespace();
            if let Some(object) = words.next() {
                out.push(ctx.property("object", object.to_string()));
            }
            let tail: Vec<&str> = words.collect();
            match tail.as_slice() {
                [] => {}
                ["AS", alias] => out.push(ctx.property("alias", alias.to_string())),
                other => out.push(ctx.property("detail", other.join(" "))),
            }
        } else {
            out.push(ctx.property("detail", lead.to_string()));
        }
    }
    if let (Some(keyword), Some(body)) = (caps.get(2), caps.get(3)) {
        let body = body.as_str().trim();
        let key = match keyword.as_str() {
            "USING" if index.is_match(body) => "USING INDEX",
            k => k,
        };
        out.push(ctx.property(key, body.to_string()));
    }
    out
}

pub(crate) fn convert_text(input: &str, ctx: &mut Ctx<'_>) -> Result<UnifiedPlan, ConvertError> {
    let names = ctx.operation_names();
    let mut tree = TreeBuilder::default();
    let mut header = false;
    for (i, raw) in input.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if line.trim() == "QUERY PLAN" {
            header = true;
            continue;
        }
        let (depth, detail) = split_marker(line).ok_or_else(|| ConvertError::Syntax {
            dialect: Dialect::SqliteText,
            line: i + 1,
            message: format!("unreadable tree prefix in `{line}`"),
        })?;
        if tree.is_empty() && depth != 0 {
            return Err(ConvertError::Syntax {
                dialect: Dialect::SqliteText,
                line: i + 1,
                message: "first line must be at the outermost level".into(),
            });
        }
        let (operation, rest) = split_operation(detail, &names);
        let mut node = ctx.node(&operation);
        node.properties = clause_properties(&operation, rest, ctx);
        tree.push(depth, node);
    }
    let mut roots = tree.finish();
    let mut plan = UnifiedPlan::empty();
    plan.root = match roots.len() {
        0 => None,
        1 => roots.pop(),
        _ => {
            // Several top-level steps hang off the `QUERY PLAN` header.
            if !header {
                ctx.warn("several top-level steps without a QUERY PLAN header; grouping them under one root");
            }
            let mut root = ctx.node("QUERY PLAN");
            root.children = roots;
            Some(root)
        }
    };
    Ok(plan)
}

use std::fmt::Write;

use super::{category_color, check, property_parts, RenderError, RenderOptions};
use crate::ir::{OperationCategory, PlanNode, Property, UnifiedPlan};

const STYLE: &str = "body{font-family:Helvetica,Arial,sans-serif;margin:1.5em;color:#222}
ul.plan,ul.plan ul{list-style:none;padding-left:1.4em;margin:0}
ul.plan{padding-left:0}
li.node{margin:.3em 0}
li.node>details>summary{cursor:pointer;display:inline-block;border:1px solid #666;border-radius:3px;padding:.2em .5em;background:#fff}
li.node.unknown>details>summary{border-style:dashed}
.badge{display:inline-block;font-size:.75em;font-weight:bold;padding:.1em .4em;border-radius:3px;margin-right:.4em}
.name{font-weight:bold}
table.props{border-collapse:collapse;margin:.2em 0 .2em 1.4em;font-size:.85em}
table.props td{padding:0 .6em 0 0;vertical-align:top}
table.props td.key{color:#555}
.empty{font-style:italic;color:#777}
";

fn escape(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c if c.is_control() && c != '\n' && c != '\t' => out.push('\u{fffd}'),
            c => out.push(c),
        }
    }
}

fn properties_table(out: &mut String, properties: &[Property], opts: &RenderOptions) {
    if properties.is_empty() {
        return;
    }
    out.push_str("<table class=\"props\">");
    for p in properties {
        let (name, value) = property_parts(p, opts);
        out.push_str("<tr><td class=\"key\">");
        escape(out, &name);
        out.push_str("</td><td>");
        escape(out, &value);
        out.push_str("</td></tr>");
    }
    out.push_str("</table>\n");
}

fn badge(out: &mut String, category: OperationCategory, opts: &RenderOptions) {
    if opts.color_by_category {
        let _ = write!(
            out,
            "<span class=\"badge\" style=\"background:{}\">{category}</span>",
            category_color(category)
        );
    } else {
        let _ = write!(out, "<span class=\"badge\">{category}</span>");
    }
}

enum Step<'a> {
    Open(&'a PlanNode),
    Close,
}

fn tree(out: &mut String, root: &PlanNode, opts: &RenderOptions) {
    out.push_str("<ul class=\"plan\">\n");
    let mut stack = vec![Step::Open(root)];
    while let Some(step) = stack.pop() {
        let node = match step {
            Step::Close => {
                out.push_str("</ul>\n</details></li>\n");
                continue;
            }
            Step::Open(node) => node,
        };
        let class = if opts.is_unknown(&node.operation) { "node unknown" } else { "node" };
        let _ = write!(out, "<li class=\"{class}\"><details open><summary>");
        badge(out, node.operation.category, opts);
        out.push_str("<span class=\"name\">");
        escape(out, &node.operation.identifier.display());
        out.push_str("</span></summary>\n");
        if opts.show_properties {
            properties_table(out, &node.properties, opts);
        }
        if node.children.is_empty() {
            out.push_str("</details></li>\n");
        } else {
            out.push_str("<ul>\n");
            stack.push(Step::Close);
            stack.extend(node.children.iter().rev().map(Step::Open));
        }
    }
    out.push_str("</ul>\n");
}

pub fn to_html(plan: &UnifiedPlan, opts: &RenderOptions) -> Result<String, RenderError> {
    check(plan, opts)?;
    let mut out = String::from("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<title>Query plan</title>\n<style>\n");
    out.push_str(STYLE);
    out.push_str("</style>\n</head>\n<body>\n<h1>Query plan");
    if let Some(dialect) = &plan.dialect {
        out.push_str(" <small>(");
        escape(&mut out, dialect);
        out.push_str(")</small>");
    }
    out.push_str("</h1>\n");
    match &plan.root {
        Some(root) => tree(&mut out, root, opts),
        None => out.push_str("<p class=\"empty\">empty plan</p>\n"),
    }
    if opts.show_properties && !plan.plan_properties.is_empty() {
        out.push_str("<h2>Plan properties</h2>\n");
        properties_table(&mut out, &plan.plan_properties, opts);
    }
    out.push_str("</body>\n</html>\n");
    Ok(out)
}

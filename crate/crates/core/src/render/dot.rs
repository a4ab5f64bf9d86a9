use std::fmt::Write;

use super::{category_color, check, node_title, property_parts, RenderError, RenderOptions};
use crate::ir::{Property, UnifiedPlan};

/// Quoted-string body for a DOT attribute. Line breaks inside text become
/// spaces so that only the emitter's own `\l` and `\n` escapes break lines.
fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if c.is_control() => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

fn property_lines(out: &mut String, properties: &[Property], opts: &RenderOptions) {
    for p in properties {
        let (name, value) = property_parts(p, opts);
        let _ = write!(out, "{}: {}\\l", escape(&name), escape(&value));
    }
}

pub fn to_dot(plan: &UnifiedPlan, opts: &RenderOptions) -> Result<String, RenderError> {
    check(plan, opts)?;
    let mut out = String::from("digraph plan {\n");
    out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    if opts.show_properties && !plan.plan_properties.is_empty() {
        let mut label = String::new();
        property_lines(&mut label, &plan.plan_properties, opts);
        let _ = writeln!(out, "  labelloc=t;\n  labeljust=l;\n  label=\"{label}\";");
    }

    let Some(root) = &plan.root else {
        out.push_str("  n0 [label=\"empty plan\", style=\"dotted\"];\n}\n");
        return Ok(out);
    };

    let mut next_id = 0usize;
    let mut stack = vec![(root, None::<usize>)];
    while let Some((node, parent)) = stack.pop() {
        let id = next_id;
        next_id += 1;
        let mut label = escape(&node_title(&node.operation));
        if opts.show_properties && !node.properties.is_empty() {
            label.push_str("\\n");
            property_lines(&mut label, &node.properties, opts);
        }
        let mut style = Vec::new();
        if opts.color_by_category {
            style.push("filled");
        }
        if opts.is_unknown(&node.operation) {
            style.push("dashed");
        }
        let _ = write!(out, "  n{id} [label=\"{label}\"");
        if !style.is_empty() {
            let _ = write!(out, ", style=\"{}\"", style.join(","));
        }
        if opts.color_by_category {
            let _ = write!(out, ", fillcolor=\"{}\"", category_color(node.operation.category));
        }
        out.push_str("];\n");
        if let Some(parent) = parent {
            let _ = writeln!(out, "  n{parent} -> n{id};");
        }
        stack.extend(node.children.iter().rev().map(|c| (c, Some(id))));
    }
    out.push_str("}\n");
    Ok(out)
}

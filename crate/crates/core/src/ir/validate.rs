use std::fmt;

use super::{keyword_violation, PlanNode, Property, PropertyValue, UnifiedPlan};

/// One grammar breach, located by a slash-separated path such as
/// `root/0/2.properties[1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub(crate) fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks a plan against the grammar. An empty result means the plan is valid.
pub fn validate(plan: &UnifiedPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    check_properties("plan", &plan.plan_properties, &mut out);
    if let Some(root) = &plan.root {
        let mut stack: Vec<(&PlanNode, String)> = vec![(root, "root".to_string())];
        while let Some((node, path)) = stack.pop() {
            if let Some(msg) = keyword_violation(node.operation.identifier.as_str()) {
                out.push(Violation::new(
                    format!("{path}.operation"),
                    format!("{msg} (`{}`)", node.operation.identifier.as_str()),
                ));
            }
            check_properties(&path, &node.properties, &mut out);
            for (i, child) in node.children.iter().enumerate().rev() {
                stack.push((child, format!("{path}/{i}")));
            }
        }
    }
    out
}

fn check_properties(path: &str, properties: &[Property], out: &mut Vec<Violation>) {
    for (i, p) in properties.iter().enumerate() {
        let at = format!("{path}.properties[{i}]");
        if let Some(msg) = keyword_violation(p.identifier.as_str()) {
            out.push(Violation::new(
                at.clone(),
                format!("{msg} (`{}`)", p.identifier.as_str()),
            ));
        }
        if let PropertyValue::Float(x) = p.value {
            if !x.is_finite() {
                out.push(Violation::new(at, format!("number must be finite, got {x}")));
            }
        }
    }
}

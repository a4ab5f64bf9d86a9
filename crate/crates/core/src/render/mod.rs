//! Static visualizations: Graphviz DOT and a self-contained HTML page.
//!
//! Both emitters draw one box per [`PlanNode`](crate::ir::PlanNode), labeled
//! `Category->Identifier` with its properties underneath, and color it by
//! operation category. Operations missing from
//! [`RenderOptions::known_operations`] get a dashed border.

mod dot;
mod html;

use std::collections::BTreeSet;

use crate::ir::{validate, InvalidPlan, Operation, OperationCategory, Property, PropertyCategory};

pub use dot::to_dot;
pub use html::to_html;

pub const MIN_VALUE_LENGTH: usize = 8;
pub const ELLIPSIS: char = '…';

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub show_properties: bool,
    /// Values longer than this many characters are cut and end in `…`.
    pub max_value_length: usize,
    pub color_by_category: bool,
    /// When set, operations outside the set are drawn dashed.
    pub known_operations: Option<BTreeSet<Operation>>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            show_properties: true,
            max_value_length: 48,
            color_by_category: true,
            known_operations: None,
        }
    }
}

impl RenderOptions {
    pub fn with_known_operations(mut self, known: BTreeSet<Operation>) -> Self {
        self.known_operations = Some(known);
        self
    }

    fn is_unknown(&self, op: &Operation) -> bool {
        self.known_operations.as_ref().is_some_and(|k| !k.contains(op))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error(transparent)]
    InvalidPlan(#[from] InvalidPlan),
    #[error("max_value_length must be at least {MIN_VALUE_LENGTH}, got {0}")]
    ValueLength(usize),
}

fn check(plan: &crate::ir::UnifiedPlan, opts: &RenderOptions) -> Result<(), RenderError> {
    if opts.max_value_length < MIN_VALUE_LENGTH {
        return Err(RenderError::ValueLength(opts.max_value_length));
    }
    let violations = validate(plan);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(InvalidPlan(violations).into())
    }
}

/// Fill color for each operation category.
pub fn category_color(category: OperationCategory) -> &'static str {
    match category {
        OperationCategory::Producer => "#a6cee3",
        OperationCategory::Combinator => "#b2df8a",
        OperationCategory::Join => "#fb9a99",
        OperationCategory::Folder => "#fdbf6f",
        OperationCategory::Executor => "#cab2d6",
        OperationCategory::Projector => "#ffff99",
        OperationCategory::Consumer => "#d9d9d9",
    }
}

/// Cuts `s` to at most `max` characters, the last one being `…`.
pub fn elide(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        return s.to_string();
    }
    let mut out: String = s.chars().take(max.saturating_sub(1)).collect();
    out.push(ELLIPSIS);
    out
}

/// `name` and display value of a property, the value elided.
fn property_parts(p: &Property, opts: &RenderOptions) -> (String, String) {
    let name = if p.category == PropertyCategory::Configuration {
        p.identifier.display()
    } else {
        format!("{}->{}", p.category, p.identifier.display())
    };
    (name, elide(&p.value.to_string(), opts.max_value_length))
}

fn node_title(op: &Operation) -> String {
    format!("{}->{}", op.category, op.identifier.display())
}

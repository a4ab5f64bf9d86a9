//! JSON form of a plan.
//!
//! ```json
//! {"plan_properties":[...],"root":{"operation":{"category":"Producer","identifier":"Full_Table_Scan"},"properties":[],"children":[]}}
//! ```
//!
//! Keys are emitted in a fixed order. Unknown keys are ignored on input and
//! reported as warnings on the parsed plan.

use serde::Deserialize;
use serde_json::{Map, Number, Value};

use super::{
    keyword_violation, validate, InvalidPlan, Keyword, Operation, OperationCategory, PlanNode,
    Property, PropertyCategory, PropertyValue, UnifiedPlan, Violation,
};

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] InvalidPlan),
}

pub fn serialize_json(plan: &UnifiedPlan) -> Result<String, InvalidPlan> {
    let violations = validate(plan);
    if !violations.is_empty() {
        return Err(InvalidPlan(violations));
    }
    Ok(plan_to_value(plan).to_string())
}

pub(crate) fn plan_to_value(plan: &UnifiedPlan) -> Value {
    let mut top = Map::new();
    top.insert("plan_properties".into(), properties_to_value(&plan.plan_properties));
    top.insert(
        "root".into(),
        plan.root.as_ref().map_or(Value::Null, node_to_value),
    );
    if let Some(d) = &plan.dialect {
        top.insert("dialect".into(), Value::String(d.clone()));
    }
    Value::Object(top)
}

fn node_to_value(node: &PlanNode) -> Value {
    let mut op = Map::new();
    op.insert("category".into(), node.operation.category.as_str().into());
    op.insert("identifier".into(), node.operation.identifier.as_str().into());
    let mut obj = Map::new();
    obj.insert("operation".into(), Value::Object(op));
    obj.insert("properties".into(), properties_to_value(&node.properties));
    obj.insert(
        "children".into(),
        Value::Array(node.children.iter().map(node_to_value).collect()),
    );
    Value::Object(obj)
}

fn properties_to_value(props: &[Property]) -> Value {
    Value::Array(
        props
            .iter()
            .map(|p| {
                let mut obj = Map::new();
                obj.insert("category".into(), p.category.as_str().into());
                obj.insert("identifier".into(), p.identifier.as_str().into());
                obj.insert("value".into(), value_to_json(&p.value));
                Value::Object(obj)
            })
            .collect(),
    )
}

fn value_to_json(v: &PropertyValue) -> Value {
    match v {
        PropertyValue::String(s) => Value::String(s.clone()),
        PropertyValue::Int(i) => Value::Number((*i).into()),
        PropertyValue::Float(f) => Number::from_f64(*f).map_or(Value::Null, Value::Number),
        PropertyValue::Bool(b) => Value::Bool(*b),
        PropertyValue::Null => Value::Null,
    }
}

/// Parses JSON without a nesting limit; deep plans are limited only by memory.
pub(crate) fn parse_value(input: &str) -> Result<Value, serde_json::Error> {
    let mut de = serde_json::Deserializer::from_str(input);
    de.disable_recursion_limit();
    let value = Value::deserialize(serde_stacker::Deserializer::new(&mut de))?;
    de.end()?;
    Ok(value)
}

pub fn parse_unified_json(input: &str) -> Result<UnifiedPlan, JsonError> {
    let value = parse_value(input)?;
    let mut loader = Loader::default();
    let plan = loader.plan(&value)?;
    if !loader.violations.is_empty() {
        return Err(InvalidPlan(loader.violations).into());
    }
    let rest = validate(&plan);
    if !rest.is_empty() {
        return Err(InvalidPlan(rest).into());
    }
    Ok(plan)
}

/// Loads a unified-JSON document without the typed constructors and reports
/// every grammar breach, including category names outside the closed sets.
/// Structural schema errors (missing keys, wrong JSON types) are still errors.
pub fn validate_unified_json(input: &str) -> Result<Vec<Violation>, JsonError> {
    let value = parse_value(input)?;
    let mut loader = Loader::default();
    let plan = loader.plan(&value)?;
    let mut violations = loader.violations;
    if violations.is_empty() {
        violations = validate(&plan);
    }
    Ok(violations)
}

#[derive(Default)]
struct Loader {
    violations: Vec<Violation>,
    warnings: Vec<String>,
}

fn schema(path: &str, message: impl Into<String>) -> JsonError {
    JsonError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

impl Loader {
    fn plan(&mut self, value: &Value) -> Result<UnifiedPlan, JsonError> {
        let obj = value
            .as_object()
            .ok_or_else(|| schema("$", "top level must be an object"))?;
        let props = obj
            .get("plan_properties")
            .ok_or_else(|| schema("$", "missing required key plan_properties"))?;
        let root = obj
            .get("root")
            .ok_or_else(|| schema("$", "missing required key root"))?;
        let mut plan = UnifiedPlan::empty();
        plan.plan_properties = self.properties("$.plan_properties", props)?;
        if !root.is_null() {
            plan.root = Some(self.node("$.root", root)?);
        }
        match obj.get("dialect") {
            None | Some(Value::Null) => {}
            Some(Value::String(d)) => plan.dialect = Some(d.clone()),
            Some(_) => return Err(schema("$.dialect", "dialect must be a string")),
        }
        self.ignore_extra("$", obj, &["plan_properties", "root", "dialect"]);
        plan.warnings = std::mem::take(&mut self.warnings);
        Ok(plan)
    }

    fn node(&mut self, path: &str, value: &Value) -> Result<PlanNode, JsonError> {
        let obj = value
            .as_object()
            .ok_or_else(|| schema(path, "node must be an object"))?;
        let op = obj
            .get("operation")
            .ok_or_else(|| schema(path, "missing required key operation"))?;
        let operation = self.operation(&format!("{path}.operation"), op)?;
        let properties = match obj.get("properties") {
            Some(p) => self.properties(&format!("{path}.properties"), p)?,
            None => return Err(schema(path, "missing required key properties")),
        };
        let children = match obj.get("children") {
            Some(Value::Array(c)) => c,
            Some(_) => {
                return Err(schema(
                    &format!("{path}.children"),
                    "children must be an array",
                ))
            }
            None => return Err(schema(path, "missing required key children")),
        };
        self.ignore_extra(path, obj, &["operation", "properties", "children"]);
        let mut node = PlanNode::new(operation);
        node.properties = properties;
        for (i, c) in children.iter().enumerate() {
            node.children
                .push(self.node(&format!("{path}.children[{i}]"), c)?);
        }
        Ok(node)
    }

    fn operation(&mut self, path: &str, value: &Value) -> Result<Operation, JsonError> {
        let obj = value
            .as_object()
            .ok_or_else(|| schema(path, "operation must be an object"))?;
        let category = self.string_field(path, obj, "category")?;
        let identifier = self.string_field(path, obj, "identifier")?;
        self.ignore_extra(path, obj, &["category", "identifier"]);
        let category = match category.parse::<OperationCategory>() {
            Ok(c) => c,
            Err(e) => {
                self.violations.push(Violation::new(path, e.to_string()));
                OperationCategory::Executor
            }
        };
        Ok(Operation::new(category, self.keyword(path, identifier)))
    }

    fn properties(&mut self, path: &str, value: &Value) -> Result<Vec<Property>, JsonError> {
        let items = value
            .as_array()
            .ok_or_else(|| schema(path, "properties must be an array"))?;
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let at = format!("{path}[{i}]");
            let obj = item
                .as_object()
                .ok_or_else(|| schema(&at, "property must be an object"))?;
            let category = self.string_field(&at, obj, "category")?;
            let identifier = self.string_field(&at, obj, "identifier")?;
            let raw = obj
                .get("value")
                .ok_or_else(|| schema(&at, "missing required key value"))?;
            self.ignore_extra(&at, obj, &["category", "identifier", "value"]);
            let category = match category.parse::<PropertyCategory>() {
                Ok(c) => c,
                Err(e) => {
                    self.violations.push(Violation::new(&at, e.to_string()));
                    PropertyCategory::Configuration
                }
            };
            let value = match raw {
                Value::Null => PropertyValue::Null,
                Value::Bool(b) => PropertyValue::Bool(*b),
                Value::String(s) => PropertyValue::String(s.clone()),
                Value::Number(n) => match n.as_i64() {
                    Some(i) => PropertyValue::Int(i),
                    None => PropertyValue::Float(n.as_f64().unwrap_or(f64::NAN)),
                },
                _ => return Err(schema(&at, "value must be a string, number, boolean or null")),
            };
            let identifier = self.keyword(&at, identifier);
            out.push(Property::new(category, identifier, value));
        }
        Ok(out)
    }

    fn keyword(&mut self, path: &str, text: &str) -> Keyword {
        if let Some(msg) = keyword_violation(text) {
            self.violations
                .push(Violation::new(path, format!("{msg} (`{text}`)")));
        }
        Keyword::new_unchecked(text)
    }

    fn string_field<'v>(
        &self,
        path: &str,
        obj: &'v Map<String, Value>,
        key: &str,
    ) -> Result<&'v str, JsonError> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(schema(path, format!("{key} must be a string"))),
            None => Err(schema(path, format!("missing required key {key}"))),
        }
    }

    fn ignore_extra(&mut self, path: &str, obj: &Map<String, Value>, known: &[&str]) {
        for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
            self.warnings
                .push(format!("ignored unknown key `{key}` at {path}"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::OperationCategory::*;
    use crate::ir::PropertyCategory::*;

    #[test]
    fn minimal_plan_layout() {
        let plan = UnifiedPlan::new(PlanNode::op(Producer, "Full_Table_Scan"));
        assert_eq!(
            serialize_json(&plan).unwrap(),
            r#"{"plan_properties":[],"root":{"operation":{"category":"Producer","identifier":"Full_Table_Scan"},"properties":[],"children":[]}}"#
        );
    }

    #[test]
    fn planning_time_keeps_precision() {
        let plan = UnifiedPlan::empty().with_plan_property(Status, "planning_time_ms", 0.124);
        let json = serialize_json(&plan).unwrap();
        assert!(json.contains(r#""value":0.124"#), "{json}");
        assert_eq!(parse_unified_json(&json).unwrap(), plan);
    }

    #[test]
    fn integers_and_floats_keep_their_kind() {
        let plan = UnifiedPlan::new(
            PlanNode::op(Producer, "Scan")
                .with_property(Cardinality, "estimated_rows", 9_007_199_254_740_992i64)
                .with_property(Cost, "cost_total", 5.0),
        );
        let json = serialize_json(&plan).unwrap();
        assert!(json.contains("9007199254740992"));
        assert!(json.contains("5.0"));
        assert_eq!(parse_unified_json(&json).unwrap(), plan);
    }

    #[test]
    fn unknown_node_key_is_a_warning() {
        let json = r#"{"plan_properties":[],"root":{"operation":{"category":"Join","identifier":"LLM_Join"},"properties":[],"children":[],"llm_join_hint":"x"}}"#;
        let plan = parse_unified_json(json).unwrap();
        assert_eq!(plan.warnings.len(), 1);
        assert!(plan.warnings[0].contains("llm_join_hint"));
        assert_eq!(plan.root.unwrap().operation.identifier.as_str(), "LLM_Join");
    }

    #[test]
    fn empty_object_reports_missing_key() {
        let err = parse_unified_json("{}").unwrap_err();
        assert!(err.to_string().contains("missing required key plan_properties"), "{err}");
    }

    #[test]
    fn unknown_category_is_a_violation() {
        let json = r#"{"plan_properties":[],"root":{"operation":{"category":"Scanner","identifier":"Scan"},"properties":[],"children":[]}}"#;
        let v = validate_unified_json(json).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("Scanner"));
        assert!(matches!(parse_unified_json(json), Err(JsonError::Invalid(_))));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse_unified_json("[1"), Err(JsonError::Malformed(_))));
        let bad_value = r#"{"plan_properties":[{"category":"Cost","identifier":"c","value":[1]}],"root":null}"#;
        assert!(matches!(parse_unified_json(bad_value), Err(JsonError::Schema { .. })));
        let no_children = r#"{"plan_properties":[],"root":{"operation":{"category":"Producer","identifier":"S"},"properties":[]}}"#;
        assert!(parse_unified_json(no_children).unwrap_err().to_string().contains("children"));
    }

    #[test]
    fn dialect_round_trips_as_metadata() {
        let mut plan = UnifiedPlan::new(PlanNode::op(Producer, "Scan"));
        plan.dialect = Some("sqlite_text".into());
        let json = serialize_json(&plan).unwrap();
        assert!(json.ends_with(r#","dialect":"sqlite_text"}"#));
        assert_eq!(parse_unified_json(&json).unwrap().dialect.as_deref(), Some("sqlite_text"));
    }

    #[test]
    fn deep_nesting_is_accepted() {
        let mut node = PlanNode::op(Producer, "Scan");
        for _ in 0..300 {
            node = PlanNode::op(Executor, "Wrap").with_child(node);
        }
        let plan = UnifiedPlan::new(node);
        let json = serialize_json(&plan).unwrap();
        assert_eq!(parse_unified_json(&json).unwrap(), plan);
    }
}

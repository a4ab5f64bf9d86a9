//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function takes plain strings and returns a string, so the
//! page needs no serialization glue beyond `JSON.parse`.

use serde_json::json;
use wasm_bindgen::prelude::*;

use uplan::analysis::{diff, fingerprint, FingerprintPolicy};
use uplan::convert::{convert, Dialect, DialectMapping};
use uplan::ir::{serialize_json, serialize_text, TextStyle, UnifiedPlan};
use uplan::render::{to_dot, to_html, RenderOptions};

const SAMPLES: &[(&str, &str)] = &[
    ("postgresql_text", include_str!("../../core/fixtures/postgresql_text/listing1.txt")),
    ("postgresql_json", include_str!("../../core/fixtures/postgresql_json/fig3.json")),
    ("mysql_json", include_str!("../../core/fixtures/mysql_json/fig3.json")),
    ("tidb_text", include_str!("../../core/fixtures/tidb_text/fig3.txt")),
    ("tidb_json", include_str!("../../core/fixtures/tidb_json/fig3.json")),
    ("sqlite_text", include_str!("../../core/fixtures/sqlite_text/listing1.txt")),
];

fn load(dialect: &str, input: &str) -> Result<UnifiedPlan, String> {
    let dialect: Dialect = dialect.parse().map_err(|e: uplan::convert::UnknownDialect| e.to_string())?;
    convert(dialect, input, &DialectMapping::builtin()).map_err(|e| e.to_string())
}

/// `{"pretty", "canonical", "json", "warnings"}` for one raw plan.
pub fn convert_to_json(dialect: &str, input: &str) -> Result<String, String> {
    let plan = load(dialect, input)?;
    let err = |e: uplan::ir::InvalidPlan| e.to_string();
    Ok(json!({
        "pretty": serialize_text(&plan, TextStyle::Pretty).map_err(err)?,
        "canonical": serialize_text(&plan, TextStyle::Canonical).map_err(err)?,
        "json": serialize_json(&plan).map_err(err)?,
        "warnings": plan.warnings,
    })
    .to_string())
}

/// HTML page or DOT source for one raw plan.
pub fn render(dialect: &str, input: &str, format: &str) -> Result<String, String> {
    let plan = load(dialect, input)?;
    let opts = RenderOptions::default().with_known_operations(DialectMapping::builtin().known_operations());
    match format {
        "html" => to_html(&plan, &opts),
        "dot" => to_dot(&plan, &opts),
        other => return Err(format!("unknown format `{other}`; expected html or dot")),
    }
    .map_err(|e| e.to_string())
}

/// Fingerprints of both plans and their diff report.
pub fn compare(dialect_a: &str, input_a: &str, dialect_b: &str, input_b: &str) -> Result<String, String> {
    let a = load(dialect_a, input_a)?;
    let b = load(dialect_b, input_b)?;
    let policy = FingerprintPolicy::default();
    let fa = fingerprint(&a, &policy).map_err(|e| e.to_string())?;
    let fb = fingerprint(&b, &policy).map_err(|e| e.to_string())?;
    let report: serde_json::Value = serde_json::from_str(&diff(&a, &b).to_json()).expect("report is JSON");
    Ok(json!({
        "digest_a": fa.digest,
        "digest_b": fb.digest,
        "same_structure": fa.digest == fb.digest,
        "diff": report,
    })
    .to_string())
}

pub fn sample(dialect: &str) -> Option<&'static str> {
    SAMPLES.iter().find(|(d, _)| *d == dialect).map(|(_, s)| *s)
}

#[wasm_bindgen(js_name = convertPlan)]
pub fn convert_plan(dialect: &str, input: &str) -> Result<String, JsError> {
    convert_to_json(dialect, input).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = renderPlan)]
pub fn render_plan(dialect: &str, input: &str, format: &str) -> Result<String, JsError> {
    render(dialect, input, format).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = comparePlans)]
pub fn compare_plans(dialect_a: &str, input_a: &str, dialect_b: &str, input_b: &str) -> Result<String, JsError> {
    compare(dialect_a, input_a, dialect_b, input_b).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = samplePlan)]
pub fn sample_plan(dialect: &str) -> String {
    sample(dialect).unwrap_or_default().to_string()
}

#[wasm_bindgen]
pub fn dialects() -> String {
    Dialect::ALL.iter().map(|d| d.as_str()).collect::<Vec<_>>().join(",")
}

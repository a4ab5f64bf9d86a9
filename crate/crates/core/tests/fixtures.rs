//! Golden conversions: every `fixtures/<dialect>/<name>.{txt,json}` must
//! convert to the plan stored next to it in `<name>.expected.json`.
//!
//! Set `UPLAN_BLESS=1` to rewrite the expected files after reviewing a change.

use std::fs;
use std::path::{Path, PathBuf};

use uplan::convert::{convert, Dialect, DialectMapping};
use uplan::ir::{parse_unified_json, parse_unified_text, serialize_json, validate, UnifiedPlan};

fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn inputs(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            !name.ends_with(".expected.json") && (name.ends_with(".txt") || name.ends_with(".json"))
        })
        .collect();
    files.sort();
    files
}

fn expected_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().unwrap().to_string_lossy();
    input.with_file_name(format!("{stem}.expected.json"))
}

fn check(input: &Path, plan: &UnifiedPlan) {
    assert!(validate(plan).is_empty(), "{}: {:?}", input.display(), validate(plan));
    let expected = expected_path(input);
    let json = serialize_json(plan).unwrap();
    if std::env::var_os("UPLAN_BLESS").is_some() {
        fs::write(&expected, format!("{json}\n")).unwrap();
        return;
    }
    let stored = fs::read_to_string(&expected)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPLAN_BLESS=1 to create it)", expected.display()));
    let stored_plan = parse_unified_json(&stored).unwrap();
    assert_eq!(plan, &stored_plan, "{} differs from {}", input.display(), expected.display());
}

#[test]
fn dialect_fixtures_match_expected_plans() {
    let mapping = DialectMapping::builtin();
    let mut seen = 0;
    for dialect in Dialect::ALL {
        let dir = fixture_root().join(dialect.as_str());
        if !dir.is_dir() {
            continue;
        }
        for input in inputs(&dir) {
            let text = fs::read_to_string(&input).unwrap();
            let plan = convert(*dialect, &text, &mapping)
                .unwrap_or_else(|e| panic!("{}: {e}", input.display()));
            check(&input, &plan);
            seen += 1;
        }
    }
    assert!(seen >= 7, "only {seen} dialect fixtures found");
}

#[test]
fn unified_text_fixtures_match_expected_plans() {
    for input in inputs(&fixture_root().join("unified")) {
        let text = fs::read_to_string(&input).unwrap();
        let plan = parse_unified_text(&text).unwrap_or_else(|e| panic!("{}: {e}", input.display()));
        check(&input, &plan);
    }
}

#[test]
fn every_row_estimate_becomes_one_estimated_rows() {
    use uplan::ir::PropertyCategory;
    let mapping = DialectMapping::builtin();
    let cases = [
        (Dialect::PostgresqlText, "postgresql_text/fig3.txt", 1),
        (Dialect::PostgresqlJson, "postgresql_json/fig3.json", 1),
        (Dialect::MysqlJson, "mysql_json/fig3.json", 1),
        (Dialect::TidbText, "tidb_text/fig3.txt", 2),
        (Dialect::TidbJson, "tidb_json/fig3.json", 2),
    ];
    for (dialect, file, with_estimate) in cases {
        let text = fs::read_to_string(fixture_root().join(file)).unwrap();
        let plan = convert(dialect, &text, &mapping).unwrap();
        let mut nodes = 0;
        for node in plan.nodes() {
            let n = node
                .properties
                .iter()
                .filter(|p| p.category == PropertyCategory::Cardinality && p.identifier.as_str() == "estimated_rows")
                .count();
            assert!(n <= 1, "{file}: repeated estimated_rows");
            nodes += n;
        }
        assert_eq!(nodes, with_estimate, "{file}");
    }
}

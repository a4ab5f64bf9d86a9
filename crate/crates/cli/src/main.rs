use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use uplan::analysis::{
    category_counts, cert_check, diff, fingerprint, population_variance, CategoryMetrics,
    FingerprintPolicy,
};
use uplan::convert::{convert, load_mapping, Dialect, DialectMapping};
use uplan::ir::{
    parse_unified_json, parse_unified_text, serialize_json, serialize_text, validate, OperationCategory, TextStyle,
    UnifiedPlan,
};
use uplan::render::{to_dot, to_html, RenderOptions, MIN_VALUE_LENGTH};

const STDIN: &str = "-";

#[derive(Parser, Debug)]
#[command(name = "uplan", version, about = "Convert, compare and draw query plans in one unified form")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a DBMS plan to the unified form.
    Convert {
        #[arg(long, value_parser = parse_dialect)]
        dialect: Dialect,
        /// Plan file; `-` or nothing reads standard input.
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PlanFormat::Json)]
        format: PlanFormat,
        #[command(flatten)]
        mapping: MappingArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check unified plans against the grammar.
    Validate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Print a structural digest per plan.
    Fingerprint {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// `default`, `none`, or a policy JSON file.
        #[arg(long, default_value = "default")]
        policy: String,
    },
    /// Compare root cardinality estimates of a query and its restricted form.
    Cert {
        base: PathBuf,
        restricted: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
    /// Count operations per category.
    Metrics {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
    },
    /// Report operation and scan differences between two plans.
    Diff { a: PathBuf, b: PathBuf },
    /// Draw a plan as Graphviz DOT or a standalone HTML page.
    Render {
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RenderFormat::Dot)]
        format: RenderFormat,
        /// Read a raw DBMS plan instead of a unified one.
        #[arg(long, value_parser = parse_dialect)]
        dialect: Option<Dialect>,
        #[arg(long)]
        no_properties: bool,
        #[arg(long)]
        no_color: bool,
        #[arg(long, default_value_t = 48)]
        max_value_length: usize,
        #[command(flatten)]
        mapping: MappingArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug)]
struct MappingArgs {
    /// Name mapping table; defaults to the built-in one.
    #[arg(long, env = "UPLAN_MAPPING")]
    mapping: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PlanFormat {
    Json,
    Text,
    Pretty,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RenderFormat {
    Dot,
    Html,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TableFormat {
    Text,
    Json,
}

fn parse_dialect(s: &str) -> Result<Dialect, String> {
    s.parse().map_err(|e: uplan::convert::UnknownDialect| e.to_string())
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Io(String),
    Input(String),
    Violation,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Input(_) => 2,
            Failure::Violation => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

fn display(path: &std::path::Path) -> String {
    path.display().to_string()
}

fn read_input(path: Option<&PathBuf>) -> Result<(String, String), Failure> {
    match path {
        Some(p) if p.as_os_str() != STDIN => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", display(p))))?;
            Ok((display(p), text))
        }
        _ => {
            let mut text = String::new();
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| Failure::Io(format!("standard input: {e}")))?;
            Ok((STDIN.to_string(), text))
        }
    }
}

/// Reads all inputs in parallel. Standard input may appear at most once.
fn read_all(paths: &[PathBuf]) -> Result<Vec<(String, String)>, Failure> {
    if paths.iter().filter(|p| p.as_os_str() == STDIN).count() > 1 {
        return Err(Failure::Input("standard input can be named only once".into()));
    }
    let stdin = paths
        .iter()
        .position(|p| p.as_os_str() == STDIN)
        .map(|_| read_input(None))
        .transpose()?;
    paths
        .par_iter()
        .map(|p| match (&stdin, p.as_os_str() == STDIN) {
            (Some(s), true) => Ok(s.clone()),
            _ => read_input(Some(p)),
        })
        .collect()
}

/// Unified plan from JSON or either text style.
fn load_plan(name: &str, text: &str) -> Result<UnifiedPlan, Failure> {
    let plan = if text.trim_start().starts_with('{') {
        parse_unified_json(text).map_err(|e| Failure::Input(format!("{name}: {e}")))?
    } else {
        parse_unified_text(text).map_err(|e| Failure::Input(format!("{name}: {e}")))?
    };
    let violations = validate(&plan);
    if let Some(v) = violations.first() {
        return Err(Failure::Input(format!("{name}: invalid plan: {v}")));
    }
    Ok(plan)
}

fn load_plans(paths: &[PathBuf]) -> Result<Vec<(String, UnifiedPlan)>, Failure> {
    read_all(paths)?
        .into_par_iter()
        .map(|(name, text)| load_plan(&name, &text).map(|p| (name, p)))
        .collect()
}

fn load_one(path: &PathBuf) -> Result<UnifiedPlan, Failure> {
    let (name, text) = read_input(Some(path))?;
    load_plan(&name, &text)
}

fn mapping(args: &MappingArgs) -> Result<DialectMapping, Failure> {
    match &args.mapping {
        None => Ok(DialectMapping::builtin()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", display(path))))?;
            load_mapping(&text).map_err(|e| Failure::Input(format!("{}: {e}", display(path))))
        }
    }
}

fn emit(out: &OutArgs, content: &str) -> Outcome {
    match &out.out {
        Some(path) => fs::write(path, content).map_err(|e| Failure::Io(format!("{}: {e}", display(path)))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(format!("standard output: {e}")))
        }
    }
}

fn print(content: &str) -> Outcome {
    emit(&OutArgs { out: None }, content)
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn convert_input(dialect: Dialect, input: Option<&PathBuf>, mapping: &DialectMapping) -> Result<UnifiedPlan, Failure> {
    let (name, text) = read_input(input)?;
    let plan = convert(dialect, &text, mapping).map_err(|e| Failure::Input(format!("{name}: {e}")))?;
    for w in &plan.warnings {
        eprintln!("warning: {name}: {w}");
    }
    Ok(plan)
}

fn cmd_convert(dialect: Dialect, input: Option<PathBuf>, format: PlanFormat, m: MappingArgs, out: OutArgs) -> Outcome {
    let mapping = mapping(&m)?;
    let plan = convert_input(dialect, input.as_ref(), &mapping)?;
    let invalid = |e: uplan::ir::InvalidPlan| Failure::Input(e.to_string());
    let body = match format {
        PlanFormat::Json => serialize_json(&plan).map_err(invalid)?,
        PlanFormat::Text => serialize_text(&plan, TextStyle::Canonical).map_err(invalid)?,
        PlanFormat::Pretty => serialize_text(&plan, TextStyle::Pretty).map_err(invalid)?,
    };
    emit(&out, &with_newline(body))
}

fn cmd_validate(inputs: Vec<PathBuf>) -> Outcome {
    let files = read_all(&inputs)?;
    let mut bad = 0;
    let mut report = String::new();
    for (name, text) in files {
        match load_plan(&name, &text) {
            Ok(_) => report.push_str(&format!("ok  {name}\n")),
            Err(Failure::Input(msg)) => {
                bad += 1;
                eprintln!("error: {msg}");
            }
            Err(other) => return Err(other),
        }
    }
    print(&report)?;
    if bad > 0 {
        return Err(Failure::Input(format!("{bad} invalid plan(s)")));
    }
    Ok(())
}

fn policy(spec: &str) -> Result<FingerprintPolicy, Failure> {
    match spec {
        "default" => Ok(FingerprintPolicy::default()),
        "none" => Ok(FingerprintPolicy::none()),
        path => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{path}: {e}")))?;
            FingerprintPolicy::from_json(&text).map_err(|e| Failure::Input(format!("{path}: {e}")))
        }
    }
}

fn cmd_fingerprint(inputs: Vec<PathBuf>, policy_spec: String) -> Outcome {
    let policy = policy(&policy_spec)?;
    let plans = load_plans(&inputs)?;
    let lines: Vec<String> = plans
        .par_iter()
        .map(|(name, plan)| {
            fingerprint(plan, &policy)
                .map(|fp| format!("{}  {name}\n", fp.digest))
                .map_err(|e| Failure::Input(format!("{name}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    print(&lines.concat())
}

fn cmd_cert(base: PathBuf, restricted: PathBuf, tolerance: f64) -> Outcome {
    let b = load_one(&base)?;
    let r = load_one(&restricted)?;
    let verdict = cert_check(&b, &r, tolerance).map_err(|e| Failure::Input(e.to_string()))?;
    print(&with_newline(serde_json::to_string(&verdict).expect("verdict serializes")))?;
    if verdict.violation {
        eprintln!(
            "violation: restricted estimate {} exceeds base estimate {} beyond tolerance {tolerance}",
            verdict.restricted_rows, verdict.base_rows
        );
        return Err(Failure::Violation);
    }
    Ok(())
}

fn format_number(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.4}")
    }
}

fn cmd_metrics(inputs: Vec<PathBuf>, format: TableFormat) -> Outcome {
    let plans = load_plans(&inputs)?;
    let rows: Vec<(String, CategoryMetrics)> = plans.iter().map(|(n, p)| (n.clone(), category_counts(p))).collect();
    let series = |c: OperationCategory| rows.iter().map(|(_, m)| m.get(c) as f64).collect::<Vec<_>>();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let means: BTreeMap<OperationCategory, f64> =
        OperationCategory::ALL.iter().map(|&c| (c, mean(&series(c)))).collect();
    let totals: Vec<f64> = rows.iter().map(|(_, m)| m.total as f64).collect();
    let variance = population_variance(&series(OperationCategory::Producer)).expect("at least one plan");

    match format {
        TableFormat::Json => {
            let plans: Vec<_> = rows
                .iter()
                .map(|(name, m)| serde_json::json!({ "path": name, "counts": m.counts, "total": m.total }))
                .collect();
            let doc = serde_json::json!({
                "plans": plans,
                "mean": { "counts": means, "total": mean(&totals) },
                "producer_variance": variance,
            });
            print(&with_newline(doc.to_string()))
        }
        TableFormat::Text => {
            let mut header = vec!["plan".to_string()];
            header.extend(OperationCategory::ALL.iter().map(|c| c.to_string()));
            header.push("Total".into());
            let mut table = vec![header];
            for (name, m) in &rows {
                let mut r = vec![name.clone()];
                r.extend(OperationCategory::ALL.iter().map(|&c| m.get(c).to_string()));
                r.push(m.total.to_string());
                table.push(r);
            }
            let mut r = vec!["mean".to_string()];
            r.extend(OperationCategory::ALL.iter().map(|c| format_number(means[c])));
            r.push(format_number(mean(&totals)));
            table.push(r);
            let widths: Vec<usize> = (0..table[0].len())
                .map(|i| table.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
                .collect();
            let mut out = String::new();
            for r in &table {
                let cells: Vec<String> = r
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
            }
            out.push_str(&format!("producer variance: {}\n", format_number(variance)));
            print(&out)
        }
    }
}

fn cmd_diff(a: PathBuf, b: PathBuf) -> Outcome {
    let report = diff(&load_one(&a)?, &load_one(&b)?);
    print(&with_newline(report.to_json()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    input: Option<PathBuf>,
    format: RenderFormat,
    dialect: Option<Dialect>,
    no_properties: bool,
    no_color: bool,
    max_value_length: usize,
    m: MappingArgs,
    out: OutArgs,
) -> Outcome {
    if max_value_length < MIN_VALUE_LENGTH {
        return Err(Failure::Input(format!("--max-value-length must be at least {MIN_VALUE_LENGTH}")));
    }
    let mapping = mapping(&m)?;
    let plan = match dialect {
        Some(d) => convert_input(d, input.as_ref(), &mapping)?,
        None => {
            let (name, text) = read_input(input.as_ref())?;
            load_plan(&name, &text)?
        }
    };
    let opts = RenderOptions {
        show_properties: !no_properties,
        max_value_length,
        color_by_category: !no_color,
        known_operations: Some(mapping.known_operations()),
    };
    let body = match format {
        RenderFormat::Dot => to_dot(&plan, &opts),
        RenderFormat::Html => to_html(&plan, &opts),
    }
    .map_err(|e| Failure::Input(e.to_string()))?;
    emit(&out, &body)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Convert { dialect, input, format, mapping, out } => cmd_convert(dialect, input, format, mapping, out),
        Command::Validate { inputs } => cmd_validate(inputs),
        Command::Fingerprint { inputs, policy } => cmd_fingerprint(inputs, policy),
        Command::Cert { base, restricted, tolerance } => cmd_cert(base, restricted, tolerance),
        Command::Metrics { inputs, format } => cmd_metrics(inputs, format),
        Command::Diff { a, b } => cmd_diff(a, b),
        Command::Render { input, format, dialect, no_properties, no_color, max_value_length, mapping, out } => {
            cmd_render(input, format, dialect, no_properties, no_color, max_value_length, mapping, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Io(msg) | Failure::Input(msg) => eprintln!("error: {msg}"),
                Failure::Violation => {}
            }
            ExitCode::from(f.code())
        }
    }
}

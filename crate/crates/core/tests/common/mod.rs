//! Shared generators and independent oracles for the integration tests.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use uplan::ir::{Keyword, Operation, OperationCategory, PlanNode, Property, PropertyCategory, PropertyValue, UnifiedPlan};

pub const MAX_DEPTH: usize = 8;
pub const MAX_NODES: usize = 200;

/// Strings that tend to break serializers and document formats.
pub const HOSTILE: &[&str] = &[
    "\"",
    "\\",
    "\\\"",
    "</script>",
    "<script>alert(1)</script>",
    "a\nb",
    "tab\there",
    "{a, b}",
    "--children-->",
    "Cost->cost_total:1",
    "x, y",
    "'single'",
    "&amp;",
    "]]>",
    "<!--",
    "digraph { n0 -> n1 }",
    "\\l\\n",
    "  padded  ",
    "",
    "null",
    "true",
    "12",
    "1.5",
    "ünïcødé ⟨ID⟩",
    "\u{7f}\u{1}",
];

pub fn keyword<R: Rng>(rng: &mut R) -> Keyword {
    const FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
    let mut s = String::new();
    s.push(*FIRST.choose(rng).unwrap() as char);
    for _ in 0..rng.gen_range(0..12) {
        s.push(*REST.choose(rng).unwrap() as char);
    }
    Keyword::new(&s).unwrap()
}

pub fn string_value<R: Rng>(rng: &mut R) -> String {
    match rng.gen_range(0..4) {
        0 => HOSTILE.choose(rng).unwrap().to_string(),
        1 => {
            let n = rng.gen_range(0..60);
            (0..n).map(|_| rng.gen_range(' '..='~')).collect()
        }
        2 => {
            let n = rng.gen_range(0..20);
            (0..n).map(|_| rng.gen::<char>()).collect()
        }
        _ => format!("{} {}", HOSTILE.choose(rng).unwrap(), HOSTILE.choose(rng).unwrap()),
    }
}

pub fn value<R: Rng>(rng: &mut R) -> PropertyValue {
    match rng.gen_range(0..8) {
        0..=2 => PropertyValue::String(string_value(rng)),
        3 => PropertyValue::Int(rng.gen()),
        4 => PropertyValue::Int(rng.gen_range(-1000..1000)),
        5 => loop {
            let x = f64::from_bits(rng.gen());
            if x.is_finite() {
                break PropertyValue::Float(x);
            }
        },
        6 => PropertyValue::Float(rng.gen_range(-1e6..1e6)),
        _ => [PropertyValue::Bool(true), PropertyValue::Bool(false), PropertyValue::Null]
            .choose(rng)
            .unwrap()
            .clone(),
    }
}

pub fn category<R: Rng>(rng: &mut R) -> OperationCategory {
    *OperationCategory::ALL.choose(rng).unwrap()
}

pub fn property<R: Rng>(rng: &mut R) -> Property {
    Property::new(*PropertyCategory::ALL.choose(rng).unwrap(), keyword(rng), value(rng))
}

pub fn properties<R: Rng>(rng: &mut R, max: usize) -> Vec<Property> {
    (0..rng.gen_range(0..=max)).map(|_| property(rng)).collect()
}

/// Random tree shape as a parent list: `parents[i] < i` for `i > 0`, and no
/// node deeper than `max_depth` levels.
pub fn shape<R: Rng>(rng: &mut R, nodes: usize, max_depth: usize) -> Vec<Option<usize>> {
    let mut parents = vec![None];
    let mut depth = vec![1usize];
    for i in 1..nodes {
        let p = loop {
            // Bias towards recent nodes so deep chains appear too.
            let lo = if rng.gen_bool(0.5) { i.saturating_sub(4) } else { 0 };
            let p = rng.gen_range(lo..i);
            if depth[p] < max_depth {
                break p;
            }
        };
        parents.push(Some(p));
        depth.push(depth[p] + 1);
    }
    parents
}

/// Builds nested nodes from a parent list and one node per index.
pub fn assemble(parents: &[Option<usize>], mut nodes: Vec<PlanNode>) -> PlanNode {
    for i in (1..parents.len()).rev() {
        let node = nodes.pop().unwrap();
        let p = parents[i].unwrap();
        nodes[p].children.insert(0, node);
    }
    nodes.pop().unwrap()
}

pub fn node_count_target<R: Rng>(rng: &mut R) -> usize {
    match rng.gen_range(0..10) {
        0 => rng.gen_range(100..=MAX_NODES),
        1..=3 => rng.gen_range(20..100),
        _ => rng.gen_range(1..20),
    }
}

pub fn plan_with<R: Rng>(rng: &mut R, nodes: usize) -> UnifiedPlan {
    let parents = shape(rng, nodes, MAX_DEPTH);
    let list = (0..nodes)
        .map(|_| {
            let mut n = PlanNode::new(Operation::new(category(rng), keyword(rng)));
            n.properties = properties(rng, 4);
            n
        })
        .collect();
    let mut plan = UnifiedPlan::new(assemble(&parents, list));
    plan.plan_properties = properties(rng, 3);
    plan
}

/// A valid plan with at most [`MAX_NODES`] nodes and [`MAX_DEPTH`] levels.
pub fn plan<R: Rng>(rng: &mut R) -> UnifiedPlan {
    if rng.gen_range(0..50) == 0 {
        let mut p = UnifiedPlan::empty();
        p.plan_properties = properties(rng, 3);
        return p;
    }
    let n = node_count_target(rng);
    plan_with(rng, n)
}

pub fn levels(node: &PlanNode) -> usize {
    let mut best = 0;
    let mut stack = vec![(node, 1)];
    while let Some((n, d)) = stack.pop() {
        best = best.max(d);
        stack.extend(n.children.iter().map(|c| (c, d + 1)));
    }
    best
}

/// Parent index of each node in pre-order, the same layout [`shape`] produces.
pub fn parent_list(root: &PlanNode) -> Vec<Option<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(root, None)];
    while let Some((node, parent)) = stack.pop() {
        let id = out.len();
        out.push(parent);
        stack.extend(node.children.iter().rev().map(|c| (c, Some(id))));
    }
    out
}

/// Renumbers a parent list into pre-order so that two shapes compare equal
/// exactly when the trees are isomorphic in child order.
pub fn preorder(parents: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut children = vec![Vec::new(); parents.len()];
    for (i, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    let mut new_id = vec![0; parents.len()];
    let mut out = Vec::new();
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        new_id[i] = out.len();
        out.push(parents[i].map(|p| new_id[p]));
        stack.extend(children[i].iter().rev());
    }
    out
}

// ---------------------------------------------------------------------------
// DOT oracle

#[derive(Debug, Default)]
pub struct DotGraph {
    pub nodes: Vec<(String, Vec<(String, String)>)>,
    pub edges: Vec<(String, String)>,
    pub graph_attrs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Quoted(String),
    Punct(char),
    Arrow,
}

fn dot_tokens(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        let next = *chars.get(i + 1).ok_or("dangling backslash")?;
                        match next {
                            '"' => s.push('"'),
                            '\\' => s.push('\\'),
                            'n' | 'l' | 'r' => s.push('\n'),
                            other => return Err(format!("unexpected escape \\{other}")),
                        }
                        i += 2;
                        continue;
                    }
                    Some(c) if c.is_control() => return Err(format!("raw control {c:?} in string")),
                    Some(c) => s.push(*c),
                }
                i += 1;
            }
            i += 1;
            out.push(Tok::Quoted(s));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Tok::Arrow);
            i += 2;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Id(chars[start..i].iter().collect()));
        } else if "{}[];,=".contains(c) {
            out.push(Tok::Punct(c));
            i += 1;
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

fn attr_list(toks: &[Tok], i: &mut usize) -> Result<Vec<(String, String)>, String> {
    let mut attrs = Vec::new();
    if toks.get(*i) != Some(&Tok::Punct('[')) {
        return Ok(attrs);
    }
    *i += 1;
    loop {
        match toks.get(*i) {
            Some(Tok::Punct(']')) => {
                *i += 1;
                return Ok(attrs);
            }
            Some(Tok::Punct(',')) => *i += 1,
            Some(Tok::Id(k)) => {
                if toks.get(*i + 1) != Some(&Tok::Punct('=')) {
                    return Err(format!("attribute {k} without value"));
                }
                let v = match toks.get(*i + 2) {
                    Some(Tok::Id(v)) | Some(Tok::Quoted(v)) => v.clone(),
                    other => return Err(format!("bad attribute value {other:?}")),
                };
                attrs.push((k.clone(), v));
                *i += 3;
            }
            other => return Err(format!("bad attribute list at {other:?}")),
        }
    }
}

/// Strict parser for the subset of the dot language the renderer emits.
pub fn parse_dot(src: &str) -> Result<DotGraph, String> {
    let toks = dot_tokens(src)?;
    let mut i = 0;
    if toks.first() != Some(&Tok::Id("digraph".into())) {
        return Err("missing digraph keyword".into());
    }
    i += 1;
    if let Some(Tok::Id(_)) = toks.get(i) {
        i += 1;
    }
    if toks.get(i) != Some(&Tok::Punct('{')) {
        return Err("missing opening brace".into());
    }
    i += 1;
    let mut g = DotGraph::default();
    loop {
        match toks.get(i) {
            Some(Tok::Punct('}')) => {
                if i + 1 != toks.len() {
                    return Err("tokens after closing brace".into());
                }
                return Ok(g);
            }
            Some(Tok::Id(id)) if id == "node" || id == "edge" || id == "graph" => {
                i += 1;
                attr_list(&toks, &mut i)?;
            }
            Some(Tok::Id(id)) => {
                let id = id.clone();
                i += 1;
                match toks.get(i) {
                    Some(Tok::Arrow) => {
                        let Some(Tok::Id(to)) = toks.get(i + 1) else {
                            return Err("edge without target".into());
                        };
                        g.edges.push((id, to.clone()));
                        i += 2;
                        attr_list(&toks, &mut i)?;
                    }
                    Some(Tok::Punct('=')) => {
                        let v = match toks.get(i + 1) {
                            Some(Tok::Id(v)) | Some(Tok::Quoted(v)) => v.clone(),
                            _ => return Err("graph attribute without value".into()),
                        };
                        g.graph_attrs.push((id, v));
                        i += 2;
                    }
                    _ => {
                        let attrs = attr_list(&toks, &mut i)?;
                        g.nodes.push((id, attrs));
                    }
                }
            }
            other => return Err(format!("unexpected token {other:?}")),
        }
        if toks.get(i) != Some(&Tok::Punct(';')) {
            return Err(format!("missing semicolon at token {i}"));
        }
        i += 1;
    }
}

// ---------------------------------------------------------------------------
// HTML oracle

#[derive(Debug, Default)]
pub struct HtmlDoc {
    /// Deepest nesting of `<ul>` elements.
    pub ul_depth: usize,
    pub li_count: usize,
    pub text: String,
    pub tags: Vec<String>,
}

const VOID: &[&str] = &["meta", "br", "hr", "img", "link", "input"];
const RAW_TEXT: &[&str] = &["style", "script"];

/// Strict tokenizer: every tag is well-formed and balanced, text holds no raw
/// `<` or `>`, and entities are among the five the renderer uses.
pub fn parse_html(src: &str) -> Result<HtmlDoc, String> {
    let body = src.strip_prefix("<!DOCTYPE html>").ok_or("missing doctype")?;
    let mut doc = HtmlDoc::default();
    let mut stack: Vec<String> = Vec::new();
    let mut rest = body;
    while !rest.is_empty() {
        if let Some(tail) = rest.strip_prefix('<') {
            let end = tail.find('>').ok_or("unterminated tag")?;
            let inner = &tail[..end];
            rest = &tail[end + 1..];
            if inner.contains('<') {
                return Err(format!("`<` inside tag `{inner}`"));
            }
            if let Some(name) = inner.strip_prefix('/') {
                match stack.pop() {
                    Some(open) if open == name => {}
                    other => return Err(format!("closing </{name}> while {other:?} is open")),
                }
                continue;
            }
            let name: String = inner.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
            if name.is_empty() {
                return Err(format!("bad tag `{inner}`"));
            }
            check_attributes(&inner[name.len()..])?;
            doc.tags.push(name.clone());
            if name == "li" {
                doc.li_count += 1;
            }
            if VOID.contains(&name.as_str()) {
                continue;
            }
            if RAW_TEXT.contains(&name.as_str()) {
                let close = format!("</{name}>");
                let end = rest.find(&close).ok_or("unterminated raw text element")?;
                rest = &rest[end + close.len()..];
                continue;
            }
            stack.push(name.clone());
            if name == "ul" {
                doc.ul_depth = doc.ul_depth.max(stack.iter().filter(|t| *t == "ul").count());
            }
        } else {
            let end = rest.find('<').unwrap_or(rest.len());
            let text = &rest[..end];
            rest = &rest[end..];
            if text.contains('>') {
                return Err(format!("raw `>` in text `{text}`"));
            }
            doc.text.push_str(&decode_entities(text)?);
        }
    }
    if !stack.is_empty() {
        return Err(format!("unclosed elements {stack:?}"));
    }
    Ok(doc)
}

fn check_attributes(mut s: &str) -> Result<(), String> {
    loop {
        s = s.trim_start();
        if s.is_empty() {
            return Ok(());
        }
        let name_len = s
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
            .unwrap_or(s.len());
        if name_len == 0 {
            return Err(format!("bad attribute `{s}`"));
        }
        s = &s[name_len..];
        if let Some(v) = s.strip_prefix("=\"") {
            let end = v.find('"').ok_or("unterminated attribute value")?;
            s = &v[end + 1..];
        }
    }
}

fn decode_entities(text: &str) -> Result<String, String> {
    let mut out = String::new();
    let mut rest = text;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        let end = tail.find(';').ok_or("unterminated entity")?;
        out.push(match &tail[..=end] {
            "&amp;" => '&',
            "&lt;" => '<',
            "&gt;" => '>',
            "&quot;" => '"',
            "&#39;" => '\'',
            other => return Err(format!("unknown entity {other}")),
        });
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reference implementations

/// Novelty tracking spelled out with an explicit set and counter.
pub struct BruteNovelty {
    seen: Vec<String>,
    counter: usize,
    threshold: usize,
}

impl BruteNovelty {
    pub fn new(threshold: usize) -> Self {
        BruteNovelty {
            seen: Vec::new(),
            counter: 0,
            threshold,
        }
    }

    pub fn step(&mut self, digest: &str) -> (bool, bool) {
        let novel = !self.seen.iter().any(|d| d == digest);
        if novel {
            self.seen.push(digest.to_string());
            self.counter = 0;
        } else {
            self.counter += 1;
        }
        let mutate = self.counter >= self.threshold;
        if mutate {
            self.counter = 0;
        }
        (novel, mutate)
    }
}

/// Two-pass variance: mean first, then mean squared deviation.
pub fn direct_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

// ---------------------------------------------------------------------------
// Synthetic dialect text

fn children_of(parents: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut children = vec![Vec::new(); parents.len()];
    for (i, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    children
}

/// Pre-order walk yielding (node, depth, is-last-child flags of the path).
fn walk(parents: &[Option<usize>]) -> Vec<(usize, Vec<bool>)> {
    let children = children_of(parents);
    let mut out = Vec::new();
    let mut stack = vec![(0usize, Vec::new())];
    while let Some((i, path)) = stack.pop() {
        out.push((i, path.clone()));
        let kids = &children[i];
        for (k, c) in kids.iter().enumerate().rev() {
            let mut p = path.clone();
            p.push(k + 1 == kids.len());
            stack.push((*c, p));
        }
    }
    out
}

pub fn pg_marker(i: usize) -> String {
    format!("(c{i} > {i})")
}

/// EXPLAIN text in psql's layout. Every node `i` carries `rows=i` and the
/// filter [`pg_marker`]`(i)`.
pub fn pg_text<R: Rng>(rng: &mut R, parents: &[Option<usize>]) -> String {
    const NAMES: &[&str] = &["Hash Join", "Nested Loop", "Sort", "Hash", "Materialize", "Append", "Limit", "Unique"];
    let mut out = String::new();
    for (i, path) in walk(parents) {
        let depth = path.len();
        let name = match rng.gen_range(0..4) {
            0 => format!("Seq Scan on t{i}"),
            1 => format!("Index Scan using i{i} on t{i}"),
            _ => NAMES.choose(rng).unwrap().to_string(),
        };
        let head = format!("{name}  (cost=0.00..{i}.50 rows={i} width=4)");
        let prop_col = if depth == 0 {
            out.push_str(&head);
            2
        } else {
            let col = 6 * depth - 4;
            out.push_str(&format!("{:col$}->  {head}", ""));
            col + 4
        };
        out.push('\n');
        out.push_str(&format!("{:prop_col$}Filter: {}\n", "", pg_marker(i)));
        if rng.gen_bool(0.3) {
            out.push_str(&format!("{:prop_col$}Sort Key: t{i}.c0\n", ""));
        }
    }
    if rng.gen_bool(0.5) {
        out.push_str("Planning Time: 0.124 ms\n");
    }
    out
}

/// Recursive-descent reading of [`pg_text`] output: returns the parent list
/// over nodes in order of appearance and each node's filter text.
pub fn pg_oracle(text: &str) -> (Vec<Option<usize>>, Vec<String>) {
    struct Line<'a> {
        col: usize,
        arrow: bool,
        body: &'a str,
    }
    let lines: Vec<Line> = text
        .lines()
        .map(|l| {
            let col = l.len() - l.trim_start().len();
            let body = l.trim_start();
            match body.strip_prefix("->") {
                Some(rest) => Line { col, arrow: true, body: rest.trim_start() },
                None => Line { col, arrow: false, body },
            }
        })
        .collect();

    fn node(lines: &[Line], pos: &mut usize, parent: Option<usize>, parents: &mut Vec<Option<usize>>, filters: &mut Vec<String>) {
        let col = lines[*pos].col;
        let id = parents.len();
        parents.push(parent);
        filters.push(String::new());
        *pos += 1;
        while *pos < lines.len() && !lines[*pos].arrow && lines[*pos].col > col {
            if let Some(f) = lines[*pos].body.strip_prefix("Filter: ") {
                filters[id] = f.to_string();
            }
            *pos += 1;
        }
        while *pos < lines.len() && lines[*pos].arrow && lines[*pos].col > col {
            node(lines, pos, Some(id), parents, filters);
        }
    }

    let (mut parents, mut filters) = (Vec::new(), Vec::new());
    let mut pos = 0;
    node(&lines, &mut pos, None, &mut parents, &mut filters);
    (parents, filters)
}

/// TiDB's table output. Node `i` reads table `t{i}`.
pub fn tidb_text<R: Rng>(rng: &mut R, parents: &[Option<usize>], bordered: bool) -> String {
    const OPS: &[&str] = &["TableReader", "HashJoin", "Projection", "Sort", "TableFullScan", "IndexRangeScan", "HashAgg", "Limit", "IndexLookUp"];
    let mut rows = Vec::new();
    for (i, path) in walk(parents) {
        let mut prefix = String::new();
        for (level, last) in path.iter().enumerate() {
            if level + 1 == path.len() {
                prefix.push_str(if *last { "└─" } else { "├─" });
            } else {
                prefix.push_str(if *last { "  " } else { "│ " });
            }
        }
        let op = OPS.choose(rng).unwrap();
        rows.push([
            format!("{prefix}{op}_{}", i + 2),
            format!("{i}.00"),
            if rng.gen_bool(0.5) { "root" } else { "cop[tikv]" }.to_string(),
            format!("table:t{i}"),
            format!("eq(test.t.c, {i})"),
        ]);
    }
    let header = ["id", "estRows", "task", "access object", "operator info"].map(String::from);
    if !bordered {
        let mut out = header.join("\t");
        out.push('\n');
        for r in &rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        return out;
    }
    let mut widths = header.each_ref().map(|h| h.chars().count());
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let rule = {
        let mut s = String::from("+");
        for w in widths {
            s.push_str(&"-".repeat(w + 2));
            s.push('+');
        }
        s
    };
    let line = |cells: &[String; 5]| {
        let mut s = String::from("|");
        for (c, w) in cells.iter().zip(widths) {
            let pad = w - c.chars().count();
            s.push_str(&format!(" {c}{:pad$} |", ""));
        }
        s
    };
    let mut out = format!("{rule}\n{}\n{rule}\n", line(&header));
    for r in &rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out.push_str(&format!("{rule}\n{} rows in set (0.01 sec)\n", rows.len()));
    out
}

/// sqlite3 shell output for a forest given as one parent list whose root
/// index 0 stands for the `QUERY PLAN` header. Node `i` reads table `t{i}`.
pub fn sqlite_text<R: Rng>(rng: &mut R, parents: &[Option<usize>]) -> String {
    let mut out = String::from("QUERY PLAN\n");
    for (i, path) in walk(parents).into_iter().skip(1) {
        for last in &path[..path.len() - 1] {
            out.push_str(if *last { "   " } else { "|  " });
        }
        out.push_str(if *path.last().unwrap() { "`--" } else { "|--" });
        match rng.gen_range(0..4) {
            0 => out.push_str(&format!("SEARCH t{i} USING INDEX i{i} (a=?)")),
            1 => out.push_str(&format!("SCAN t{i} AS x{i}")),
            2 => out.push_str(&format!("MATERIALIZE t{i}")),
            _ => out.push_str(&format!("SCAN t{i}")),
        }
        out.push('\n');
    }
    out
}

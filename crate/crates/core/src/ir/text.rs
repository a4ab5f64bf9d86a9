//! Text forms of a plan.
//!
//! The canonical form is the literal concrete syntax of the grammar:
//!
//! ```text
//! Operation:Executor->Collect Cardinality->estimated_rows:10 --children--> {Operation:Producer->Full_Table_Scan}
//! Status->planning_time_ms:0.124
//! ```
//!
//! The tree occupies the first line. A node's first property follows its
//! operation after a single space; further properties are separated by `, `.
//! Plan properties go on a second line, which is what tells them apart from
//! the properties of a childless root.
//!
//! The pretty form puts one node per line as `Category->Display Name`, indented
//! one space per level, with its properties on the following lines one space
//! deeper. Configuration properties omit their category prefix.

use std::fmt::Write as _;

use super::{
    format_float, validate, InvalidPlan, Keyword, Operation, OperationCategory, PlanNode,
    Property, PropertyCategory, PropertyValue, UnifiedPlan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextStyle {
    Canonical,
    Pretty,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct TextParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn serialize_text(plan: &UnifiedPlan, style: TextStyle) -> Result<String, InvalidPlan> {
    let violations = validate(plan);
    if !violations.is_empty() {
        return Err(InvalidPlan(violations));
    }
    Ok(match style {
        TextStyle::Canonical => canonical(plan),
        TextStyle::Pretty => pretty(plan),
    })
}

pub(crate) fn canonical(plan: &UnifiedPlan) -> String {
    let mut out = String::new();
    if let Some(root) = &plan.root {
        write_tree(&mut out, root);
    }
    if !plan.plan_properties.is_empty() {
        if plan.root.is_some() {
            out.push('\n');
        }
        write_properties(&mut out, &plan.plan_properties);
    }
    out
}

fn write_tree(out: &mut String, node: &PlanNode) {
    let _ = write!(
        out,
        "Operation:{}->{}",
        node.operation.category,
        node.operation.identifier.as_str()
    );
    if !node.properties.is_empty() {
        out.push(' ');
        write_properties(out, &node.properties);
    }
    if !node.children.is_empty() {
        out.push_str(" --children--> {");
        for (i, child) in node.children.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_tree(out, child);
        }
        out.push('}');
    }
}

fn write_properties(out: &mut String, properties: &[Property]) {
    for (i, p) in properties.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}->{}:", p.category, p.identifier.as_str());
        write_value(out, &p.value);
    }
}

pub(crate) fn value_literal(value: &PropertyValue) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut String, value: &PropertyValue) {
    match value {
        PropertyValue::String(s) => write_quoted(out, s),
        PropertyValue::Float(x) => out.push_str(&format_float(*x)),
        other => {
            let _ = write!(out, "{other}");
        }
    }
}

fn write_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn pretty(plan: &UnifiedPlan) -> String {
    let mut out = String::new();
    if let Some(root) = &plan.root {
        let mut stack = vec![(root, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            let _ = writeln!(
                out,
                "{:depth$}{}->{}",
                "",
                node.operation.category,
                node.operation.identifier.display()
            );
            for p in &node.properties {
                pretty_property(&mut out, p, depth + 1);
            }
            stack.extend(node.children.iter().rev().map(|c| (c, depth + 1)));
        }
    }
    for p in &plan.plan_properties {
        pretty_property(&mut out, p, 0);
    }
    out
}

fn pretty_property(out: &mut String, p: &Property, indent: usize) {
    let _ = write!(out, "{:indent$}", "");
    if p.category != PropertyCategory::Configuration {
        let _ = write!(out, "{}->", p.category);
    }
    let _ = write!(out, "{}: ", p.identifier.display());
    match &p.value {
        PropertyValue::String(s) if is_bare_safe(s) => out.push_str(s),
        v => write_value(out, v),
    }
    out.push('\n');
}

fn is_bare_safe(s: &str) -> bool {
    !s.is_empty()
        && s.trim() == s
        && !s.starts_with('"')
        && !s.chars().any(char::is_control)
        && bare_scalar(s).is_none()
}

/// Non-string interpretation of an unquoted literal.
fn bare_scalar(s: &str) -> Option<PropertyValue> {
    match s {
        "true" => Some(PropertyValue::Bool(true)),
        "false" => Some(PropertyValue::Bool(false)),
        "null" => Some(PropertyValue::Null),
        _ => parse_number(s),
    }
}

pub(crate) fn parse_number(s: &str) -> Option<PropertyValue> {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, Some(b)),
        None => (mantissa, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !digits(int_part) || frac_part.is_some_and(|f| !digits(f)) {
        return None;
    }
    if let Some(e) = exponent {
        if !digits(e.strip_prefix(['+', '-']).unwrap_or(e)) {
            return None;
        }
    }
    if frac_part.is_none() && exponent.is_none() {
        if let Ok(i) = s.parse::<i64>() {
            return Some(PropertyValue::Int(i));
        }
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(PropertyValue::Float)
}

/// Parses either text form. The canonical serializer never puts a space
/// after a colon and pretty output always does, so input is read as canonical
/// when it starts with `Operation:` or `Category->identifier:` directly
/// followed by a value, or with `Operation :` and holds a `--children-->`
/// token. Anything else is read as pretty.
pub fn parse_unified_text(input: &str) -> Result<UnifiedPlan, TextParseError> {
    let trimmed = input.trim_start();
    let spaced_operation = trimmed
        .strip_prefix("Operation")
        .is_some_and(|rest| rest.trim_start().starts_with(':'));
    let canonical = trimmed.strip_prefix("Operation:").is_some_and(|rest| !rest.starts_with(char::is_whitespace))
        || starts_with_tight_property(trimmed)
        || (spaced_operation && input.contains("--children-->"));
    if canonical {
        CanonicalParser::new(input)?.parse()
    } else {
        parse_pretty(input)
    }
}

/// `Category->identifier:value` with nothing between the colon and the value.
fn starts_with_tight_property(s: &str) -> bool {
    let Some((category, rest)) = s.split_once("->") else {
        return false;
    };
    if category.parse::<PropertyCategory>().is_err() {
        return false;
    }
    let ident_len = rest
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    rest[ident_len..]
        .strip_prefix(':')
        .and_then(|v| v.chars().next())
        .is_some_and(|c| !c.is_whitespace())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Arrow,
    Colon,
    Comma,
    Children,
    LBrace,
    RBrace,
    Str(String),
    Num(PropertyValue),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
    after_newline: bool,
}

fn lex(input: &str) -> Result<Vec<Token>, TextParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    let mut after_newline = false;
    let err = |line: usize, column: usize, message: String| TextParseError {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let column = i - line_start + 1;
        if c == '\n' {
            i += 1;
            line += 1;
            line_start = i;
            after_newline = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 13)].iter().collect();
        let (tok, len) = if rest.starts_with("--children-->") {
            (Tok::Children, 13)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if c == ':' {
            (Tok::Colon, 1)
        } else if c == ',' {
            (Tok::Comma, 1)
        } else if c == '{' {
            (Tok::LBrace, 1)
        } else if c == '}' {
            (Tok::RBrace, 1)
        } else if c == '"' {
            let (s, len) = lex_string(&chars[i..])
                .map_err(|(offset, m)| err(line, column + offset, m))?;
            (Tok::Str(s), len)
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut j = i + 1;
            while j < chars.len()
                && (chars[j].is_ascii_alphanumeric() || matches!(chars[j], '.' | '+' | '-'))
            {
                if matches!(chars[j], '+' | '-') && !matches!(chars[j - 1], 'e' | 'E') {
                    break;
                }
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let value = parse_number(&text)
                .ok_or_else(|| err(line, column, format!("malformed number literal `{text}`")))?;
            (Tok::Num(value), j - i)
        } else if c.is_ascii_alphabetic() {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Word(chars[i..j].iter().collect()), j - i)
        } else {
            return Err(err(line, column, format!("unexpected character {c:?}")));
        };
        tokens.push(Token {
            tok,
            line,
            column,
            after_newline,
        });
        after_newline = false;
        i += len;
    }
    Ok(tokens)
}

/// Reads a quoted literal starting at `chars[0] == '"'`; returns the decoded
/// text and the number of characters consumed.
fn lex_string(chars: &[char]) -> Result<(String, usize), (usize, String)> {
    let mut out = String::new();
    let mut i = 1;
    while i < chars.len() {
        match chars[i] {
            '"' => return Ok((out, i + 1)),
            '\\' => {
                let esc = chars.get(i + 1).ok_or((i, "unterminated escape".to_string()))?;
                match esc {
                    '"' => out.push('"'),
                    '\\' => out.push('\\'),
                    'n' => out.push('\n'),
                    'r' => out.push('\r'),
                    't' => out.push('\t'),
                    'u' => {
                        if chars.get(i + 2) != Some(&'{') {
                            return Err((i, "expected `{` after \\u".to_string()));
                        }
                        let close = chars[i + 3..]
                            .iter()
                            .position(|&c| c == '}')
                            .ok_or((i, "unterminated \\u escape".to_string()))?;
                        let hex: String = chars[i + 3..i + 3 + close].iter().collect();
                        let ch = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or((i, format!("invalid \\u escape `{hex}`")))?;
                        out.push(ch);
                        i += 3 + close + 1;
                        continue;
                    }
                    other => return Err((i, format!("unknown escape `\\{other}`"))),
                }
                i += 2;
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    Err((0, "unterminated string literal".to_string()))
}

struct CanonicalParser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl CanonicalParser {
    fn new(input: &str) -> Result<Self, TextParseError> {
        let tokens = lex(input)?;
        let lines = input.split('\n').count();
        let last = input.rsplit('\n').next().map_or(0, |l| l.chars().count());
        Ok(CanonicalParser {
            tokens,
            pos: 0,
            end: (lines, last + 1),
        })
    }

    fn parse(mut self) -> Result<UnifiedPlan, TextParseError> {
        let mut plan = UnifiedPlan::empty();
        if self.peek_word("Operation") {
            plan.root = Some(self.tree()?);
        }
        if self.at_property_start() {
            plan.plan_properties = self.property_list()?;
        }
        if let Some(t) = self.tokens.get(self.pos) {
            return Err(self.error_at(t, format!("unexpected token {:?}", t.tok)));
        }
        Ok(plan)
    }

    fn tree(&mut self) -> Result<PlanNode, TextParseError> {
        let mut node = self.node()?;
        if self.eat(&Tok::Children) {
            self.expect(&Tok::LBrace, "`{`")?;
            loop {
                node.children.push(self.tree()?);
                if self.eat(&Tok::Comma) {
                    continue;
                }
                self.expect(&Tok::RBrace, "`,` or `}`")?;
                break;
            }
        }
        Ok(node)
    }

    fn node(&mut self) -> Result<PlanNode, TextParseError> {
        self.expect_word("Operation")?;
        self.expect(&Tok::Colon, "`:`")?;
        let (word, at) = self.word()?;
        let category = word
            .parse::<OperationCategory>()
            .map_err(|e| self.error_at(&at, e.to_string()))?;
        self.expect(&Tok::Arrow, "`->`")?;
        let identifier = self.keyword()?;
        let mut node = PlanNode::new(Operation::new(category, identifier));
        let same_line = self
            .tokens
            .get(self.pos)
            .is_some_and(|t| !t.after_newline);
        if same_line && self.at_property_start() {
            node.properties = self.property_list()?;
        }
        Ok(node)
    }

    fn at_property_start(&self) -> bool {
        matches!(self.tokens.get(self.pos), Some(Token { tok: Tok::Word(w), .. }) if w != "Operation")
    }

    fn property_list(&mut self) -> Result<Vec<Property>, TextParseError> {
        let mut props = vec![self.property()?];
        while matches!(self.tokens.get(self.pos), Some(Token { tok: Tok::Comma, .. }))
            && matches!(self.tokens.get(self.pos + 1), Some(Token { tok: Tok::Word(w), .. }) if w != "Operation")
        {
            self.pos += 1;
            props.push(self.property()?);
        }
        Ok(props)
    }

    fn property(&mut self) -> Result<Property, TextParseError> {
        let (word, at) = self.word()?;
        let category = word
            .parse::<PropertyCategory>()
            .map_err(|e| self.error_at(&at, e.to_string()))?;
        self.expect(&Tok::Arrow, "`->`")?;
        let identifier = self.keyword()?;
        self.expect(&Tok::Colon, "`:`")?;
        let t = self.next("value")?;
        let value = match t.tok {
            Tok::Str(ref s) => PropertyValue::String(s.clone()),
            Tok::Num(ref n) => n.clone(),
            Tok::Word(ref w) if w == "true" => PropertyValue::Bool(true),
            Tok::Word(ref w) if w == "false" => PropertyValue::Bool(false),
            Tok::Word(ref w) if w == "null" => PropertyValue::Null,
            ref other => {
                return Err(self.error_at(&t, format!("malformed value literal {other:?}")))
            }
        };
        Ok(Property::new(category, identifier, value))
    }

    fn keyword(&mut self) -> Result<Keyword, TextParseError> {
        let (word, at) = self.word()?;
        Keyword::new(&word).map_err(|e| self.error_at(&at, e.to_string()))
    }

    fn word(&mut self) -> Result<(String, Token), TextParseError> {
        let t = self.next("identifier")?;
        match &t.tok {
            Tok::Word(w) => Ok((w.clone(), t.clone())),
            other => Err(self.error_at(&t, format!("expected identifier, found {other:?}"))),
        }
    }

    fn next(&mut self, what: &str) -> Result<Token, TextParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(TextParseError {
                line: self.end.0,
                column: self.end.1,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    }

    fn peek_word(&self, w: &str) -> bool {
        matches!(self.tokens.get(self.pos), Some(Token { tok: Tok::Word(x), .. }) if x == w)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.tokens.get(self.pos).is_some_and(|t| &t.tok == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), TextParseError> {
        let t = self.next(what)?;
        if &t.tok == tok {
            Ok(())
        } else {
            Err(self.error_at(&t, format!("expected {what}, found {:?}", t.tok)))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), TextParseError> {
        let (word, at) = self.word()?;
        if word == w {
            Ok(())
        } else {
            Err(self.error_at(&at, format!("expected `{w}`, found `{word}`")))
        }
    }

    fn error_at(&self, t: &Token, message: String) -> TextParseError {
        TextParseError {
            line: t.line,
            column: t.column,
            message,
        }
    }
}

fn parse_pretty(input: &str) -> Result<UnifiedPlan, TextParseError> {
    let mut plan = UnifiedPlan::empty();
    // Open nodes from the root down to the most recent one, with their indents.
    let mut stack: Vec<(usize, PlanNode)> = Vec::new();
    let mut root_closed = false;

    fn close_to(stack: &mut Vec<(usize, PlanNode)>, keep: impl Fn(usize) -> bool, root: &mut Option<PlanNode>) {
        while let Some(&(indent, _)) = stack.last() {
            if keep(indent) {
                break;
            }
            let (_, node) = stack.pop().expect("non-empty");
            match stack.last_mut() {
                Some((_, parent)) => parent.children.push(node),
                None => *root = Some(node),
            }
        }
    }

    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start_matches(' ').len();
        let content = &line[indent..];
        let err = |column: usize, message: String| TextParseError {
            line: line_no,
            column: indent + column,
            message,
        };
        match classify_line(content) {
            Line::Node(category, name) => {
                if root_closed || stack.first().is_some_and(|(root_indent, _)| indent <= *root_indent) {
                    return Err(err(1, "a plan has at most one root".to_string()));
                }
                let identifier = Keyword::new(name).map_err(|e| err(1, e.to_string()))?;
                close_to(&mut stack, |i| i < indent, &mut plan.root);
                stack.push((indent, PlanNode::new(Operation::new(category, identifier))));
            }
            Line::Property(category, rest) => {
                let property = pretty_property_body(category, rest).map_err(|(c, m)| err(c, m))?;
                if indent == 0 || stack.is_empty() {
                    if indent > 0 && !root_closed {
                        return Err(err(1, "property before any operation".to_string()));
                    }
                    close_to(&mut stack, |_| false, &mut plan.root);
                    root_closed = true;
                    plan.plan_properties.push(property);
                } else {
                    close_to(&mut stack, |i| i <= indent, &mut plan.root);
                    match stack.last_mut() {
                        Some((_, node)) => node.properties.push(property),
                        None => return Err(err(1, "property is not nested under any operation".to_string())),
                    }
                }
            }
            Line::UnknownCategory(word) => {
                return Err(err(1, format!("unknown category token `{word}`")));
            }
        }
    }
    close_to(&mut stack, |_| false, &mut plan.root);
    Ok(plan)
}

enum Line<'a> {
    Node(OperationCategory, &'a str),
    Property(PropertyCategory, &'a str),
    UnknownCategory(&'a str),
}

fn classify_line(content: &str) -> Line<'_> {
    if let Some((head, rest)) = content.split_once("->") {
        let before_colon = content.find(':').is_none_or(|c| c > head.len());
        if before_colon && !head.is_empty() && head.chars().all(|c| c.is_ascii_alphabetic()) {
            if let Ok(c) = head.parse::<OperationCategory>() {
                return Line::Node(c, rest.trim());
            }
            if let Ok(c) = head.parse::<PropertyCategory>() {
                return Line::Property(c, rest);
            }
            return Line::UnknownCategory(head);
        }
    }
    Line::Property(PropertyCategory::Configuration, content)
}

fn pretty_property_body(
    category: PropertyCategory,
    body: &str,
) -> Result<Property, (usize, String)> {
    let (name, value) = body
        .split_once(':')
        .ok_or((1, "expected `name: value`".to_string()))?;
    let identifier = Keyword::new(name).map_err(|e| (1, e.to_string()))?;
    let value_text = value.trim_start();
    let column = name.len() + 2;
    let value = if value_text.starts_with('"') {
        let chars: Vec<char> = value_text.chars().collect();
        let (s, len) = lex_string(&chars).map_err(|(o, m)| (column + o, m))?;
        if len != chars.len() {
            return Err((column + len, "trailing characters after string literal".to_string()));
        }
        PropertyValue::String(s)
    } else {
        bare_scalar(value_text).unwrap_or_else(|| PropertyValue::String(value_text.to_string()))
    };
    Ok(Property::new(category, identifier, value))
}

//! Predicate mini-language for record-level consistency rules.
//!
//! ```text
//! expr       := and_expr ('or' and_expr)*
//! and_expr   := unary ('and' unary)*
//! unary      := 'not' unary | primary
//! primary    := '(' expr ')' | 'is_missing' '(' column ')' | column op operand
//! operand    := number | string | column
//! op         := '==' | '!=' | '<' | '<=' | '>' | '>='
//! column     := identifier | `quoted name`
//! ```
//!
//! Keywords are case-insensitive. Positions in diagnostics are 0-based
//! character offsets into the expression text.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ColumnData, Dataset, Schema, MISSING_CODE};
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("syntax error at position {position}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown column `{name}` at position {position}")]
    UnknownColumn { name: String, position: usize },
    #[error("type mismatch at position {position}: {message}")]
    TypeMismatch { position: usize, message: String },
}

impl RuleError {
    pub fn position(&self) -> usize {
        match self {
            RuleError::Syntax { position, .. }
            | RuleError::UnknownColumn { position, .. }
            | RuleError::TypeMismatch { position, .. } => *position,
        }
    }

    /// The diagnostic without its position.
    pub fn detail(&self) -> String {
        match self {
            RuleError::Syntax {
                expected, found, ..
            } => {
                format!(
                    "syntax error: expected {}, found {found}",
                    expected.join(" or ")
                )
            }
            RuleError::UnknownColumn { name, .. } => format!("unknown column `{name}`"),
            RuleError::TypeMismatch { message, .. } => format!("type mismatch: {message}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    fn apply<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Column(String),
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Compare {
        column: String,
        op: CmpOp,
        rhs: Operand,
    },
    IsMissing(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

fn fmt_column(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_alphanumeric() || c == '_')
        && keyword(name).is_none();
    if plain {
        write!(f, "{name}")
    } else {
        write!(f, "`{name}`")
    }
}

impl fmt::Display for Expr {
    /// Canonical form with every binary node parenthesized.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Compare { column, op, rhs } => {
                fmt_column(f, column)?;
                write!(f, " {} ", op.symbol())?;
                match rhs {
                    Operand::Column(c) => fmt_column(f, c),
                    Operand::Number(n) => write!(f, "{n}"),
                    Operand::Text(t) => write!(f, "{t:?}"),
                }
            }
            Expr::IsMissing(c) => {
                write!(f, "is_missing(")?;
                fmt_column(f, c)?;
                write!(f, ")")
            }
            Expr::Not(e) => write!(f, "not {e}"),
            Expr::And(a, b) => write!(f, "({a} and {b})"),
            Expr::Or(a, b) => write!(f, "({a} or {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClinicalRule {
    pub name: String,
    pub source: String,
    pub severity: String,
    pub expression: Expr,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Number(f64),
    Str(String),
    Op(CmpOp),
    LParen,
    RParen,
    And,
    Or,
    Not,
    IsMissing,
    End,
}

fn keyword(word: &str) -> Option<Tok> {
    match word.to_ascii_lowercase().as_str() {
        "and" => Some(Tok::And),
        "or" => Some(Tok::Or),
        "not" => Some(Tok::Not),
        "is_missing" => Some(Tok::IsMissing),
        _ => None,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Quoted(s) => format!("column `{s}`"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Op(o) => format!("'{}'", o.symbol()),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::And => "'and'".into(),
        Tok::Or => "'or'".into(),
        Tok::Not => "'not'".into(),
        Tok::IsMissing => "'is_missing'".into(),
        Tok::End => "end of input".into(),
    }
}

fn syntax(position: usize, expected: &[&str], found: String) -> RuleError {
    RuleError::Syntax {
        position,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    }
}

fn lex(text: &str) -> std::result::Result<Vec<(Tok, usize)>, RuleError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '=' | '!' | '<' | '>' => {
                let next = chars.get(i + 1).copied();
                let (op, len) = match (c, next) {
                    ('=', Some('=')) => (CmpOp::Eq, 2),
                    ('!', Some('=')) => (CmpOp::Ne, 2),
                    ('<', Some('=')) => (CmpOp::Le, 2),
                    ('>', Some('=')) => (CmpOp::Ge, 2),
                    ('<', _) => (CmpOp::Lt, 1),
                    ('>', _) => (CmpOp::Gt, 1),
                    _ => return Err(syntax(start, &["comparison operator"], format!("'{c}'"))),
                };
                i += len;
                Tok::Op(op)
            }
            '"' | '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(syntax(
                                chars.len(),
                                &["closing quote"],
                                "end of input".into(),
                            ))
                        }
                        Some('\\') if chars.get(i + 1).is_some() => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&q) if q == c => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            '`' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(syntax(
                                chars.len(),
                                &["closing backtick"],
                                "end of input".into(),
                            ))
                        }
                        Some('`') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Quoted(s)
            }
            c if c.is_ascii_digit()
                || ((c == '-' || c == '.')
                    && chars
                        .get(i + 1)
                        .is_some_and(|n| n.is_ascii_digit() || *n == '.')) =>
            {
                let mut j = i + 1;
                while j < chars.len()
                    && (chars[j].is_ascii_digit()
                        || chars[j] == '.'
                        || ((chars[j] == 'e' || chars[j] == 'E') && j + 1 < chars.len())
                        || ((chars[j] == '+' || chars[j] == '-')
                            && matches!(chars[j - 1], 'e' | 'E')))
                {
                    j += 1;
                }
                let lit: String = chars[i..j].iter().collect();
                let v: f64 = lit
                    .parse()
                    .map_err(|_| syntax(start, &["number"], format!("`{lit}`")))?;
                i = j;
                Tok::Number(v)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                i = j;
                keyword(&word).unwrap_or(Tok::Ident(word))
            }
            other => {
                return Err(syntax(
                    start,
                    &["column", "literal", "operator", "'('", "')'"],
                    format!("'{other}'"),
                ))
            }
        };
        out.push((tok, start));
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Numeric,
    Categorical,
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    schema: &'a Schema,
}

impl Parser<'_> {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if t.0 != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn fail(&self, expected: &[&str]) -> RuleError {
        let (t, p) = self.peek();
        syntax(*p, expected, describe(t))
    }

    fn column_kind(&self, name: &str, position: usize) -> std::result::Result<Kind, RuleError> {
        match self.schema.index_of(name) {
            Some(i) if self.schema.column(i).kind.is_numeric() => Ok(Kind::Numeric),
            Some(_) => Ok(Kind::Categorical),
            None if self
                .schema
                .columns()
                .iter()
                .any(|c| c.event_indicator_column.as_deref() == Some(name)) =>
            {
                Ok(Kind::Numeric)
            }
            None => Err(RuleError::UnknownColumn {
                name: name.to_string(),
                position,
            }),
        }
    }

    fn column(&mut self) -> Option<(String, usize)> {
        match self.peek().clone() {
            (Tok::Ident(s), p) | (Tok::Quoted(s), p) => {
                self.bump();
                Some((s, p))
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, RuleError> {
        let mut lhs = self.and_expr()?;
        while self.peek().0 == Tok::Or {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> std::result::Result<Expr, RuleError> {
        let mut lhs = self.unary()?;
        while self.peek().0 == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> std::result::Result<Expr, RuleError> {
        if self.peek().0 == Tok::Not {
            self.bump();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> std::result::Result<Expr, RuleError> {
        const START: &[&str] = &["column", "'('", "'not'", "'is_missing'"];
        match self.peek().0 {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if self.peek().0 != Tok::RParen {
                    return Err(self.fail(&["'and'", "'or'", "')'"]));
                }
                self.bump();
                Ok(e)
            }
            Tok::IsMissing => {
                self.bump();
                if self.peek().0 != Tok::LParen {
                    return Err(self.fail(&["'('"]));
                }
                self.bump();
                let Some((name, p)) = self.column() else {
                    return Err(self.fail(&["column"]));
                };
                self.column_kind(&name, p)?;
                if self.peek().0 != Tok::RParen {
                    return Err(self.fail(&["')'"]));
                }
                self.bump();
                Ok(Expr::IsMissing(name))
            }
            Tok::Ident(_) | Tok::Quoted(_) => self.comparison(),
            _ => Err(self.fail(START)),
        }
    }

    fn comparison(&mut self) -> std::result::Result<Expr, RuleError> {
        let (column, cpos) = self.column().expect("caller checked");
        let kind = self.column_kind(&column, cpos)?;
        let (op, opos) = match self.peek().clone() {
            (Tok::Op(op), p) => {
                self.bump();
                (op, p)
            }
            _ => return Err(self.fail(&["comparison operator"])),
        };
        if kind == Kind::Categorical && !op.is_equality() {
            return Err(RuleError::TypeMismatch {
                position: opos,
                message: format!(
                    "ordering operator '{}' on categorical column `{column}`",
                    op.symbol()
                ),
            });
        }
        let (rhs, rpos) = match self.peek().clone() {
            (Tok::Number(n), p) => {
                self.bump();
                (Operand::Number(n), p)
            }
            (Tok::Str(s), p) => {
                self.bump();
                (Operand::Text(s), p)
            }
            (Tok::Ident(s), p) | (Tok::Quoted(s), p) => {
                self.bump();
                (Operand::Column(s), p)
            }
            _ => return Err(self.fail(&["literal", "column"])),
        };
        let rkind = match &rhs {
            Operand::Number(_) => Kind::Numeric,
            Operand::Text(_) => Kind::Categorical,
            Operand::Column(c) => self.column_kind(c, rpos)?,
        };
        if rkind != kind {
            let what = |k: Kind| {
                if k == Kind::Numeric {
                    "numeric"
                } else {
                    "categorical"
                }
            };
            return Err(RuleError::TypeMismatch {
                position: rpos,
                message: format!(
                    "{} column `{column}` compared with {} operand",
                    what(kind),
                    what(rkind)
                ),
            });
        }
        Ok(Expr::Compare { column, op, rhs })
    }
}

/// Parses and type-checks one expression against `schema`.
pub fn parse_expression(text: &str, schema: &Schema) -> std::result::Result<Expr, RuleError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        schema,
    };
    let e = p.expr()?;
    if p.peek().0 != Tok::End {
        return Err(p.fail(&["'and'", "'or'", "end of input"]));
    }
    Ok(e)
}

pub fn parse_rule(
    name: &str,
    text: &str,
    schema: &Schema,
) -> std::result::Result<ClinicalRule, RuleError> {
    Ok(ClinicalRule {
        name: name.to_string(),
        source: text.trim().to_string(),
        severity: DEFAULT_SEVERITY.to_string(),
        expression: parse_expression(text, schema)?,
    })
}

pub const DEFAULT_SEVERITY: &str = "error";

fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    for (i, c) in line.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' || c == '`' => quote = Some(c),
            None if c == '#' => return &line[..i],
            None => {}
        }
    }
    line
}

/// Parses a rules file: one `name [severity]: expression` per line, `#`
/// starts a comment, blank lines are ignored.
pub fn parse_rules(text: &str, schema: &Schema) -> Result<Vec<ClinicalRule>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let line_no = lineno + 1;
        let Some((head, body)) = line.split_once(':') else {
            return Err(AuditError::RuleLine {
                line: line_no,
                message: "expected `name: expression`".into(),
            });
        };
        let head = head.trim();
        let (name, severity) = match head.split_once('[') {
            Some((n, rest)) => {
                let sev = rest.strip_suffix(']').ok_or_else(|| AuditError::RuleLine {
                    line: line_no,
                    message: "unterminated severity".into(),
                })?;
                (n.trim(), sev.trim())
            }
            None => (head, DEFAULT_SEVERITY),
        };
        if name.is_empty() {
            return Err(AuditError::RuleLine {
                line: line_no,
                message: "empty rule name".into(),
            });
        }
        let expression = parse_expression(body, schema).map_err(|error| {
            let colon = raw.find(':').unwrap_or(0);
            AuditError::RuleFile {
                line: line_no,
                column: raw[..colon].chars().count() + 2 + error.position(),
                error,
            }
        })?;
        out.push(ClinicalRule {
            name: name.to_string(),
            source: body.trim().to_string(),
            severity: severity.to_string(),
            expression,
        });
    }
    Ok(out)
}

/// Expression with columns resolved against one dataset.
enum Bound {
    NumLit {
        col: usize,
        op: CmpOp,
        value: f64,
    },
    NumCol {
        a: usize,
        op: CmpOp,
        b: usize,
    },
    CatLit {
        col: usize,
        op: CmpOp,
        code: Option<u32>,
    },
    CatCol {
        a: usize,
        op: CmpOp,
        b: usize,
        map: Vec<Option<u32>>,
    },
    Missing(usize),
    Not(Box<Bound>),
    And(Box<Bound>, Box<Bound>),
    Or(Box<Bound>, Box<Bound>),
}

fn bind(e: &Expr, ds: &Dataset) -> Result<Bound> {
    let idx = |name: &str| ds.schema().require(name);
    Ok(match e {
        Expr::IsMissing(c) => Bound::Missing(idx(c)?),
        Expr::Not(x) => Bound::Not(Box::new(bind(x, ds)?)),
        Expr::And(a, b) => Bound::And(Box::new(bind(a, ds)?), Box::new(bind(b, ds)?)),
        Expr::Or(a, b) => Bound::Or(Box::new(bind(a, ds)?), Box::new(bind(b, ds)?)),
        Expr::Compare { column, op, rhs } => {
            let col = idx(column)?;
            match (ds.column(col), rhs) {
                (ColumnData::Numeric(_), Operand::Number(v)) => Bound::NumLit {
                    col,
                    op: *op,
                    value: *v,
                },
                (ColumnData::Numeric(_), Operand::Column(b)) => Bound::NumCol {
                    a: col,
                    op: *op,
                    b: idx(b)?,
                },
                (ColumnData::Categorical { levels, .. }, Operand::Text(t)) => Bound::CatLit {
                    col,
                    op: *op,
                    code: levels.iter().position(|l| l == t).map(|c| c as u32),
                },
                (ColumnData::Categorical { levels, .. }, Operand::Column(b)) => {
                    let bi = idx(b)?;
                    let ColumnData::Categorical { levels: other, .. } = ds.column(bi) else {
                        return Err(AuditError::NotCategorical(b.clone()));
                    };
                    let map = other
                        .iter()
                        .map(|l| levels.iter().position(|x| x == l).map(|c| c as u32))
                        .collect();
                    Bound::CatCol {
                        a: col,
                        op: *op,
                        b: bi,
                        map,
                    }
                }
                (ColumnData::Numeric(_), _) => {
                    return Err(AuditError::NotCategorical(column.clone()))
                }
                (ColumnData::Categorical { .. }, _) => {
                    return Err(AuditError::NotNumeric(column.clone()))
                }
            }
        }
    })
}

fn eval(b: &Bound, ds: &Dataset, row: usize) -> bool {
    let num = |c: usize| match ds.column(c) {
        ColumnData::Numeric(v) => v[row],
        _ => unreachable!(),
    };
    let code = |c: usize| match ds.column(c) {
        ColumnData::Categorical { codes, .. } => codes[row],
        _ => unreachable!(),
    };
    match b {
        Bound::NumLit { col, op, value } => {
            let x = num(*col);
            !x.is_nan() && op.apply(x, *value)
        }
        Bound::NumCol { a, op, b } => {
            let (x, y) = (num(*a), num(*b));
            !x.is_nan() && !y.is_nan() && op.apply(x, y)
        }
        Bound::CatLit { col, op, code: lit } => {
            let x = code(*col);
            x != MISSING_CODE && op.apply(Some(x) == *lit, true)
        }
        Bound::CatCol { a, op, b, map } => {
            let (x, y) = (code(*a), code(*b));
            x != MISSING_CODE && y != MISSING_CODE && op.apply(map[y as usize] == Some(x), true)
        }
        Bound::Missing(c) => ds.column(*c).is_missing(row),
        Bound::Not(x) => !eval(x, ds, row),
        Bound::And(x, y) => eval(x, ds, row) && eval(y, ds, row),
        Bound::Or(x, y) => eval(x, ds, row) || eval(y, ds, row),
    }
}

/// Row-wise truth values of one rule.
pub fn evaluate_rule(rule: &ClinicalRule, ds: &Dataset) -> Result<Vec<bool>> {
    let b = bind(&rule.expression, ds)?;
    Ok((0..ds.row_count())
        .into_par_iter()
        .map(|r| eval(&b, ds, r))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleCount {
    pub name: String,
    pub expression: String,
    pub severity: String,
    pub violations: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub records: usize,
    pub inconsistent_records: usize,
    pub violation_fraction: f64,
    pub rules: Vec<RuleCount>,
}

/// Share of records for which at least one rule holds.
pub fn consistency_rate(ds: &Dataset, rules: &[ClinicalRule]) -> Result<ConsistencyResult> {
    let n = ds.row_count();
    let mut any = vec![false; n];
    let mut counts = Vec::with_capacity(rules.len());
    for rule in rules {
        let hits = evaluate_rule(rule, ds)?;
        let v = hits.iter().filter(|&&h| h).count();
        for (a, h) in any.iter_mut().zip(hits) {
            *a |= h;
        }
        counts.push(RuleCount {
            name: rule.name.clone(),
            expression: rule.source.clone(),
            severity: rule.severity.clone(),
            violations: v,
            fraction: if n == 0 { 0.0 } else { v as f64 / n as f64 },
        });
    }
    let bad = any.iter().filter(|&&a| a).count();
    Ok(ConsistencyResult {
        records: n,
        inconsistent_records: bad,
        violation_fraction: if n == 0 { 0.0 } else { bad as f64 / n as f64 },
        rules: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnSpec;

    fn schema() -> Schema {
        Schema::new(vec![
            ColumnSpec::categorical("sex"),
            ColumnSpec::categorical("pregnant"),
            ColumnSpec::numeric("age"),
            ColumnSpec::numeric("weight"),
        ])
        .unwrap()
    }

    #[test]
    fn precedence_and_canonical_form() {
        let e =
            parse_expression("age < 3 or sex == \"M\" and not weight > 100", &schema()).unwrap();
        assert_eq!(
            e.to_string(),
            "(age < 3 or (sex == \"M\" and not weight > 100))"
        );
    }

    #[test]
    fn error_positions() {
        let err = parse_expression("age <", &schema()).unwrap_err();
        assert_eq!(err.position(), 5);
        assert!(
            matches!(err, RuleError::Syntax { ref expected, .. } if expected.contains(&"literal".to_string()))
        );
        assert!(matches!(
            parse_expression("height > 1", &schema()),
            Err(RuleError::UnknownColumn { position: 0, .. })
        ));
        assert!(matches!(
            parse_expression("age == \"x\"", &schema()),
            Err(RuleError::TypeMismatch { position: 7, .. })
        ));
    }

    #[test]
    fn counts_and_missing_collapse() {
        let rows = [
            ["M", "Y", "30", "80"],
            ["M", "Y", "40", "90"],
            ["F", "Y", "30", "60"],
            ["M", "N", "1", "120"],
            ["M", "", "", ""],
            ["F", "N", "50", "70"],
            ["F", "N", "20", "50"],
            ["M", "N", "60", "85"],
            ["F", "Y", "25", "55"],
            ["M", "N", "35", "75"],
        ];
        let ds = Dataset::from_records(schema(), rows).unwrap();
        let r = parse_rule(
            "male_pregnant",
            "sex == \"M\" and pregnant == \"Y\"",
            &schema(),
        )
        .unwrap();
        let c = consistency_rate(&ds, &[r]).unwrap();
        assert_eq!(c.violation_fraction, 0.2);
        assert_eq!(consistency_rate(&ds, &[]).unwrap().violation_fraction, 0.0);
        let only_missing = parse_rule("m", "pregnant == \"Y\" and weight > 0", &schema()).unwrap();
        let hits = evaluate_rule(&only_missing, &ds).unwrap();
        assert!(!hits[4]);
        let negated = parse_rule("n", "not weight > 0", &schema()).unwrap();
        assert!(evaluate_rule(&negated, &ds).unwrap()[4]);
    }

    #[test]
    fn rules_file_format() {
        let text = "# header\nmale_pregnant [critical]: sex == \"M\" and pregnant == \"Y\" # trailing\n\nbaby: age <= 3 and weight > 100\nhash: sex == \"#\"\n";
        let rules = parse_rules(text, &schema()).unwrap();
        assert_eq!(rules.len(), 3);
        assert_eq!(rules[0].severity, "critical");
        assert_eq!(rules[1].severity, DEFAULT_SEVERITY);
        assert_eq!(rules[2].source, "sex == \"#\"");
        let bad = parse_rules("ok: age > 1\nbroken: age >", &schema()).unwrap_err();
        assert!(matches!(
            bad,
            AuditError::RuleFile {
                line: 2,
                column: 14,
                ..
            }
        ));
        assert_eq!(
            bad.to_string(),
            "rule on line 2, column 14: syntax error: expected literal or column, found end of input"
        );
    }
}

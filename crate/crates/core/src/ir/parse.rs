use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{BinOp, Method, Operand, Program, Rhs, Stmt, Unit, UnitId};

const KEYWORDS: [&str; 5] = ["method", "if", "goto", "return", "nop"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { found: String, expected: Vec<String> },
    DuplicateLabel { label: String, first_line: usize },
    UnknownTarget { label: String },
    DuplicateMethod { name: String, first_line: usize },
    DuplicateParam { name: String },
    /// `if` as the last unit of a method has no false successor.
    MissingFallthrough,
}

/// Parse diagnostic. `line`/`column` are 1-based and point at the offending
/// token (for label errors, at the second occurrence or the branch).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax { found, expected } => {
                write!(f, "unexpected {found}, expected one of: {}", expected.join(", "))
            }
            ParseErrorKind::DuplicateLabel { label, first_line } => write!(
                f,
                "duplicate label {label} (first defined on line {first_line}, again on line {})",
                self.line
            ),
            ParseErrorKind::UnknownTarget { label } => write!(f, "unknown branch target {label}"),
            ParseErrorKind::DuplicateMethod { name, first_line } => write!(
                f,
                "duplicate method {name} (first defined on line {first_line})"
            ),
            ParseErrorKind::DuplicateParam { name } => write!(f, "duplicate parameter {name}"),
            ParseErrorKind::MissingFallthrough => {
                f.write_str("conditional branch at end of method has no fallthrough successor")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Newline,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Assign,
    Op(BinOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Newline => "newline".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Op(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, found: String, expected: &[&str]) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax {
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        },
        line,
        column,
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut toks = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let chars: Vec<char> = raw_line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            let single = |tok| Spanned { tok, line, column };
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                '(' | ')' | '{' | '}' | ',' | ':' | '+' | '-' | '*' | '<' => {
                    toks.push(single(match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        '+' => Tok::Op(BinOp::Add),
                        '-' => Tok::Op(BinOp::Sub),
                        '*' => Tok::Op(BinOp::Mul),
                        _ => Tok::Op(BinOp::Lt),
                    }));
                    i += 1;
                }
                '=' => {
                    if chars.get(i + 1) == Some(&'=') {
                        toks.push(single(Tok::Op(BinOp::Eq)));
                        i += 2;
                    } else {
                        toks.push(single(Tok::Assign));
                        i += 1;
                    }
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let digits: String = chars[start..i].iter().collect();
                    let value = digits.parse().map_err(|_| {
                        syntax(line, column, format!("integer `{digits}` out of range"), &["INT"])
                    })?;
                    toks.push(single(Tok::Int(value)));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                    {
                        i += 1;
                    }
                    toks.push(single(Tok::Ident(chars[start..i].iter().collect())));
                }
                other => {
                    return Err(syntax(
                        line,
                        column,
                        format!("character `{other}`"),
                        &["NAME", "INT", "operator", "punctuation"],
                    ))
                }
            }
        }
        toks.push(Spanned {
            tok: Tok::Newline,
            line,
            column: chars.len() + 1,
        });
    }
    let line = text.lines().count().max(1);
    toks.push(Spanned {
        tok: Tok::Eof,
        line,
        column: 1,
    });
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

/// A statement before label resolution.
struct RawStmt {
    label: Option<(String, usize)>,
    stmt: Stmt,
    line: usize,
    column: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        syntax(t.line, t.column, t.tok.describe(), expected)
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Spanned, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&[expected]))
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(&[&format!("`{kw}`")])),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn program(&mut self) -> Result<Vec<(Method, Vec<RawStmt>)>, ParseError> {
        let mut methods = Vec::new();
        self.skip_newlines();
        if self.peek().tok == Tok::Eof {
            return Err(self.error(&["`method`"]));
        }
        while self.peek().tok != Tok::Eof {
            methods.push(self.method()?);
            self.skip_newlines();
        }
        Ok(methods)
    }

    fn method(&mut self) -> Result<(Method, Vec<RawStmt>), ParseError> {
        let decl_line = self.peek().line;
        self.keyword("method")?;
        let name = self.name("method name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params: Vec<String> = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                let t = self.peek().clone();
                let p = self.name("parameter name")?;
                if params.contains(&p) {
                    return Err(ParseError {
                        kind: ParseErrorKind::DuplicateParam { name: p },
                        line: t.line,
                        column: t.column,
                    });
                }
                params.push(p);
                if self.peek().tok == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let brace = self.expect(Tok::LBrace, "`{`")?;

        let mut stmts = Vec::new();
        loop {
            self.skip_newlines();
            if self.peek().tok == Tok::RBrace {
                self.bump();
                break;
            }
            stmts.push(self.stmt()?);
        }
        if stmts.is_empty() {
            stmts.push(RawStmt {
                label: None,
                stmt: Stmt::Nop,
                line: brace.line,
                column: brace.column,
            });
        }
        let method = Method {
            name,
            params,
            units: Vec::new(),
            locals: BTreeSet::new(),
            decl_line,
        };
        Ok((method, stmts))
    }

    fn stmt(&mut self) -> Result<RawStmt, ParseError> {
        let start = self.peek().clone();
        let mut label = None;
        if matches!(self.peek_at(0), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon {
            let name = self.name("label")?;
            self.bump();
            label = Some((name, start.line));
        }
        let core_start = self.peek().clone();
        let stmt = self.core()?;
        match self.peek().tok {
            Tok::Newline => {
                self.bump();
            }
            Tok::RBrace => {}
            _ => return Err(self.error(&["newline", "`}`"])),
        }
        Ok(RawStmt {
            label,
            stmt,
            line: core_start.line,
            column: core_start.column,
        })
    }

    fn core(&mut self) -> Result<Stmt, ParseError> {
        if self.at_keyword("if") {
            self.bump();
            let cond = self.name("condition variable")?;
            self.keyword("goto")?;
            let target = self.name("label")?;
            return Ok(Stmt::If { cond, target });
        }
        if self.at_keyword("goto") {
            self.bump();
            let target = self.name("label")?;
            return Ok(Stmt::Goto { target });
        }
        if self.at_keyword("return") {
            self.bump();
            let value = match &self.peek().tok {
                Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                    Some(self.name("return value")?)
                }
                _ => None,
            };
            return Ok(Stmt::Return { value });
        }
        if self.at_keyword("nop") {
            self.bump();
            return Ok(Stmt::Nop);
        }
        let name = self
            .name("NAME")
            .map_err(|_| self.error(&["NAME", "`if`", "`goto`", "`return`", "`nop`"]))?;
        match self.peek().tok {
            Tok::Assign => {
                self.bump();
                let rhs = self.rhs()?;
                Ok(Stmt::Assign { target: name, rhs })
            }
            Tok::LParen => {
                let args = self.args()?;
                Ok(Stmt::Invoke { callee: name, args })
            }
            _ => Err(self.error(&["`=`", "`(`"])),
        }
    }

    fn args(&mut self) -> Result<Vec<Operand>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                args.push(self.operand()?);
                if self.peek().tok == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek().tok.clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Operand::Const(i))
            }
            Tok::Ident(_) => Ok(Operand::Var(
                self.name("NAME").map_err(|_| self.error(&["NAME", "INT"]))?,
            )),
            _ => Err(self.error(&["NAME", "INT"])),
        }
    }

    fn rhs(&mut self) -> Result<Rhs, ParseError> {
        if let Tok::Int(i) = self.peek().tok {
            self.bump();
            return Ok(Rhs::Const(i));
        }
        let name = self
            .name("NAME")
            .map_err(|_| self.error(&["NAME", "INT"]))?;
        match self.peek().tok {
            Tok::LParen => {
                let args = self.args()?;
                Ok(Rhs::Call { callee: name, args })
            }
            Tok::Op(op) => {
                self.bump();
                let rhs = self.operand()?;
                Ok(Rhs::Binary { op, lhs: name, rhs })
            }
            _ => Ok(Rhs::Var(name)),
        }
    }
}

fn resolve(mut method: Method, stmts: Vec<RawStmt>) -> Result<Method, ParseError> {
    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    for raw in &stmts {
        if let Some((label, line)) = &raw.label {
            if let Some(first_line) = labels.get(label) {
                return Err(ParseError {
                    kind: ParseErrorKind::DuplicateLabel {
                        label: label.clone(),
                        first_line: *first_line,
                    },
                    line: *line,
                    column: 1,
                });
            }
            labels.insert(label.clone(), *line);
        }
    }
    let count = stmts.len();
    for (ordinal, raw) in stmts.into_iter().enumerate() {
        if let Some(target) = raw.stmt.branch_target() {
            if !labels.contains_key(target) {
                return Err(ParseError {
                    kind: ParseErrorKind::UnknownTarget {
                        label: target.to_string(),
                    },
                    line: raw.line,
                    column: raw.column,
                });
            }
        }
        if matches!(raw.stmt, Stmt::If { .. }) && ordinal + 1 == count {
            return Err(ParseError {
                kind: ParseErrorKind::MissingFallthrough,
                line: raw.line,
                column: raw.column,
            });
        }
        for var in raw.stmt.defs().into_iter().chain(raw.stmt.uses()) {
            if !method.params.contains(&var) {
                method.locals.insert(var);
            }
        }
        method.units.push(Unit {
            id: UnitId::new(method.name.clone(), ordinal),
            label: raw.label.map(|(l, _)| l),
            stmt: raw.stmt,
            source_line: raw.line,
        });
    }
    Ok(method)
}

/// Parse IR text into a [`Program`].
///
/// The entry method is `main` when present, otherwise the first method.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0 };
    let raw = parser.program()?;

    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut methods = Vec::with_capacity(raw.len());
    for (method, stmts) in raw {
        if let Some(first_line) = seen.get(&method.name) {
            return Err(ParseError {
                kind: ParseErrorKind::DuplicateMethod {
                    name: method.name.clone(),
                    first_line: *first_line,
                },
                line: method.decl_line,
                column: 1,
            });
        }
        seen.insert(method.name.clone(), method.decl_line);
        methods.push(resolve(method, stmts)?);
    }
    let entry = if seen.contains_key("main") {
        "main".to_string()
    } else {
        methods[0].name.clone()
    };
    Ok(Program { methods, entry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::UnitKind;

    #[test]
    fn minimal_program() {
        let p = parse_program("method main() { nop }").unwrap();
        assert_eq!(p.methods.len(), 1);
        assert_eq!(p.entry, "main");
        let units = &p.methods[0].units;
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].kind(), UnitKind::Nop);
        assert_eq!(units[0].source_line, 1);
    }

    #[test]
    fn leak_program_defs() {
        let p = parse_program(crate::corpus::LEAK).unwrap();
        let m = &p.methods[0];
        assert_eq!(m.units.len(), 4);
        let kinds: Vec<_> = m.units.iter().map(Unit::kind).collect();
        assert_eq!(
            kinds,
            [
                UnitKind::Assign,
                UnitKind::Assign,
                UnitKind::Invoke,
                UnitKind::Invoke
            ]
        );
        let defs: Vec<Vec<String>> = m
            .units
            .iter()
            .map(|u| u.defs().into_iter().collect())
            .collect();
        assert_eq!(defs, [vec!["x"], vec!["y"], vec![], vec![]]);
        let lines: Vec<_> = m.units.iter().map(|u| u.source_line).collect();
        assert_eq!(lines, [1, 2, 3, 4]);
        assert_eq!(
            m.locals,
            BTreeSet::from(["x".to_string(), "y".to_string()])
        );
    }

    #[test]
    fn unknown_branch_target() {
        let err = parse_program("method main() { goto L9 }").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::UnknownTarget {
                label: "L9".into()
            }
        );
        assert!(err.to_string().contains("unknown branch target L9"));
    }

    #[test]
    fn duplicate_label_names_both_lines() {
        let err = parse_program("method main() {\n L: nop\n L: nop\n}").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::DuplicateLabel {
                label: "L".into(),
                first_line: 2
            }
        );
        assert_eq!(err.line, 3);
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn syntax_error_reports_position_and_expectations() {
        let err = parse_program("method main() {\n  x = \n}").unwrap_err();
        assert_eq!((err.line, err.column), (2, 7));
        match err.kind {
            ParseErrorKind::Syntax { expected, found } => {
                assert_eq!(found, "newline");
                assert!(expected.contains(&"NAME".to_string()));
                assert!(expected.contains(&"INT".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn keywords_are_not_names() {
        assert!(parse_program("method main() { if = 1 }").is_err());
        assert!(parse_program("method main() { x = goto }").is_err());
    }

    #[test]
    fn empty_body_becomes_nop() {
        let p = parse_program("method main() {\n}\n").unwrap();
        assert_eq!(p.methods[0].units.len(), 1);
        assert_eq!(p.methods[0].units[0].stmt, Stmt::Nop);
    }

    #[test]
    fn two_statements_on_one_line_are_rejected() {
        assert!(parse_program("method main() { nop nop }").is_err());
    }

    #[test]
    fn if_needs_fallthrough() {
        let err = parse_program("method main() {\n L: nop\n if c goto L\n}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingFallthrough);
    }

    #[test]
    fn comments_and_operators() {
        let src = "# header\nmethod f(a, b) { # trailing\n  c = a == b\n  d = c < 3\n  return d\n}";
        let p = parse_program(src).unwrap();
        assert_eq!(p.entry, "f");
        let m = &p.methods[0];
        assert_eq!(m.params, ["a", "b"]);
        assert_eq!(m.units[0].text(), "c = a == b");
        assert_eq!(m.units[1].text(), "d = c < 3");
        assert_eq!(m.units[0].source_line, 3);
    }

    #[test]
    fn duplicate_method_rejected() {
        let err = parse_program("method f() { nop }\nmethod f() { nop }").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::DuplicateMethod { .. }));
    }

    #[test]
    fn render_round_trips_corpus() {
        for (name, src) in crate::corpus::PROGRAMS {
            let p = parse_program(src).unwrap();
            let q = parse_program(&p.render()).unwrap_or_else(|e| panic!("{name}: {e}"));
            let shape = |p: &Program| -> Vec<_> {
                p.units()
                    .map(|u| (u.id.clone(), u.label.clone(), u.stmt.clone()))
                    .collect()
            };
            assert_eq!(shape(&p), shape(&q), "{name}");
        }
    }
}

//! Three-address intermediate representation.
//!
//! A [`Program`] is a list of methods, each an ordered list of [`Unit`]s
//! (one statement per unit). Units are addressed by [`UnitId`], rendered as
//! `method#ordinal`. The textual format is parsed by [`parse_program`] and
//! printed back by [`Program::render`].

mod callgraph;
mod cfg;
mod info;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use callgraph::{build_call_graph, CallEdge, CallGraph};
pub use cfg::{build_cfg, Cfg, CfgEdge, EdgeKind, EdgeParseError, EdgeRef};
pub use info::{unit_info, OperandInfo, UnitInfo, UnitNotFound};
pub use parse::{parse_program, ParseError, ParseErrorKind};

/// Stable identifier of a unit: owning method plus 0-based ordinal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitId {
    pub method: String,
    pub ordinal: usize,
}

impl UnitId {
    pub fn new(method: impl Into<String>, ordinal: usize) -> Self {
        UnitId {
            method: method.into(),
            ordinal,
        }
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.method, self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed unit id `{0}` (expected method#ordinal)")]
pub struct UnitIdParseError(pub String);

impl FromStr for UnitId {
    type Err = UnitIdParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (method, ordinal) = s
            .rsplit_once('#')
            .ok_or_else(|| UnitIdParseError(s.to_string()))?;
        if method.is_empty() {
            return Err(UnitIdParseError(s.to_string()));
        }
        let ordinal = ordinal
            .parse()
            .map_err(|_| UnitIdParseError(s.to_string()))?;
        Ok(UnitId::new(method, ordinal))
    }
}

impl Serialize for UnitId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UnitId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Assign,
    /// Plain copy `x = y`.
    Identity,
    If,
    Goto,
    Invoke,
    Return,
    Nop,
}

impl UnitKind {
    pub const ALL: [UnitKind; 7] = [
        UnitKind::Assign,
        UnitKind::Identity,
        UnitKind::If,
        UnitKind::Goto,
        UnitKind::Invoke,
        UnitKind::Return,
        UnitKind::Nop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Assign => "assign",
            UnitKind::Identity => "identity",
            UnitKind::If => "if",
            UnitKind::Goto => "goto",
            UnitKind::Invoke => "invoke",
            UnitKind::Return => "return",
            UnitKind::Nop => "nop",
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UnitKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown unit kind `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Eq,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Eq => "==",
        }
    }

    /// Wrapping integer semantics; comparisons yield 0 or 1.
    pub fn eval(self, lhs: i64, rhs: i64) -> i64 {
        match self {
            BinOp::Add => lhs.wrapping_add(rhs),
            BinOp::Sub => lhs.wrapping_sub(rhs),
            BinOp::Mul => lhs.wrapping_mul(rhs),
            BinOp::Lt => i64::from(lhs < rhs),
            BinOp::Eq => i64::from(lhs == rhs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Var(String),
    Const(i64),
}

impl Operand {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Const(_) => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => f.write_str(v),
            Operand::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Right-hand side of an assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rhs {
    Call { callee: String, args: Vec<Operand> },
    Var(String),
    Const(i64),
    Binary { op: BinOp, lhs: String, rhs: Operand },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign { target: String, rhs: Rhs },
    If { cond: String, target: String },
    Goto { target: String },
    Invoke { callee: String, args: Vec<Operand> },
    Return { value: Option<String> },
    Nop,
}

impl Stmt {
    pub fn kind(&self) -> UnitKind {
        match self {
            Stmt::Assign { rhs: Rhs::Var(_), .. } => UnitKind::Identity,
            Stmt::Assign { .. } => UnitKind::Assign,
            Stmt::If { .. } => UnitKind::If,
            Stmt::Goto { .. } => UnitKind::Goto,
            Stmt::Invoke { .. } => UnitKind::Invoke,
            Stmt::Return { .. } => UnitKind::Return,
            Stmt::Nop => UnitKind::Nop,
        }
    }

    pub fn defs(&self) -> BTreeSet<String> {
        match self {
            Stmt::Assign { target, .. } => BTreeSet::from([target.clone()]),
            _ => BTreeSet::new(),
        }
    }

    pub fn uses(&self) -> BTreeSet<String> {
        let vars_of = |args: &[Operand]| -> BTreeSet<String> {
            args.iter()
                .filter_map(|a| a.as_var().map(str::to_string))
                .collect()
        };
        match self {
            Stmt::Assign { rhs, .. } => match rhs {
                Rhs::Call { args, .. } => vars_of(args),
                Rhs::Var(v) => BTreeSet::from([v.clone()]),
                Rhs::Const(_) => BTreeSet::new(),
                Rhs::Binary { lhs, rhs, .. } => {
                    let mut uses = BTreeSet::from([lhs.clone()]);
                    uses.extend(rhs.as_var().map(str::to_string));
                    uses
                }
            },
            Stmt::If { cond, .. } => BTreeSet::from([cond.clone()]),
            Stmt::Invoke { args, .. } => vars_of(args),
            Stmt::Return { value } => value.iter().cloned().collect(),
            Stmt::Goto { .. } | Stmt::Nop => BTreeSet::new(),
        }
    }

    /// Called method or primitive, for invokes and call assignments.
    pub fn callee(&self) -> Option<&str> {
        match self {
            Stmt::Assign {
                rhs: Rhs::Call { callee, .. },
                ..
            }
            | Stmt::Invoke { callee, .. } => Some(callee),
            _ => None,
        }
    }

    pub fn call_args(&self) -> &[Operand] {
        match self {
            Stmt::Assign {
                rhs: Rhs::Call { args, .. },
                ..
            }
            | Stmt::Invoke { args, .. } => args,
            _ => &[],
        }
    }

    pub fn branch_target(&self) -> Option<&str> {
        match self {
            Stmt::If { target, .. } | Stmt::Goto { target } => Some(target),
            _ => None,
        }
    }
}

fn join_args(args: &[Operand]) -> String {
    args.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Assign { target, rhs } => {
                write!(f, "{target} = ")?;
                match rhs {
                    Rhs::Call { callee, args } => write!(f, "{callee}({})", join_args(args)),
                    Rhs::Var(v) => f.write_str(v),
                    Rhs::Const(c) => write!(f, "{c}"),
                    Rhs::Binary { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
                }
            }
            Stmt::If { cond, target } => write!(f, "if {cond} goto {target}"),
            Stmt::Goto { target } => write!(f, "goto {target}"),
            Stmt::Invoke { callee, args } => write!(f, "{callee}({})", join_args(args)),
            Stmt::Return { value: Some(v) } => write!(f, "return {v}"),
            Stmt::Return { value: None } => f.write_str("return"),
            Stmt::Nop => f.write_str("nop"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unit {
    pub id: UnitId,
    pub label: Option<String>,
    pub stmt: Stmt,
    /// 1-based line in the IR source.
    pub source_line: usize,
}

impl Unit {
    pub fn kind(&self) -> UnitKind {
        self.stmt.kind()
    }

    pub fn defs(&self) -> BTreeSet<String> {
        self.stmt.defs()
    }

    pub fn uses(&self) -> BTreeSet<String> {
        self.stmt.uses()
    }

    pub fn callee(&self) -> Option<&str> {
        self.stmt.callee()
    }

    /// Statement text without the label, e.g. `y = sanitize(x)`.
    pub fn text(&self) -> String {
        self.stmt.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Method {
    pub name: String,
    pub params: Vec<String>,
    pub units: Vec<Unit>,
    pub locals: BTreeSet<String>,
    /// Line of the `method` keyword.
    pub decl_line: usize,
}

impl Method {
    pub fn unit(&self, ordinal: usize) -> Option<&Unit> {
        self.units.get(ordinal)
    }

    /// Ordinal of the unit carrying `label`.
    pub fn label_target(&self, label: &str) -> Option<usize> {
        self.units
            .iter()
            .position(|u| u.label.as_deref() == Some(label))
    }

    /// Every variable mentioned by the method: params plus locals.
    pub fn variables(&self) -> BTreeSet<String> {
        self.params
            .iter()
            .cloned()
            .chain(self.locals.iter().cloned())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub methods: Vec<Method>,
    pub entry: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no method named `{0}`")]
pub struct UnknownMethod(pub String);

impl Program {
    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn unit(&self, id: &UnitId) -> Option<&Unit> {
        self.method(&id.method)?.unit(id.ordinal)
    }

    pub fn entry_method(&self) -> &Method {
        self.method(&self.entry)
            .expect("entry names an existing method")
    }

    pub fn with_entry(mut self, entry: &str) -> Result<Self, UnknownMethod> {
        if self.method(entry).is_none() {
            return Err(UnknownMethod(entry.to_string()));
        }
        self.entry = entry.to_string();
        Ok(self)
    }

    pub fn units(&self) -> impl Iterator<Item = &Unit> {
        self.methods.iter().flat_map(|m| m.units.iter())
    }

    pub fn unit_count(&self) -> usize {
        self.methods.iter().map(|m| m.units.len()).sum()
    }

    /// Units whose source line is `line`.
    pub fn units_on_line(&self, line: usize) -> Vec<&Unit> {
        self.units().filter(|u| u.source_line == line).collect()
    }

    /// Render back to IR text, one statement per line.
    ///
    /// The output parses to a structurally equal program, though source
    /// lines differ from the original file.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for method in &self.methods {
            out.push_str(&format!(
                "method {}({}) {{\n",
                method.name,
                method.params.join(", ")
            ));
            for unit in &method.units {
                out.push_str("  ");
                if let Some(label) = &unit.label {
                    out.push_str(label);
                    out.push_str(": ");
                }
                out.push_str(&unit.text());
                out.push('\n');
            }
            out.push_str("}\n");
        }
        out
    }
}

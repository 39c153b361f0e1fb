use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{build_cfg, Operand, Program, Rhs, Stmt, UnitId, UnitKind};

/// One component of a statement, for the inspection panel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OperandInfo {
    pub role: String,
    /// `variable`, `constant`, `label`, `method`, `primitive` or `operator`.
    pub kind: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitInfo {
    pub id: UnitId,
    pub kind: UnitKind,
    pub text: String,
    pub label: Option<String>,
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
    pub callee: Option<String>,
    pub operands: Vec<OperandInfo>,
    pub source_line: usize,
    /// Outgoing CFG edges, rendered.
    pub successors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no unit {0}")]
pub struct UnitNotFound(pub String);

fn operand(role: &str, op: &Operand) -> OperandInfo {
    let kind = match op {
        Operand::Var(_) => "variable",
        Operand::Const(_) => "constant",
    };
    OperandInfo {
        role: role.to_string(),
        kind: kind.to_string(),
        text: op.to_string(),
    }
}

fn named(role: &str, kind: &str, text: &str) -> OperandInfo {
    OperandInfo {
        role: role.to_string(),
        kind: kind.to_string(),
        text: text.to_string(),
    }
}

pub fn unit_info(program: &Program, id: &UnitId) -> Result<UnitInfo, UnitNotFound> {
    let unit = program
        .unit(id)
        .ok_or_else(|| UnitNotFound(id.to_string()))?;
    let callee_kind = |callee: &str| {
        if program.method(callee).is_some() {
            "method"
        } else {
            "primitive"
        }
    };
    let mut operands = Vec::new();
    let call_args = |operands: &mut Vec<OperandInfo>, args: &[Operand]| {
        for (i, a) in args.iter().enumerate() {
            operands.push(operand(&format!("arg{i}"), a));
        }
    };
    match &unit.stmt {
        Stmt::Assign { target, rhs } => {
            operands.push(named("target", "variable", target));
            match rhs {
                Rhs::Call { callee, args } => {
                    operands.push(named("callee", callee_kind(callee), callee));
                    call_args(&mut operands, args);
                }
                Rhs::Var(v) => operands.push(named("source", "variable", v)),
                Rhs::Const(c) => operands.push(operand("value", &Operand::Const(*c))),
                Rhs::Binary { op, lhs, rhs } => {
                    operands.push(named("lhs", "variable", lhs));
                    operands.push(named("operator", "operator", op.symbol()));
                    operands.push(operand("rhs", rhs));
                }
            }
        }
        Stmt::If { cond, target } => {
            operands.push(named("condition", "variable", cond));
            operands.push(named("target", "label", target));
        }
        Stmt::Goto { target } => operands.push(named("target", "label", target)),
        Stmt::Invoke { callee, args } => {
            operands.push(named("callee", callee_kind(callee), callee));
            call_args(&mut operands, args);
        }
        Stmt::Return { value: Some(v) } => operands.push(named("value", "variable", v)),
        Stmt::Return { value: None } | Stmt::Nop => {}
    }
    let method = program
        .method(&id.method)
        .expect("unit lookup succeeded");
    let cfg = build_cfg(method);
    Ok(UnitInfo {
        id: id.clone(),
        kind: unit.kind(),
        text: unit.text(),
        label: unit.label.clone(),
        defs: unit.defs(),
        uses: unit.uses(),
        callee: unit.callee().map(str::to_string),
        operands,
        source_line: unit.source_line,
        successors: cfg.successors(id).map(ToString::to_string).collect(),
    })
}

fn set(s: &BTreeSet<String>) -> String {
    format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(", "))
}

/// Multi-line text block used by the REPL and the inspection panel.
impl fmt::Display for UnitInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (line {}): {}", self.id, self.source_line, self.text)?;
        writeln!(f, "  kind: {}", self.kind)?;
        if let Some(label) = &self.label {
            writeln!(f, "  label: {label}")?;
        }
        writeln!(f, "  defs: {}", set(&self.defs))?;
        writeln!(f, "  uses: {}", set(&self.uses))?;
        if let Some(callee) = &self.callee {
            writeln!(f, "  callee: {callee}")?;
        }
        for op in &self.operands {
            writeln!(f, "  {}: {} ({})", op.role, op.text, op.kind)?;
        }
        write!(f, "  successors: [{}]", self.successors.join(", "))
    }
}

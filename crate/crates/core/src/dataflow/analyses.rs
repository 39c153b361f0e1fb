//! The bundled analyses: taint (plus seeded-bug variants), reaching
//! definitions, live variables and constant propagation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{
    AnalysisDef, ConstLattice, ConstValue, Direction, FactSet, FlowOut, Lattice, PowersetLattice,
    SetShape,
};
use crate::ir::{Cfg, Method, Operand, Rhs, Stmt, Unit};

/// Primitive names with taint semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaintConfig {
    pub sources: BTreeSet<String>,
    pub sinks: BTreeSet<String>,
    pub sanitizers: BTreeSet<String>,
}

impl Default for TaintConfig {
    fn default() -> Self {
        TaintConfig {
            sources: BTreeSet::from(["source".to_string()]),
            sinks: BTreeSet::from(["sink".to_string()]),
            sanitizers: BTreeSet::from(["sanitize".to_string()]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("taint config line {line}: {message}")]
pub struct TaintConfigError {
    pub line: usize,
    pub message: String,
}

impl TaintConfig {
    /// Parse `source <name>` / `sink <name>` / `sanitizer <name>` lines.
    /// `#` starts a comment. The file replaces the defaults entirely.
    pub fn parse(text: &str) -> Result<Self, TaintConfigError> {
        let mut config = TaintConfig {
            sources: BTreeSet::new(),
            sinks: BTreeSet::new(),
            sanitizers: BTreeSet::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| TaintConfigError {
                line: i + 1,
                message,
            };
            let mut words = line.split_whitespace();
            let role = words.next().unwrap_or_default();
            let name = words
                .next()
                .ok_or_else(|| err(format!("`{role}` needs a primitive name")))?;
            if words.next().is_some() {
                return Err(err("expected `<role> <name>`".into()));
            }
            let set = match role {
                "source" => &mut config.sources,
                "sink" => &mut config.sinks,
                "sanitizer" => &mut config.sanitizers,
                other => {
                    return Err(err(format!(
                        "unknown role `{other}` (expected source, sink or sanitizer)"
                    )))
                }
            };
            set.insert(name.to_string());
        }
        Ok(config)
    }

    pub fn is_source(&self, name: &str) -> bool {
        self.sources.contains(name)
    }

    pub fn is_sink(&self, name: &str) -> bool {
        self.sinks.contains(name)
    }

    pub fn is_sanitizer(&self, name: &str) -> bool {
        self.sanitizers.contains(name)
    }

    fn is_primitive(&self, name: &str) -> bool {
        self.is_source(name) || self.is_sink(name) || self.is_sanitizer(name)
    }
}

/// Errors deliberately planted in taint variants for fault-localization
/// exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SeededBug {
    /// Sanitizer results inherit their arguments' taint.
    IgnoredSanitizer,
    /// `x = a op b` is tainted when exactly one operand is: the operand
    /// join is an exclusive or, which drops taint when both are tainted.
    OperandJoinDropsTaint,
    /// Copies `x = y` lose every fact.
    IdentityDropsFacts,
    /// Constant assignments do not clear the target's taint.
    ConstantKeepsTaint,
    /// Control-flow merges intersect instead of unite.
    IntersectingMerge,
    /// Results of non-primitive calls are never tainted.
    CallDropsArgumentTaint,
}

impl SeededBug {
    pub const ALL: [SeededBug; 6] = [
        SeededBug::IgnoredSanitizer,
        SeededBug::OperandJoinDropsTaint,
        SeededBug::IdentityDropsFacts,
        SeededBug::ConstantKeepsTaint,
        SeededBug::IntersectingMerge,
        SeededBug::CallDropsArgumentTaint,
    ];

    /// 1-based bug number; bugs 1-3 form variant A, 4-6 variant B.
    pub fn number(self) -> usize {
        Self::ALL.iter().position(|&b| b == self).unwrap() + 1
    }

    pub fn from_number(n: usize) -> Option<SeededBug> {
        n.checked_sub(1).and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn analysis_name(self) -> String {
        format!("taint-bug{}", self.number())
    }

    /// Bug category as used in analysis-debugging surveys.
    pub fn species(self) -> &'static str {
        match self {
            SeededBug::IgnoredSanitizer | SeededBug::CallDropsArgumentTaint => {
                "semantics mismatch"
            }
            SeededBug::OperandJoinDropsTaint | SeededBug::IntersectingMerge => {
                "algorithmic error (wrong merge)"
            }
            SeededBug::IdentityDropsFacts | SeededBug::ConstantKeepsTaint => "corner case",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            SeededBug::IgnoredSanitizer => "sanitizer calls propagate argument taint",
            SeededBug::OperandJoinDropsTaint => {
                "binary operations combine operand taint with xor instead of or"
            }
            SeededBug::IdentityDropsFacts => "copy statements drop all facts",
            SeededBug::ConstantKeepsTaint => "constant assignments keep the target tainted",
            SeededBug::IntersectingMerge => "merge points intersect incoming facts",
            SeededBug::CallDropsArgumentTaint => {
                "results of non-primitive calls are always clean"
            }
        }
    }

    /// Corpus program on which the bug changes the result.
    pub fn demo_program(self) -> &'static str {
        match self {
            SeededBug::IgnoredSanitizer => "leak.ir",
            SeededBug::OperandJoinDropsTaint => "mix.ir",
            SeededBug::IdentityDropsFacts => "passthrough.ir",
            SeededBug::ConstantKeepsTaint => "overwrite.ir",
            SeededBug::IntersectingMerge => "branch.ir",
            SeededBug::CallDropsArgumentTaint => "two-method.ir",
        }
    }

    /// Whether the rule this bug modifies applies to `unit`.
    pub fn touches(self, unit: &Unit, cfg: &Cfg, config: &TaintConfig) -> bool {
        match (self, &unit.stmt) {
            (SeededBug::IgnoredSanitizer, _) => {
                unit.callee().is_some_and(|c| config.is_sanitizer(c))
            }
            (
                SeededBug::OperandJoinDropsTaint,
                Stmt::Assign {
                    rhs:
                        Rhs::Binary {
                            rhs: Operand::Var(_),
                            ..
                        },
                    ..
                },
            ) => true,
            (SeededBug::IdentityDropsFacts, Stmt::Assign { rhs: Rhs::Var(_), .. }) => true,
            (SeededBug::ConstantKeepsTaint, Stmt::Assign { rhs: Rhs::Const(_), .. }) => true,
            (SeededBug::IntersectingMerge, _) => {
                let boundary = usize::from(cfg.entry == unit.id);
                cfg.predecessors(&unit.id).count() + boundary >= 2
            }
            (
                SeededBug::CallDropsArgumentTaint,
                Stmt::Assign {
                    rhs: Rhs::Call { callee, .. },
                    ..
                },
            ) => !config.is_primitive(callee),
            _ => false,
        }
    }
}

impl fmt::Display for SeededBug {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bug #{} ({})", self.number(), self.summary())
    }
}

/// Join that intersects, planted by [`SeededBug::IntersectingMerge`].
#[derive(Clone, Copy, Debug)]
struct IntersectingLattice;

impl Lattice for IntersectingLattice {
    fn bottom(&self) -> FactSet {
        FactSet::empty_vars()
    }

    fn join(&self, a: &FactSet, b: &FactSet) -> FactSet {
        match (a, b) {
            (FactSet::Vars(x), FactSet::Vars(y)) => FactSet::Vars(x & y),
            _ => panic!("taint facts are variable sets"),
        }
    }

    fn leq(&self, a: &FactSet, b: &FactSet) -> bool {
        PowersetLattice(SetShape::Vars).leq(a, b)
    }
}

/// Forward may-taint analysis over variable sets.
///
/// Sources taint the assigned variable, sanitizers return clean values,
/// sinks pass facts through, and any other call taints its result when an
/// argument is tainted.
pub struct TaintAnalysis {
    name: String,
    description: String,
    config: TaintConfig,
    bugs: BTreeSet<SeededBug>,
    lattice: Box<dyn Lattice>,
}

impl TaintAnalysis {
    pub fn new(config: TaintConfig) -> Self {
        Self::with_bugs("taint", config, [])
    }

    pub fn with_bugs(
        name: impl Into<String>,
        config: TaintConfig,
        bugs: impl IntoIterator<Item = SeededBug>,
    ) -> Self {
        let bugs: BTreeSet<SeededBug> = bugs.into_iter().collect();
        let lattice: Box<dyn Lattice> = if bugs.contains(&SeededBug::IntersectingMerge) {
            Box::new(IntersectingLattice)
        } else {
            Box::new(PowersetLattice(SetShape::Vars))
        };
        let description = if bugs.is_empty() {
            "forward taint over variable sets (union join)".to_string()
        } else {
            let list: Vec<String> = bugs.iter().map(|b| format!("#{}", b.number())).collect();
            format!("taint with seeded bugs {}", list.join(", "))
        };
        TaintAnalysis {
            name: name.into(),
            description,
            config,
            bugs,
            lattice,
        }
    }

    pub fn bugs(&self) -> &BTreeSet<SeededBug> {
        &self.bugs
    }

    fn has(&self, bug: SeededBug) -> bool {
        self.bugs.contains(&bug)
    }

    fn tainted(input: &BTreeSet<String>, op: &Operand) -> bool {
        op.as_var().is_some_and(|v| input.contains(v))
    }

    fn rhs_tainted(&self, target: &str, rhs: &Rhs, input: &BTreeSet<String>) -> bool {
        let any_arg = |args: &[Operand]| args.iter().any(|a| Self::tainted(input, a));
        match rhs {
            Rhs::Call { callee, args } => {
                if self.config.is_source(callee) {
                    true
                } else if self.config.is_sanitizer(callee) {
                    self.has(SeededBug::IgnoredSanitizer) && any_arg(args)
                } else if self.config.is_sink(callee) {
                    false
                } else {
                    !self.has(SeededBug::CallDropsArgumentTaint) && any_arg(args)
                }
            }
            Rhs::Var(v) => input.contains(v),
            Rhs::Const(_) => self.has(SeededBug::ConstantKeepsTaint) && input.contains(target),
            Rhs::Binary { lhs, rhs, .. } => {
                let l = input.contains(lhs);
                let r = Self::tainted(input, rhs);
                if self.has(SeededBug::OperandJoinDropsTaint) && rhs.as_var().is_some() {
                    l ^ r
                } else {
                    l || r
                }
            }
        }
    }
}

impl AnalysisDef for TaintAnalysis {
    fn name(&self) -> &str {
        &self.name
    }

    fn description(&self) -> &str {
        &self.description
    }

    fn direction(&self) -> Direction {
        Direction::Forward
    }

    fn lattice(&self) -> &dyn Lattice {
        self.lattice.as_ref()
    }

    fn entry_fact(&self, _method: &Method) -> FactSet {
        FactSet::empty_vars()
    }

    fn flow(&self, unit: &Unit, input: &FactSet) -> FlowOut {
        let vars = input.as_vars().expect("taint facts are variable sets");
        let out = match &unit.stmt {
            Stmt::Assign { rhs: Rhs::Var(_), .. } if self.has(SeededBug::IdentityDropsFacts) => {
                BTreeSet::new()
            }
            Stmt::Assign { target, rhs } => {
                let mut out = vars.clone();
                if self.rhs_tainted(target, rhs, vars) {
                    out.insert(target.clone());
                } else {
                    out.remove(target);
                }
                out
            }
            _ => vars.clone(),
        };
        FlowOut::Uniform(FactSet::Vars(out))
    }

    fn taint_config(&self) -> Option<&TaintConfig> {
        Some(&self.config)
    }
}

/// Forward reaching definitions: which assignment of each variable may
/// reach a point. Parameters carry no definition.
pub struct ReachingDefinitions;

impl AnalysisDef for ReachingDefinitions {
    fn name(&self) -> &str {
        "reaching-defs"
    }

    fn description(&self) -> &str {
        "forward reaching definitions over (variable, unit) pairs (union join)"
    }

    fn direction(&self) -> Direction {
        Direction::Forward
    }

    fn lattice(&self) -> &dyn Lattice {
        &PowersetLattice(SetShape::Defs)
    }

    fn entry_fact(&self, _method: &Method) -> FactSet {
        FactSet::Defs(BTreeSet::new())
    }

    fn flow(&self, unit: &Unit, input: &FactSet) -> FlowOut {
        let FactSet::Defs(defs) = input else {
            panic!("reaching-defs facts are definition sets")
        };
        let written = unit.defs();
        let mut out: BTreeSet<_> = defs
            .iter()
            .filter(|(v, _)| !written.contains(v))
            .cloned()
            .collect();
        out.extend(written.into_iter().map(|v| (v, unit.id.clone())));
        FlowOut::Uniform(FactSet::Defs(out))
    }
}

/// Backward live variables. Edge facts are the live-in set of the edge's
/// destination.
pub struct LiveVariables;

impl AnalysisDef for LiveVariables {
    fn name(&self) -> &str {
        "liveness"
    }

    fn description(&self) -> &str {
        "backward live variables over variable sets (union join)"
    }

    fn direction(&self) -> Direction {
        Direction::Backward
    }

    fn lattice(&self) -> &dyn Lattice {
        &PowersetLattice(SetShape::Vars)
    }

    fn entry_fact(&self, _method: &Method) -> FactSet {
        FactSet::empty_vars()
    }

    fn flow(&self, unit: &Unit, input: &FactSet) -> FlowOut {
        let live = input.as_vars().expect("liveness facts are variable sets");
        let defs = unit.defs();
        let mut out: BTreeSet<String> = live.difference(&defs).cloned().collect();
        out.extend(unit.uses());
        FlowOut::Uniform(FactSet::Vars(out))
    }
}

/// Forward constant propagation on the flat per-variable lattice.
///
/// Arithmetic with an undefined (bottom) operand is undefined; otherwise
/// any unknown (top) operand makes the result unknown. Call results and
/// parameters are unknown.
pub struct ConstantPropagation;

impl ConstantPropagation {
    fn eval(env: &BTreeMap<String, ConstValue>, rhs: &Rhs) -> Option<ConstValue> {
        let operand = |op: &Operand| match op {
            Operand::Const(c) => Some(ConstValue::Const(*c)),
            Operand::Var(v) => env.get(v).copied(),
        };
        match rhs {
            Rhs::Const(c) => Some(ConstValue::Const(*c)),
            Rhs::Var(v) => env.get(v).copied(),
            Rhs::Call { .. } => Some(ConstValue::Top),
            Rhs::Binary { op, lhs, rhs } => {
                match (env.get(lhs).copied()?, operand(rhs)?) {
                    (ConstValue::Const(a), ConstValue::Const(b)) => {
                        Some(ConstValue::Const(op.eval(a, b)))
                    }
                    _ => Some(ConstValue::Top),
                }
            }
        }
    }
}

impl AnalysisDef for ConstantPropagation {
    fn name(&self) -> &str {
        "constants"
    }

    fn description(&self) -> &str {
        "forward constant propagation, flat lattice per variable (bottom < c < top)"
    }

    fn direction(&self) -> Direction {
        Direction::Forward
    }

    fn lattice(&self) -> &dyn Lattice {
        &ConstLattice
    }

    fn entry_fact(&self, method: &Method) -> FactSet {
        FactSet::Consts(
            method
                .params
                .iter()
                .map(|p| (p.clone(), ConstValue::Top))
                .collect(),
        )
    }

    fn flow(&self, unit: &Unit, input: &FactSet) -> FlowOut {
        let FactSet::Consts(env) = input else {
            panic!("constant facts are variable maps")
        };
        let mut out = env.clone();
        if let Stmt::Assign { target, rhs } = &unit.stmt {
            match Self::eval(env, rhs) {
                Some(v) => {
                    out.insert(target.clone(), v);
                }
                None => {
                    out.remove(target);
                }
            }
        }
        FlowOut::Uniform(FactSet::Consts(out))
    }
}

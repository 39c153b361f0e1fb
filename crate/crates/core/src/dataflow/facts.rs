use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ir::{EdgeKind, UnitId};

/// Value of a variable in the constant-propagation lattice. Bottom is the
/// absence of an entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstValue {
    Const(i64),
    Top,
}

impl fmt::Display for ConstValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstValue::Const(c) => write!(f, "{c}"),
            ConstValue::Top => f.write_str("⊤"),
        }
    }
}

/// An element of some analysis's abstract domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FactSet {
    /// Plain variable sets (taint, liveness).
    Vars(BTreeSet<String>),
    /// Variable/definition pairs (reaching definitions).
    Defs(BTreeSet<(String, UnitId)>),
    /// Per-variable constants; unmapped variables are bottom.
    Consts(BTreeMap<String, ConstValue>),
}

impl FactSet {
    pub fn vars<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FactSet::Vars(vars.into_iter().map(Into::into).collect())
    }

    pub fn empty_vars() -> Self {
        FactSet::Vars(BTreeSet::new())
    }

    pub fn as_vars(&self) -> Option<&BTreeSet<String>> {
        match self {
            FactSet::Vars(v) => Some(v),
            _ => None,
        }
    }

    /// Canonical text of each element: `x`, `x@main#3`, `x=1`, `x=⊤`.
    pub fn elements(&self) -> BTreeSet<String> {
        match self {
            FactSet::Vars(v) => v.clone(),
            FactSet::Defs(d) => d.iter().map(|(v, u)| format!("{v}@{u}")).collect(),
            FactSet::Consts(c) => c.iter().map(|(v, val)| format!("{v}={val}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FactSet::Vars(v) => v.len(),
            FactSet::Defs(d) => d.len(),
            FactSet::Consts(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Canonical rendering: sorted elements, comma-separated, in braces.
    pub fn render(&self) -> String {
        render_elements(&self.elements())
    }

    fn shape(&self) -> &'static str {
        match self {
            FactSet::Vars(_) => "vars",
            FactSet::Defs(_) => "defs",
            FactSet::Consts(_) => "consts",
        }
    }
}

impl fmt::Display for FactSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn render_elements(elements: &BTreeSet<String>) -> String {
    let body: Vec<&str> = elements.iter().map(String::as_str).collect();
    format!("{{{}}}", body.join(", "))
}

/// Join-semilattice over [`FactSet`]s.
///
/// Implementations must make `join` commutative, associative and idempotent,
/// with `leq(a, join(a, b))` for all `a`, `b`. The bundled analyses check this
/// with property tests; the solver does not assume it.
pub trait Lattice: Send + Sync {
    fn bottom(&self) -> FactSet;
    fn join(&self, a: &FactSet, b: &FactSet) -> FactSet;
    fn leq(&self, a: &FactSet, b: &FactSet) -> bool;
    fn equals(&self, a: &FactSet, b: &FactSet) -> bool {
        a == b
    }
}

fn shape_mismatch(a: &FactSet, b: &FactSet) -> ! {
    panic!(
        "lattice operands have different shapes ({} vs {})",
        a.shape(),
        b.shape()
    )
}

/// Which element type a [`PowersetLattice`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetShape {
    Vars,
    Defs,
}

/// Subset ordering, union join.
#[derive(Clone, Copy, Debug)]
pub struct PowersetLattice(pub SetShape);

impl Lattice for PowersetLattice {
    fn bottom(&self) -> FactSet {
        match self.0 {
            SetShape::Vars => FactSet::Vars(BTreeSet::new()),
            SetShape::Defs => FactSet::Defs(BTreeSet::new()),
        }
    }

    fn join(&self, a: &FactSet, b: &FactSet) -> FactSet {
        match (a, b) {
            (FactSet::Vars(x), FactSet::Vars(y)) => FactSet::Vars(x | y),
            (FactSet::Defs(x), FactSet::Defs(y)) => FactSet::Defs(x | y),
            _ => shape_mismatch(a, b),
        }
    }

    fn leq(&self, a: &FactSet, b: &FactSet) -> bool {
        match (a, b) {
            (FactSet::Vars(x), FactSet::Vars(y)) => x.is_subset(y),
            (FactSet::Defs(x), FactSet::Defs(y)) => x.is_subset(y),
            _ => shape_mismatch(a, b),
        }
    }
}

/// Flat lattice per variable: bottom < constant < top.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstLattice;

impl ConstLattice {
    fn join_value(a: Option<ConstValue>, b: Option<ConstValue>) -> Option<ConstValue> {
        match (a, b) {
            (None, v) | (v, None) => v,
            (Some(x), Some(y)) if x == y => Some(x),
            _ => Some(ConstValue::Top),
        }
    }

    fn leq_value(a: Option<ConstValue>, b: Option<ConstValue>) -> bool {
        match (a, b) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(_), Some(ConstValue::Top)) => true,
            (Some(x), Some(y)) => x == y,
        }
    }
}

impl Lattice for ConstLattice {
    fn bottom(&self) -> FactSet {
        FactSet::Consts(BTreeMap::new())
    }

    fn join(&self, a: &FactSet, b: &FactSet) -> FactSet {
        let (FactSet::Consts(x), FactSet::Consts(y)) = (a, b) else {
            shape_mismatch(a, b)
        };
        let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
        FactSet::Consts(
            keys.into_iter()
                .filter_map(|k| {
                    Self::join_value(x.get(k).copied(), y.get(k).copied()).map(|v| (k.clone(), v))
                })
                .collect(),
        )
    }

    fn leq(&self, a: &FactSet, b: &FactSet) -> bool {
        let (FactSet::Consts(x), FactSet::Consts(y)) = (a, b) else {
            shape_mismatch(a, b)
        };
        x.iter()
            .all(|(k, v)| Self::leq_value(Some(*v), y.get(k).copied()))
    }
}

/// Output of a transfer function: one fact for every successor, or a
/// separate fact per branch of an `if`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlowOut {
    Uniform(FactSet),
    Branch { taken: FactSet, fallthrough: FactSet },
}

impl FlowOut {
    pub fn for_edge(&self, kind: EdgeKind) -> &FactSet {
        match (self, kind) {
            (FlowOut::Uniform(f), _) => f,
            (FlowOut::Branch { taken, .. }, EdgeKind::BranchTrue) => taken,
            (FlowOut::Branch { fallthrough, .. }, _) => fallthrough,
        }
    }

    /// Union of the canonical elements of every output.
    pub fn elements(&self) -> BTreeSet<String> {
        match self {
            FlowOut::Uniform(f) => f.elements(),
            FlowOut::Branch { taken, fallthrough } => &taken.elements() | &fallthrough.elements(),
        }
    }

    pub fn render(&self) -> String {
        match self {
            FlowOut::Uniform(f) => f.render(),
            FlowOut::Branch { taken, fallthrough } => {
                format!("true={};false={}", taken.render(), fallthrough.render())
            }
        }
    }

    pub fn uniform(&self) -> Option<&FactSet> {
        match self {
            FlowOut::Uniform(f) => Some(f),
            FlowOut::Branch { .. } => None,
        }
    }
}

/// A transfer outcome with its generated and killed facts.
///
/// `gen` and `kill` are the set differences between the canonical elements
/// of the output and the input, so `out = (in \ kill) ∪ gen` holds by
/// construction. For branch outputs the union of both outputs is used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferResult {
    pub out: FlowOut,
    pub gen: BTreeSet<String>,
    pub kill: BTreeSet<String>,
}

impl TransferResult {
    pub fn new(input: &FactSet, out: FlowOut) -> Self {
        let before = input.elements();
        let after = out.elements();
        TransferResult {
            gen: after.difference(&before).cloned().collect(),
            kill: before.difference(&after).cloned().collect(),
            out,
        }
    }
}

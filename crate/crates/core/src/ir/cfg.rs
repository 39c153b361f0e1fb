use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Method, Stmt, UnitId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    /// Sequential flow or an unconditional `goto`.
    Fallthrough,
    BranchTrue,
    BranchFalse,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Fallthrough => "fallthrough",
            EdgeKind::BranchTrue => "branch-true",
            EdgeKind::BranchFalse => "branch-false",
        }
    }
}

/// Ordered by source unit, then kind, then destination.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CfgEdge {
    pub src: UnitId,
    pub kind: EdgeKind,
    pub dst: UnitId,
}

impl CfgEdge {
    pub fn new(src: UnitId, dst: UnitId, kind: EdgeKind) -> Self {
        CfgEdge { src, kind, dst }
    }
}

/// `main#0->main#1` for fallthrough edges, `main#2->main#5[true]` and
/// `main#2->main#3[false]` for branch edges.
impl fmt::Display for CfgEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)?;
        match self.kind {
            EdgeKind::Fallthrough => Ok(()),
            EdgeKind::BranchTrue => f.write_str("[true]"),
            EdgeKind::BranchFalse => f.write_str("[false]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EdgeParseError {
    #[error("malformed edge id `{0}` (expected src->dst or src->dst[true|false])")]
    Malformed(String),
    #[error("no edge `{0}`")]
    NotFound(String),
    #[error("edge id `{0}` is ambiguous; add [true] or [false]")]
    Ambiguous(String),
}

/// An edge reference as typed by a user: the kind is optional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRef {
    pub src: UnitId,
    pub dst: UnitId,
    pub kind: Option<EdgeKind>,
}

impl FromStr for EdgeRef {
    type Err = EdgeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || EdgeParseError::Malformed(s.to_string());
        let (body, kind) = if let Some(rest) = s.strip_suffix("[true]") {
            (rest, Some(EdgeKind::BranchTrue))
        } else if let Some(rest) = s.strip_suffix("[false]") {
            (rest, Some(EdgeKind::BranchFalse))
        } else {
            (s, None)
        };
        let (src, dst) = body.split_once("->").ok_or_else(malformed)?;
        Ok(EdgeRef {
            src: src.trim().parse().map_err(|_| malformed())?,
            dst: dst.trim().parse().map_err(|_| malformed())?,
            kind,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    pub method: String,
    pub nodes: Vec<UnitId>,
    pub edges: Vec<CfgEdge>,
    pub entry: UnitId,
    pub exits: BTreeSet<UnitId>,
    /// Nodes not reachable from `entry`. They stay in the graph.
    pub unreachable: BTreeSet<UnitId>,
}

impl Cfg {
    pub fn successors<'a>(&'a self, node: &'a UnitId) -> impl Iterator<Item = &'a CfgEdge> + 'a {
        self.edges.iter().filter(move |e| &e.src == node)
    }

    pub fn predecessors<'a>(&'a self, node: &'a UnitId) -> impl Iterator<Item = &'a CfgEdge> + 'a {
        self.edges.iter().filter(move |e| &e.dst == node)
    }

    pub fn edge_index(&self, edge: &CfgEdge) -> Option<usize> {
        self.edges.iter().position(|e| e == edge)
    }

    pub fn contains_node(&self, node: &UnitId) -> bool {
        node.method == self.method && node.ordinal < self.nodes.len()
    }

    /// Resolve a textual edge reference against this graph.
    pub fn resolve_edge(&self, text: &str) -> Result<&CfgEdge, EdgeParseError> {
        let r: EdgeRef = text.parse()?;
        let mut matches = self
            .edges
            .iter()
            .filter(|e| e.src == r.src && e.dst == r.dst && r.kind.is_none_or(|k| k == e.kind));
        let first = matches
            .next()
            .ok_or_else(|| EdgeParseError::NotFound(text.to_string()))?;
        if matches.next().is_some() {
            return Err(EdgeParseError::Ambiguous(text.to_string()));
        }
        Ok(first)
    }
}

/// Build the control-flow graph of one method.
///
/// `if` units get a branch-true edge to their label and a branch-false edge
/// to the next unit; `goto` gets a single fallthrough edge to its label;
/// `return` and the last unit (when it does not jump) are exits.
pub fn build_cfg(method: &Method) -> Cfg {
    let id = |ordinal| UnitId::new(method.name.clone(), ordinal);
    let target = |label: &str| {
        method
            .label_target(label)
            .expect("branch targets validated by the parser")
    };
    let n = method.units.len();
    let mut edges = Vec::new();
    let mut exits = BTreeSet::new();
    for (i, unit) in method.units.iter().enumerate() {
        let next = (i + 1 < n).then(|| id(i + 1));
        match &unit.stmt {
            Stmt::If { target: label, .. } => {
                edges.push(CfgEdge::new(id(i), id(target(label)), EdgeKind::BranchTrue));
                let next = next.expect("parser rejects trailing if");
                edges.push(CfgEdge::new(id(i), next, EdgeKind::BranchFalse));
            }
            Stmt::Goto { target: label } => {
                edges.push(CfgEdge::new(id(i), id(target(label)), EdgeKind::Fallthrough));
            }
            Stmt::Return { .. } => {
                exits.insert(id(i));
            }
            _ => match next {
                Some(next) => edges.push(CfgEdge::new(id(i), next, EdgeKind::Fallthrough)),
                None => {
                    exits.insert(id(i));
                }
            },
        }
    }
    edges.sort();

    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for e in edges.iter().filter(|e| e.src.ordinal == i) {
            if !seen[e.dst.ordinal] {
                seen[e.dst.ordinal] = true;
                queue.push_back(e.dst.ordinal);
            }
        }
    }
    let unreachable = (0..n).filter(|&i| !seen[i]).map(id).collect();

    Cfg {
        method: method.name.clone(),
        nodes: (0..n).map(id).collect(),
        edges,
        entry: id(0),
        exits,
        unreachable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::ir::parse_program;

    fn cfg_of(src: &str) -> Cfg {
        let p = parse_program(src).unwrap();
        build_cfg(p.entry_method())
    }

    #[test]
    fn straight_line_is_a_path() {
        let cfg = cfg_of(corpus::LEAK);
        assert_eq!(cfg.nodes.len(), 4);
        assert_eq!(cfg.edges.len(), 3);
        assert!(cfg.edges.iter().all(|e| e.kind == EdgeKind::Fallthrough));
        assert_eq!(cfg.exits, BTreeSet::from([UnitId::new("main", 3)]));
        assert!(cfg.unreachable.is_empty());
    }

    #[test]
    fn loop_has_back_edge() {
        let cfg = cfg_of(corpus::LOOP);
        assert_eq!(cfg.nodes.len(), 12);
        // goto H at main#10 jumps back to the header at main#4.
        let back: Vec<_> = cfg
            .edges
            .iter()
            .filter(|e| e.dst.ordinal <= e.src.ordinal)
            .map(ToString::to_string)
            .collect();
        assert_eq!(back, ["main#10->main#4"]);
        let branches: Vec<_> = cfg
            .successors(&UnitId::new("main", 5))
            .map(ToString::to_string)
            .collect();
        assert_eq!(branches, ["main#5->main#11[true]", "main#5->main#6[false]"]);
        assert_eq!(cfg.exits, BTreeSet::from([UnitId::new("main", 11)]));
    }

    #[test]
    fn single_nop() {
        let cfg = cfg_of("method main() { }");
        assert_eq!(cfg.nodes.len(), 1);
        assert!(cfg.edges.is_empty());
        assert_eq!(cfg.exits.len(), 1);
    }

    #[test]
    fn unreachable_units_are_flagged() {
        let cfg = cfg_of("method main() {\n goto E\n x = 1\n E: return\n}");
        assert_eq!(cfg.nodes.len(), 3);
        assert_eq!(cfg.unreachable, BTreeSet::from([UnitId::new("main", 1)]));
        // the dead unit still has its outgoing edge
        assert!(cfg.successors(&UnitId::new("main", 1)).count() == 1);
    }

    #[test]
    fn branch_to_next_unit_keeps_both_edges() {
        let cfg = cfg_of("method main(c) {\n if c goto N\n N: return\n}");
        assert_eq!(cfg.edges.len(), 2);
        assert!(cfg.resolve_edge("main#0->main#1").is_err());
        assert_eq!(
            cfg.resolve_edge("main#0->main#1[true]").unwrap().kind,
            EdgeKind::BranchTrue
        );
    }

    #[test]
    fn resolve_edge_errors() {
        let cfg = cfg_of(corpus::LEAK);
        assert!(cfg.resolve_edge("main#0->main#1").is_ok());
        assert_eq!(
            cfg.resolve_edge("main#0->main#2"),
            Err(EdgeParseError::NotFound("main#0->main#2".into()))
        );
        assert!(matches!(
            cfg.resolve_edge("main#0"),
            Err(EdgeParseError::Malformed(_))
        ));
    }
}

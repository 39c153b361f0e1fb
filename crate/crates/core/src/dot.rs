//! Graphviz DOT rendering of control-flow and call graphs.
//!
//! Output is a pure function of the graph and its decorations, so repeated
//! exports are byte-identical. Decorations become the `label` attribute of
//! the matching edge.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::ir::{CallEdge, CallGraph, Cfg, CfgEdge, EdgeKind, Program};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("decoration refers to unknown edge {0}")]
pub struct UnknownEdge(pub String);

pub type Attrs = Vec<(&'static str, String)>;

/// A graph that can be written as DOT.
pub trait DotGraph {
    type Edge: Ord + std::fmt::Display;

    fn graph_name(&self) -> String;
    /// `(id, attributes)` for every node, in output order.
    fn dot_nodes(&self, program: &Program) -> Vec<(String, Attrs)>;
    /// `(edge, src id, dst id, attributes)` in output order.
    fn dot_edges(&self) -> Vec<(&Self::Edge, String, String, Attrs)>;
}

impl DotGraph for Cfg {
    type Edge = CfgEdge;

    fn graph_name(&self) -> String {
        format!("cfg_{}", self.method)
    }

    fn dot_nodes(&self, program: &Program) -> Vec<(String, Attrs)> {
        self.nodes
            .iter()
            .map(|id| {
                let unit = program.unit(id);
                let text = unit.map(|u| u.text()).unwrap_or_default();
                let mut attrs = vec![("label", format!("{id}: {text}"))];
                if let Some(u) = unit {
                    attrs.push(("tooltip", format!("line {}", u.source_line)));
                }
                if self.unreachable.contains(id) {
                    attrs.push(("style", "dashed".to_string()));
                }
                (id.to_string(), attrs)
            })
            .collect()
    }

    fn dot_edges(&self) -> Vec<(&CfgEdge, String, String, Attrs)> {
        self.edges
            .iter()
            .map(|e| {
                let mut attrs = Vec::new();
                match e.kind {
                    EdgeKind::Fallthrough => {}
                    EdgeKind::BranchTrue => attrs.push(("taillabel", "T".to_string())),
                    EdgeKind::BranchFalse => attrs.push(("taillabel", "F".to_string())),
                }
                (e, e.src.to_string(), e.dst.to_string(), attrs)
            })
            .collect()
    }
}

impl DotGraph for CallGraph {
    type Edge = CallEdge;

    fn graph_name(&self) -> String {
        "callgraph".to_string()
    }

    fn dot_nodes(&self, program: &Program) -> Vec<(String, Attrs)> {
        let methods = self.nodes.iter().map(|name| {
            let params = program
                .method(name)
                .map(|m| m.params.join(", "))
                .unwrap_or_default();
            (name.clone(), vec![("label", format!("{name}({params})"))])
        });
        let externals = self.externals.iter().map(|name| {
            (
                name.clone(),
                vec![("label", name.clone()), ("shape", "ellipse".to_string())],
            )
        });
        methods.chain(externals).collect()
    }

    fn dot_edges(&self) -> Vec<(&CallEdge, String, String, Attrs)> {
        self.edges
            .iter()
            .chain(&self.external_calls)
            .map(|e| {
                let attrs = vec![("tooltip", e.caller.to_string())];
                (e, e.caller.method.clone(), e.callee.clone(), attrs)
            })
            .collect()
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn attr_list(attrs: &[(&'static str, String)]) -> String {
    if attrs.is_empty() {
        return String::new();
    }
    let body: Vec<String> = attrs
        .iter()
        .map(|(k, v)| format!("{k}={}", quote(v)))
        .collect();
    format!(" [{}]", body.join(", "))
}

/// Render `graph` as DOT. `decorations` maps edges to label text.
pub fn export_dot<G: DotGraph>(
    program: &Program,
    graph: &G,
    decorations: &BTreeMap<G::Edge, String>,
) -> Result<String, UnknownEdge> {
    let edges = graph.dot_edges();
    if let Some(unknown) = decorations
        .keys()
        .find(|d| !edges.iter().any(|(e, ..)| e == d))
    {
        return Err(UnknownEdge(unknown.to_string()));
    }

    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&graph.graph_name())).unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    for (id, attrs) in graph.dot_nodes(program) {
        writeln!(out, "  {}{};", quote(&id), attr_list(&attrs)).unwrap();
    }
    for (edge, src, dst, mut attrs) in edges {
        if let Some(label) = decorations.get(edge) {
            attrs.insert(0, ("label", label.clone()));
        }
        writeln!(out, "  {} -> {}{};", quote(&src), quote(&dst), attr_list(&attrs)).unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

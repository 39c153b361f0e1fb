use std::collections::BTreeSet;

use super::{Program, UnitId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallEdge {
    pub caller: UnitId,
    pub callee: String,
}

impl std::fmt::Display for CallEdge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{}", self.caller, self.callee)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CallGraph {
    /// Methods of the program, in declaration order.
    pub nodes: Vec<String>,
    /// Calls to methods defined in the program, in unit order.
    pub edges: Vec<CallEdge>,
    /// Calls to primitives or unresolved names, one entry per invoke unit.
    pub external_calls: Vec<CallEdge>,
    pub externals: BTreeSet<String>,
}

pub fn build_call_graph(program: &Program) -> CallGraph {
    let mut graph = CallGraph {
        nodes: program.methods.iter().map(|m| m.name.clone()).collect(),
        ..CallGraph::default()
    };
    for unit in program.units() {
        let Some(callee) = unit.callee() else {
            continue;
        };
        let edge = CallEdge {
            caller: unit.id.clone(),
            callee: callee.to_string(),
        };
        if program.method(callee).is_some() {
            graph.edges.push(edge);
        } else {
            graph.externals.insert(callee.to_string());
            graph.external_calls.push(edge);
        }
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::ir::parse_program;

    #[test]
    fn helper_called_twice() {
        let p = parse_program(
            "method main() {\n helper()\n x = helper(1)\n}\nmethod helper() { nop }",
        )
        .unwrap();
        let g = build_call_graph(&p);
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.caller.method == "main" && e.callee == "helper"));
        assert!(g.externals.is_empty());
    }

    #[test]
    fn leak_calls_only_primitives() {
        let g = build_call_graph(&parse_program(corpus::LEAK).unwrap());
        assert!(g.edges.is_empty());
        let externals: Vec<_> = g.externals.iter().map(String::as_str).collect();
        assert_eq!(externals, ["sanitize", "sink", "source"]);
        assert_eq!(g.external_calls.len(), 4);
    }

    #[test]
    fn no_invokes_no_edges() {
        let g = build_call_graph(&parse_program(corpus::CLEAN).unwrap());
        // clean.ir calls sink once
        assert_eq!(g.external_calls.len(), 1);
        let g = build_call_graph(&parse_program("method main() { x = 1 }").unwrap());
        assert!(g.edges.is_empty() && g.external_calls.is_empty());
    }

    #[test]
    fn two_method_program() {
        let g = build_call_graph(&parse_program(corpus::TWO_METHOD).unwrap());
        assert_eq!(g.nodes, ["main", "wrap"]);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].to_string(), "main#1->wrap");
    }
}

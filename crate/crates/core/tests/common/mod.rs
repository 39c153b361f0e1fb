//! Test-only reference implementations. Nothing here calls the solver.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write;

use flowscope_core::dataflow::{AnalysisDef, Direction, EdgeResults, FactSet};
use flowscope_core::ir::{build_cfg, Cfg, CfgEdge, EdgeKind, Method, Program};

/// Round-robin fixpoint: sweep every unit in ordinal order, recomputing
/// each edge from scratch, until a sweep changes nothing.
pub fn round_robin(analysis: &dyn AnalysisDef, method: &Method, cfg: &Cfg) -> EdgeResults {
    let lattice = analysis.lattice();
    let forward = analysis.direction() == Direction::Forward;
    let mut facts: BTreeMap<CfgEdge, FactSet> = cfg
        .edges
        .iter()
        .map(|e| (e.clone(), lattice.bottom()))
        .collect();
    let boundary = analysis.entry_fact(method);
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        assert!(sweeps < 10_000, "oracle did not converge on {}", method.name);
        let mut changed = false;
        for unit in &method.units {
            let id = &unit.id;
            let mut input = lattice.bottom();
            let at_boundary = if forward {
                cfg.entry == *id
            } else {
                cfg.exits.contains(id)
            };
            if at_boundary {
                input = lattice.join(&input, &boundary);
            }
            for e in &cfg.edges {
                let reads = if forward { &e.dst == id } else { &e.src == id };
                if reads {
                    input = lattice.join(&input, &facts[e]);
                }
            }
            let out = analysis.flow(unit, &input);
            for e in &cfg.edges {
                let new = if forward && e.src == *id {
                    out.for_edge(e.kind).clone()
                } else if !forward && e.dst == *id {
                    match out.uniform() {
                        Some(f) => f.clone(),
                        None => lattice.join(
                            out.for_edge(EdgeKind::BranchTrue),
                            out.for_edge(EdgeKind::BranchFalse),
                        ),
                    }
                } else {
                    continue;
                };
                if facts[e] != new {
                    facts.insert(e.clone(), new);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    EdgeResults {
        method: method.name.clone(),
        edges: cfg.edges.iter().map(|e| (e.clone(), facts[e].clone())).collect(),
    }
}

pub fn cfgs(program: &Program) -> Vec<(&Method, Cfg)> {
    program.methods.iter().map(|m| (m, build_cfg(m))).collect()
}

/// Lines holding a statement once comments are stripped.
pub fn nonblank_lines(source: &str) -> Vec<usize> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.split('#').next().unwrap_or("").trim().is_empty())
        .map(|(i, _)| i + 1)
        .collect()
}

/// Deterministic pseudo-random program from a list of choices.
///
/// Every `if` and `goto` targets a label in the same method, so the result
/// always parses. Backward jumps are allowed, giving loops.
pub fn random_program(choices: &[(u8, u8, u8)]) -> String {
    let vars = ["a", "b", "c", "d"];
    let n = choices.len().max(1);
    let mut src = String::from("method main(p) {\n");
    for (i, &(op, x, y)) in choices.iter().enumerate() {
        let v = vars[x as usize % vars.len()];
        let w = vars[y as usize % vars.len()];
        let target = format!("L{}", (x as usize + y as usize) % n);
        let stmt = match op % 9 {
            0 => format!("{v} = source()"),
            1 => format!("{v} = sanitize({w})"),
            2 => format!("{v} = {w}"),
            3 => format!("{v} = {}", y % 4),
            4 => format!("{v} = {w} + {}", vars[(x as usize + 1) % vars.len()]),
            5 => format!("sink({v})"),
            6 => format!("if {v} goto {target}"),
            7 if i + 1 < n => format!("goto {target}"),
            _ => format!("{v} = p - {w}"),
        };
        writeln!(src, "L{i}: {stmt}").unwrap();
    }
    src.push_str("return\n}\n");
    src
}

pub mod script {
    use flowscope_core::protocol::{ConnId, Server};
    use serde_json::{json, Value};
    use std::sync::mpsc::Receiver;

    pub struct Client<'a> {
        pub server: &'a Server,
        pub conn: ConnId,
        pub rx: Receiver<String>,
        pub transcript: String,
        next_id: u64,
    }

    impl<'a> Client<'a> {
        pub fn new(server: &'a Server) -> Self {
            let (conn, rx) = server.connect();
            Client {
                server,
                conn,
                rx,
                transcript: String::new(),
                next_id: 0,
            }
        }

        /// Send one request; returns the response followed by any events.
        pub fn send(&mut self, op: &str, args: Value) -> Vec<Value> {
            self.next_id += 1;
            let line = json!({ "id": self.next_id.to_string(), "op": op, "args": args }).to_string();
            self.raw(&line)
        }

        pub fn raw(&mut self, line: &str) -> Vec<Value> {
            self.transcript += &format!("> {line}\n");
            self.server.handle_line(self.conn, line);
            self.drain()
        }

        pub fn drain(&mut self) -> Vec<Value> {
            self.rx
                .try_iter()
                .map(|l| {
                    self.transcript += &format!("< {l}\n");
                    serde_json::from_str(&l).unwrap()
                })
                .collect()
        }
    }

    /// Edge labels of the graph op, checked against inspectEdge.
    pub fn graph_matches_inspect(client: &mut Client) -> Result<usize, String> {
        let graph = client.send("graph", Value::Null).remove(0);
        let edges = graph["body"]["edges"].as_array().cloned().unwrap_or_default();
        for e in &edges {
            let r = client.send("inspectEdge", json!({ "edge": e["id"] })).remove(0);
            if r["body"]["facts"]["text"] != e["label"] {
                return Err(format!("{}: graph {} vs inspect {}", e["id"], e["label"], r["body"]["facts"]["text"]));
            }
        }
        Ok(edges.len())
    }

    /// load, breakpoint, resume, inspect, rewind, resume on leak.ir.
    ///
    /// Returns the transcript of the driving client and every graph label
    /// that disagreed with inspectEdge. Labels are checked by a second,
    /// subscribed client so the transcript only shows the script.
    pub fn leak_session() -> (String, Vec<String>) {
        let server = Server::default();
        let mut c = Client::new(&server);
        let mut observer = Client::new(&server);
        let mut mismatches = Vec::new();
        let mut check = |o: &mut Client| {
            o.drain();
            if let Err(e) = graph_matches_inspect(o) {
                mismatches.push(e);
            }
        };
        c.send("load", json!({ "program": flowscope_core::corpus::LEAK, "analysis": "taint" }));
        c.send("subscribe", Value::Null);
        observer.send("subscribe", json!({ "session": 1 }));
        check(&mut observer);
        c.send("setBreakpoint", json!({ "kind": "line", "line": 3 }));
        c.send("resume", Value::Null);
        check(&mut observer);
        c.send("inspectEdge", json!({ "edge": "main#1->main#2" }));
        c.send("inspectEdge", json!({ "edge": "main#1->main#2", "at": 0 }));
        c.send("rewind", json!({ "seq": 2 }));
        check(&mut observer);
        c.send("resume", Value::Null);
        check(&mut observer);
        c.send("resume", Value::Null);
        check(&mut observer);
        c.send("results", Value::Null);
        c.send("resume", Value::Null);
        (c.transcript, mismatches)
    }
}

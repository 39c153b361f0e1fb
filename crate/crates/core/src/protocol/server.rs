use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;

use serde::Deserialize;
use serde_json::{json, Value};

use super::wire::{edge_json, facts_json, report_json, Event, Op, Request, Response};
use crate::dataflow::{FactSet, Registry, SolverConfig, TaintConfig};
use crate::debug::{diverge, BreakpointSpec, DebugError, DebugSession, Granularity, SessionConfig};
use crate::ir::{parse_program, unit_info, CfgEdge};

pub const DEFAULT_PORT: u16 = 7737;

pub type ConnId = u64;

type OpError = (&'static str, String);

struct Conn {
    out: Sender<String>,
    session: Option<u64>,
}

struct SessionEntry {
    session: DebugSession,
    subscribers: BTreeSet<ConnId>,
    /// Edge facts as of the last `factsUpdated` notification.
    snapshot: BTreeMap<CfgEdge, FactSet>,
}

#[derive(Default)]
struct Inner {
    conns: BTreeMap<ConnId, Conn>,
    sessions: BTreeMap<u64, SessionEntry>,
    next_conn: ConnId,
    next_session: u64,
}

/// Notification for the subscribers of one session.
struct Outgoing {
    session: u64,
    event: &'static str,
    body: Value,
    skip: Option<ConnId>,
}

/// Shared protocol state. Transports feed it request lines and drain the
/// per-connection outboxes; all requests are serialized through one lock.
pub struct Server {
    registry: Registry,
    inner: Mutex<Inner>,
}

impl Default for Server {
    fn default() -> Self {
        Server::new(Registry::with_builtins(TaintConfig::default()))
    }
}

impl Server {
    pub fn new(registry: Registry) -> Self {
        Server {
            registry,
            inner: Mutex::new(Inner::default()),
        }
    }

    /// Register a connection; everything meant for it arrives on the
    /// returned receiver as complete JSON lines.
    pub fn connect(&self) -> (ConnId, Receiver<String>) {
        let (tx, rx) = channel();
        let mut inner = self.inner.lock().expect("server lock");
        inner.next_conn += 1;
        let id = inner.next_conn;
        inner.conns.insert(id, Conn { out: tx, session: None });
        (id, rx)
    }

    pub fn disconnect(&self, conn: ConnId) {
        let mut inner = self.inner.lock().expect("server lock");
        inner.conns.remove(&conn);
        for entry in inner.sessions.values_mut() {
            entry.subscribers.remove(&conn);
        }
    }

    pub fn handle_line(&self, conn: ConnId, line: &str) {
        let mut inner = self.inner.lock().expect("server lock");
        let (response, outgoing) = match parse_request(line) {
            Ok(req) => match self.dispatch(&mut inner, conn, req.op, &req.args) {
                Ok((body, outgoing)) => (Response::ok(req.id, body), outgoing),
                Err((code, message)) => (Response::err(req.id, code, message, None), Vec::new()),
            },
            Err(response) => (*response, Vec::new()),
        };
        if let Some(c) = inner.conns.get(&conn) {
            let _ = c.out.send(serde_json::to_string(&response).expect("serializable"));
        }
        for out in outgoing {
            let Some(entry) = inner.sessions.get_mut(&out.session) else {
                continue;
            };
            let line = serde_json::to_string(&Event {
                event: out.event.to_string(),
                seq: entry.session.seq(),
                body: out.body,
            })
            .expect("serializable");
            let targets: Vec<ConnId> = entry
                .subscribers
                .iter()
                .copied()
                .filter(|&c| Some(c) != out.skip)
                .collect();
            for c in targets {
                if let Some(c) = inner.conns.get(&c) {
                    let _ = c.out.send(line.clone());
                }
            }
        }
    }

    fn dispatch(
        &self,
        inner: &mut Inner,
        conn: ConnId,
        op: Op,
        args: &Value,
    ) -> Result<(Value, Vec<Outgoing>), OpError> {
        match op {
            Op::Load => return self.load(inner, conn, args).map(|b| (b, Vec::new())),
            Op::Subscribe => return subscribe(inner, conn, args).map(|b| (b, Vec::new())),
            _ => {}
        }
        let sid = inner
            .conns
            .get(&conn)
            .and_then(|c| c.session)
            .ok_or(("no-session", "load a program or subscribe to a session first".to_string()))?;
        if op == Op::Diverge {
            #[derive(Deserialize)]
            struct A {
                other: u64,
            }
            let a: A = args_as(args)?;
            let other = inner
                .sessions
                .get(&a.other)
                .ok_or(("not-found", format!("no session {}", a.other)))?;
            let this = &inner.sessions[&sid];
            let d = diverge(&this.session, &other.session).map_err(debug_error)?;
            let body = match d {
                None => json!({ "divergence": null }),
                Some(d) => json!({ "divergence": {
                    "seq": d.seq,
                    "unit": d.unit().map(ToString::to_string),
                    "left": d.left.map(|e| e.render()),
                    "right": d.right.map(|e| e.render()),
                }}),
            };
            return Ok((body, Vec::new()));
        }
        let entry = inner.sessions.get_mut(&sid).expect("connection session exists");
        session_op(entry, sid, conn, op, args)
    }

    fn load(&self, inner: &mut Inner, conn: ConnId, args: &Value) -> Result<Value, OpError> {
        #[derive(Deserialize)]
        #[serde(rename_all = "camelCase")]
        struct A {
            program: String,
            #[serde(default = "default_analysis")]
            analysis: String,
            entry: Option<String>,
            budget: Option<u64>,
            taint_config: Option<String>,
        }
        fn default_analysis() -> String {
            "taint".into()
        }
        let a: A = args_as(args)?;
        let program = parse_program(&a.program).map_err(|e| ("ir-parse", e.to_string()))?;
        let custom;
        let registry = match &a.taint_config {
            Some(text) => {
                let config = TaintConfig::parse(text).map_err(|e| ("bad-args", e.to_string()))?;
                custom = Registry::with_builtins(config);
                &custom
            }
            None => &self.registry,
        };
        let analysis = registry.get(&a.analysis).map_err(debug_error_from)?;
        let config = SessionConfig {
            entry: a.entry,
            solver: SolverConfig {
                budget: a.budget.unwrap_or(SolverConfig::default().budget),
                ..SolverConfig::default()
            },
        };
        let session = DebugSession::start(program, analysis, config).map_err(debug_error)?;
        let body = json!({
            "methods": session.program().methods.iter().map(|m| &m.name).collect::<Vec<_>>(),
            "units": session.program().unit_count(),
        });
        inner.next_session += 1;
        let sid = inner.next_session;
        let snapshot = edge_snapshot(&session);
        inner.sessions.insert(
            sid,
            SessionEntry {
                session,
                subscribers: BTreeSet::from([conn]),
                snapshot,
            },
        );
        if let Some(c) = inner.conns.get_mut(&conn) {
            c.session = Some(sid);
        }
        Ok(body)
    }
}

fn subscribe(inner: &mut Inner, conn: ConnId, args: &Value) -> Result<Value, OpError> {
    #[derive(Deserialize, Default)]
    struct A {
        session: Option<u64>,
    }
    let a: A = if args.is_null() { A::default() } else { args_as(args)? };
    let sid = a
        .session
        .or_else(|| inner.conns.get(&conn).and_then(|c| c.session))
        .ok_or(("no-session", "no session to subscribe to".to_string()))?;
    let entry = inner
        .sessions
        .get_mut(&sid)
        .ok_or(("not-found", format!("no session {sid}")))?;
    entry.subscribers.insert(conn);
    if let Some(c) = inner.conns.get_mut(&conn) {
        c.session = Some(sid);
    }
    Ok(json!({ "session": sid }))
}

fn session_op(
    entry: &mut SessionEntry,
    sid: u64,
    conn: ConnId,
    op: Op,
    args: &Value,
) -> Result<(Value, Vec<Outgoing>), OpError> {
    let s = &mut entry.session;
    let body = match op {
        Op::SetBreakpoint => {
            let spec: BreakpointSpec = args_as(args)?;
            let bp = s.add_breakpoint(&spec).map_err(debug_error)?;
            json!({ "id": bp.id, "description": bp.to_string() })
        }
        Op::RemoveBreakpoint => {
            #[derive(Deserialize)]
            struct A {
                id: u32,
            }
            let a: A = args_as(args)?;
            json!({ "removed": s.remove_breakpoint(a.id) })
        }
        Op::ListBreakpoints => json!(s
            .breakpoints()
            .iter()
            .map(|b| json!({
                "id": b.id,
                "description": b.to_string(),
                "enabled": b.enabled,
                "hitCount": b.hit_count,
            }))
            .collect::<Vec<_>>()),
        Op::Step | Op::Resume | Op::Rewind => {
            let report = match op {
                Op::Step => {
                    #[derive(Deserialize)]
                    struct A {
                        #[serde(default = "default_granularity")]
                        granularity: Granularity,
                    }
                    fn default_granularity() -> Granularity {
                        Granularity::Transfer
                    }
                    let a: A = if args.is_null() {
                        A {
                            granularity: Granularity::Transfer,
                        }
                    } else {
                        args_as(args)?
                    };
                    s.step(a.granularity)
                }
                Op::Resume => s.resume(),
                _ => {
                    #[derive(Deserialize)]
                    struct A {
                        seq: usize,
                    }
                    let a: A = args_as(args)?;
                    s.rewind(a.seq)
                }
            }
            .map_err(debug_error)?;
            let body = report_json(&report);
            let mut outgoing = vec![Outgoing {
                session: sid,
                event: if report.is_finished() { "fixpoint" } else { "suspended" },
                body: body.clone(),
                skip: None,
            }];
            let changed = refresh_snapshot(entry);
            if !changed.is_empty() {
                outgoing.push(Outgoing {
                    session: sid,
                    event: "factsUpdated",
                    body: json!({ "edges": changed }),
                    skip: None,
                });
            }
            return Ok((body, outgoing));
        }
        Op::State => report_json(&s.report()),
        Op::InspectEdge => {
            #[derive(Deserialize)]
            struct A {
                edge: String,
                at: Option<u64>,
            }
            let a: A = args_as(args)?;
            let edge = s.resolve_edge(&a.edge).map_err(debug_error)?;
            let facts = s.inspect_edge(&edge, a.at).map_err(debug_error)?;
            json!({ "edge": edge.to_string(), "facts": facts_json(&facts) })
        }
        Op::History => {
            #[derive(Deserialize)]
            struct A {
                edge: Option<String>,
                unit: Option<String>,
            }
            let a: A = args_as(args)?;
            let histories = match (a.edge, a.unit) {
                (Some(e), None) => {
                    let edge = s.resolve_edge(&e).map_err(debug_error)?;
                    let h = s.edge_history(&edge);
                    vec![(edge, h)]
                }
                (None, Some(u)) => {
                    let unit = s.resolve_unit(&u).map_err(debug_error)?;
                    s.unit_history(&unit)
                }
                _ => return Err(("bad-args", "give exactly one of `edge` or `unit`".into())),
            };
            json!({ "edges": histories.iter().map(|(e, h)| json!({
                "edge": e.to_string(),
                "entries": h.iter().map(|(it, f)| json!({ "iteration": it, "facts": f.render() })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>() })
        }
        Op::Graph => {
            #[derive(Deserialize, Default)]
            struct A {
                method: Option<String>,
            }
            let a: A = if args.is_null() { A::default() } else { args_as(args)? };
            let method = a.method.unwrap_or_else(|| s.program().entry.clone());
            let cfg = s
                .cfg(&method)
                .ok_or(("not-found", format!("no method `{method}`")))?;
            let nodes: Vec<Value> = cfg
                .nodes
                .iter()
                .map(|id| {
                    let u = s.program().unit(id).expect("cfg node");
                    json!({
                        "id": id.to_string(),
                        "kind": u.kind().as_str(),
                        "text": u.text(),
                        "line": u.source_line,
                        "unreachable": cfg.unreachable.contains(id),
                    })
                })
                .collect();
            let edges: Vec<Value> = s
                .edge_facts(&method)
                .iter()
                .map(|(e, it, f)| edge_json(e, *it, f))
                .collect();
            json!({ "method": method, "nodes": nodes, "edges": edges, "focus": s.focus().map(ToString::to_string) })
        }
        Op::Results => {
            let methods: Vec<Value> = s
                .results()
                .iter()
                .map(|r| json!({
                    "method": r.method,
                    "edges": r.edges.iter().map(|(e, f)| json!({ "edge": e.to_string(), "facts": f.render() })).collect::<Vec<_>>(),
                }))
                .collect();
            let leaks = if s.is_finished() && s.analysis().taint_config().is_some() {
                json!(s
                    .leaks()
                    .map_err(debug_error)?
                    .iter()
                    .map(|l| json!({ "unit": l.unit.to_string(), "variable": l.variable }))
                    .collect::<Vec<_>>())
            } else {
                Value::Null
            };
            json!({ "finished": s.is_finished(), "methods": methods, "leaks": leaks })
        }
        Op::Log => {
            #[derive(Deserialize, Default)]
            struct A {
                from: Option<usize>,
                to: Option<usize>,
            }
            let a: A = if args.is_null() { A::default() } else { args_as(args)? };
            let events = s.events();
            let to = a.to.unwrap_or(events.len()).min(events.len());
            let from = a.from.unwrap_or(0).min(to);
            json!({ "lines": events[from..to].iter().map(|e| e.render()).collect::<Vec<_>>() })
        }
        Op::SetFocus => {
            #[derive(Deserialize)]
            struct A {
                unit: Option<String>,
            }
            let a: A = args_as(args)?;
            let unit = match a.unit {
                Some(u) => Some(s.resolve_unit(&u).map_err(debug_error)?),
                None => None,
            };
            let changed = s.set_focus(unit).map_err(debug_error)?;
            let focus = json!({ "unit": s.focus().map(ToString::to_string) });
            let outgoing = if changed {
                vec![Outgoing {
                    session: sid,
                    event: "focusChanged",
                    body: focus.clone(),
                    skip: Some(conn),
                }]
            } else {
                Vec::new()
            };
            return Ok((json!({ "focus": focus["unit"], "changed": changed }), outgoing));
        }
        Op::UnitInfo => {
            #[derive(Deserialize)]
            struct A {
                unit: String,
            }
            let a: A = args_as(args)?;
            let id = s.resolve_unit(&a.unit).map_err(debug_error)?;
            serde_json::to_value(unit_info(s.program(), &id).expect("resolved unit"))
                .expect("serializable")
        }
        Op::Load | Op::Subscribe | Op::Diverge => unreachable!("handled by the server"),
    };
    Ok((body, Vec::new()))
}

fn edge_snapshot(session: &DebugSession) -> BTreeMap<CfgEdge, FactSet> {
    session
        .cfgs()
        .iter()
        .flat_map(|cfg| session.edge_facts(&cfg.method))
        .map(|(e, _, f)| (e, f))
        .collect()
}

fn refresh_snapshot(entry: &mut SessionEntry) -> Vec<Value> {
    let mut changed = Vec::new();
    for cfg in entry.session.cfgs() {
        for (edge, it, facts) in entry.session.edge_facts(&cfg.method) {
            if entry.snapshot.get(&edge) != Some(&facts) {
                changed.push(edge_json(&edge, it, &facts));
                entry.snapshot.insert(edge, facts);
            }
        }
    }
    changed
}

fn args_as<T: serde::de::DeserializeOwned>(args: &Value) -> Result<T, OpError> {
    T::deserialize(args).map_err(|e| ("bad-args", e.to_string()))
}

fn debug_error_from<E: Into<DebugError>>(e: E) -> OpError {
    debug_error(e.into())
}

fn debug_error(e: DebugError) -> OpError {
    let code = match &e {
        DebugError::Finished => "finished",
        DebugError::UnknownUnit(_)
        | DebugError::UnknownBreakpoint(_)
        | DebugError::UnknownAnalysis(_)
        | DebugError::UnknownMethod(_)
        | DebugError::Edge(_) => "not-found",
        DebugError::SeqOutOfRange { .. }
        | DebugError::IterationOutOfRange { .. }
        | DebugError::UnresolvedLine { .. } => "out-of-range",
        DebugError::DeterminismFault { .. } => "determinism",
        DebugError::Parse(_) => "ir-parse",
        DebugError::BadBreakpoint(_) | DebugError::Misuse(_) => "invalid",
    };
    (code, e.to_string())
}

/// Byte offset of a serde_json error within `line`.
fn byte_offset(line: &str, err: &serde_json::Error) -> usize {
    let before: usize = line
        .split_inclusive('\n')
        .take(err.line().saturating_sub(1))
        .map(str::len)
        .sum();
    (before + err.column().saturating_sub(1)).min(line.len())
}

fn parse_request(line: &str) -> Result<Request, Box<Response>> {
    let value: Value = serde_json::from_str(line).map_err(|e| {
        Box::new(Response::err(
            Value::Null,
            "parse",
            e.to_string(),
            Some(byte_offset(line, &e)),
        ))
    })?;
    let id = value.get("id").cloned().unwrap_or(Value::Null);
    if let Some(op) = value.get("op").and_then(Value::as_str) {
        if serde_json::from_value::<Op>(json!(op)).is_err() {
            return Err(Box::new(Response::err(
                id,
                "unknown-op",
                format!("unknown op `{op}`"),
                None,
            )));
        }
    }
    serde_json::from_value(value)
        .map_err(|e| Box::new(Response::err(id, "bad-request", e.to_string(), None)))
}

fn pump<R: BufRead, W: Write + Send + 'static>(server: &Server, reader: R, mut writer: W) -> io::Result<()> {
    let (conn, rx) = server.connect();
    let out = thread::spawn(move || -> io::Result<()> {
        for line in rx {
            writer.write_all(line.as_bytes())?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        Ok(())
    });
    let mut result = Ok(());
    for line in reader.lines() {
        match line {
            Ok(line) if line.trim().is_empty() => {}
            Ok(line) => server.handle_line(conn, &line),
            Err(e) => {
                result = Err(e);
                break;
            }
        }
    }
    server.disconnect(conn);
    out.join().expect("writer thread")?;
    result
}

/// Serve one client over stdin and stdout until stdin closes.
pub fn serve_stdio(server: Arc<Server>) -> io::Result<()> {
    pump(&server, io::stdin().lock(), io::stdout())
}

/// Accept clients forever, one thread per connection.
pub fn serve_tcp(server: Arc<Server>, listener: TcpListener) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let server = Arc::clone(&server);
        thread::spawn(move || {
            let reader = BufReader::new(stream.try_clone()?);
            pump(&server, reader, stream)
        });
    }
    Ok(())
}

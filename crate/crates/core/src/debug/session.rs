use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::breakpoint::{Breakpoint, BreakpointKind, BreakpointSpec, EventPredicate, FactPattern};
use super::event::{DebugEvent, EventLog};
use crate::dataflow::{
    joined_input, report_leaks, AnalysisDef, Direction, EdgeResults, FactSet, Leak,
    PendingTransfer, Registry, SolveContext, Solver, SolverConfig, SolverEvent, UnknownAnalysis,
};
use crate::ir::{
    build_cfg, parse_program, Cfg, CfgEdge, EdgeParseError, EdgeRef, ParseError, Program, UnitId,
    UnknownMethod,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    /// Next transfer, whichever unit it belongs to.
    Transfer,
    /// Next transfer of a different unit.
    Unit,
    /// Until every unit queued at the start has been processed once.
    Iteration,
    /// Until the current method reaches its fixpoint.
    Method,
    /// To the end, ignoring breakpoints.
    ToFixpoint,
}

impl Granularity {
    pub const ALL: [Granularity; 5] = [
        Granularity::Transfer,
        Granularity::Unit,
        Granularity::Iteration,
        Granularity::Method,
        Granularity::ToFixpoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Transfer => "transfer",
            Granularity::Unit => "unit",
            Granularity::Iteration => "iteration",
            Granularity::Method => "method",
            Granularity::ToFixpoint => "to-fixpoint",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Granularity::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| {
                format!("unknown granularity `{s}` (transfer, unit, iteration, method, to-fixpoint)")
            })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SessionConfig {
    /// Overrides the program's entry method.
    pub entry: Option<String>,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SuspendReason {
    Step(Granularity),
    Breakpoint(Vec<u32>),
    BudgetExceeded { method: String },
    Rewind,
    DeterminismFault,
}

impl fmt::Display for SuspendReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuspendReason::Step(g) => write!(f, "step {g}"),
            SuspendReason::Breakpoint(ids) => {
                let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
                write!(f, "breakpoint {}", ids.join(","))
            }
            SuspendReason::BudgetExceeded { method } => {
                write!(f, "budget exceeded in {method}")
            }
            SuspendReason::Rewind => f.write_str("rewind"),
            SuspendReason::DeterminismFault => f.write_str("determinism fault"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionState {
    Idle,
    Suspended { seq: usize, reason: SuspendReason },
    Finished,
}

/// Where the session stopped and what it is about to do.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopReport {
    pub state: SessionState,
    /// Events emitted so far.
    pub seq: usize,
    /// Method being solved, if any remain.
    pub method: Option<String>,
    /// Transfers applied so far in `method`.
    pub iteration: u64,
    pub pending: Option<PendingTransfer>,
    pub line: Option<usize>,
}

impl StopReport {
    pub fn is_finished(&self) -> bool {
        self.state == SessionState::Finished
    }
}

/// First event where two logs disagree. A missing side means one log ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub seq: usize,
    pub left: Option<DebugEvent>,
    pub right: Option<DebugEvent>,
}

impl Divergence {
    pub fn unit(&self) -> Option<&UnitId> {
        self.left
            .as_ref()
            .and_then(DebugEvent::unit)
            .or_else(|| self.right.as_ref().and_then(DebugEvent::unit))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DebugError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    UnknownAnalysis(#[from] UnknownAnalysis),
    #[error(transparent)]
    UnknownMethod(#[from] UnknownMethod),
    #[error(transparent)]
    Edge(#[from] EdgeParseError),
    #[error("session has finished; rewind to inspect earlier states")]
    Finished,
    #[error("no unit `{0}`")]
    UnknownUnit(String),
    #[error("no breakpoint {0}")]
    UnknownBreakpoint(u32),
    #[error("line {line} holds no unit{}", nearest_hint(.nearest))]
    UnresolvedLine { line: usize, nearest: Vec<usize> },
    #[error("{0}")]
    BadBreakpoint(String),
    #[error("seq {seq} out of range (0..={last})")]
    SeqOutOfRange { seq: usize, last: usize },
    #[error("iteration {at} is ahead of the current iteration {current}")]
    IterationOutOfRange { at: u64, current: u64 },
    #[error("replay diverged at seq {seq}: expected `{expected}`, got `{actual}`")]
    DeterminismFault {
        seq: usize,
        expected: String,
        actual: String,
    },
    #[error("{0}")]
    Misuse(String),
}

fn nearest_hint(nearest: &[usize]) -> String {
    if nearest.is_empty() {
        return String::new();
    }
    let lines: Vec<String> = nearest.iter().map(usize::to_string).collect();
    format!("; nearest lines with units: {}", lines.join(", "))
}

#[derive(Clone)]
struct Engine {
    /// Index into `DebugSession::order`.
    pos: usize,
    solver: Option<Solver>,
}

enum Goal {
    Transfer,
    Unit(Option<UnitId>),
    Iteration(BTreeSet<UnitId>),
    Method { name: Option<String>, done: bool },
    Fixpoint,
    Breakpoint,
}

/// An instrumented, steppable solve of one analysis over one program.
///
/// Methods are solved one after another, entry first. The session can only
/// stop right before a transfer (or after a budget overrun); steps and
/// resumes leave the current stop before looking for the next one.
#[derive(Clone)]
pub struct DebugSession {
    program: Arc<Program>,
    analysis: Arc<dyn AnalysisDef>,
    cfgs: Vec<Cfg>,
    order: Vec<usize>,
    config: SessionConfig,
    engine: Engine,
    log: EventLog,
    /// Live events are `log[..cursor]`; the rest is kept after a rewind.
    cursor: usize,
    state: SessionState,
    breakpoints: Vec<Breakpoint>,
    next_breakpoint: u32,
    focus: Option<UnitId>,
}

impl DebugSession {
    pub fn start(
        program: Program,
        analysis: Arc<dyn AnalysisDef>,
        config: SessionConfig,
    ) -> Result<Self, DebugError> {
        let program = match &config.entry {
            Some(entry) => program.with_entry(entry)?,
            None => program,
        };
        let cfgs: Vec<Cfg> = program.methods.iter().map(build_cfg).collect();
        let entry = program
            .methods
            .iter()
            .position(|m| m.name == program.entry)
            .expect("entry names a method");
        let order = std::iter::once(entry)
            .chain((0..program.methods.len()).filter(|&i| i != entry))
            .collect();
        let mut session = DebugSession {
            program: Arc::new(program),
            analysis,
            cfgs,
            order,
            config,
            engine: Engine {
                pos: 0,
                solver: None,
            },
            log: EventLog::default(),
            cursor: 0,
            state: SessionState::Idle,
            breakpoints: Vec::new(),
            next_breakpoint: 1,
            focus: None,
        };
        session.reset_engine();
        Ok(session)
    }

    /// Parse `source` and look `analysis` up in `registry`.
    pub fn load(
        source: &str,
        analysis: &str,
        registry: &Registry,
        config: SessionConfig,
    ) -> Result<Self, DebugError> {
        let program = parse_program(source)?;
        let analysis = registry.get(analysis)?;
        Self::start(program, analysis, config)
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn analysis(&self) -> &dyn AnalysisDef {
        self.analysis.as_ref()
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn cfgs(&self) -> &[Cfg] {
        &self.cfgs
    }

    pub fn cfg(&self, method: &str) -> Option<&Cfg> {
        self.cfgs.iter().find(|c| c.method == method)
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn is_finished(&self) -> bool {
        self.state == SessionState::Finished
    }

    /// Number of live events.
    pub fn seq(&self) -> usize {
        self.cursor
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    /// Live events only.
    pub fn events(&self) -> &[DebugEvent] {
        &self.log.events()[..self.cursor]
    }

    /// Canonical text of the live log.
    pub fn render_log(&self) -> String {
        self.log.render(self.cursor)
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn focus(&self) -> Option<&UnitId> {
        self.focus.as_ref()
    }

    pub fn pending(&self) -> Option<&PendingTransfer> {
        self.engine.solver.as_ref()?.pending_transfer()
    }

    pub fn current_method(&self) -> Option<&str> {
        let m = *self.order.get(self.engine.pos)?;
        Some(&self.program.methods[m].name)
    }

    /// Units queued in the current method's worklist.
    pub fn worklist(&self) -> Vec<UnitId> {
        match (&self.engine.solver, self.order.get(self.engine.pos)) {
            (Some(s), Some(&m)) => s.worklist(&self.cfgs[m]),
            _ => Vec::new(),
        }
    }

    pub fn report(&self) -> StopReport {
        let pending = self.pending().cloned();
        let method = self.current_method().map(str::to_string);
        StopReport {
            state: self.state.clone(),
            seq: self.cursor,
            iteration: method
                .as_deref()
                .map_or(0, |m| self.log.method_iteration(m, self.cursor)),
            line: pending
                .as_ref()
                .and_then(|p| self.program.unit(&p.unit))
                .map(|u| u.source_line),
            method,
            pending,
        }
    }

    // ---- execution ----

    pub fn step(&mut self, granularity: Granularity) -> Result<StopReport, DebugError> {
        let goal = match granularity {
            Granularity::Transfer => Goal::Transfer,
            Granularity::Unit => Goal::Unit(self.pending().map(|p| p.unit.clone())),
            Granularity::Iteration => {
                let mut units: BTreeSet<UnitId> = self.worklist().into_iter().collect();
                units.extend(self.pending().map(|p| p.unit.clone()));
                Goal::Iteration(units)
            }
            Granularity::Method => Goal::Method {
                name: self.current_method().map(str::to_string),
                done: false,
            },
            Granularity::ToFixpoint => Goal::Fixpoint,
        };
        self.run(goal, SuspendReason::Step(granularity))
    }

    /// Run until a breakpoint matches, the budget runs out, or the end.
    pub fn resume(&mut self) -> Result<StopReport, DebugError> {
        self.run(Goal::Breakpoint, SuspendReason::Breakpoint(Vec::new()))
    }

    /// Run to the end ignoring breakpoints, passing any budget overruns.
    pub fn run_to_end(&mut self) -> Result<StopReport, DebugError> {
        loop {
            let report = self.step(Granularity::ToFixpoint)?;
            if report.is_finished() {
                return Ok(report);
            }
        }
    }

    fn run(&mut self, mut goal: Goal, step_reason: SuspendReason) -> Result<StopReport, DebugError> {
        if self.is_finished() {
            return Err(DebugError::Finished);
        }
        let mut leaving = matches!(self.state, SessionState::Suspended { .. });
        loop {
            if !leaving {
                if let Some(pending) = self.pending() {
                    let goal_met = match &goal {
                        Goal::Transfer => true,
                        Goal::Unit(start) => start.as_ref() != Some(&pending.unit),
                        Goal::Iteration(left) => left.is_empty(),
                        Goal::Method { done, .. } => *done,
                        Goal::Fixpoint | Goal::Breakpoint => false,
                    };
                    let hits = match goal {
                        Goal::Transfer | Goal::Fixpoint => Vec::new(),
                        _ => self.matching_breakpoints(pending),
                    };
                    if !hits.is_empty() {
                        for bp in &mut self.breakpoints {
                            if hits.contains(&bp.id) {
                                bp.hit_count += 1;
                            }
                        }
                        return Ok(self.suspend(SuspendReason::Breakpoint(hits)));
                    }
                    if goal_met {
                        return Ok(self.suspend(step_reason));
                    }
                }
            }
            leaving = false;
            let Some(event) = self.emit()? else {
                self.state = SessionState::Finished;
                return Ok(self.report());
            };
            match (&mut goal, &event) {
                (Goal::Iteration(left), SolverEvent::Transfer { unit, .. }) => {
                    left.remove(unit);
                }
                (
                    Goal::Method { name, done },
                    SolverEvent::Fixpoint { method } | SolverEvent::BudgetExceeded { method },
                ) if name.as_deref() == Some(method.as_str()) => *done = true,
                _ => {}
            }
            if let SolverEvent::BudgetExceeded { method } = event {
                return Ok(self.suspend(SuspendReason::BudgetExceeded { method }));
            }
        }
    }

    fn suspend(&mut self, reason: SuspendReason) -> StopReport {
        self.state = SessionState::Suspended {
            seq: self.cursor,
            reason,
        };
        self.report()
    }

    fn reset_engine(&mut self) {
        let m = self.order[0];
        let ctx = SolveContext {
            analysis: self.analysis.as_ref(),
            method: &self.program.methods[m],
            cfg: &self.cfgs[m],
        };
        self.engine = Engine {
            pos: 0,
            solver: Some(Solver::new(ctx, self.config.solver)),
        };
    }

    fn next_solver_event(&mut self) -> Option<(SolverEvent, u64)> {
        while let Some(&m) = self.order.get(self.engine.pos) {
            let ctx = SolveContext {
                analysis: self.analysis.as_ref(),
                method: &self.program.methods[m],
                cfg: &self.cfgs[m],
            };
            let solver = self
                .engine
                .solver
                .get_or_insert_with(|| Solver::new(ctx, self.config.solver));
            if let Some(event) = solver.advance(ctx) {
                return Some((event, solver.transfers()));
            }
            self.engine.pos += 1;
            self.engine.solver = None;
        }
        None
    }

    /// Emit one event into the log, checking it against the retained
    /// suffix when replaying.
    fn emit(&mut self) -> Result<Option<SolverEvent>, DebugError> {
        let Some((kind, iteration)) = self.next_solver_event() else {
            return Ok(None);
        };
        let event = DebugEvent {
            seq: self.cursor,
            iteration,
            kind: kind.clone(),
        };
        if let Some(retained) = self.log.get(self.cursor) {
            if retained != &event {
                let expected = retained.render();
                self.log.truncate(self.cursor);
                self.log.push(event.clone());
                self.cursor += 1;
                self.state = SessionState::Suspended {
                    seq: self.cursor,
                    reason: SuspendReason::DeterminismFault,
                };
                return Err(DebugError::DeterminismFault {
                    seq: event.seq,
                    expected,
                    actual: event.render(),
                });
            }
        } else {
            self.log.push(event);
        }
        self.cursor += 1;
        Ok(Some(kind))
    }

    /// Restore the state just before event `seq` by re-executing from the
    /// start. Events past `seq` stay in the log and are checked when
    /// regenerated.
    pub fn rewind(&mut self, seq: usize) -> Result<StopReport, DebugError> {
        let last = self.log.len().saturating_sub(1);
        if seq > last {
            return Err(DebugError::SeqOutOfRange { seq, last });
        }
        self.reset_engine();
        self.cursor = 0;
        while self.cursor < seq {
            if self.emit()?.is_none() {
                break;
            }
        }
        self.state = if seq == 0 {
            SessionState::Idle
        } else {
            SessionState::Suspended {
                seq,
                reason: SuspendReason::Rewind,
            }
        };
        Ok(self.report())
    }

    // ---- breakpoints ----

    pub fn add_breakpoint(&mut self, spec: &BreakpointSpec) -> Result<&Breakpoint, DebugError> {
        let kind = match spec {
            BreakpointSpec::Unit { unit } => BreakpointKind::Unit(self.resolve_unit(unit)?),
            BreakpointSpec::Line { line } => {
                let on_line = self.program.units_on_line(*line);
                match on_line.as_slice() {
                    [unit] => BreakpointKind::Line {
                        line: *line,
                        unit: unit.id.clone(),
                    },
                    _ => {
                        return Err(DebugError::UnresolvedLine {
                            line: *line,
                            nearest: self.nearest_lines(*line),
                        })
                    }
                }
            }
            BreakpointSpec::FactGenerated { pattern } => BreakpointKind::Event(
                EventPredicate::FactGenerated(FactPattern::new(pattern).map_err(DebugError::BadBreakpoint)?),
            ),
            BreakpointSpec::FactKilled { pattern } => BreakpointKind::Event(
                EventPredicate::FactKilled(FactPattern::new(pattern).map_err(DebugError::BadBreakpoint)?),
            ),
            BreakpointSpec::EdgeChanged { edge } => {
                BreakpointKind::Event(EventPredicate::EdgeChanged(self.resolve_edge(edge)?))
            }
            BreakpointSpec::UnitKind { unit_kind } => {
                BreakpointKind::Event(EventPredicate::UnitKind(*unit_kind))
            }
        };
        let id = self.next_breakpoint;
        self.next_breakpoint += 1;
        self.breakpoints.push(Breakpoint {
            id,
            kind,
            enabled: true,
            hit_count: 0,
        });
        Ok(self.breakpoints.last().expect("just pushed"))
    }

    /// Returns whether a breakpoint was removed; unknown ids are a no-op.
    pub fn remove_breakpoint(&mut self, id: u32) -> bool {
        let before = self.breakpoints.len();
        self.breakpoints.retain(|b| b.id != id);
        self.breakpoints.len() != before
    }

    pub fn set_breakpoint_enabled(&mut self, id: u32, enabled: bool) -> Result<(), DebugError> {
        let bp = self
            .breakpoints
            .iter_mut()
            .find(|b| b.id == id)
            .ok_or(DebugError::UnknownBreakpoint(id))?;
        bp.enabled = enabled;
        Ok(())
    }

    fn nearest_lines(&self, line: usize) -> Vec<usize> {
        let lines: BTreeSet<usize> = self.program.units().map(|u| u.source_line).collect();
        let below = lines.range(..line).next_back();
        let above = lines.range(line + 1..).next();
        below.into_iter().chain(above).copied().collect()
    }

    fn matching_breakpoints(&self, pending: &PendingTransfer) -> Vec<u32> {
        self.breakpoints
            .iter()
            .filter(|b| b.enabled && self.breakpoint_matches(&b.kind, pending))
            .map(|b| b.id)
            .collect()
    }

    fn breakpoint_matches(&self, kind: &BreakpointKind, pending: &PendingTransfer) -> bool {
        match kind {
            BreakpointKind::Unit(unit) | BreakpointKind::Line { unit, .. } => *unit == pending.unit,
            BreakpointKind::Event(EventPredicate::FactGenerated(p)) => {
                pending.result.gen.iter().any(|f| p.matches(f))
            }
            BreakpointKind::Event(EventPredicate::FactKilled(p)) => {
                pending.result.kill.iter().any(|f| p.matches(f))
            }
            BreakpointKind::Event(EventPredicate::UnitKind(k)) => self
                .program
                .unit(&pending.unit)
                .is_some_and(|u| u.kind() == *k),
            BreakpointKind::Event(EventPredicate::EdgeChanged(edge)) => {
                self.pending_changes_edge(edge, pending)
            }
        }
    }

    fn pending_changes_edge(&self, edge: &CfgEdge, pending: &PendingTransfer) -> bool {
        let forward = self.analysis.direction() == Direction::Forward;
        let writer = if forward { &edge.src } else { &edge.dst };
        if *writer != pending.unit {
            return false;
        }
        let lattice = self.analysis.lattice();
        let new = if forward {
            pending.result.out.for_edge(edge.kind).clone()
        } else {
            match pending.result.out.uniform() {
                Some(f) => f.clone(),
                None => lattice.join(
                    pending.result.out.for_edge(crate::ir::EdgeKind::BranchTrue),
                    pending.result.out.for_edge(crate::ir::EdgeKind::BranchFalse),
                ),
            }
        };
        let (_, old) = self
            .log
            .edge_value(edge, self.cursor, None, &lattice.bottom());
        !lattice.equals(&old, &new)
    }

    // ---- queries ----

    pub fn resolve_unit(&self, text: &str) -> Result<UnitId, DebugError> {
        text.parse::<UnitId>()
            .ok()
            .filter(|id| self.program.unit(id).is_some())
            .ok_or_else(|| DebugError::UnknownUnit(text.to_string()))
    }

    pub fn resolve_edge(&self, text: &str) -> Result<CfgEdge, DebugError> {
        let r: EdgeRef = text.parse()?;
        let cfg = self
            .cfg(&r.src.method)
            .ok_or_else(|| EdgeParseError::NotFound(text.to_string()))?;
        Ok(cfg.resolve_edge(text)?.clone())
    }

    /// Facts on `edge` now, or as of `at` transfers into its method.
    pub fn inspect_edge(&self, edge: &CfgEdge, at: Option<u64>) -> Result<FactSet, DebugError> {
        let current = self.log.method_iteration(&edge.src.method, self.cursor);
        if let Some(at) = at.filter(|&at| at > current) {
            return Err(DebugError::IterationOutOfRange { at, current });
        }
        let bottom = self.analysis.lattice().bottom();
        Ok(self.log.edge_value(edge, self.cursor, at, &bottom).1)
    }

    /// `(iteration, facts)` per update of `edge`, starting with bottom.
    pub fn edge_history(&self, edge: &CfgEdge) -> Vec<(u64, FactSet)> {
        let bottom = self.analysis.lattice().bottom();
        self.log.edge_history(edge, self.cursor, &bottom)
    }

    /// Histories of the edges `unit` writes.
    pub fn unit_history(&self, unit: &UnitId) -> Vec<(CfgEdge, Vec<(u64, FactSet)>)> {
        let Some(cfg) = self.cfg(&unit.method) else {
            return Vec::new();
        };
        let forward = self.analysis.direction() == Direction::Forward;
        cfg.edges
            .iter()
            .filter(|e| if forward { &e.src == unit } else { &e.dst == unit })
            .map(|e| (e.clone(), self.edge_history(e)))
            .collect()
    }

    /// Current facts of every edge in `method`, with the iteration of the
    /// last update.
    pub fn edge_facts(&self, method: &str) -> Vec<(CfgEdge, u64, FactSet)> {
        let bottom = self.analysis.lattice().bottom();
        self.cfg(method)
            .map(|cfg| {
                cfg.edges
                    .iter()
                    .map(|e| {
                        let (it, facts) = self.log.edge_value(e, self.cursor, None, &bottom);
                        (e.clone(), it, facts)
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Edge facts of every method, as reconstructed from the live log.
    pub fn results(&self) -> Vec<EdgeResults> {
        self.order
            .iter()
            .map(|&m| {
                let name = &self.program.methods[m].name;
                EdgeResults {
                    method: name.clone(),
                    edges: self
                        .edge_facts(name)
                        .into_iter()
                        .map(|(e, _, f)| (e, f))
                        .collect(),
                }
            })
            .collect()
    }

    /// Joined input of `unit` under the current edge facts.
    pub fn unit_input(&self, unit: &UnitId) -> Result<FactSet, DebugError> {
        let cfg = self
            .cfg(&unit.method)
            .filter(|c| c.contains_node(unit))
            .ok_or_else(|| DebugError::UnknownUnit(unit.to_string()))?;
        let method = self.program.method(&unit.method).expect("cfg has a method");
        let ctx = SolveContext {
            analysis: self.analysis.as_ref(),
            method,
            cfg,
        };
        let facts = self.edge_facts(&unit.method);
        Ok(joined_input(ctx, unit, |e| {
            &facts.iter().find(|(f, _, _)| f == e).expect("edge of cfg").2
        }))
    }

    /// Leaks over all methods; only meaningful once finished.
    pub fn leaks(&self) -> Result<Vec<Leak>, DebugError> {
        let mut leaks = Vec::new();
        for results in self.results() {
            let method = self.program.method(&results.method).expect("method");
            let cfg = self.cfg(&results.method).expect("cfg");
            leaks.extend(
                report_leaks(&results, self.analysis.as_ref(), method, cfg)
                    .map_err(|e| DebugError::Misuse(e.to_string()))?,
            );
        }
        Ok(leaks)
    }

    /// Returns true when the focus changed.
    pub fn set_focus(&mut self, unit: Option<UnitId>) -> Result<bool, DebugError> {
        if let Some(u) = &unit {
            if self.program.unit(u).is_none() {
                return Err(DebugError::UnknownUnit(u.to_string()));
            }
        }
        if self.focus == unit {
            return Ok(false);
        }
        self.focus = unit;
        Ok(true)
    }
}

/// First event at which two finished sessions over the same program differ.
pub fn diverge(a: &DebugSession, b: &DebugSession) -> Result<Option<Divergence>, DebugError> {
    if !a.is_finished() || !b.is_finished() {
        return Err(DebugError::Misuse(
            "both sessions must have finished before comparing".into(),
        ));
    }
    if a.program.render() != b.program.render() {
        return Err(DebugError::Misuse(
            "sessions analyze different programs".into(),
        ));
    }
    if a.config.solver.policy != b.config.solver.policy {
        return Err(DebugError::Misuse(
            "sessions use different worklist policies".into(),
        ));
    }
    let (left, right) = (a.events(), b.events());
    for seq in 0..left.len().max(right.len()) {
        let (l, r) = (left.get(seq), right.get(seq));
        if l.map(DebugEvent::render) != r.map(DebugEvent::render) {
            return Ok(Some(Divergence {
                seq,
                left: l.cloned(),
                right: r.cloned(),
            }));
        }
    }
    Ok(None)
}

/// Solve `program` under both analyses and report where they part ways.
pub fn localize(
    program: &Program,
    reference: Arc<dyn AnalysisDef>,
    suspect: Arc<dyn AnalysisDef>,
    config: &SessionConfig,
) -> Result<Option<Divergence>, DebugError> {
    let mut a = DebugSession::start(program.clone(), reference, config.clone())?;
    let mut b = DebugSession::start(program.clone(), suspect, config.clone())?;
    a.run_to_end()?;
    b.run_to_end()?;
    diverge(&a, &b)
}

use std::collections::BTreeMap;
use std::fmt;

use crate::dataflow::{render_elements, FactSet, SolverEvent};
use crate::ir::{CfgEdge, UnitId};

/// A solver event stamped with its position in the session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DebugEvent {
    /// Gapless index from 0.
    pub seq: usize,
    /// Transfers applied in the event's method when the event was emitted;
    /// a transfer and its edge updates carry the transfer's own number.
    pub iteration: u64,
    pub kind: SolverEvent,
}

impl DebugEvent {
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            SolverEvent::Pop { .. } => "pop",
            SolverEvent::Merge { .. } => "merge",
            SolverEvent::Transfer { .. } => "transfer",
            SolverEvent::EdgeUpdate { .. } => "edge_update",
            SolverEvent::Fixpoint { .. } => "fixpoint",
            SolverEvent::BudgetExceeded { .. } => "budget_exceeded",
        }
    }

    /// Unit the event is about. Edge updates report the edge's source unit.
    pub fn unit(&self) -> Option<&UnitId> {
        match &self.kind {
            SolverEvent::Pop { unit }
            | SolverEvent::Merge { unit, .. }
            | SolverEvent::Transfer { unit, .. } => Some(unit),
            SolverEvent::EdgeUpdate { edge, .. } => Some(&edge.src),
            SolverEvent::Fixpoint { .. } | SolverEvent::BudgetExceeded { .. } => None,
        }
    }

    pub fn method(&self) -> &str {
        match &self.kind {
            SolverEvent::Fixpoint { method } | SolverEvent::BudgetExceeded { method } => method,
            _ => &self.unit().expect("unit events").method,
        }
    }

    /// `seq|iteration|kind|unit-or-edge|in|out|gen|kill`.
    pub fn render(&self) -> String {
        let (subject, input, output, gen, kill) = match &self.kind {
            SolverEvent::Pop { unit } => (unit.to_string(), String::new(), String::new(), String::new(), String::new()),
            SolverEvent::Merge {
                unit,
                inputs,
                result,
            } => {
                let ins: Vec<String> = inputs.iter().map(FactSet::render).collect();
                (unit.to_string(), ins.join(";"), result.render(), String::new(), String::new())
            }
            SolverEvent::Transfer {
                unit,
                input,
                result,
            } => (
                unit.to_string(),
                input.render(),
                result.out.render(),
                render_elements(&result.gen),
                render_elements(&result.kill),
            ),
            SolverEvent::EdgeUpdate { edge, old, new } => {
                (edge.to_string(), old.render(), new.render(), String::new(), String::new())
            }
            SolverEvent::Fixpoint { method } | SolverEvent::BudgetExceeded { method } => {
                (method.clone(), String::new(), String::new(), String::new(), String::new())
            }
        };
        format!(
            "{}|{}|{}|{subject}|{input}|{output}|{gen}|{kill}",
            self.seq,
            self.iteration,
            self.kind_name()
        )
    }
}

impl fmt::Display for DebugEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Ordered events with lookup by unit and edge.
#[derive(Clone, Debug, Default)]
pub struct EventLog {
    events: Vec<DebugEvent>,
    by_unit: BTreeMap<UnitId, Vec<usize>>,
    by_edge: BTreeMap<CfgEdge, Vec<usize>>,
}

impl EventLog {
    pub fn push(&mut self, event: DebugEvent) {
        debug_assert_eq!(event.seq, self.events.len());
        match &event.kind {
            SolverEvent::EdgeUpdate { edge, .. } => {
                self.by_edge.entry(edge.clone()).or_default().push(event.seq)
            }
            SolverEvent::Pop { unit }
            | SolverEvent::Merge { unit, .. }
            | SolverEvent::Transfer { unit, .. } => {
                self.by_unit.entry(unit.clone()).or_default().push(event.seq)
            }
            _ => {}
        }
        self.events.push(event);
    }

    pub fn events(&self) -> &[DebugEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, seq: usize) -> Option<&DebugEvent> {
        self.events.get(seq)
    }

    /// Seqs of pop/merge/transfer events for `unit`.
    pub fn unit_events(&self, unit: &UnitId) -> &[usize] {
        self.by_unit.get(unit).map_or(&[], Vec::as_slice)
    }

    /// Seqs of edge updates for `edge`.
    pub fn edge_events(&self, edge: &CfgEdge) -> &[usize] {
        self.by_edge.get(edge).map_or(&[], Vec::as_slice)
    }

    /// Canonical text of events `0..upto`, one per line.
    pub fn render(&self, upto: usize) -> String {
        self.events[..upto.min(self.events.len())]
            .iter()
            .map(|e| e.render() + "\n")
            .collect()
    }

    /// `(iteration, facts)` after each update of `edge` among events
    /// `0..upto`, preceded by `(0, bottom)`.
    pub fn edge_history(&self, edge: &CfgEdge, upto: usize, bottom: &FactSet) -> Vec<(u64, FactSet)> {
        let mut history = vec![(0, bottom.clone())];
        for &seq in self.edge_events(edge).iter().take_while(|&&s| s < upto) {
            if let SolverEvent::EdgeUpdate { new, .. } = &self.events[seq].kind {
                history.push((self.events[seq].iteration, new.clone()));
            }
        }
        history
    }

    /// Facts of `edge` after events `0..upto`, restricted to updates made
    /// at or before `iteration` when given.
    pub fn edge_value(
        &self,
        edge: &CfgEdge,
        upto: usize,
        iteration: Option<u64>,
        bottom: &FactSet,
    ) -> (u64, FactSet) {
        self.edge_history(edge, upto, bottom)
            .into_iter()
            .rev()
            .find(|(it, _)| iteration.is_none_or(|at| *it <= at))
            .unwrap_or((0, bottom.clone()))
    }

    /// Highest iteration stamped on events of `method` among `0..upto`.
    pub fn method_iteration(&self, method: &str, upto: usize) -> u64 {
        self.events[..upto.min(self.events.len())]
            .iter()
            .rev()
            .find(|e| e.method() == method)
            .map_or(0, |e| e.iteration)
    }

    pub(crate) fn truncate(&mut self, len: usize) {
        self.events.truncate(len);
        for seqs in self.by_unit.values_mut().chain(self.by_edge.values_mut()) {
            seqs.retain(|&s| s < len);
        }
    }
}

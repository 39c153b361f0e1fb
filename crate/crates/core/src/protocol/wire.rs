use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataflow::{FactSet, FlowOut};
use crate::debug::{SessionState, StopReport, SuspendReason};
use crate::ir::CfgEdge;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Op {
    Load,
    Subscribe,
    SetBreakpoint,
    RemoveBreakpoint,
    ListBreakpoints,
    Step,
    Resume,
    Rewind,
    State,
    InspectEdge,
    History,
    Graph,
    Results,
    Log,
    SetFocus,
    UnitInfo,
    Diverge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: Value,
    pub op: Op,
    #[serde(default)]
    pub args: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    /// Byte offset into the request line, for parse errors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Value,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Response {
    pub fn ok(id: Value, body: Value) -> Self {
        Response {
            id,
            ok: true,
            body: Some(body),
            error: None,
        }
    }

    pub fn err(id: Value, code: &str, message: impl Into<String>, offset: Option<usize>) -> Self {
        Response {
            id,
            ok: false,
            body: None,
            error: Some(ErrorBody {
                code: code.to_string(),
                message: message.into(),
                offset,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event: String,
    /// Session seq (events emitted so far) the event reflects.
    pub seq: usize,
    pub body: Value,
}

pub fn facts_json(facts: &FactSet) -> Value {
    json!({ "text": facts.render(), "elements": facts.elements() })
}

pub fn edge_json(edge: &CfgEdge, iteration: u64, facts: &FactSet) -> Value {
    json!({
        "id": edge.to_string(),
        "src": edge.src.to_string(),
        "dst": edge.dst.to_string(),
        "kind": edge.kind.as_str(),
        "iteration": iteration,
        "label": facts.render(),
    })
}

fn out_json(out: &FlowOut) -> Value {
    match out {
        FlowOut::Uniform(f) => json!(f.render()),
        FlowOut::Branch { taken, fallthrough } => {
            json!({ "true": taken.render(), "false": fallthrough.render() })
        }
    }
}

pub fn report_json(report: &StopReport) -> Value {
    let (state, reason, breakpoints) = match &report.state {
        SessionState::Idle => ("idle", None, Vec::new()),
        SessionState::Finished => ("finished", None, Vec::new()),
        SessionState::Suspended { reason, .. } => {
            let ids = match reason {
                SuspendReason::Breakpoint(ids) => ids.clone(),
                _ => Vec::new(),
            };
            ("suspended", Some(reason.to_string()), ids)
        }
    };
    let mut body = json!({
        "state": state,
        "seq": report.seq,
        "method": report.method,
        "iteration": report.iteration,
        "line": report.line,
        "reason": reason,
        "breakpoints": breakpoints,
    });
    if let Some(p) = &report.pending {
        body["unit"] = json!(p.unit.to_string());
        body["in"] = json!(p.input.render());
        body["out"] = out_json(&p.result.out);
        body["gen"] = json!(p.result.gen);
        body["kill"] = json!(p.result.kill);
    }
    body
}

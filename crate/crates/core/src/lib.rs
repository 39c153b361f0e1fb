//! Debugging support for data-flow analyses.
//!
//! The crate is layered bottom-up:
//!
//! * [`ir`]: the three-address IR, its parser, CFG and call-graph builders.
//! * [`dataflow`]: lattices, the worklist solver and the bundled analyses.
//! * [`debug`]: an instrumented session over the solver with breakpoints,
//!   stepping, edge histories and replay-based rewind.
//! * [`protocol`]: the line-delimited JSON protocol that exposes sessions to
//!   clients.
//! * [`dot`]: Graphviz export.

pub mod corpus;
pub mod dataflow;
pub mod debug;
pub mod dot;
pub mod ir;
pub mod protocol;

pub use dataflow::{
    builtin_analyses, check_monotone, report_leaks, solve, AnalysisDef, Direction, EdgeResults,
    FactSet, Lattice, Registry, TaintConfig, TransferResult,
};
pub use debug::{Breakpoint, BreakpointSpec, DebugEvent, DebugSession, EventLog, Granularity};
pub use ir::{build_call_graph, build_cfg, parse_program, Cfg, CfgEdge, Program, Unit, UnitId};

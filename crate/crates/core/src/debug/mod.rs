//! Debug sessions over the worklist solver.
//!
//! A [`DebugSession`] drives a [`crate::dataflow::Solver`] one event at a
//! time, records every event in an [`EventLog`], and suspends on
//! breakpoints or step boundaries. Rewind re-executes from the start, which
//! is cheap for the programs this tool is meant for and keeps the log the
//! single source of truth.

mod breakpoint;
mod event;
mod session;

pub use breakpoint::{Breakpoint, BreakpointKind, BreakpointSpec, EventPredicate, FactPattern};
pub use event::{DebugEvent, EventLog};
pub use session::{
    diverge, localize, DebugError, DebugSession, Divergence, Granularity, SessionConfig,
    SessionState, StopReport, SuspendReason,
};

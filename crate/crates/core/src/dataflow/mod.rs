//! Monotone-framework data-flow analysis.
//!
//! An [`AnalysisDef`] supplies a [`Lattice`], a direction, a boundary fact
//! and a per-unit flow function. [`solve`] computes the fixpoint with a
//! FIFO worklist; [`Solver`] exposes the same computation one event at a
//! time so the debugger can suspend inside it.

mod analyses;
mod facts;
mod leaks;
mod monotone;
mod registry;
mod solver;

use std::fmt;

use crate::ir::{Method, Unit};

pub use analyses::{
    ConstantPropagation, LiveVariables, ReachingDefinitions, SeededBug, TaintAnalysis,
    TaintConfig, TaintConfigError,
};
pub use facts::{
    render_elements, ConstLattice, ConstValue, FactSet, FlowOut, Lattice, PowersetLattice,
    SetShape, TransferResult,
};
pub use leaks::{report_leaks, Leak, NotTaint};
pub use monotone::{check_monotone, generate_samples, MonotoneReport, MonotoneSample, Violation};
pub use registry::{builtin_analyses, Registry, UnknownAnalysis};
pub use solver::{
    joined_input, solve, solve_with, EdgeResults, PendingTransfer, SolveContext, SolveError,
    Solver, SolverConfig, SolverEvent, WorklistPolicy, DEFAULT_BUDGET,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// The analysis side of a debugging session.
///
/// `flow` must be deterministic and free of side effects: the debugger
/// re-executes it when rewinding.
pub trait AnalysisDef: Send + Sync {
    fn name(&self) -> &str;

    /// One line on the lattice and direction, shown by `--help` listings.
    fn description(&self) -> &str;

    fn direction(&self) -> Direction;

    fn lattice(&self) -> &dyn Lattice;

    /// Boundary fact: flows into the entry unit for forward analyses and
    /// into every exit unit for backward ones.
    fn entry_fact(&self, method: &Method) -> FactSet;

    fn flow(&self, unit: &Unit, input: &FactSet) -> FlowOut;

    /// Source/sink configuration, for taint analyses only.
    fn taint_config(&self) -> Option<&TaintConfig> {
        None
    }
}

/// Apply `analysis`'s flow function and record gen/kill.
pub fn transfer(analysis: &dyn AnalysisDef, unit: &Unit, input: &FactSet) -> TransferResult {
    TransferResult::new(input, analysis.flow(unit, input))
}

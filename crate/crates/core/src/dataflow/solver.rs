use std::collections::VecDeque;

use super::{transfer, AnalysisDef, Direction, FactSet, FlowOut, TransferResult};
use crate::ir::{Cfg, CfgEdge, Method, UnitId};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WorklistPolicy {
    #[default]
    Fifo,
    Lifo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Maximum transfer applications per method.
    pub budget: u64,
    pub policy: WorklistPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            budget: DEFAULT_BUDGET,
            policy: WorklistPolicy::Fifo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error(
        "analysis did not converge on method `{method}` within {budget} transfers \
         (non-monotone flow or infinite ascending chain?)"
    )]
    NonTermination { method: String, budget: u64 },
}

/// One observable step of the solver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverEvent {
    Pop {
        unit: UnitId,
    },
    /// Emitted when a unit has two or more inputs.
    Merge {
        unit: UnitId,
        inputs: Vec<FactSet>,
        result: FactSet,
    },
    Transfer {
        unit: UnitId,
        input: FactSet,
        result: TransferResult,
    },
    EdgeUpdate {
        edge: CfgEdge,
        old: FactSet,
        new: FactSet,
    },
    Fixpoint {
        method: String,
    },
    BudgetExceeded {
        method: String,
    },
}

/// Borrowed inputs of a solver run.
#[derive(Clone, Copy)]
pub struct SolveContext<'a> {
    pub analysis: &'a dyn AnalysisDef,
    pub method: &'a Method,
    pub cfg: &'a Cfg,
}

/// A transfer that has been computed but not yet applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PendingTransfer {
    pub unit: UnitId,
    pub input: FactSet,
    pub result: TransferResult,
}

#[derive(Clone, Debug)]
enum Phase {
    Select,
    Merging {
        node: usize,
        inputs: Vec<FactSet>,
        result: FactSet,
    },
    Pending(PendingTransfer),
    Updating(VecDeque<(usize, FactSet)>),
    Done,
    Exhausted,
}

/// Resumable worklist solver for one method.
///
/// Each call to [`Solver::advance`] emits exactly one [`SolverEvent`]. The
/// solver holds no references, so callers pass the same [`SolveContext`]
/// on every call.
#[derive(Clone, Debug)]
pub struct Solver {
    config: SolverConfig,
    facts: Vec<FactSet>,
    /// Edge indices whose facts flow into each node.
    inputs: Vec<Vec<usize>>,
    /// Edge indices each node writes.
    outputs: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    worklist: VecDeque<usize>,
    queued: Vec<bool>,
    phase: Phase,
    transfers: u64,
}

impl Solver {
    pub fn new(ctx: SolveContext<'_>, config: SolverConfig) -> Self {
        let n = ctx.cfg.nodes.len();
        let mut inputs = vec![Vec::new(); n];
        let mut outputs = vec![Vec::new(); n];
        let mut boundary = vec![false; n];
        let forward = ctx.analysis.direction() == Direction::Forward;
        for (i, e) in ctx.cfg.edges.iter().enumerate() {
            let (reader, writer) = if forward {
                (e.dst.ordinal, e.src.ordinal)
            } else {
                (e.src.ordinal, e.dst.ordinal)
            };
            inputs[reader].push(i);
            outputs[writer].push(i);
        }
        if forward {
            boundary[ctx.cfg.entry.ordinal] = true;
        } else {
            for exit in &ctx.cfg.exits {
                boundary[exit.ordinal] = true;
            }
        }
        let seed: Vec<usize> = if forward {
            (0..n).collect()
        } else {
            (0..n).rev().collect()
        };
        let bottom = ctx.analysis.lattice().bottom();
        Solver {
            config,
            facts: vec![bottom; ctx.cfg.edges.len()],
            inputs,
            outputs,
            boundary,
            worklist: seed.into(),
            queued: vec![true; n],
            phase: Phase::Select,
            transfers: 0,
        }
    }

    /// Produce the next event, or `None` once the method is finished.
    pub fn advance(&mut self, ctx: SolveContext<'_>) -> Option<SolverEvent> {
        let lattice = ctx.analysis.lattice();
        loop {
            match std::mem::replace(&mut self.phase, Phase::Done) {
                Phase::Select => {
                    let next = match self.config.policy {
                        WorklistPolicy::Fifo => self.worklist.pop_front(),
                        WorklistPolicy::Lifo => self.worklist.pop_back(),
                    };
                    let Some(node) = next else {
                        self.phase = Phase::Done;
                        return Some(SolverEvent::Fixpoint {
                            method: ctx.cfg.method.clone(),
                        });
                    };
                    self.queued[node] = false;
                    if self.transfers >= self.config.budget {
                        self.phase = Phase::Exhausted;
                        return Some(SolverEvent::BudgetExceeded {
                            method: ctx.cfg.method.clone(),
                        });
                    }
                    let mut inputs: Vec<FactSet> = Vec::new();
                    if self.boundary[node] {
                        inputs.push(ctx.analysis.entry_fact(ctx.method));
                    }
                    inputs.extend(self.inputs[node].iter().map(|&e| self.facts[e].clone()));
                    let unit = ctx.cfg.nodes[node].clone();
                    self.phase = match inputs.len() {
                        0 => self.pending(ctx, node, lattice.bottom()),
                        1 => self.pending(ctx, node, inputs.pop().unwrap()),
                        _ => {
                            let result = inputs[1..]
                                .iter()
                                .fold(inputs[0].clone(), |acc, f| lattice.join(&acc, f));
                            Phase::Merging {
                                node,
                                inputs,
                                result,
                            }
                        }
                    };
                    return Some(SolverEvent::Pop { unit });
                }
                Phase::Merging {
                    node,
                    inputs,
                    result,
                } => {
                    self.phase = self.pending(ctx, node, result.clone());
                    return Some(SolverEvent::Merge {
                        unit: ctx.cfg.nodes[node].clone(),
                        inputs,
                        result,
                    });
                }
                Phase::Pending(pending) => {
                    self.transfers += 1;
                    let node = pending.unit.ordinal;
                    let forward = ctx.analysis.direction() == Direction::Forward;
                    let updates: VecDeque<(usize, FactSet)> = self.outputs[node]
                        .iter()
                        .filter_map(|&e| {
                            // Backward flows treat every edge as a plain
                            // predecessor, so branch outputs are joined.
                            let new = match (forward, &pending.result.out) {
                                (true, out) => out.for_edge(ctx.cfg.edges[e].kind).clone(),
                                (false, FlowOut::Uniform(f)) => f.clone(),
                                (false, FlowOut::Branch { taken, fallthrough }) => {
                                    lattice.join(taken, fallthrough)
                                }
                            };
                            (!lattice.equals(&new, &self.facts[e])).then_some((e, new))
                        })
                        .collect();
                    self.phase = Phase::Updating(updates);
                    return Some(SolverEvent::Transfer {
                        unit: pending.unit,
                        input: pending.input,
                        result: pending.result,
                    });
                }
                Phase::Updating(mut updates) => {
                    let Some((e, new)) = updates.pop_front() else {
                        self.phase = Phase::Select;
                        continue;
                    };
                    self.phase = Phase::Updating(updates);
                    let edge = &ctx.cfg.edges[e];
                    let target = if ctx.analysis.direction() == Direction::Forward {
                        edge.dst.ordinal
                    } else {
                        edge.src.ordinal
                    };
                    if !self.queued[target] {
                        self.queued[target] = true;
                        self.worklist.push_back(target);
                    }
                    let old = std::mem::replace(&mut self.facts[e], new.clone());
                    return Some(SolverEvent::EdgeUpdate {
                        edge: edge.clone(),
                        old,
                        new,
                    });
                }
                Phase::Done => return None,
                Phase::Exhausted => {
                    self.phase = Phase::Exhausted;
                    return None;
                }
            }
        }
    }

    fn pending(&self, ctx: SolveContext<'_>, node: usize, input: FactSet) -> Phase {
        let unit = &ctx.method.units[node];
        let result = transfer(ctx.analysis, unit, &input);
        Phase::Pending(PendingTransfer {
            unit: unit.id.clone(),
            input,
            result,
        })
    }

    /// The transfer about to be applied, when the solver sits right before
    /// a transfer event.
    pub fn pending_transfer(&self) -> Option<&PendingTransfer> {
        match &self.phase {
            Phase::Pending(p) => Some(p),
            _ => None,
        }
    }

    /// The unit popped most recently and not yet transferred.
    pub fn current_unit(&self, cfg: &Cfg) -> Option<UnitId> {
        match &self.phase {
            Phase::Pending(p) => Some(p.unit.clone()),
            Phase::Merging { node, .. } => Some(cfg.nodes[*node].clone()),
            _ => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.phase, Phase::Done | Phase::Exhausted)
    }

    pub fn exceeded_budget(&self) -> bool {
        matches!(self.phase, Phase::Exhausted)
    }

    /// Transfers applied so far.
    pub fn transfers(&self) -> u64 {
        self.transfers
    }

    pub fn edge_facts(&self) -> &[FactSet] {
        &self.facts
    }

    /// Units currently queued, in pop order for FIFO.
    pub fn worklist(&self, cfg: &Cfg) -> Vec<UnitId> {
        self.worklist.iter().map(|&n| cfg.nodes[n].clone()).collect()
    }

    pub fn into_results(self, cfg: &Cfg) -> EdgeResults {
        EdgeResults {
            method: cfg.method.clone(),
            edges: cfg.edges.iter().cloned().zip(self.facts).collect(),
        }
    }
}

/// Final facts per CFG edge of one method, in CFG edge order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeResults {
    pub method: String,
    pub edges: Vec<(CfgEdge, FactSet)>,
}

impl EdgeResults {
    pub fn get(&self, edge: &CfgEdge) -> Option<&FactSet> {
        self.edges.iter().find(|(e, _)| e == edge).map(|(_, f)| f)
    }

    /// Stable text form: one `edge facts` pair per line.
    pub fn render(&self) -> String {
        self.edges
            .iter()
            .map(|(e, f)| format!("{e} {f}\n"))
            .collect()
    }
}

/// Join of the facts flowing into `node`, including the boundary fact.
///
/// For forward analyses this is the unit's in-fact; for backward ones it is
/// the fact after the unit in program order.
pub fn joined_input<'f>(
    ctx: SolveContext<'_>,
    node: &UnitId,
    facts: impl Fn(&CfgEdge) -> &'f FactSet,
) -> FactSet {
    let lattice = ctx.analysis.lattice();
    let forward = ctx.analysis.direction() == Direction::Forward;
    let mut inputs: Vec<FactSet> = Vec::new();
    let is_boundary = if forward {
        &ctx.cfg.entry == node
    } else {
        ctx.cfg.exits.contains(node)
    };
    if is_boundary {
        inputs.push(ctx.analysis.entry_fact(ctx.method));
    }
    for e in &ctx.cfg.edges {
        let reads = if forward { &e.dst == node } else { &e.src == node };
        if reads {
            inputs.push(facts(e).clone());
        }
    }
    let mut iter = inputs.into_iter();
    match iter.next() {
        None => lattice.bottom(),
        Some(first) => iter.fold(first, |acc, f| lattice.join(&acc, &f)),
    }
}

pub fn solve(analysis: &dyn AnalysisDef, method: &Method, cfg: &Cfg) -> Result<EdgeResults, SolveError> {
    solve_with(analysis, method, cfg, SolverConfig::default())
}

pub fn solve_with(
    analysis: &dyn AnalysisDef,
    method: &Method,
    cfg: &Cfg,
    config: SolverConfig,
) -> Result<EdgeResults, SolveError> {
    let ctx = SolveContext {
        analysis,
        method,
        cfg,
    };
    let mut solver = Solver::new(ctx, config);
    while solver.advance(ctx).is_some() {}
    if solver.exceeded_budget() {
        return Err(SolveError::NonTermination {
            method: method.name.clone(),
            budget: config.budget,
        });
    }
    Ok(solver.into_results(cfg))
}

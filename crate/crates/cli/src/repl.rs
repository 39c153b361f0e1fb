//! Line-oriented debugger front end.
//!
//! Every command maps onto one [`DebugSession`] call, the same ones the
//! protocol server makes, so the two front ends print the same facts.

use std::io::{BufRead, Write};

use anyhow::{bail, Context, Result};
use flowscope_core::dataflow::{render_elements, Registry};
use flowscope_core::debug::{
    diverge, BreakpointSpec, DebugSession, Granularity, SessionState, StopReport,
};

pub const HELP: &str = "\
commands:
  b <unit|line|gen:P|kill:P|edge:E|kind:K>   set a breakpoint
  d <id>                                      delete a breakpoint
  bl                                          list breakpoints
  s [transfer|unit|iteration|method|to-fixpoint]
  c                                           continue to the next breakpoint
  rw <seq>                                    rewind to an event
  p <edge|unit> [at]                          print facts
  hist <edge|unit>                            fact history
  w                                           where the session stopped
  log [n]                                     last n events (default 10)
  diverge <analysis>                          compare against another analysis
  focus [unit]                                set or clear the focused unit
  help, q
";

pub enum Outcome {
    Continue(String),
    Quit,
}

pub struct Repl {
    session: DebugSession,
    registry: Registry,
}

impl Repl {
    pub fn new(session: DebugSession, registry: Registry) -> Self {
        Repl { session, registry }
    }

    pub fn session(&self) -> &DebugSession {
        &self.session
    }

    pub fn prompt(&self) -> String {
        let r = self.session.report();
        match (&r.pending, &r.method) {
            (Some(p), _) => format!("({} it {}) ", p.unit, r.iteration),
            (None, Some(m)) if !r.is_finished() => format!("({m} it {}) ", r.iteration),
            _ => "(flowscope) ".to_string(),
        }
    }

    /// Run one command. Errors are returned, not printed.
    pub fn execute(&mut self, line: &str) -> Result<Outcome> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let Some((&cmd, args)) = words.split_first() else {
            return Ok(Outcome::Continue(String::new()));
        };
        let text = match (cmd, args) {
            ("q" | "quit", _) => return Ok(Outcome::Quit),
            ("help" | "h", _) => HELP.to_string(),
            ("b", [spec]) => {
                let spec: BreakpointSpec = spec.parse().map_err(anyhow::Error::msg)?;
                self.session.add_breakpoint(&spec)?.to_string()
            }
            ("d", [id]) => {
                let id: u32 = id.parse().context("breakpoint id")?;
                if self.session.remove_breakpoint(id) {
                    format!("deleted breakpoint {id}")
                } else {
                    format!("no breakpoint {id}")
                }
            }
            ("bl", []) => {
                let list: Vec<String> = self
                    .session
                    .breakpoints()
                    .iter()
                    .map(|b| {
                        let off = if b.enabled { "" } else { " (disabled)" };
                        format!("{b}{off}, hits: {}", b.hit_count)
                    })
                    .collect();
                if list.is_empty() {
                    "no breakpoints".into()
                } else {
                    list.join("\n")
                }
            }
            ("s", []) => describe(&self.session.step(Granularity::Transfer)?),
            ("s", [g]) => {
                let g: Granularity = g.parse().map_err(anyhow::Error::msg)?;
                describe(&self.session.step(g)?)
            }
            ("c", []) => describe(&self.session.resume()?),
            ("rw", [seq]) => {
                let seq: usize = seq.parse().context("seq")?;
                describe(&self.session.rewind(seq)?)
            }
            ("w", []) => describe(&self.session.report()),
            ("p", [target]) => self.print(target, None)?,
            ("p", [target, at]) => {
                let at: u64 = at.parse().context("iteration")?;
                self.print(target, Some(at))?
            }
            ("hist", [target]) => self.history(target)?,
            ("log", []) => self.log(10),
            ("log", [n]) => self.log(n.parse().context("event count")?),
            ("diverge", [other]) => self.diverge(other)?,
            ("focus", []) => {
                self.session.set_focus(None)?;
                "focus cleared".into()
            }
            ("focus", [unit]) => {
                let id = self.session.resolve_unit(unit)?;
                self.session.set_focus(Some(id.clone()))?;
                format!("focus {id}")
            }
            _ => format!("unknown command `{}`\n{HELP}", line.trim()),
        };
        Ok(Outcome::Continue(text))
    }

    /// Read commands until `q` or end of input.
    pub fn run(&mut self, input: impl BufRead, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{}", describe(&self.session.report()))?;
        write!(out, "{}", self.prompt())?;
        out.flush()?;
        for line in input.lines() {
            match self.execute(&line?) {
                Ok(Outcome::Quit) => return Ok(()),
                Ok(Outcome::Continue(text)) if text.is_empty() => {}
                Ok(Outcome::Continue(text)) => writeln!(out, "{}", text.trim_end())?,
                Err(e) => writeln!(out, "error: {e:#}")?,
            }
            write!(out, "{}", self.prompt())?;
            out.flush()?;
        }
        writeln!(out)?;
        Ok(())
    }

    fn print(&self, target: &str, at: Option<u64>) -> Result<String> {
        if target.contains("->") {
            let edge = self.session.resolve_edge(target)?;
            return Ok(self.session.inspect_edge(&edge, at)?.render());
        }
        if at.is_some() {
            bail!("`at` applies to edges only");
        }
        let id = self.session.resolve_unit(target)?;
        let unit = self.session.program().unit(&id).expect("resolved");
        let mut text = format!("{id}: {} (line {})\n", unit.text(), unit.source_line);
        text += &format!("in={}", self.session.unit_input(&id)?.render());
        if let Some(p) = self.session.pending().filter(|p| p.unit == id) {
            text += &format!(
                "\npending out={} gen={} kill={}",
                p.result.out.render(),
                render_elements(&p.result.gen),
                render_elements(&p.result.kill)
            );
        }
        Ok(text)
    }

    fn history(&self, target: &str) -> Result<String> {
        let render = |h: &[(u64, _)]| -> String {
            h.iter()
                .map(|(it, f): &(u64, flowscope_core::FactSet)| format!("  it {it}: {}", f.render()))
                .collect::<Vec<_>>()
                .join("\n")
        };
        if target.contains("->") {
            let edge = self.session.resolve_edge(target)?;
            return Ok(format!("{edge}\n{}", render(&self.session.edge_history(&edge))));
        }
        let id = self.session.resolve_unit(target)?;
        let edges = self.session.unit_history(&id);
        if edges.is_empty() {
            return Ok(format!("{id} writes no edges"));
        }
        Ok(edges
            .iter()
            .map(|(edge, h)| format!("{edge}\n{}", render(h)))
            .collect::<Vec<_>>()
            .join("\n"))
    }

    fn log(&self, n: usize) -> String {
        let events = self.session.events();
        let from = events.len().saturating_sub(n);
        if from == events.len() {
            return "no events yet".into();
        }
        events[from..]
            .iter()
            .map(|e| e.render())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Runs both analyses to the end on copies; the live session is untouched.
    fn diverge(&self, other: &str) -> Result<String> {
        let mut mine = self.session.clone();
        mine.run_to_end()?;
        let mut theirs = DebugSession::start(
            self.session.program().clone(),
            crate::analysis(&self.registry, other)?,
            self.session.config().clone(),
        )?;
        theirs.run_to_end()?;
        Ok(match diverge(&mine, &theirs)? {
            None => format!("no divergence from {other}"),
            Some(d) => {
                let show = |e: &Option<flowscope_core::DebugEvent>| {
                    e.as_ref().map_or("(log ended)".into(), |e| e.render())
                };
                let at = d.unit().map_or("end of log".into(), |u| u.to_string());
                format!(
                    "first divergence at seq {}, unit {at}\n  {}: {}\n  {other}: {}",
                    d.seq,
                    self.session.analysis().name(),
                    show(&d.left),
                    show(&d.right)
                )
            }
        })
    }
}

/// `suspended at main#2 (line 3), in={x}`.
pub fn describe(r: &StopReport) -> String {
    match &r.state {
        SessionState::Idle => format!("at start (seq {})", r.seq),
        SessionState::Finished => format!("fixpoint reached (seq {})", r.seq),
        SessionState::Suspended { reason, .. } => match &r.pending {
            Some(p) => {
                let line = r.line.map(|l| format!(" (line {l})")).unwrap_or_default();
                format!(
                    "suspended at {}{line}, in={} [{reason}, seq {}]",
                    p.unit,
                    p.input.render(),
                    r.seq
                )
            }
            None => format!("suspended [{reason}, seq {}]", r.seq),
        },
    }
}

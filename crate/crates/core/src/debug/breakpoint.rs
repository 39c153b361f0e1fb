use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ir::{CfgEdge, UnitId, UnitKind};

/// Canonical fact text to match, exactly or with a trailing `*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactPattern(String);

impl FactPattern {
    pub fn new(pattern: &str) -> Result<Self, String> {
        let body = pattern.strip_suffix('*').unwrap_or(pattern);
        if pattern.is_empty() || body.contains('*') {
            return Err(format!(
                "bad fact pattern `{pattern}` (`*` is only allowed as a suffix)"
            ));
        }
        Ok(FactPattern(pattern.to_string()))
    }

    pub fn matches(&self, fact: &str) -> bool {
        match self.0.strip_suffix('*') {
            Some(prefix) => fact.starts_with(prefix),
            None => fact == self.0,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// What a client asks for; resolved against the session into a
/// [`Breakpoint`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum BreakpointSpec {
    Unit { unit: String },
    Line { line: usize },
    FactGenerated { pattern: String },
    FactKilled { pattern: String },
    EdgeChanged { edge: String },
    UnitKind { unit_kind: UnitKind },
}

/// REPL syntax: `3` (line), `main#2` (unit), `gen:x*`, `kill:x`,
/// `edge:main#0->main#1`, `kind:identity`.
impl FromStr for BreakpointSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(line) = s.parse::<usize>() {
            return Ok(BreakpointSpec::Line { line });
        }
        if let Some((tag, rest)) = s.split_once(':') {
            let rest = rest.to_string();
            return match tag {
                "gen" => Ok(BreakpointSpec::FactGenerated { pattern: rest }),
                "kill" => Ok(BreakpointSpec::FactKilled { pattern: rest }),
                "edge" => Ok(BreakpointSpec::EdgeChanged { edge: rest }),
                "kind" => Ok(BreakpointSpec::UnitKind {
                    unit_kind: rest.parse()?,
                }),
                other => Err(format!("unknown breakpoint predicate `{other}`")),
            };
        }
        if s.contains('#') {
            return Ok(BreakpointSpec::Unit {
                unit: s.to_string(),
            });
        }
        Err(format!(
            "cannot read breakpoint `{s}` (line, unit id, gen:, kill:, edge: or kind:)"
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventPredicate {
    FactGenerated(FactPattern),
    FactKilled(FactPattern),
    EdgeChanged(CfgEdge),
    UnitKind(UnitKind),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BreakpointKind {
    /// Analyzed-code breakpoint on a unit.
    Unit(UnitId),
    /// Analyzed-code breakpoint on a source line, resolved to its unit.
    Line { line: usize, unit: UnitId },
    /// Analysis-code breakpoint on the pending transfer.
    Event(EventPredicate),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Breakpoint {
    pub id: u32,
    pub kind: BreakpointKind,
    pub enabled: bool,
    pub hit_count: u64,
}

impl fmt::Display for Breakpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "breakpoint {} ", self.id)?;
        match &self.kind {
            BreakpointKind::Unit(u) => write!(f, "at {u}"),
            BreakpointKind::Line { line, unit } => write!(f, "at {unit} (line {line})"),
            BreakpointKind::Event(EventPredicate::FactGenerated(p)) => {
                write!(f, "on fact generated {}", p.as_str())
            }
            BreakpointKind::Event(EventPredicate::FactKilled(p)) => {
                write!(f, "on fact killed {}", p.as_str())
            }
            BreakpointKind::Event(EventPredicate::EdgeChanged(e)) => write!(f, "on change of {e}"),
            BreakpointKind::Event(EventPredicate::UnitKind(k)) => write!(f, "on {k} units"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patterns() {
        let exact = FactPattern::new("x").unwrap();
        assert!(exact.matches("x") && !exact.matches("xy"));
        let prefix = FactPattern::new("x@*").unwrap();
        assert!(prefix.matches("x@main#1") && !prefix.matches("y@main#1"));
        assert!(FactPattern::new("").is_err());
        assert!(FactPattern::new("*x").is_err());
        assert!(FactPattern::new("*").unwrap().matches("anything"));
    }

    #[test]
    fn repl_syntax() {
        assert_eq!("3".parse(), Ok(BreakpointSpec::Line { line: 3 }));
        assert_eq!(
            "main#2".parse(),
            Ok(BreakpointSpec::Unit {
                unit: "main#2".into()
            })
        );
        assert_eq!(
            "kill:x".parse(),
            Ok(BreakpointSpec::FactKilled {
                pattern: "x".into()
            })
        );
        assert_eq!(
            "kind:identity".parse(),
            Ok(BreakpointSpec::UnitKind {
                unit_kind: UnitKind::Identity
            })
        );
        assert!("kind:bogus".parse::<BreakpointSpec>().is_err());
        assert!("hello".parse::<BreakpointSpec>().is_err());
    }

    #[test]
    fn json_shape() {
        let spec = BreakpointSpec::UnitKind {
            unit_kind: UnitKind::Identity,
        };
        assert_eq!(
            serde_json::to_string(&spec).unwrap(),
            r#"{"kind":"unitKind","unitKind":"identity"}"#
        );
        let line: BreakpointSpec = serde_json::from_str(r#"{"kind":"line","line":3}"#).unwrap();
        assert_eq!(line, BreakpointSpec::Line { line: 3 });
    }
}

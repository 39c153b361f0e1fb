use std::fmt;

use super::{joined_input, AnalysisDef, EdgeResults, SolveContext};
use crate::ir::{Cfg, Method, UnitId};

/// A tainted value reaching a sink argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Leak {
    pub unit: UnitId,
    pub variable: String,
}

impl fmt::Display for Leak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.unit, self.variable)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a taint analysis; leak reports need source/sink configuration")]
pub struct NotTaint(pub String);

/// Sink-call arguments that are tainted in the sink unit's joined in-fact,
/// sorted by unit then variable.
pub fn report_leaks(
    results: &EdgeResults,
    taint: &dyn AnalysisDef,
    method: &Method,
    cfg: &Cfg,
) -> Result<Vec<Leak>, NotTaint> {
    let config = taint
        .taint_config()
        .ok_or_else(|| NotTaint(taint.name().to_string()))?;
    let ctx = SolveContext {
        analysis: taint,
        method,
        cfg,
    };
    let bottom = taint.lattice().bottom();
    let mut leaks = Vec::new();
    for unit in &method.units {
        if !unit.callee().is_some_and(|c| config.is_sink(c)) {
            continue;
        }
        let input = joined_input(ctx, &unit.id, |e| results.get(e).unwrap_or(&bottom));
        let Some(tainted) = input.as_vars() else {
            continue;
        };
        for arg in unit.stmt.call_args() {
            if let Some(v) = arg.as_var().filter(|v| tainted.contains(*v)) {
                let leak = Leak {
                    unit: unit.id.clone(),
                    variable: v.to_string(),
                };
                if !leaks.contains(&leak) {
                    leaks.push(leak);
                }
            }
        }
    }
    leaks.sort();
    Ok(leaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::dataflow::{solve, ConstantPropagation, SeededBug, TaintAnalysis, TaintConfig};
    use crate::ir::{build_cfg, parse_program};

    fn leaks(src: &str, analysis: &dyn AnalysisDef) -> Vec<String> {
        let p = parse_program(src).unwrap();
        let m = p.entry_method();
        let cfg = build_cfg(m);
        let r = solve(analysis, m, &cfg).unwrap();
        report_leaks(&r, analysis, m, &cfg)
            .unwrap()
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    #[test]
    fn leak_ir_reports_unsanitized_sink_only() {
        let taint = TaintAnalysis::new(TaintConfig::default());
        assert_eq!(leaks(corpus::LEAK, &taint), ["(main#2, x)"]);
    }

    #[test]
    fn ignored_sanitizer_reports_both() {
        let buggy =
            TaintAnalysis::with_bugs("b", TaintConfig::default(), [SeededBug::IgnoredSanitizer]);
        assert_eq!(leaks(corpus::LEAK, &buggy), ["(main#2, x)", "(main#3, y)"]);
    }

    #[test]
    fn no_sinks_no_leaks() {
        let taint = TaintAnalysis::new(TaintConfig::default());
        assert!(leaks("method main() {\n x = source()\n return x\n}", &taint).is_empty());
        assert!(leaks(corpus::CLEAN, &taint).is_empty());
    }

    #[test]
    fn non_taint_analysis_is_misuse() {
        let p = parse_program(corpus::LEAK).unwrap();
        let m = p.entry_method();
        let cfg = build_cfg(m);
        let r = solve(&ConstantPropagation, m, &cfg).unwrap();
        assert_eq!(
            report_leaks(&r, &ConstantPropagation, m, &cfg),
            Err(NotTaint("constants".into()))
        );
    }
}

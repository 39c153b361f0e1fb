use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use super::{AnalysisDef, ConstValue, FactSet};
use crate::ir::{EdgeKind, Program, Unit};

/// A unit with two facts expected to satisfy `lo <= hi`.
#[derive(Clone, Debug)]
pub struct MonotoneSample {
    pub unit: Unit,
    pub lo: FactSet,
    pub hi: FactSet,
}

/// A sample where `flow(unit, lo)` is not below `flow(unit, hi)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub unit: String,
    pub lo: FactSet,
    pub hi: FactSet,
    pub out_lo: FactSet,
    pub out_hi: FactSet,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MonotoneReport {
    pub checked: usize,
    /// Samples whose inputs were not ordered by the analysis's own `leq`.
    pub skipped: usize,
    pub violations: Vec<Violation>,
}

impl MonotoneReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check `lo <= hi  =>  flow(u, lo) <= flow(u, hi)` on every sample.
///
/// Branch outputs are compared edge kind by edge kind.
pub fn check_monotone(analysis: &dyn AnalysisDef, samples: &[MonotoneSample]) -> MonotoneReport {
    let lattice = analysis.lattice();
    let mut report = MonotoneReport::default();
    for s in samples {
        if !lattice.leq(&s.lo, &s.hi) {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        let out_lo = analysis.flow(&s.unit, &s.lo);
        let out_hi = analysis.flow(&s.unit, &s.hi);
        for kind in [EdgeKind::Fallthrough, EdgeKind::BranchTrue, EdgeKind::BranchFalse] {
            let (a, b) = (out_lo.for_edge(kind), out_hi.for_edge(kind));
            if !lattice.leq(a, b) {
                report.violations.push(Violation {
                    unit: s.unit.id.to_string(),
                    lo: s.lo.clone(),
                    hi: s.hi.clone(),
                    out_lo: a.clone(),
                    out_hi: b.clone(),
                });
                break;
            }
        }
    }
    report
}

fn subset<T: Clone + Ord>(rng: &mut StdRng, universe: &[T]) -> BTreeSet<T> {
    universe
        .iter()
        .filter(|_| rng.random_bool(0.5))
        .cloned()
        .collect()
}

fn random_const(rng: &mut StdRng) -> Option<ConstValue> {
    match rng.random_range(0..5) {
        0 | 1 => None,
        2 => Some(ConstValue::Top),
        _ => Some(ConstValue::Const(rng.random_range(0..3))),
    }
}

/// Draw `n` ordered pairs over units of `program`.
///
/// Pairs are built structurally (superset, or pointwise raise toward top)
/// rather than through the analysis's own join, so a broken join cannot
/// hide a broken flow.
pub fn generate_samples(
    analysis: &dyn AnalysisDef,
    program: &Program,
    n: usize,
    seed: u64,
) -> Vec<MonotoneSample> {
    let mut rng = StdRng::seed_from_u64(seed);
    let units: Vec<&Unit> = program.units().collect();
    let shape = analysis.lattice().bottom();
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let unit = *units.choose(&mut rng).expect("programs have units");
        let method = program
            .method(&unit.id.method)
            .expect("unit belongs to a method");
        let vars: Vec<String> = method.variables().into_iter().collect();
        let (lo, hi) = match &shape {
            FactSet::Vars(_) => {
                let lo = subset(&mut rng, &vars);
                let hi = &lo | &subset(&mut rng, &vars);
                (FactSet::Vars(lo), FactSet::Vars(hi))
            }
            FactSet::Defs(_) => {
                let universe: Vec<_> = method
                    .units
                    .iter()
                    .flat_map(|u| u.defs().into_iter().map(|v| (v, u.id.clone())))
                    .collect();
                let lo = subset(&mut rng, &universe);
                let hi = &lo | &subset(&mut rng, &universe);
                (FactSet::Defs(lo), FactSet::Defs(hi))
            }
            FactSet::Consts(_) => {
                let mut lo = BTreeMap::new();
                let mut hi = BTreeMap::new();
                for v in &vars {
                    let a = random_const(&mut rng);
                    let b = match a {
                        None => random_const(&mut rng),
                        Some(ConstValue::Top) => Some(ConstValue::Top),
                        Some(c) => Some(if rng.random_bool(0.5) { c } else { ConstValue::Top }),
                    };
                    if let Some(a) = a {
                        lo.insert(v.clone(), a);
                    }
                    if let Some(b) = b {
                        hi.insert(v.clone(), b);
                    }
                }
                (FactSet::Consts(lo), FactSet::Consts(hi))
            }
        };
        samples.push(MonotoneSample {
            unit: unit.clone(),
            lo,
            hi,
        });
    }
    samples
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::dataflow::{SeededBug, TaintAnalysis, TaintConfig};
    use crate::ir::parse_program;

    #[test]
    fn empty_samples_empty_report() {
        let taint = TaintAnalysis::new(TaintConfig::default());
        assert_eq!(check_monotone(&taint, &[]), MonotoneReport::default());
    }

    #[test]
    fn correct_taint_is_monotone() {
        let taint = TaintAnalysis::new(TaintConfig::default());
        let p = parse_program(corpus::MIX).unwrap();
        let report = check_monotone(&taint, &generate_samples(&taint, &p, 100, 7));
        assert_eq!(report.checked, 100);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn xor_operand_join_is_caught() {
        let buggy = TaintAnalysis::with_bugs(
            "b",
            TaintConfig::default(),
            [SeededBug::OperandJoinDropsTaint],
        );
        let p = parse_program(corpus::MIX).unwrap();
        let report = check_monotone(&buggy, &generate_samples(&buggy, &p, 100, 7));
        let v = report.violations.first().expect("violation");
        assert_eq!(v.unit, "main#2");
        // witness: both operands tainted in `hi` only
        assert!(v.hi.as_vars().unwrap().contains("a") && v.hi.as_vars().unwrap().contains("b"));
    }

    #[test]
    fn generated_pairs_are_ordered() {
        let p = parse_program(corpus::LOOP).unwrap();
        for a in crate::dataflow::builtin_analyses(TaintConfig::default()) {
            for s in generate_samples(a.as_ref(), &p, 50, 1) {
                assert!(a.lattice().leq(&s.lo, &s.hi), "{}", a.name());
            }
        }
    }
}

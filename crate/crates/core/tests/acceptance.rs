//! One line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use flowscope_core::corpus;
use flowscope_core::dataflow::{
    builtin_analyses, check_monotone, generate_samples, report_leaks, solve, AnalysisDef,
    MonotoneReport, Registry, SeededBug, TaintConfig,
};
use flowscope_core::debug::{localize, BreakpointSpec, DebugSession, SessionConfig};
use flowscope_core::dot::export_dot;
use flowscope_core::ir::{build_call_graph, build_cfg, parse_program, Program, UnitId};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn programs() -> Vec<(&'static str, Program)> {
    corpus::PROGRAMS
        .iter()
        .map(|(name, src)| (*name, parse_program(src).expect("corpus parses")))
        .collect()
}

fn registry() -> Registry {
    Registry::with_builtins(TaintConfig::default())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut compared = 0;
    let progs = programs();
    for (name, program) in &progs {
        for a in builtin_analyses(TaintConfig::default()) {
            for (method, cfg) in common::cfgs(program) {
                let got = solve(a.as_ref(), method, &cfg).map_err(|e| e.to_string())?;
                let want = common::round_robin(a.as_ref(), method, &cfg);
                if got != want {
                    return Err(format!("{name} / {} / {}", a.name(), method.name));
                }
                compared += got.edges.len();
            }
        }
    }
    let took = start.elapsed();
    if took >= Duration::from_secs(5) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!(
        "{} programs x 4 analyses, {compared} edges equal, {took:.2?}",
        progs.len()
    ))
}

fn taint_ground_truth() -> Outcome {
    let taint = registry().get("taint").unwrap();
    let leaks_of = |src: &str| {
        let program = parse_program(src).unwrap();
        let mut leaks = Vec::new();
        for (method, cfg) in common::cfgs(&program) {
            let results = solve(taint.as_ref(), method, &cfg).unwrap();
            leaks.extend(report_leaks(&results, taint.as_ref(), method, &cfg).unwrap());
        }
        leaks.iter().map(ToString::to_string).collect::<Vec<_>>()
    };
    let golden: Vec<String> = include_str!("golden/leak-taint.txt")
        .lines()
        .skip_while(|l| *l != "leaks")
        .skip(1)
        .map(str::to_string)
        .collect();
    let leak = leaks_of(corpus::LEAK);
    let clean = leaks_of(corpus::CLEAN);
    if leak != golden {
        return Err(format!("leak.ir: {leak:?}, golden {golden:?}"));
    }
    if !clean.is_empty() {
        return Err(format!("clean.ir: {clean:?}"));
    }
    Ok(format!("leak.ir {leak:?}, clean.ir none"))
}

fn replay_determinism() -> Outcome {
    let registry = registry();
    let mut rewinds = 0;
    for (i, (name, src)) in corpus::PROGRAMS.iter().enumerate() {
        let start = || DebugSession::load(src, "taint", &registry, SessionConfig::default()).unwrap();
        let (mut a, mut b) = (start(), start());
        a.run_to_end().map_err(|e| e.to_string())?;
        b.run_to_end().map_err(|e| e.to_string())?;
        let full = a.render_log();
        if full != b.render_log() {
            return Err(format!("{name}: two runs differ"));
        }
        let mut rng = StdRng::seed_from_u64(i as u64);
        for _ in 0..10 {
            let k = rng.random_range(0..a.log().len());
            a.rewind(k).map_err(|e| format!("{name} rewind {k}: {e}"))?;
            a.run_to_end().map_err(|e| format!("{name} after rewind {k}: {e}"))?;
            if a.render_log() != full {
                return Err(format!("{name}: suffix after rewind {k} differs"));
            }
            rewinds += 1;
        }
    }
    Ok(format!("{} programs, {rewinds} rewinds", corpus::PROGRAMS.len()))
}

fn breakpoint_semantics() -> Outcome {
    let registry = registry();
    let mut units = 0;
    let mut lines = 0;
    for (name, src) in corpus::PROGRAMS {
        let load = || DebugSession::load(src, "taint", &registry, SessionConfig::default()).unwrap();
        let mut plain = load();
        plain.run_to_end().map_err(|e| e.to_string())?;
        let ids: Vec<UnitId> = plain.program().units().map(|u| u.id.clone()).collect();
        for id in ids {
            let pops = plain
                .events()
                .iter()
                .filter(|e| e.kind_name() == "pop" && e.unit() == Some(&id))
                .count();
            let mut s = load();
            s.add_breakpoint(&BreakpointSpec::Unit {
                unit: id.to_string(),
            })
            .map_err(|e| e.to_string())?;
            let mut hits = 0;
            while !s.resume().map_err(|e| e.to_string())?.is_finished() {
                hits += 1;
            }
            if hits != pops {
                return Err(format!("{name} {id}: {hits} suspensions, {pops} pops"));
            }
            units += 1;
        }
        let mut s = load();
        for line in common::nonblank_lines(src) {
            let resolved = s.program().units_on_line(line).len();
            if resolved != 1 {
                return Err(format!("{name} line {line}: {resolved} units"));
            }
            s.add_breakpoint(&BreakpointSpec::Line { line })
                .map_err(|e| format!("{name} line {line}: {e}"))?;
            lines += 1;
        }
    }
    Ok(format!("{units} unit breakpoints, {lines} line breakpoints"))
}

fn fault_localization() -> Outcome {
    let registry = registry();
    let mut found = Vec::new();
    for bug in SeededBug::ALL {
        let program = parse_program(corpus::get(bug.demo_program()).unwrap()).unwrap();
        let correct = registry.get("taint").unwrap();
        let buggy = registry.get(&bug.analysis_name()).unwrap();
        let d = localize(&program, correct, buggy, &SessionConfig::default())
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("{}: no divergence", bug.analysis_name()))?;
        let id = d.unit().ok_or("divergence without unit")?.clone();
        let unit = program.unit(&id).unwrap();
        let cfg = build_cfg(program.method(&id.method).unwrap());
        if !bug.touches(unit, &cfg, &TaintConfig::default()) {
            return Err(format!("{}: divergence at {id} is not touched", bug.analysis_name()));
        }
        found.push(format!("{}@{id}", bug.number()));
    }
    Ok(format!("{}/6 [{}]", found.len(), found.join(" ")))
}

fn audit(analysis: &dyn AnalysisDef, per_program: usize) -> MonotoneReport {
    let mut total = MonotoneReport::default();
    for (i, (_, program)) in programs().iter().enumerate() {
        let r = check_monotone(analysis, &generate_samples(analysis, program, per_program, i as u64));
        total.checked += r.checked;
        total.skipped += r.skipped;
        total.violations.extend(r.violations);
    }
    total
}

fn monotonicity_audit() -> Outcome {
    let per_program = 500usize.div_ceil(corpus::PROGRAMS.len());
    let mut summary = Vec::new();
    for a in builtin_analyses(TaintConfig::default()) {
        let r = audit(a.as_ref(), per_program);
        if r.checked < 500 || !r.is_clean() {
            return Err(format!(
                "{}: {} checked, {} violations",
                a.name(),
                r.checked,
                r.violations.len()
            ));
        }
        summary.push(format!("{} 0/{}", a.name(), r.checked));
    }
    let bug = registry().get(&SeededBug::OperandJoinDropsTaint.analysis_name()).unwrap();
    let r = audit(bug.as_ref(), per_program);
    if r.violations.is_empty() {
        return Err(format!("{}: no violation in {} pairs", bug.name(), r.checked));
    }
    summary.push(format!("{} {}/{}", bug.name(), r.violations.len(), r.checked));
    Ok(summary.join(", "))
}

fn protocol_conformance() -> Outcome {
    let (transcript, mismatches) = common::script::leak_session();
    if transcript != include_str!("golden/protocol-leak.txt") {
        return Err("transcript differs from golden".into());
    }
    if !mismatches.is_empty() {
        return Err(mismatches.join("; "));
    }
    Ok(format!(
        "{} transcript lines, graph labels equal inspectEdge",
        transcript.lines().count()
    ))
}

fn dot_determinism() -> Outcome {
    let mut files = 0;
    for (name, program) in programs() {
        let taint = registry().get("taint").unwrap();
        for (method, cfg) in common::cfgs(&program) {
            let results = solve(taint.as_ref(), method, &cfg).unwrap();
            let decorations: BTreeMap<_, _> = results
                .edges
                .iter()
                .map(|(e, f)| (e.clone(), f.render()))
                .collect();
            for decorate in [BTreeMap::new(), decorations.clone()] {
                let a = export_dot(&program, &cfg, &decorate).map_err(|e| e.to_string())?;
                let b = export_dot(&program, &cfg, &decorate).map_err(|e| e.to_string())?;
                if a != b {
                    return Err(format!("{name}: cfg export differs"));
                }
                files += 1;
            }
            let dot = export_dot(&program, &cfg, &decorations).unwrap();
            for (edge, label) in &decorations {
                let prefix = format!("\"{}\" -> \"{}\" [label=\"{label}\"", edge.src, edge.dst);
                if !dot.contains(&prefix) {
                    return Err(format!("{name}: {edge} not labeled {label}"));
                }
            }
        }
        let cg = build_call_graph(&program);
        let a = export_dot(&program, &cg, &BTreeMap::new()).map_err(|e| e.to_string())?;
        if a != export_dot(&program, &cg, &BTreeMap::new()).unwrap() {
            return Err(format!("{name}: call graph export differs"));
        }
        files += 1;
    }
    Ok(format!("{files} exports byte-identical, labels equal fixpoint"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("taint ground truth", taint_ground_truth),
        ("replay determinism", replay_determinism),
        ("breakpoint semantics", breakpoint_semantics),
        ("fault localization", fault_localization),
        ("monotonicity audit", monotonicity_audit),
        ("protocol conformance", protocol_conformance),
        ("dot determinism", dot_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

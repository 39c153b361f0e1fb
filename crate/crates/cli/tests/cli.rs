use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use flowscope_cli::repl::{Outcome, Repl};
use flowscope_core::corpus;
use flowscope_core::dataflow::SeededBug;
use flowscope_core::debug::{DebugSession, SessionConfig};
use flowscope_core::{Registry, TaintConfig};
use serde_json::{json, Value};

fn corpus_file(name: &str) -> String {
    format!("{}/../core/corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn flowscope(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_flowscope"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn run_reports_leaks_through_exit_status() {
    let leak = flowscope(&["run", &corpus_file("leak.ir")], "");
    assert_eq!(leak.status.code(), Some(1));
    let text = stdout(&leak);
    assert!(text.contains("main#1: y = sanitize(x)  before={x} after={x}"), "{text}");
    assert!(text.ends_with("main#2: sink(x) receives tainted {x}\n"), "{text}");

    let clean = flowscope(&["run", &corpus_file("clean.ir")], "");
    assert_eq!(clean.status.code(), Some(0));
    assert!(!stdout(&clean).contains("receives tainted"));
}

#[test]
fn run_errors_exit_2() {
    let missing = flowscope(&["run", "no-such.ir"], "");
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("no-such.ir: no such file"));

    let bad = flowscope(&["run", &corpus_file("leak.ir"), "--analysis", "nope"], "");
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("unknown analysis `nope`"));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.ir");
    fs::write(&broken, "method main() {\n  x = = 1\n}\n").unwrap();
    let o = flowscope(&["run", broken.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.ir: 2:7: unexpected `=`"), "{}", stderr(&o));
}

#[test]
fn lines_format_is_the_event_log() {
    let o = flowscope(&["run", &corpus_file("loop.ir"), "--format", "lines"], "");
    let registry = Registry::with_builtins(TaintConfig::default());
    let mut s = DebugSession::load(corpus::LOOP, "taint", &registry, SessionConfig::default()).unwrap();
    s.run_to_end().unwrap();
    assert!(stdout(&o).starts_with(&s.render_log()));
}

#[test]
fn taint_config_replaces_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.cfg");
    // sanitize is no longer a sanitizer, so y leaks too
    fs::write(&cfg, "source source\nsink sink\n").unwrap();
    let o = flowscope(
        &["run", &corpus_file("leak.ir"), "--taint-config", cfg.to_str().unwrap()],
        "",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("main#3: sink(y) receives tainted {y}"), "{}", stdout(&o));
}

#[test]
fn init_writes_a_runnable_project() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("proj");
    let o = flowscope(&["--init", target.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(0));
    let cfg = target.join("taint.cfg");
    let o = flowscope(
        &[
            "run",
            target.join("sample.ir").to_str().unwrap(),
            "--taint-config",
            cfg.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(1));
    // a second init refuses to overwrite
    let again = flowscope(&["--init", target.to_str().unwrap()], "");
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn export_is_deterministic_and_decorated() {
    let file = corpus_file("branch.ir");
    let a = stdout(&flowscope(&["export", &file, "--decorate"], ""));
    let b = stdout(&flowscope(&["export", &file, "--decorate"], ""));
    assert_eq!(a, b);
    assert!(a.starts_with("digraph \"cfg_main\""));
    assert!(a.contains("\"main#4\" -> \"main#5\" [label=\"{t, u}\"]"), "{a}");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cg.dot");
    let o = flowscope(
        &["export", &corpus_file("two-method.ir"), "--target", "callgraph", "--out", out.to_str().unwrap()],
        "",
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(out).unwrap().contains("\"main\" -> \"wrap\""));

    let o = flowscope(&["export", &file, "--target", "callgraph", "--decorate"], "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn localize_names_the_faulty_unit() {
    let o = flowscope(&["localize", &corpus_file("leak.ir"), "taint", "taint-bug1"], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("first divergence at seq 4, unit main#1 (line 2: y = sanitize(x))"));

    let o = flowscope(&["localize", &corpus_file("leak.ir"), "taint", "taint"], "");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "no divergence\n");
}

#[test]
fn debug_repl_script() {
    let script = "b 3\nc\np main#1->main#2\np main#1->main#2 0\nrw 0\nfrobnicate\nb 99\nq\n";
    let o = flowscope(&["debug", &corpus_file("leak.ir")], script);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("at start (seq 0)\n"), "{text}");
    assert!(text.contains("breakpoint 1 at main#2 (line 3)"), "{text}");
    assert!(text.contains("suspended at main#2 (line 3), in={x} [breakpoint 1, seq 7]"), "{text}");
    assert!(text.contains("(main#2 it 2) {x}\n"), "{text}");
    assert!(text.contains("(main#2 it 2) {}\n"), "{text}");
    assert!(text.contains("unknown command `frobnicate`\ncommands:"), "{text}");
    assert!(text.contains("error: line 99 holds no unit"), "{text}");
}

#[test]
fn documented_examples() {
    let o = flowscope(&["debug", &corpus_file("leak.ir")], "b 3\nc\nc\np main#1->main#2\n");
    assert!(stdout(&o).contains("(flowscope) {x}\n"), "{}", stdout(&o));

    let o = flowscope(&["localize", &corpus_file("passthrough.ir"), "taint", "taint-bug3"], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("unit main#1 (line 2: b = a)"), "{}", stdout(&o));

    // only calls to primitives, no edges between methods
    let cg = stdout(&flowscope(&["export", &corpus_file("leak.ir"), "--target", "callgraph"], ""));
    assert!(!cg.contains("\"main\" -> \"main\""));
    assert_eq!(cg.matches(" -> ").count(), 4);

    let plain = stdout(&flowscope(&["export", &corpus_file("leak.ir")], ""));
    assert!(plain.contains("\"main#1\" -> \"main#2\";\n"), "{plain}");
}

#[test]
fn localize_matches_corpus_readme() {
    let readme = fs::read_to_string(corpus_file("README.md")).unwrap();
    for bug in SeededBug::ALL {
        let name = bug.analysis_name();
        let expected = readme
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{name}  ")))
            .unwrap_or_else(|| panic!("{name} missing from README"));
        let o = flowscope(&["localize", &corpus_file(bug.demo_program()), "taint", &name], "");
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert_eq!(stdout(&o).lines().next(), Some(expected), "{name}");
    }
}

fn repl(source: &str) -> Repl {
    let registry = Registry::with_builtins(TaintConfig::default());
    let s = DebugSession::load(source, "taint", &registry, SessionConfig::default()).unwrap();
    Repl::new(s, registry)
}

fn exec(r: &mut Repl, line: &str) -> String {
    match r.execute(line).unwrap() {
        Outcome::Continue(text) => text,
        Outcome::Quit => panic!("quit"),
    }
}

#[test]
fn repl_steps_and_rewinds() {
    let mut r = repl(corpus::LOOP);
    let first = exec(&mut r, "s");
    assert!(first.starts_with("suspended at main#0 (line 1), in={} [step transfer, seq 1]"), "{first}");
    exec(&mut r, "s to-fixpoint");
    assert!(r.session().is_finished());
    assert_eq!(exec(&mut r, "rw 1"), first.replace("step transfer", "rewind"));
    assert!(r.execute("s sideways").is_err());
    assert!(r.execute("rw 100000").is_err());
    assert!(matches!(r.execute("q").unwrap(), Outcome::Quit));
}

#[test]
fn repl_history_and_diverge() {
    let mut r = repl(corpus::LOOP);
    exec(&mut r, "s to-fixpoint");
    let h = exec(&mut r, "hist main#10->main#4");
    assert_eq!(h.lines().count(), 4, "{h}");
    assert!(h.ends_with("{x, y, z}"), "{h}");

    let mut r = repl(corpus::MIX);
    let d = exec(&mut r, "diverge taint-bug2");
    assert!(d.starts_with("first divergence at seq"), "{d}");
    assert!(d.contains("unit main#2"), "{d}");
    // the live session did not move
    assert_eq!(r.session().seq(), 0);
}

/// The REPL's `p` and the protocol's inspectEdge agree at a breakpoint.
#[test]
fn repl_and_protocol_agree() {
    let mut r = repl(corpus::BRANCH);
    exec(&mut r, "b main#8");
    exec(&mut r, "c");
    let edges: Vec<String> = r
        .session()
        .cfg("main")
        .unwrap()
        .edges
        .iter()
        .map(|e| e.to_string())
        .collect();

    let mut requests = vec![
        json!({"id": 0, "op": "load", "args": {"program": corpus::BRANCH}}),
        json!({"id": 0, "op": "setBreakpoint", "args": {"kind": "unit", "unit": "main#8"}}),
        json!({"id": 0, "op": "resume"}),
    ];
    for (i, e) in edges.iter().enumerate() {
        requests.push(json!({"id": format!("e{i}"), "op": "inspectEdge", "args": {"edge": e}}));
    }
    let input: String = requests.iter().map(|r| format!("{r}\n")).collect();
    let o = flowscope(&["serve", "--stdio"], &input);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let responses: Vec<Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .filter(|v: &Value| v["id"].as_str().is_some_and(|id| id.starts_with('e')))
        .collect();
    assert_eq!(responses.len(), edges.len());
    for (e, resp) in edges.iter().zip(&responses) {
        assert_eq!(resp["body"]["facts"]["text"], exec(&mut r, &format!("p {e}")), "{e}");
    }
}

#[test]
fn serve_stdio_reports_malformed_lines() {
    let o = flowscope(&["serve", "--stdio"], "{\"id\": 1, \"op\": }\n");
    let v: Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(v["ok"], false);
    assert_eq!(v["error"]["code"], "parse");
    assert_eq!(v["error"]["offset"], 16);
}

#[test]
fn corpus_files_on_disk_match_embedded() {
    for (name, src) in corpus::PROGRAMS {
        let path: PathBuf = corpus_file(name).into();
        assert_eq!(fs::read_to_string(path).unwrap(), src, "{name}");
    }
}

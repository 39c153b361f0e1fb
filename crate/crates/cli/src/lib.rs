//! The `flowscope` command line.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use flowscope_core::corpus;
use flowscope_core::dataflow::{AnalysisDef, Direction, Leak, Registry, SolverConfig, TaintConfig};
use flowscope_core::debug::{localize, DebugSession, SessionConfig};
use flowscope_core::dot::export_dot;
use flowscope_core::ir::{build_call_graph, parse_program, Program};
use flowscope_core::protocol::{serve_stdio, serve_tcp, Server, DEFAULT_PORT};

pub mod repl;

#[derive(Parser, Debug)]
#[command(name = "flowscope", version, about = "Run, inspect and debug data-flow analyses")]
pub struct Cli {
    /// Write a sample taint config and IR program into DIR, then exit.
    #[arg(long, value_name = "DIR")]
    pub init: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(clap::Args, Debug, Clone)]
pub struct AnalysisArgs {
    #[arg(long, default_value = "taint")]
    pub analysis: String,
    /// Source/sink/sanitizer list replacing the defaults.
    #[arg(long, value_name = "PATH")]
    pub taint_config: Option<PathBuf>,
    /// Method to solve first (defaults to `main`).
    #[arg(long)]
    pub entry: Option<String>,
    /// Transfers allowed per method before the solver gives up.
    #[arg(long, default_value_t = SolverConfig::default().budget)]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    /// Canonical event log followed by the leak report.
    Lines,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Cfg,
    Callgraph,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve to fixpoint and print per-unit facts and leaks.
    Run {
        program: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Interactive debugger.
    Debug {
        program: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Write a CFG or call graph as DOT.
    Export {
        program: PathBuf,
        #[arg(long, value_enum, default_value_t = Target::Cfg)]
        target: Target,
        /// Label CFG edges with fixpoint facts.
        #[arg(long)]
        decorate: bool,
        /// Method whose CFG to export (defaults to the entry).
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Serve the JSON protocol over TCP or stdio.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long)]
        stdio: bool,
        #[arg(long, value_name = "PATH")]
        taint_config: Option<PathBuf>,
    },
    /// Report the first event where two analyses disagree.
    Localize {
        program: PathBuf,
        correct: String,
        buggy: String,
        #[arg(long, value_name = "PATH")]
        taint_config: Option<PathBuf>,
        #[arg(long)]
        entry: Option<String>,
    },
}

/// Exit status: 0 clean, 1 findings (leaks, divergence), 2 errors.
pub fn main_with(cli: Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(findings) => ExitCode::from(u8::from(findings)),
        Err(e)
            if e
                .downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    if let Some(dir) = &cli.init {
        init(dir)?;
        println!("wrote {0}/taint.cfg and {0}/sample.ir", dir.display());
        return Ok(false);
    }
    let Some(command) = cli.command else {
        bail!("no subcommand given (try --help)");
    };
    let mut stdout = io::stdout();
    match command {
        Command::Run {
            program,
            analysis,
            format,
        } => {
            let mut session = open_session(&program, &analysis)?;
            session.run_to_end()?;
            if let Some(e) = session.events().iter().find(|e| e.kind_name() == "budget_exceeded") {
                bail!(
                    "analysis did not converge on `{}` within {} transfers",
                    e.method(),
                    analysis.budget
                );
            }
            let leaks = if session.analysis().taint_config().is_some() {
                session.leaks()?
            } else {
                Vec::new()
            };
            match format {
                Format::Text => write!(stdout, "{}", render_results(&session))?,
                Format::Lines => write!(stdout, "{}", session.render_log())?,
            }
            write!(stdout, "{}", render_leaks(session.program(), &leaks))?;
            Ok(!leaks.is_empty())
        }
        Command::Debug { program, analysis } => {
            let registry = registry(analysis.taint_config.as_deref())?;
            let session = open_session(&program, &analysis)?;
            let mut repl = repl::Repl::new(session, registry);
            repl.run(io::stdin().lock(), &mut stdout)?;
            Ok(false)
        }
        Command::Export {
            program,
            target,
            decorate,
            method,
            out,
            analysis,
        } => {
            let dot = export(&program, target, decorate, method.as_deref(), &analysis)?;
            match out {
                Some(path) => fs::write(&path, dot)
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => stdout.write_all(dot.as_bytes())?,
            }
            Ok(false)
        }
        Command::Serve {
            port,
            stdio,
            taint_config,
        } => {
            let server = Arc::new(Server::new(registry(taint_config.as_deref())?));
            if stdio {
                serve_stdio(server)?;
            } else {
                let listener = TcpListener::bind(("127.0.0.1", port))
                    .with_context(|| format!("cannot bind port {port}"))?;
                eprintln!("listening on {}", listener.local_addr()?);
                serve_tcp(server, listener)?;
            }
            Ok(false)
        }
        Command::Localize {
            program,
            correct,
            buggy,
            taint_config,
            entry,
        } => {
            let registry = registry(taint_config.as_deref())?;
            let parsed = load_program(&program)?;
            let config = SessionConfig {
                entry,
                ..SessionConfig::default()
            };
            let found = localize(
                &parsed,
                analysis(&registry, &correct)?,
                analysis(&registry, &buggy)?,
                &config,
            )?;
            match found {
                None => {
                    writeln!(stdout, "no divergence")?;
                    Ok(false)
                }
                Some(d) => {
                    let at = d
                        .unit()
                        .and_then(|id| parsed.unit(id))
                        .map(|u| format!("{} (line {}: {})", u.id, u.source_line, u.text()))
                        .unwrap_or_else(|| "end of log".into());
                    writeln!(stdout, "first divergence at seq {}, unit {at}", d.seq)?;
                    let show = |e: &Option<_>| {
                        e.as_ref()
                            .map(|e: &flowscope_core::DebugEvent| e.render())
                            .unwrap_or_else(|| "(log ended)".into())
                    };
                    writeln!(stdout, "  {correct}: {}", show(&d.left))?;
                    writeln!(stdout, "  {buggy}: {}", show(&d.right))?;
                    Ok(true)
                }
            }
        }
    }
}

pub fn read_source(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => anyhow::anyhow!("{}: no such file", path.display()),
        _ => anyhow::Error::new(e).context(format!("cannot read {}", path.display())),
    })
}

pub fn load_program(path: &Path) -> Result<Program> {
    let source = read_source(path)?;
    parse_program(&source).with_context(|| format!("{}", path.display()))
}

pub fn registry(taint_config: Option<&Path>) -> Result<Registry> {
    let config = match taint_config {
        Some(path) => TaintConfig::parse(&read_source(path)?)
            .with_context(|| format!("{}", path.display()))?,
        None => TaintConfig::default(),
    };
    Ok(Registry::with_builtins(config))
}

pub fn analysis(registry: &Registry, name: &str) -> Result<Arc<dyn AnalysisDef>> {
    registry.get(name).map_err(|e| {
        let names: Vec<&str> = registry.names().collect();
        anyhow::anyhow!("{e} (known: {})", names.join(", "))
    })
}

pub fn open_session(path: &Path, args: &AnalysisArgs) -> Result<DebugSession> {
    let program = load_program(path)?;
    let analysis = analysis(&registry(args.taint_config.as_deref())?, &args.analysis)?;
    let config = SessionConfig {
        entry: args.entry.clone(),
        solver: SolverConfig {
            budget: args.budget,
            ..SolverConfig::default()
        },
    };
    Ok(DebugSession::start(program, analysis, config)?)
}

/// One line per unit with the facts before and after it.
pub fn render_results(session: &DebugSession) -> String {
    let forward = session.analysis().direction() == Direction::Forward;
    let mut text = String::new();
    for method in &session.program().methods {
        text += &format!("method {}\n", method.name);
        for unit in &method.units {
            let input = session.unit_input(&unit.id).expect("unit exists");
            let out = session.analysis().flow(unit, &input).render();
            let (before, after) = if forward {
                (input.render(), out)
            } else {
                (out, input.render())
            };
            text += &format!("  {}: {}  before={before} after={after}\n", unit.id, unit.text());
        }
    }
    text
}

/// `main#2: sink(x) receives tainted {x}`, one line per sink unit.
pub fn render_leaks(program: &Program, leaks: &[Leak]) -> String {
    let mut by_unit: BTreeMap<_, Vec<&str>> = BTreeMap::new();
    for l in leaks {
        by_unit.entry(&l.unit).or_default().push(&l.variable);
    }
    by_unit
        .into_iter()
        .map(|(id, vars)| {
            let text = program.unit(id).map(|u| u.text()).unwrap_or_default();
            format!("{id}: {text} receives tainted {{{}}}\n", vars.join(", "))
        })
        .collect()
}

pub fn export(
    path: &Path,
    target: Target,
    decorate: bool,
    method: Option<&str>,
    args: &AnalysisArgs,
) -> Result<String> {
    match target {
        Target::Callgraph => {
            if decorate {
                bail!("--decorate applies to CFG exports only");
            }
            let program = load_program(path)?;
            Ok(export_dot(&program, &build_call_graph(&program), &BTreeMap::new())?)
        }
        Target::Cfg => {
            let mut session = open_session(path, args)?;
            let name = method.unwrap_or(&session.program().entry).to_string();
            let cfg = session
                .cfg(&name)
                .with_context(|| format!("no method `{name}`"))?
                .clone();
            let mut decorations = BTreeMap::new();
            if decorate {
                session.run_to_end()?;
                for (edge, _, facts) in session.edge_facts(&name) {
                    decorations.insert(edge, facts.render());
                }
            }
            Ok(export_dot(session.program(), &cfg, &decorations)?)
        }
    }
}

fn init(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let files = [("taint.cfg", corpus::TAINT_CONFIG), ("sample.ir", corpus::LEAK)];
    for (name, _) in files {
        let path = dir.join(name);
        if path.exists() {
            bail!("{} already exists", path.display());
        }
    }
    for (name, text) in files {
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

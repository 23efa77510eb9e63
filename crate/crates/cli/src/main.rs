use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spectec_core::corpus::minwast::CommandKind;
use spectec_core::corpus::{builtin_sources, builtin_suite, parse_test_script};
use spectec_core::diag::{Diagnostic, Severity};
use spectec_core::harness::run_scripts;
use spectec_core::pipeline::{animate_sources, check, interpreter, Animated, Checked};
use spectec_core::render::{render_latex, ProseDoc, ProseStyle};
use spectec_core::runtime::wasm::validate;
use spectec_core::runtime::{Store, TrapResult};
use spectec_core::span::SourceMap;

mod inputs;

use inputs::{load_scripts, load_spec};

#[derive(Parser)]
#[command(
    name = "spectec",
    version,
    about = "Check a specification and generate LaTeX, prose and an interpreter from it"
)]
struct Cli {
    /// Diagnostic output format.
    #[arg(long, value_enum, global = true, default_value_t = DiagFormat::Human)]
    diagnostics: DiagFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiagFormat {
    Human,
    /// One JSON object per line.
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProseFormat {
    Rst,
    Plain,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and elaborate.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Render LaTeX.
    Latex {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Render prose pseudocode.
    Prose {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ProseFormat::Rst)]
        format: ProseFormat,
    },
    /// Animate reduction rules into algorithms.
    Animate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Print every algorithm in full instead of the list of headers.
        #[arg(long)]
        dump_al: bool,
    },
    /// Execute one invocation against the last module of a script.
    Run {
        /// Spec paths; the built-in corpus when omitted.
        #[arg(long)]
        spec: Vec<PathBuf>,
        /// A `.minwast` file containing a module.
        module: PathBuf,
        /// For example `(invoke "add" (i32.const 1) (i32.const 2))`.
        invoke: String,
    },
    /// Run conformance scripts.
    Test {
        /// Spec paths; the built-in corpus when omitted.
        #[arg(long)]
        spec: Vec<PathBuf>,
        /// Scripts or directories. Defaults to the suite of the spec's manifest.
        tests: Vec<PathBuf>,
        /// Print the report as one JSON document.
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// Why a command did not succeed, and its exit code.
pub enum Failure {
    /// Check or test failures; already reported.
    Failed,
    /// Usage or infrastructure error.
    Usage(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }
}

struct Output {
    format: DiagFormat,
    color: bool,
}

fn color_setting() -> Result<bool, Failure> {
    match std::env::var("SPECTEC_COLOR").as_deref() {
        Ok("never") => Ok(false),
        Ok("always") => Ok(true),
        Ok("auto") | Err(_) => Ok(std::io::stderr().is_terminal()),
        Ok(other) => Err(Failure::usage(format!(
            "SPECTEC_COLOR must be `never`, `auto` or `always`, not `{other}`"
        ))),
    }
}

impl Output {
    fn diagnostics(&self, sources: &SourceMap, diags: &[Diagnostic]) {
        let mut err = std::io::stderr().lock();
        for d in diags {
            let line = match self.format {
                DiagFormat::Json => serde_json::to_string(&d.to_json_record(sources)).expect("records serialize"),
                DiagFormat::Human if self.color => {
                    let colored = match d.severity {
                        Severity::Error => "\x1b[1;31merror\x1b[0m",
                        Severity::Warning => "\x1b[1;33mwarning\x1b[0m",
                    };
                    d.render(sources)
                        .replacen(&format!(" {}[", d.severity), &format!(" {colored}["), 1)
                }
                DiagFormat::Human => d.render(sources),
            };
            let _ = writeln!(err, "{line}");
        }
    }

    fn checked(&self, sources: &SourceMap) -> Result<Checked, Failure> {
        match check(sources) {
            Ok(c) => {
                self.diagnostics(sources, &c.warnings);
                Ok(c)
            }
            Err(diags) => {
                self.diagnostics(sources, &diags);
                Err(Failure::Failed)
            }
        }
    }

    fn animated(&self, sources: &SourceMap) -> Result<Animated, Failure> {
        match animate_sources(sources) {
            Ok(a) => {
                self.diagnostics(sources, &a.checked.warnings);
                Ok(a)
            }
            Err(diags) => {
                self.diagnostics(sources, &diags);
                Err(Failure::Failed)
            }
        }
    }
}

fn write_artifact(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write `{}`: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::usage(format!("cannot write output: {e}")))
        }
    }
}

/// Sources for `run` and `test`, where spec errors are infrastructure errors.
fn spec_or_builtin(spec: &[PathBuf]) -> Result<(SourceMap, Option<Vec<PathBuf>>), Failure> {
    if spec.is_empty() {
        Ok((builtin_sources(), None))
    } else {
        let input = load_spec(spec)?;
        Ok((input.sources, Some(input.suite)))
    }
}

fn build_interpreter(out: &Output, sources: &SourceMap) -> Result<spectec_core::runtime::Interpreter, Failure> {
    interpreter(sources).map_err(|diags| {
        out.diagnostics(sources, &diags);
        Failure::usage("the specification does not animate")
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = Output {
        format: cli.diagnostics,
        color: color_setting()?,
    };
    match cli.command {
        Command::Check { paths } => {
            let input = load_spec(&paths)?;
            out.checked(&input.sources)?;
            Ok(())
        }
        Command::Latex { paths, out: file } => {
            let input = load_spec(&paths)?;
            let checked = out.checked(&input.sources)?;
            let doc = render_latex(&checked);
            out.diagnostics(&input.sources, &doc.warnings);
            write_artifact(file.as_deref(), &doc.to_tex())
        }
        Command::Prose {
            paths,
            out: file,
            format,
        } => {
            let input = load_spec(&paths)?;
            let a = out.animated(&input.sources)?;
            let style = match format {
                ProseFormat::Rst => ProseStyle::Rst,
                ProseFormat::Plain => ProseStyle::Plain,
            };
            write_artifact(file.as_deref(), &ProseDoc::from_program(&a.al).render(style))
        }
        Command::Animate {
            paths,
            out: file,
            dump_al,
        } => {
            let input = load_spec(&paths)?;
            let a = out.animated(&input.sources)?;
            let text = if dump_al {
                a.al.dump()
            } else {
                a.al.algorithms.iter().map(|x| format!("{}\n", x.header())).collect()
            };
            write_artifact(file.as_deref(), &text)
        }
        Command::Run { spec, module, invoke } => {
            let (sources, _) = spec_or_builtin(&spec)?;
            let interp = build_interpreter(&out, &sources)?;
            let text = fs::read_to_string(&module)
                .map_err(|e| Failure::usage(format!("cannot read `{}`: {e}", module.display())))?;
            let lines = text.lines().count() as u32;
            let script = parse_test_script(&format!("{text}\n{invoke}")).map_err(|e| {
                if e.line > lines {
                    Failure::usage(format!("invoke:{}: {}", e.col, e.message))
                } else {
                    Failure::usage(format!("{}:{e}", module.display()))
                }
            })?;
            let mut current = None;
            let mut last = None;
            for cmd in &script.commands {
                match &cmd.kind {
                    CommandKind::Module(m) => current = Some(m),
                    CommandKind::Invoke(inv) if cmd.line > lines => last = Some(inv),
                    _ => {}
                }
            }
            let (Some(m), Some(inv)) = (current, last) else {
                return Err(Failure::usage("expected a module and one `(invoke ...)`"));
            };
            validate(m).map_err(|e| Failure::usage(format!("{}: invalid module: {e}", module.display())))?;
            let mut store = Store::instantiate(m);
            let result = interp
                .invoke(&mut store, m.exports[&inv.name], &inv.args)
                .map_err(|e| Failure::usage(e.to_string()))?;
            match result {
                TrapResult::Trap => println!("trap"),
                TrapResult::Values(vs) => vs.iter().for_each(|v| println!("{v}")),
            }
            Ok(())
        }
        Command::Test {
            spec,
            tests,
            json,
            jobs,
        } => {
            let (sources, suite) = spec_or_builtin(&spec)?;
            let interp = build_interpreter(&out, &sources)?;
            let scripts = match (tests.is_empty(), suite) {
                (false, _) => load_scripts(&tests)?,
                (true, Some(suite)) => load_scripts(&suite)?,
                (true, None) => builtin_suite(),
            };
            if scripts.is_empty() {
                return Err(Failure::usage("no test scripts"));
            }
            let report = run_scripts(&interp, &scripts, jobs).map_err(|e| Failure::usage(e.to_string()))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            } else {
                for f in &report.files {
                    for x in &f.failures {
                        println!("FAIL {}:{}: {} {}", f.path, x.line, x.command, x.invoke);
                        println!("  expected: {}", x.expected);
                        println!("  actual:   {}", x.actual);
                    }
                }
                println!("{}", report.summary_line());
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Failed)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

//! Runs conformance scripts against the interpreter and collects a report.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::minwast::{CommandKind, Expected, Invoke, TestScript};
use crate::runtime::wasm::validate;
use crate::runtime::{Interpreter, Store, TrapResult};

/// Version of the JSON report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub passed: usize,
    pub failed: usize,
    pub total: usize,
    pub wall_time_ms: f64,
    pub files: Vec<FileReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileReport {
    pub path: String,
    pub passed: usize,
    pub failed: usize,
    /// Passing `assert_trap` commands, also counted in `passed`.
    pub trapped_as_expected: usize,
    pub total: usize,
    pub wall_time_ms: f64,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    /// Zero-based position of the command in its script.
    pub command_index: usize,
    pub line: u32,
    pub command: String,
    pub invoke: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("{path}:{line}: invalid module: {message}")]
    InvalidModule { path: String, line: u32, message: String },
}

impl RunReport {
    pub fn summary_line(&self) -> String {
        format!(
            "{}/{} assertions passed in {:.3}s",
            self.passed,
            self.total,
            self.wall_time_ms / 1000.0
        )
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

fn show_result(r: &TrapResult) -> String {
    match r {
        TrapResult::Trap => "trap".into(),
        TrapResult::Values(vs) if vs.is_empty() => "no values".into(),
        TrapResult::Values(vs) => vs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "),
    }
}

fn show_expected(es: &[Expected]) -> String {
    if es.is_empty() {
        "no values".into()
    } else {
        es.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    }
}

/// Runs one script. Modules are validated before use; an invalid module
/// aborts the script.
pub fn run_script(interp: &Interpreter, path: &str, script: &TestScript) -> Result<FileReport, HarnessError> {
    let start = Instant::now();
    let mut report = FileReport {
        path: path.to_string(),
        passed: 0,
        failed: 0,
        trapped_as_expected: 0,
        total: 0,
        wall_time_ms: 0.0,
        failures: vec![],
    };
    let mut current: Option<(Store, indexmap::IndexMap<String, u32>)> = None;
    let call = |current: &mut Option<(Store, indexmap::IndexMap<String, u32>)>, inv: &Invoke| {
        let (store, exports) = current.as_mut().expect("parser ensures a module precedes invokes");
        let idx = exports[&inv.name];
        interp.invoke(store, idx, &inv.args)
    };
    for (i, cmd) in script.commands.iter().enumerate() {
        let (inv, outcome, expected) = match &cmd.kind {
            CommandKind::Module(m) => {
                validate(m).map_err(|e| HarnessError::InvalidModule {
                    path: path.to_string(),
                    line: cmd.line,
                    message: e.to_string(),
                })?;
                current = Some((Store::instantiate(m), m.exports.clone()));
                continue;
            }
            CommandKind::Invoke(inv) => {
                let _ = call(&mut current, inv);
                continue;
            }
            CommandKind::AssertReturn { invoke, expected } => {
                let r = call(&mut current, invoke);
                let ok = matches!(&r, Ok(TrapResult::Values(vs))
                    if vs.len() == expected.len() && vs.iter().zip(expected).all(|(v, e)| e.matches(*v)));
                (invoke, r.map(|r| (ok, r)), show_expected(expected))
            }
            CommandKind::AssertTrap { invoke, .. } => {
                let r = call(&mut current, invoke);
                let ok = matches!(r, Ok(TrapResult::Trap));
                if ok {
                    report.trapped_as_expected += 1;
                }
                (invoke, r.map(|r| (ok, r)), "trap".to_string())
            }
        };
        report.total += 1;
        match outcome {
            Ok((true, _)) => report.passed += 1,
            outcome => {
                report.failed += 1;
                let actual = match outcome {
                    Ok((_, r)) => show_result(&r),
                    Err(e) => format!("error: {e}"),
                };
                report.failures.push(Failure {
                    command_index: i,
                    line: cmd.line,
                    command: cmd.kind.name().to_string(),
                    invoke: inv.to_string(),
                    expected,
                    actual,
                });
            }
        }
    }
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1000.0;
    Ok(report)
}

/// Runs scripts on up to `jobs` threads, one file per task. The report lists
/// files in input order whatever the scheduling.
pub fn run_scripts(
    interp: &Interpreter,
    scripts: &[(String, TestScript)],
    jobs: usize,
) -> Result<RunReport, HarnessError> {
    let start = Instant::now();
    let jobs = jobs.clamp(1, scripts.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<FileReport, HarnessError>>> = vec![None; scripts.len()];
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some((path, script)) = scripts.get(i) else { break };
                let r = run_script(interp, path, script);
                results.lock().expect("no worker panics")[i] = Some(r);
            });
        }
    });
    let files = slots
        .into_iter()
        .map(|r| r.expect("every file ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = files.iter().map(|f| f.passed).sum();
    let failed = files.iter().map(|f| f.failed).sum();
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        passed,
        failed,
        total: passed + failed,
        wall_time_ms: start.elapsed().as_secs_f64() * 1000.0,
        files,
    })
}

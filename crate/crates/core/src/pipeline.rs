//! Stage drivers shared by the CLI, the harness and the tests.

use crate::al::{animate, AlProgram};
use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::el::ast::ElScript;
use crate::el::lexer::tokenize;
use crate::el::parser::parse_script;
use crate::il::{elaborate, IlScript};
use crate::runtime::Interpreter;
use crate::span::SourceMap;

/// Lexes and parses every file of `sources`, concatenating the definitions in
/// file order.
pub fn parse_sources(sources: &SourceMap) -> Result<ElScript, Vec<Diagnostic>> {
    let mut script = ElScript::default();
    let mut diags = Vec::new();
    for (id, file) in sources.files() {
        match tokenize(&file.text, id) {
            Ok(tokens) => match parse_script(&tokens) {
                Ok(s) => script.defs.extend(s.defs),
                Err(errs) => diags.extend(
                    errs.into_iter()
                        .map(|e| Diagnostic::error(codes::PARSE, e.span, e.to_string())),
                ),
            },
            Err(errs) => diags.extend(
                errs.into_iter()
                    .map(|e| Diagnostic::error(codes::LEX, e.span, format!("unexpected character `{}`", e.ch))),
            ),
        }
    }
    if diags.is_empty() {
        Ok(script)
    } else {
        sort_diagnostics(&mut diags);
        Err(diags)
    }
}

/// Output of the checking stages.
#[derive(Clone, Debug)]
pub struct Checked {
    pub el: ElScript,
    pub il: IlScript,
    pub warnings: Vec<Diagnostic>,
}

/// Parses and elaborates.
pub fn check(sources: &SourceMap) -> Result<Checked, Vec<Diagnostic>> {
    let el = parse_sources(sources)?;
    let e = elaborate(&el)?;
    Ok(Checked {
        el,
        il: e.script,
        warnings: e.warnings,
    })
}

/// Output of checking and animation.
pub struct Animated {
    pub checked: Checked,
    pub al: AlProgram,
}

/// Parses, elaborates and animates.
pub fn animate_sources(sources: &SourceMap) -> Result<Animated, Vec<Diagnostic>> {
    let checked = check(sources)?;
    let al = animate(&checked.il).map_err(|errs| errs.iter().map(|e| e.to_diagnostic()).collect::<Vec<_>>())?;
    Ok(Animated { checked, al })
}

/// An interpreter for the algorithms extracted from `sources`.
pub fn interpreter(sources: &SourceMap) -> Result<Interpreter, Vec<Diagnostic>> {
    let a = animate_sources(sources)?;
    Ok(Interpreter::new(&a.checked.il, a.al))
}

/// The interpreter for the embedded corpus.
pub fn builtin_interpreter() -> Interpreter {
    interpreter(&crate::corpus::builtin_sources()).expect("embedded corpus animates")
}

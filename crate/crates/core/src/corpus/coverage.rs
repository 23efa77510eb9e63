//! Mechanical checks tying the manifest, the animated algorithms and the
//! conformance suite together.

use std::collections::BTreeSet;

use indexmap::IndexMap;

use crate::al::AlProgram;
use crate::corpus::manifest::Manifest;
use crate::corpus::minwast::{CommandKind, TestScript};
use crate::runtime::wasm::{Instr, Module};

/// Differences between the covered instruction list and the instructions
/// that have an execution algorithm (administrative forms excluded).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Completeness {
    pub listed_without_algorithm: Vec<String>,
    pub animated_but_unlisted: Vec<String>,
}

impl Completeness {
    pub fn is_complete(&self) -> bool {
        self.listed_without_algorithm.is_empty() && self.animated_but_unlisted.is_empty()
    }
}

pub fn completeness(manifest: &Manifest, al: &AlProgram) -> Completeness {
    let listed: BTreeSet<&str> = manifest.instructions.iter().map(String::as_str).collect();
    let animated: BTreeSet<&str> = al
        .instr_names()
        .filter(|n| !manifest.administrative.iter().any(|a| a == n))
        .collect();
    Completeness {
        listed_without_algorithm: listed.difference(&animated).map(|s| s.to_string()).collect(),
        animated_but_unlisted: animated.difference(&listed).map(|s| s.to_string()).collect(),
    }
}

/// Specification constructor of an instruction, e.g. `BINOP`.
pub fn constructor_name(i: &Instr) -> &'static str {
    match i {
        Instr::Const(_) => "CONST",
        Instr::Unop(..) => "UNOP",
        Instr::Binop(..) => "BINOP",
        Instr::Testop(..) => "TESTOP",
        Instr::Relop(..) => "RELOP",
        Instr::Nop => "NOP",
        Instr::Unreachable => "UNREACHABLE",
        Instr::Drop => "DROP",
        Instr::Select => "SELECT",
        Instr::LocalGet(_) => "LOCAL.GET",
        Instr::LocalSet(_) => "LOCAL.SET",
        Instr::LocalTee(_) => "LOCAL.TEE",
        Instr::GlobalGet(_) => "GLOBAL.GET",
        Instr::GlobalSet(_) => "GLOBAL.SET",
        Instr::Block(..) => "BLOCK",
        Instr::Loop(..) => "LOOP",
        Instr::If(..) => "IF",
        Instr::Br(_) => "BR",
        Instr::BrIf(_) => "BR_IF",
        Instr::Return => "RETURN",
        Instr::Call(_) => "CALL",
    }
}

/// Text-format name of a numeric operator instruction, e.g. `i32.add`.
pub fn operator_name(i: &Instr) -> Option<String> {
    match i {
        Instr::Unop(t, o) | Instr::Binop(t, o) | Instr::Testop(t, o) | Instr::Relop(t, o) => Some(format!("{t}.{o}")),
        _ => None,
    }
}

fn collect(body: &[Instr], m: &Module, seen_funcs: &mut BTreeSet<u32>, out: &mut BTreeSet<String>) {
    for i in body {
        out.insert(constructor_name(i).to_string());
        if let Some(op) = operator_name(i) {
            out.insert(op);
        }
        match i {
            Instr::Block(_, b) | Instr::Loop(_, b) => collect(b, m, seen_funcs, out),
            Instr::If(_, a, b) => {
                collect(a, m, seen_funcs, out);
                collect(b, m, seen_funcs, out);
            }
            Instr::Call(x) if seen_funcs.insert(*x) => {
                if let Some(f) = m.funcs.get(*x as usize) {
                    collect(&f.body, m, seen_funcs, out);
                }
            }
            _ => {}
        }
    }
}

/// For each instruction constructor and numeric operator, the number of
/// assertions whose invoked function (or a function it calls) contains it.
pub fn assertion_coverage<'a>(scripts: impl IntoIterator<Item = &'a TestScript>) -> IndexMap<String, usize> {
    let mut counts: IndexMap<String, usize> = IndexMap::new();
    for script in scripts {
        let mut module: Option<&Module> = None;
        for cmd in &script.commands {
            let inv = match &cmd.kind {
                CommandKind::Module(m) => {
                    module = Some(m);
                    continue;
                }
                CommandKind::Invoke(_) => continue,
                CommandKind::AssertReturn { invoke, .. } | CommandKind::AssertTrap { invoke, .. } => invoke,
            };
            let Some(m) = module else { continue };
            let Some(&idx) = m.exports.get(&inv.name) else { continue };
            let mut seen = BTreeSet::from([idx]);
            let mut used = BTreeSet::new();
            collect(&m.funcs[idx as usize].body, m, &mut seen, &mut used);
            for name in used {
                *counts.entry(name).or_default() += 1;
            }
        }
    }
    counts.sort_keys();
    counts
}

//! Def-before-use checking of algorithms.

use std::collections::HashSet;
use std::fmt;

use crate::al::ast::*;
use crate::el::ast::Ident;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoundnessError {
    pub algorithm: String,
    pub message: String,
}

impl fmt::Display for SoundnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.algorithm, self.message)
    }
}

impl std::error::Error for SoundnessError {}

/// Variables a pattern binds, and the ones it must read (inside applications
/// and lengths, or as the count of a `^n` run already fixed).
fn pattern_vars(p: &AlExpr, bound: &HashSet<Ident>, binds: &mut Vec<Ident>, reads: &mut Vec<Ident>) {
    match p {
        AlExpr::Name(x) => {
            if !bound.contains(x) && !binds.contains(x) {
                binds.push(x.clone());
            }
        }
        AlExpr::Nat(_) | AlExpr::CurrentState | AlExpr::CurrentContext(_) => {}
        AlExpr::App(..) | AlExpr::Length(_) => reads.extend(p.names()),
        AlExpr::List(es) | AlExpr::Construct(_, es) | AlExpr::Cat(es) | AlExpr::Tuple(es) => {
            es.iter().for_each(|e| pattern_vars(e, bound, binds, reads))
        }
        AlExpr::Iter(b, _, it) => {
            pattern_vars(b, bound, binds, reads);
            if let AlIter::Pow(n) = it {
                pattern_vars(n, bound, binds, reads);
            }
        }
    }
}

struct Checker<'a> {
    algo: &'a AlAlgorithm,
    errors: Vec<SoundnessError>,
}

impl Checker<'_> {
    fn fail(&mut self, message: String) {
        self.errors.push(SoundnessError {
            algorithm: self.algo.header(),
            message,
        });
    }

    fn read(&mut self, e: &AlExpr, bound: &HashSet<Ident>, what: &str) {
        for x in e.names() {
            if !bound.contains(&x) {
                self.fail(format!("`{x}` is read by {what} before it is bound"));
            }
        }
    }

    fn bind(&mut self, p: &AlExpr, bound: &mut HashSet<Ident>, what: &str) {
        let (mut binds, mut reads) = (Vec::new(), Vec::new());
        pattern_vars(p, bound, &mut binds, &mut reads);
        for x in reads {
            if !bound.contains(&x) {
                self.fail(format!("`{x}` is read by {what} before it is bound"));
            }
        }
        bound.extend(binds);
    }

    fn cond(&mut self, c: &AlCond, bound: &HashSet<Ident>) {
        for e in c.exprs() {
            self.read(e, bound, "a condition");
        }
    }

    fn block(&mut self, body: &[AlInstr], mut bound: HashSet<Ident>) {
        for (i, instr) in body.iter().enumerate() {
            if i > 0 && body[i - 1].is_terminal() {
                self.fail(format!("`{instr}` follows a terminal instruction"));
            }
            match instr {
                AlInstr::Assert(c) => self.cond(c, &bound),
                AlInstr::Pop(p) => {
                    if let AlExpr::Iter(_, _, AlIter::Pow(n)) = p {
                        self.read(n, &bound, "a counted pop");
                    }
                    self.bind(p, &mut bound, "a pop");
                }
                AlInstr::PopAll(p) => self.bind(p, &mut bound, "a pop"),
                AlInstr::Let(p, e) => {
                    self.read(e, &bound, "a let");
                    self.bind(p, &mut bound, "a let pattern");
                }
                AlInstr::If(c, t, e) => {
                    self.cond(c, &bound);
                    self.block(t, bound.clone());
                    self.block(e, bound.clone());
                }
                AlInstr::Push(e) | AlInstr::Execute(e) | AlInstr::Return(Some(e)) => {
                    self.read(e, &bound, "an instruction")
                }
                AlInstr::Perform(_, args) => args.iter().for_each(|a| self.read(a, &bound, "a state update")),
                AlInstr::Trap | AlInstr::Return(None) | AlInstr::Exit(_) | AlInstr::Nop => {}
            }
        }
    }
}

/// Checks that every variable is bound (by a parameter, pop or let) before it
/// is read, and that nothing follows a trap or return.
pub fn check_binding(algo: &AlAlgorithm) -> Result<(), Vec<SoundnessError>> {
    let mut c = Checker {
        algo,
        errors: Vec::new(),
    };
    let mut bound = HashSet::new();
    for p in &algo.params {
        c.bind(p, &mut bound, "a parameter");
    }
    c.block(&algo.body, bound);
    if c.errors.is_empty() {
        Ok(())
    } else {
        Err(c.errors)
    }
}

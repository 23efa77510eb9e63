//! Algorithmic Language: per-instruction imperative algorithms.

use std::fmt::{self, Write as _};

use crate::el::ast::Ident;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlIter {
    List,
    Opt,
    Pow(Box<AlExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlExpr {
    Name(Ident),
    Nat(u64),
    /// Function application; the name has no `$`.
    App(String, Vec<AlExpr>),
    /// Literal list. Options are lists of length at most one.
    List(Vec<AlExpr>),
    Construct(String, Vec<AlExpr>),
    Length(Box<AlExpr>),
    /// `body` mapped over the lists bound to `vars`.
    Iter(Box<AlExpr>, Vec<Ident>, AlIter),
    /// Concatenation of list-valued operands.
    Cat(Vec<AlExpr>),
    Tuple(Vec<AlExpr>),
    /// The current machine state, as seen by state accessor functions.
    CurrentState,
    /// The innermost evaluation context of the given kind, without its body.
    CurrentContext(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpKind {
    Is,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpKind {
    pub fn name(self) -> &'static str {
        match self {
            CmpKind::Is => "is",
            CmpKind::Ne => "ne",
            CmpKind::Lt => "lt",
            CmpKind::Le => "le",
            CmpKind::Gt => "gt",
            CmpKind::Ge => "ge",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlCond {
    Compare(CmpKind, AlExpr, AlExpr),
    /// The top of the stack is a value, of the given number type if present.
    TopValue(Option<AlExpr>),
    /// The stack holds at least this many values.
    TopValues(AlExpr),
    /// The innermost evaluation context has the given kind.
    TopContext(String),
    Not(Box<AlCond>),
    And(Vec<AlCond>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlInstr {
    Assert(AlCond),
    /// Pops values matching the pattern; `Iter` patterns pop a counted run.
    Pop(AlExpr),
    /// Pops every value of the current context.
    PopAll(AlExpr),
    Push(AlExpr),
    Let(AlExpr, AlExpr),
    If(AlCond, Vec<AlInstr>, Vec<AlInstr>),
    Trap,
    Return(Option<AlExpr>),
    /// Schedules the instructions as the next to run.
    Execute(AlExpr),
    /// Leaves the innermost context, discarding its remaining stack and code.
    Exit(String),
    /// Applies a state update function.
    Perform(String, Vec<AlExpr>),
    Nop,
}

impl AlInstr {
    /// Whether control never continues past this instruction.
    pub fn is_terminal(&self) -> bool {
        matches!(self, AlInstr::Trap | AlInstr::Return(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgoKind {
    /// Execution of an instruction, keyed by constructor.
    Instr,
    /// Completion of an evaluation context whose code has run out.
    ContextExit,
    /// An auxiliary function defined by clauses.
    Func,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlAlgorithm {
    pub kind: AlgoKind,
    /// Constructor or function name (without `$`).
    pub name: String,
    pub params: Vec<AlExpr>,
    pub body: Vec<AlInstr>,
    /// Rules (or clause numbers) merged into this algorithm, in source order.
    pub sources: Vec<String>,
}

impl AlAlgorithm {
    pub fn header(&self) -> String {
        let prefix = match self.kind {
            AlgoKind::Instr | AlgoKind::ContextExit => "execution_of_",
            AlgoKind::Func => "definition_of_",
        };
        let mut s = format!("{prefix}{}", self.name);
        for p in &self.params {
            write!(s, " {p}").unwrap();
        }
        s
    }

    /// Multi-line dump in constructor syntax.
    pub fn dump(&self) -> String {
        let mut out = format!("{}:\n", self.header());
        for i in &self.body {
            dump_instr(&mut out, i, 2);
        }
        out
    }
}

fn dump_instr(out: &mut String, i: &AlInstr, indent: usize) {
    let pad = " ".repeat(indent);
    match i {
        AlInstr::If(c, t, e) => {
            writeln!(out, "{pad}IfI(").unwrap();
            writeln!(out, "{pad}  {c},").unwrap();
            dump_block(out, t, indent + 2);
            out.push_str(",\n");
            dump_block(out, e, indent + 2);
            out.push_str(")\n");
        }
        other => writeln!(out, "{pad}{other}").unwrap(),
    }
}

/// `[a\n b]` with continuation lines aligned one past the bracket. No trailing newline.
fn dump_block(out: &mut String, body: &[AlInstr], indent: usize) {
    let pad = " ".repeat(indent);
    if body.is_empty() {
        write!(out, "{pad}[]").unwrap();
        return;
    }
    let mut inner = String::new();
    for i in body {
        dump_instr(&mut inner, i, indent + 1);
    }
    let inner = inner.trim_end_matches('\n');
    // The first line takes the bracket in place of one space of indentation.
    write!(out, "{pad}[{}]", &inner[indent + 1..]).unwrap();
}

fn comma_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for AlIter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlIter::List => f.write_str("*"),
            AlIter::Opt => f.write_str("?"),
            AlIter::Pow(n) => write!(f, "^{n}"),
        }
    }
}

impl fmt::Display for AlExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlExpr::Name(x) => write!(f, "NameE({x})"),
            AlExpr::Nat(n) => write!(f, "{n}"),
            AlExpr::App(name, args) => {
                write!(f, "AppE({name}, [")?;
                comma_list(f, args)?;
                f.write_str("])")
            }
            AlExpr::List(es) => {
                f.write_str("ListE([")?;
                comma_list(f, es)?;
                f.write_str("])")
            }
            AlExpr::Construct(c, es) => {
                write!(f, "ConstructE({c}, [")?;
                comma_list(f, es)?;
                f.write_str("])")
            }
            AlExpr::Length(e) => write!(f, "LengthE({e})"),
            AlExpr::Iter(body, vars, it) => {
                write!(f, "IterE({body}, [")?;
                comma_list(f, vars)?;
                write!(f, "], {it})")
            }
            AlExpr::Cat(es) => {
                f.write_str("CatE([")?;
                comma_list(f, es)?;
                f.write_str("])")
            }
            AlExpr::Tuple(es) => {
                f.write_str("TupleE([")?;
                comma_list(f, es)?;
                f.write_str("])")
            }
            AlExpr::CurrentState => f.write_str("CurrentStateE"),
            AlExpr::CurrentContext(k) => write!(f, "CurrentContextE({k})"),
        }
    }
}

impl fmt::Display for AlCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlCond::Compare(op, a, b) => write!(f, "CompareC({}, {a}, {b})", op.name()),
            AlCond::TopValue(Some(t)) => write!(f, "TopValueC({t})"),
            AlCond::TopValue(None) => f.write_str("TopValueC()"),
            AlCond::TopValues(n) => write!(f, "TopValuesC({n})"),
            AlCond::TopContext(k) => write!(f, "TopContextC({k})"),
            AlCond::Not(c) => write!(f, "NotC({c})"),
            AlCond::And(cs) => {
                f.write_str("AndC([")?;
                comma_list(f, cs)?;
                f.write_str("])")
            }
        }
    }
}

impl fmt::Display for AlInstr {
    /// Single-line form; `dump` lays out `IfI` over several lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlInstr::Assert(c) => write!(f, "AssertI({c})"),
            AlInstr::Pop(e) => write!(f, "PopI({e})"),
            AlInstr::PopAll(e) => write!(f, "PopAllI({e})"),
            AlInstr::Push(e) => write!(f, "PushI({e})"),
            AlInstr::Let(p, e) => write!(f, "LetI({p}, {e})"),
            AlInstr::If(c, t, e) => {
                write!(f, "IfI({c}, [")?;
                for (i, x) in t.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("], [")?;
                for (i, x) in e.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("])")
            }
            AlInstr::Trap => f.write_str("TrapI"),
            AlInstr::Return(Some(e)) => write!(f, "ReturnI({e})"),
            AlInstr::Return(None) => f.write_str("ReturnI"),
            AlInstr::Execute(e) => write!(f, "ExecuteI({e})"),
            AlInstr::Exit(k) => write!(f, "ExitI({k})"),
            AlInstr::Perform(name, args) => {
                write!(f, "PerformI({name}, [")?;
                comma_list(f, args)?;
                f.write_str("])")
            }
            AlInstr::Nop => f.write_str("NopI"),
        }
    }
}

impl AlExpr {
    pub fn name(s: &str) -> Self {
        AlExpr::Name(Ident::from_text(s))
    }

    /// Calls `f` on every subexpression, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a AlExpr)) {
        f(self);
        match self {
            AlExpr::Name(_) | AlExpr::Nat(_) | AlExpr::CurrentState | AlExpr::CurrentContext(_) => {}
            AlExpr::App(_, es) | AlExpr::List(es) | AlExpr::Construct(_, es) | AlExpr::Cat(es) | AlExpr::Tuple(es) => {
                es.iter().for_each(|e| e.walk(f))
            }
            AlExpr::Length(e) => e.walk(f),
            AlExpr::Iter(b, _, it) => {
                b.walk(f);
                if let AlIter::Pow(n) = it {
                    n.walk(f);
                }
            }
        }
    }

    /// Variables in first-occurrence order. Iterated variables count once.
    pub fn names(&self) -> Vec<Ident> {
        let mut out: Vec<Ident> = Vec::new();
        self.walk(&mut |e| {
            if let AlExpr::Name(x) = e {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
        });
        out
    }
}

impl AlCond {
    pub fn exprs(&self) -> Vec<&AlExpr> {
        match self {
            AlCond::Compare(_, a, b) => vec![a, b],
            AlCond::TopValue(t) => t.iter().collect(),
            AlCond::TopValues(n) => vec![n],
            AlCond::TopContext(_) => vec![],
            AlCond::Not(c) => c.exprs(),
            AlCond::And(cs) => cs.iter().flat_map(|c| c.exprs()).collect(),
        }
    }

    /// Whether the condition inspects the evaluation context.
    pub fn reads_context(&self) -> bool {
        match self {
            AlCond::TopContext(_) => true,
            AlCond::Not(c) => c.reads_context(),
            AlCond::And(cs) => cs.iter().any(AlCond::reads_context),
            _ => false,
        }
    }
}

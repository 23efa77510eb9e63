//! Prose pseudocode from algorithms, as reStructuredText or plain text.
//!
//! Each AL instruction has one fixed sentence template below; nothing else
//! contributes wording.

use std::fmt::Write as _;

use crate::al::{AlAlgorithm, AlCond, AlExpr, AlInstr, AlIter, AlProgram, AlgoKind, CmpKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProseStyle {
    /// reStructuredText: anchors, titled sections, inline literals.
    Rst,
    Plain,
}

/// A run of prose words or a code fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Part {
    Words(String),
    Code(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub parts: Vec<Part>,
    pub children: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProseSection {
    /// `def-<kind>-<name>`
    pub anchor: String,
    pub title: String,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProseDoc {
    pub sections: Vec<ProseSection>,
}

fn w(s: &str) -> Part {
    Part::Words(s.to_string())
}

fn code(s: String) -> Part {
    Part::Code(s)
}

impl Step {
    fn leaf(parts: Vec<Part>) -> Self {
        Step {
            parts,
            children: vec![],
        }
    }

    pub fn text(&self, style: ProseStyle) -> String {
        let mut s = String::new();
        for p in &self.parts {
            match (p, style) {
                (Part::Words(t), _) | (Part::Code(t), ProseStyle::Plain) => s.push_str(t),
                (Part::Code(t), ProseStyle::Rst) => write!(s, "``{t}``").unwrap(),
            }
        }
        s
    }
}

/// Compact code form of an expression.
pub fn expr_code(e: &AlExpr) -> String {
    match e {
        AlExpr::Name(x) => x.to_string(),
        AlExpr::Nat(n) => n.to_string(),
        AlExpr::App(f, args) => format!("${f}({})", join(args, ", ")),
        AlExpr::List(es) => format!("[{}]", join(es, " ")),
        AlExpr::Construct(c, es) if es.is_empty() => c.clone(),
        AlExpr::Construct(c, es) => format!("({c} {})", join(es, " ")),
        AlExpr::Length(e) => format!("|{}|", expr_code(e)),
        AlExpr::Iter(body, _, it) => {
            let it = match it {
                AlIter::List => "*".to_string(),
                AlIter::Opt => "?".to_string(),
                AlIter::Pow(n) if matches!(**n, AlExpr::Name(_) | AlExpr::Nat(_)) => format!("^{}", expr_code(n)),
                AlIter::Pow(n) => format!("^({})", expr_code(n)),
            };
            format!("{}{it}", expr_code(body))
        }
        AlExpr::Cat(es) => join(es, " "),
        AlExpr::Tuple(es) => format!("({})", join(es, ", ")),
        AlExpr::CurrentState => "the current state".into(),
        AlExpr::CurrentContext(k) => format!("the current {k} context"),
    }
}

fn join(es: &[AlExpr], sep: &str) -> String {
    es.iter().map(expr_code).collect::<Vec<_>>().join(sep)
}

fn expr(e: &AlExpr) -> Vec<Part> {
    match e {
        AlExpr::CurrentState => vec![w("the current state")],
        AlExpr::CurrentContext(k) => vec![w("the current "), code(k.clone()), w(" context")],
        AlExpr::Length(inner) => vec![w("the length of "), code(expr_code(inner))],
        _ => vec![code(expr_code(e))],
    }
}

fn is_sequence(e: &AlExpr) -> bool {
    matches!(e, AlExpr::Iter(..) | AlExpr::Cat(_) | AlExpr::List(_))
}

fn relation(op: CmpKind, negated: bool) -> &'static str {
    match (op, negated) {
        (CmpKind::Is, false) | (CmpKind::Ne, true) => " is ",
        (CmpKind::Ne, false) | (CmpKind::Is, true) => " is not ",
        (CmpKind::Lt, false) | (CmpKind::Ge, true) => " is less than ",
        (CmpKind::Le, false) | (CmpKind::Gt, true) => " is less than or equal to ",
        (CmpKind::Gt, false) | (CmpKind::Le, true) => " is greater than ",
        (CmpKind::Ge, false) | (CmpKind::Lt, true) => " is greater than or equal to ",
    }
}

fn cond(c: &AlCond, negated: bool) -> Vec<Part> {
    let mut out = Vec::new();
    match c {
        AlCond::Compare(op @ (CmpKind::Is | CmpKind::Ne), a, AlExpr::List(es)) if es.is_empty() => {
            out.extend(expr(a));
            out.push(w(if (*op == CmpKind::Is) != negated {
                " is empty"
            } else {
                " is not empty"
            }));
        }
        AlCond::Compare(op, a, b) => {
            out.extend(expr(a));
            out.push(w(relation(*op, negated)));
            out.extend(expr(b));
        }
        AlCond::Not(inner) => return cond(inner, !negated),
        _ if negated => {
            out.push(w("it is not the case that "));
            out.extend(cond(c, false));
        }
        AlCond::TopValue(Some(t)) => {
            out.push(w("a value of value type "));
            out.extend(expr(t));
            out.push(w(" is on the top of the stack"));
        }
        AlCond::TopValue(None) => out.push(w("a value is on the top of the stack")),
        AlCond::TopValues(n) => {
            out.push(w("there are at least "));
            out.extend(expr(n));
            out.push(w(" values on the top of the stack"));
        }
        AlCond::TopContext(k) => {
            out.push(w("the current context is "));
            out.push(code(k.clone()));
        }
        AlCond::And(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push(w(" and "));
                }
                out.extend(cond(c, false));
            }
        }
    }
    out
}

fn sentence(mut parts: Vec<Part>) -> Step {
    parts.push(w("."));
    Step::leaf(parts)
}

fn steps(body: &[AlInstr]) -> Vec<Step> {
    let mut out = Vec::new();
    for i in body {
        match i {
            AlInstr::Assert(c) => {
                let mut p = vec![w("Assert: due to validation, ")];
                p.extend(cond(c, false));
                out.push(sentence(p));
            }
            AlInstr::Pop(e) => {
                let noun = if is_sequence(e) {
                    "Pop the values "
                } else {
                    "Pop the value "
                };
                let mut p = vec![w(noun)];
                p.extend(expr(e));
                p.push(w(" from the stack"));
                out.push(sentence(p));
            }
            AlInstr::PopAll(e) => {
                let mut p = vec![w("Pop all values ")];
                p.extend(expr(e));
                p.push(w(" from the top of the stack"));
                out.push(sentence(p));
            }
            AlInstr::Push(e) => {
                let noun = if is_sequence(e) {
                    "Push the values "
                } else {
                    "Push the value "
                };
                let mut p = vec![w(noun)];
                p.extend(expr(e));
                p.push(w(" to the stack"));
                out.push(sentence(p));
            }
            AlInstr::Let(x, e) => {
                let mut p = vec![w("Let ")];
                p.extend(expr(x));
                p.push(w(" be "));
                p.extend(expr(e));
                out.push(sentence(p));
            }
            AlInstr::If(c, then, els) => {
                let mut p = vec![w("If ")];
                p.extend(cond(c, false));
                p.push(w(", then:"));
                out.push(Step {
                    parts: p,
                    children: steps(then),
                });
                if !els.is_empty() {
                    out.push(Step {
                        parts: vec![w("Else:")],
                        children: steps(els),
                    });
                }
            }
            AlInstr::Trap => out.push(Step::leaf(vec![w("Trap.")])),
            AlInstr::Nop => out.push(Step::leaf(vec![w("Do nothing.")])),
            AlInstr::Return(None) => out.push(Step::leaf(vec![w("Return.")])),
            AlInstr::Return(Some(e)) => {
                let mut p = vec![w("Return ")];
                p.extend(expr(e));
                out.push(sentence(p));
            }
            AlInstr::Execute(e) => {
                let noun = if is_sequence(e) {
                    "Execute the instructions "
                } else {
                    "Execute the instruction "
                };
                let mut p = vec![w(noun)];
                p.extend(expr(e));
                out.push(sentence(p));
            }
            AlInstr::Exit(k) => out.push(sentence(vec![w("Exit from "), code(k.clone())])),
            AlInstr::Perform(f, args) => {
                let call = AlExpr::App(f.clone(), args.clone());
                out.push(sentence(vec![w("Perform "), code(expr_code(&call))]));
            }
        }
    }
    out
}

/// The prose section for one algorithm.
pub fn render_prose(algo: &AlAlgorithm) -> ProseSection {
    let (kind, title) = match algo.kind {
        AlgoKind::Instr => {
            let mut t = algo.name.clone();
            for p in &algo.params {
                write!(t, " {}", expr_code(p)).unwrap();
            }
            ("instr", t)
        }
        AlgoKind::ContextExit => ("exit", format!("Exiting {}", algo.name)),
        AlgoKind::Func => ("func", format!("${}({})", algo.name, join(&algo.params, ", "))),
    };
    ProseSection {
        anchor: format!("def-{kind}-{}", algo.name),
        title,
        steps: steps(&algo.body),
    }
}

impl ProseDoc {
    pub fn from_program(al: &AlProgram) -> Self {
        ProseDoc {
            sections: al.algorithms.iter().map(render_prose).collect(),
        }
    }

    pub fn render(&self, style: ProseStyle) -> String {
        self.sections
            .iter()
            .map(|s| s.render(style))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// `1.`, `a.`, `i.` by depth, cycling.
fn enumerator(depth: usize, i: usize) -> String {
    const ROMAN: [(usize, &str); 7] = [
        (1000, "m"),
        (500, "d"),
        (100, "c"),
        (50, "l"),
        (10, "x"),
        (5, "v"),
        (1, "i"),
    ];
    let n = i + 1;
    match depth % 3 {
        0 => format!("{n}."),
        1 => {
            let mut s = String::new();
            let mut k = n;
            while k > 0 {
                k -= 1;
                s.insert(0, (b'a' + (k % 26) as u8) as char);
                k /= 26;
            }
            format!("{s}.")
        }
        _ => {
            let mut s = String::new();
            let mut k = n;
            for (v, r) in ROMAN {
                while k >= v {
                    s.push_str(r);
                    k -= v;
                }
            }
            // Subtractive forms for 4 and 9.
            let s = s.replace("viiii", "ix").replace("iiii", "iv");
            format!("{s}.")
        }
    }
}

fn render_steps(out: &mut String, steps: &[Step], depth: usize, indent: usize, style: ProseStyle) {
    for (i, s) in steps.iter().enumerate() {
        let marker = enumerator(depth, i);
        writeln!(out, "{}{marker} {}", " ".repeat(indent), s.text(style)).unwrap();
        if !s.children.is_empty() {
            if style == ProseStyle::Rst {
                out.push('\n');
            }
            render_steps(out, &s.children, depth + 1, indent + marker.len() + 1, style);
            if style == ProseStyle::Rst && i + 1 < steps.len() {
                out.push('\n');
            }
        }
    }
}

impl ProseSection {
    pub fn render(&self, style: ProseStyle) -> String {
        let mut out = String::new();
        match style {
            ProseStyle::Rst => {
                let title = format!("``{}``", self.title);
                writeln!(
                    out,
                    ".. _{}:\n\n{title}\n{}\n",
                    self.anchor,
                    "~".repeat(title.chars().count())
                )
                .unwrap();
            }
            ProseStyle::Plain => writeln!(out, "{}\n", self.title).unwrap(),
        }
        render_steps(&mut out, &self.steps, 0, 0, style);
        out
    }
}

//! Canonical text form of EL scripts. Output re-parses to an equal script.

use std::fmt::Write;

use crate::el::ast::*;

pub fn pretty_el(script: &ElScript) -> String {
    let mut out = String::new();
    for (i, def) in script.defs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        pretty_def(&mut out, def);
    }
    out
}

fn ty(t: &ElType) -> String {
    let mut s = t.name.clone();
    for it in &t.iters {
        s.push(match it {
            TypeIter::List => '*',
            TypeIter::Opt => '?',
        });
    }
    s
}

fn pretty_def(out: &mut String, def: &ElDef) {
    match def {
        ElDef::Syntax { name, cases, .. } => {
            write!(out, "syntax {name}").unwrap();
            for (i, case) in cases.iter().enumerate() {
                out.push_str(if i == 0 { " = " } else { " | " });
                match case {
                    SyntaxCase::Con { name, args, .. } => {
                        out.push_str(name);
                        for a in args {
                            write!(out, " {}", ty(a)).unwrap();
                        }
                    }
                    SyntaxCase::Include { name, .. } => out.push_str(name),
                }
            }
            out.push('\n');
        }
        ElDef::Var { name, ty: t, .. } => writeln!(out, "var {name} : {}", ty(t)).unwrap(),
        ElDef::FuncDecl {
            name, params, result, ..
        } => {
            let ps: Vec<_> = params.iter().map(ty).collect();
            writeln!(out, "def {name}({}) : {}", ps.join(", "), ty(result)).unwrap();
        }
        ElDef::FuncClause {
            name,
            args,
            result,
            premises,
            ..
        } => {
            let args: Vec<_> = args.iter().map(exp).collect();
            writeln!(out, "def {name}({}) = {}", args.join(", "), exp(result)).unwrap();
            for p in premises {
                writeln!(out, "  -- {}", premise(p)).unwrap();
            }
        }
        ElDef::Relation { name, shape, .. } => {
            let shape = match shape {
                RelShape::Reduction {
                    state,
                    lhs,
                    rhs_state,
                    rhs,
                } => {
                    let side = |s: &Option<ElType>, t: &ElType| match s {
                        Some(s) => format!("{}; {}", ty(s), ty(t)),
                        None => ty(t),
                    };
                    format!("{} ~> {}", side(state, lhs), side(rhs_state, rhs))
                }
                RelShape::Typing {
                    context,
                    subject,
                    ty: t,
                } => format!("{} |- {} : {}", ty(context), ty(subject), ty(t)),
            };
            writeln!(out, "relation {name}: {shape}").unwrap();
        }
        ElDef::Rule {
            relation,
            id,
            body,
            premises,
            ..
        } => {
            writeln!(out, "rule {relation}/{id}:").unwrap();
            match body {
                RuleBody::Reduction {
                    state,
                    lhs,
                    rhs_state,
                    rhs,
                } => {
                    let side = |s: &Option<ElExp>, e: &ElExp| match s {
                        Some(s) => format!("{}; {}", exp(s), exp(e)),
                        None => exp(e),
                    };
                    writeln!(out, "  {} ~> {}", side(state, lhs), side(rhs_state, rhs)).unwrap();
                }
                RuleBody::Typing {
                    context,
                    subject,
                    ty: t,
                } => writeln!(out, "  {} |- {} : {}", exp(context), exp(subject), exp(t)).unwrap(),
            }
            for p in premises {
                writeln!(out, "  -- {}", premise(p)).unwrap();
            }
        }
    }
}

fn iter_suffix(it: &ElIter) -> String {
    match it {
        ElIter::List => "*".into(),
        ElIter::Opt => "?".into(),
        ElIter::Pow(e) => format!("^{}", primary(e)),
    }
}

fn premise(p: &ElPremise) -> String {
    match p {
        ElPremise::If { lhs, op, rhs, .. } => format!("if {} {} {}", exp(lhs), op.symbol(), exp(rhs)),
        ElPremise::Else { .. } => "otherwise".into(),
        ElPremise::Iter { body, iter, .. } => format!("({}){}", premise(body), iter_suffix(iter)),
    }
}

/// Expression in a position that admits a juxtaposed sequence.
pub fn exp(e: &ElExp) -> String {
    match &e.kind {
        ElExpKind::Seq(items) => items.iter().map(atom).collect::<Vec<_>>().join(" "),
        _ => atom(e),
    }
}

/// Expression in a position that takes a single atom.
fn atom(e: &ElExp) -> String {
    match &e.kind {
        ElExpKind::Iter(body, it) => format!("{}{}", primary(body), iter_suffix(it)),
        _ => primary(e),
    }
}

/// Expression in a position that takes a primary (iteration body, exponent).
fn primary(e: &ElExp) -> String {
    match &e.kind {
        ElExpKind::Var(id) => id.to_string(),
        ElExpKind::Nat(n) => n.to_string(),
        ElExpKind::Epsilon => "epsilon".into(),
        ElExpKind::Con(c, args) if args.is_empty() => c.clone(),
        ElExpKind::Con(c, args) => {
            let args: Vec<_> = args.iter().map(atom).collect();
            format!("({c} {})", args.join(" "))
        }
        ElExpKind::Call(f, args) => {
            let args: Vec<_> = args.iter().map(exp).collect();
            format!("{f}({})", args.join(", "))
        }
        ElExpKind::Seq(_) => format!("({})", exp(e)),
        ElExpKind::Tuple(items) => {
            let items: Vec<_> = items.iter().map(exp).collect();
            format!("({})", items.join(", "))
        }
        ElExpKind::List(items) => {
            let items: Vec<_> = items.iter().map(atom).collect();
            format!("[{}]", items.join(" "))
        }
        ElExpKind::Len(inner) => {
            // A bar inside the bars would close them early.
            let guard = |e: &ElExp| match atom(e) {
                t if t.starts_with('|') => format!("({t})"),
                t => t,
            };
            let items: Vec<_> = match &inner.kind {
                ElExpKind::Seq(items) => items.iter().map(guard).collect(),
                _ => vec![guard(inner)],
            };
            format!("|{}|", items.join(" "))
        }
        // An iteration used as a primary (e.g. `x**` or `(x*)^n`) needs parens.
        ElExpKind::Iter(..) => format!("({})", atom(e)),
    }
}

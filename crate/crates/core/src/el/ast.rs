//! External Language: the parsed, span-annotated surface syntax.

use std::fmt;

use crate::span::SourceSpan;

/// A lower-case metavariable such as `c`, `c_1` or `instr'`.
///
/// The subscript and primes are part of the variable's identity; its type is
/// looked up through `base`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ident {
    pub base: String,
    pub sub: Option<String>,
    pub primes: u8,
}

impl Ident {
    pub fn plain(base: impl Into<String>) -> Self {
        Ident {
            base: base.into(),
            sub: None,
            primes: 0,
        }
    }

    /// Splits identifier text into base, subscript and primes.
    ///
    /// A trailing `_` segment is a subscript when it is all digits or a single
    /// letter (`c_1`, `t_k`); otherwise the underscore belongs to the base
    /// (`c_numtype`).
    pub fn from_text(text: &str) -> Self {
        let primes = text.chars().rev().take_while(|&c| c == '\'').count();
        let core = &text[..text.len() - primes];
        if let Some(idx) = core.rfind('_') {
            let (base, sub) = (&core[..idx], &core[idx + 1..]);
            let is_sub = !base.is_empty()
                && !sub.is_empty()
                && (sub.chars().all(|c| c.is_ascii_digit())
                    || (sub.len() == 1 && sub.chars().all(|c| c.is_ascii_lowercase())));
            if is_sub {
                return Ident {
                    base: base.to_string(),
                    sub: Some(sub.to_string()),
                    primes: primes as u8,
                };
            }
        }
        Ident {
            base: core.to_string(),
            sub: None,
            primes: primes as u8,
        }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        if let Some(sub) = &self.sub {
            write!(f, "_{sub}")?;
        }
        for _ in 0..self.primes {
            f.write_str("'")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ElScript {
    pub defs: Vec<ElDef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TypeIter {
    List,
    Opt,
}

/// A type reference such as `numtype`, `instr*` or `c_numtype?`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElType {
    pub name: String,
    pub iters: Vec<TypeIter>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SyntaxCase {
    /// `CONST numtype c_numtype`
    Con {
        name: String,
        args: Vec<ElType>,
        span: SourceSpan,
    },
    /// A lower-case case names another syntax (or primitive type) included in this one.
    Include { name: String, span: SourceSpan },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelShape {
    /// `[state ;] lhs ~> [state ;] rhs`
    Reduction {
        state: Option<ElType>,
        lhs: ElType,
        rhs_state: Option<ElType>,
        rhs: ElType,
    },
    /// `context |- subject : type`
    Typing {
        context: ElType,
        subject: ElType,
        ty: ElType,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleBody {
    Reduction {
        state: Option<ElExp>,
        lhs: ElExp,
        rhs_state: Option<ElExp>,
        rhs: ElExp,
    },
    Typing {
        context: ElExp,
        subject: ElExp,
        ty: ElExp,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElDef {
    Syntax {
        name: String,
        cases: Vec<SyntaxCase>,
        span: SourceSpan,
    },
    Var {
        name: String,
        ty: ElType,
        span: SourceSpan,
    },
    /// `def $f(t_1, t_2) : t`; the name keeps its `$`.
    FuncDecl {
        name: String,
        params: Vec<ElType>,
        result: ElType,
        span: SourceSpan,
    },
    /// `def $f(pat, ...) = exp -- premises`
    FuncClause {
        name: String,
        args: Vec<ElExp>,
        result: ElExp,
        premises: Vec<ElPremise>,
        span: SourceSpan,
    },
    Relation {
        name: String,
        shape: RelShape,
        span: SourceSpan,
    },
    Rule {
        relation: String,
        id: String,
        body: RuleBody,
        premises: Vec<ElPremise>,
        span: SourceSpan,
    },
}

impl ElDef {
    pub fn span(&self) -> SourceSpan {
        match self {
            ElDef::Syntax { span, .. }
            | ElDef::Var { span, .. }
            | ElDef::FuncDecl { span, .. }
            | ElDef::FuncClause { span, .. }
            | ElDef::Relation { span, .. }
            | ElDef::Rule { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElIter {
    /// `*`
    List,
    /// `?`
    Opt,
    /// `^n`, a list of a given length
    Pow(Box<ElExp>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElExp {
    pub kind: ElExpKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElExpKind {
    Var(Ident),
    Nat(u64),
    /// `epsilon`: the empty sequence or absent option.
    Epsilon,
    Con(String, Vec<ElExp>),
    /// Function name keeps its `$`.
    Call(String, Vec<ElExp>),
    /// Juxtaposed elements; never nested directly inside another `Seq`.
    Seq(Vec<ElExp>),
    Tuple(Vec<ElExp>),
    Iter(Box<ElExp>, ElIter),
    /// `[e_1 ... e_n]`
    List(Vec<ElExp>),
    /// `|e|`
    Len(Box<ElExp>),
}

impl ElExp {
    pub fn new(kind: ElExpKind, span: SourceSpan) -> Self {
        ElExp { kind, span }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "=/=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElPremise {
    If {
        lhs: ElExp,
        op: CmpOp,
        rhs: ElExp,
        span: SourceSpan,
    },
    Else {
        span: SourceSpan,
    },
    Iter {
        body: Box<ElPremise>,
        iter: ElIter,
        span: SourceSpan,
    },
}

impl ElPremise {
    pub fn span(&self) -> SourceSpan {
        match self {
            ElPremise::If { span, .. } | ElPremise::Else { span } | ElPremise::Iter { span, .. } => *span,
        }
    }
}

/// Structural copy with every span replaced by [`SourceSpan::dummy`].
pub trait StripSpans {
    fn strip_spans(&self) -> Self;
}

impl StripSpans for ElScript {
    fn strip_spans(&self) -> Self {
        ElScript {
            defs: self.defs.iter().map(StripSpans::strip_spans).collect(),
        }
    }
}

impl StripSpans for ElType {
    fn strip_spans(&self) -> Self {
        ElType {
            name: self.name.clone(),
            iters: self.iters.clone(),
            span: SourceSpan::dummy(),
        }
    }
}

impl StripSpans for ElDef {
    fn strip_spans(&self) -> Self {
        let d = SourceSpan::dummy();
        match self {
            ElDef::Syntax { name, cases, .. } => ElDef::Syntax {
                name: name.clone(),
                cases: cases
                    .iter()
                    .map(|c| match c {
                        SyntaxCase::Con { name, args, .. } => SyntaxCase::Con {
                            name: name.clone(),
                            args: args.iter().map(StripSpans::strip_spans).collect(),
                            span: d,
                        },
                        SyntaxCase::Include { name, .. } => SyntaxCase::Include {
                            name: name.clone(),
                            span: d,
                        },
                    })
                    .collect(),
                span: d,
            },
            ElDef::Var { name, ty, .. } => ElDef::Var {
                name: name.clone(),
                ty: ty.strip_spans(),
                span: d,
            },
            ElDef::FuncDecl {
                name, params, result, ..
            } => ElDef::FuncDecl {
                name: name.clone(),
                params: params.iter().map(StripSpans::strip_spans).collect(),
                result: result.strip_spans(),
                span: d,
            },
            ElDef::FuncClause {
                name,
                args,
                result,
                premises,
                ..
            } => ElDef::FuncClause {
                name: name.clone(),
                args: args.iter().map(StripSpans::strip_spans).collect(),
                result: result.strip_spans(),
                premises: premises.iter().map(StripSpans::strip_spans).collect(),
                span: d,
            },
            ElDef::Relation { name, shape, .. } => ElDef::Relation {
                name: name.clone(),
                shape: match shape {
                    RelShape::Reduction {
                        state,
                        lhs,
                        rhs_state,
                        rhs,
                    } => RelShape::Reduction {
                        state: state.as_ref().map(StripSpans::strip_spans),
                        lhs: lhs.strip_spans(),
                        rhs_state: rhs_state.as_ref().map(StripSpans::strip_spans),
                        rhs: rhs.strip_spans(),
                    },
                    RelShape::Typing { context, subject, ty } => RelShape::Typing {
                        context: context.strip_spans(),
                        subject: subject.strip_spans(),
                        ty: ty.strip_spans(),
                    },
                },
                span: d,
            },
            ElDef::Rule {
                relation,
                id,
                body,
                premises,
                ..
            } => ElDef::Rule {
                relation: relation.clone(),
                id: id.clone(),
                body: match body {
                    RuleBody::Reduction {
                        state,
                        lhs,
                        rhs_state,
                        rhs,
                    } => RuleBody::Reduction {
                        state: state.as_ref().map(StripSpans::strip_spans),
                        lhs: lhs.strip_spans(),
                        rhs_state: rhs_state.as_ref().map(StripSpans::strip_spans),
                        rhs: rhs.strip_spans(),
                    },
                    RuleBody::Typing { context, subject, ty } => RuleBody::Typing {
                        context: context.strip_spans(),
                        subject: subject.strip_spans(),
                        ty: ty.strip_spans(),
                    },
                },
                premises: premises.iter().map(StripSpans::strip_spans).collect(),
                span: d,
            },
        }
    }
}

impl StripSpans for ElIter {
    fn strip_spans(&self) -> Self {
        match self {
            ElIter::List => ElIter::List,
            ElIter::Opt => ElIter::Opt,
            ElIter::Pow(e) => ElIter::Pow(Box::new(e.strip_spans())),
        }
    }
}

impl StripSpans for ElExp {
    fn strip_spans(&self) -> Self {
        let strip_all = |v: &Vec<ElExp>| v.iter().map(StripSpans::strip_spans).collect();
        let kind = match &self.kind {
            ElExpKind::Var(i) => ElExpKind::Var(i.clone()),
            ElExpKind::Nat(n) => ElExpKind::Nat(*n),
            ElExpKind::Epsilon => ElExpKind::Epsilon,
            ElExpKind::Con(c, args) => ElExpKind::Con(c.clone(), strip_all(args)),
            ElExpKind::Call(f, args) => ElExpKind::Call(f.clone(), strip_all(args)),
            ElExpKind::Seq(es) => ElExpKind::Seq(strip_all(es)),
            ElExpKind::Tuple(es) => ElExpKind::Tuple(strip_all(es)),
            ElExpKind::Iter(b, it) => ElExpKind::Iter(Box::new(b.strip_spans()), it.strip_spans()),
            ElExpKind::List(es) => ElExpKind::List(strip_all(es)),
            ElExpKind::Len(e) => ElExpKind::Len(Box::new(e.strip_spans())),
        };
        ElExp {
            kind,
            span: SourceSpan::dummy(),
        }
    }
}

impl StripSpans for ElPremise {
    fn strip_spans(&self) -> Self {
        let d = SourceSpan::dummy();
        match self {
            ElPremise::If { lhs, op, rhs, .. } => ElPremise::If {
                lhs: lhs.strip_spans(),
                op: *op,
                rhs: rhs.strip_spans(),
                span: d,
            },
            ElPremise::Else { .. } => ElPremise::Else { span: d },
            ElPremise::Iter { body, iter, .. } => ElPremise::Iter {
                body: Box::new(body.strip_spans()),
                iter: iter.strip_spans(),
                span: d,
            },
        }
    }
}

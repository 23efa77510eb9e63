//! Internal Language: the elaborated, fully typed script.

use std::fmt;

use indexmap::IndexMap;

use crate::el::ast::{CmpOp, Ident};
use crate::il::types::{IlType, IterKind};
use crate::span::SourceSpan;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct IlScript {
    pub syntaxes: IndexMap<String, IlSyntax>,
    /// Default types of metavariable families, by base name.
    pub vars: IndexMap<String, IlType>,
    pub funcs: IndexMap<String, IlFunc>,
    pub relations: IndexMap<String, IlRelation>,
    /// Strongly connected components of the definition graph, dependencies first.
    pub recursion_groups: Vec<RecGroup>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecGroup {
    pub names: Vec<String>,
    pub recursive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlSyntax {
    pub name: String,
    /// Empty for abstract syntaxes such as `state`.
    pub cases: Vec<IlCase>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IlCase {
    Con { name: String, args: Vec<IlType> },
    Include(IlType),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlFunc {
    pub name: String,
    pub params: Vec<IlType>,
    pub result: IlType,
    /// No clauses means the function is a runtime primitive.
    pub clauses: Vec<IlClause>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlClause {
    pub args: Vec<IlExp>,
    pub result: IlExp,
    pub premises: Vec<IlPremise>,
    pub vars: IndexMap<Ident, IlType>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IlShape {
    Reduction {
        state: Option<IlType>,
        lhs: IlType,
        rhs_state: Option<IlType>,
        rhs: IlType,
    },
    Typing {
        context: IlType,
        subject: IlType,
        ty: IlType,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlRelation {
    pub name: String,
    pub shape: IlShape,
    pub rules: Vec<IlRule>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IlRuleBody {
    Reduction {
        state: Option<IlExp>,
        lhs: IlExp,
        rhs_state: Option<IlExp>,
        rhs: IlExp,
    },
    Typing {
        context: IlExp,
        subject: IlExp,
        ty: IlExp,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlRule {
    pub relation: String,
    pub id: String,
    pub body: IlRuleBody,
    pub premises: Vec<IlPremise>,
    /// Every variable of the rule with its full (iterated) type.
    pub vars: IndexMap<Ident, IlType>,
    /// Variables bound by matching the left-hand side (and state).
    pub lhs_vars: Vec<Ident>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IlIter {
    List,
    Opt,
    /// `^n`: a list whose length is given by the expression.
    Pow(Box<IlExp>),
}

impl IlIter {
    pub fn kind(&self) -> IterKind {
        match self {
            IlIter::Opt => IterKind::Opt,
            IlIter::List | IlIter::Pow(_) => IterKind::List,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlExp {
    pub kind: IlExpKind,
    pub ty: IlType,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IlExpKind {
    Var(Ident),
    /// Literal at a nat or machine-integer type.
    Nat(u64),
    /// Empty list or absent option.
    Epsilon,
    Con(String, Vec<IlExp>),
    /// Function name keeps its `$`.
    Call(String, Vec<IlExp>),
    /// Concatenation. Each element has the element type (one item) or is an
    /// iterated type over it (spliced).
    Seq(Vec<IlExp>),
    Tuple(Vec<IlExp>),
    /// Iteration of `body` over the listed variables.
    Iter(Box<IlExp>, IlIter, Vec<Ident>),
    List(Vec<IlExp>),
    Len(Box<IlExp>),
    /// Injection of a syntax case into the sum that includes it.
    Cast(Box<IlExp>),
    /// Scalar injected into an option.
    OptSome(Box<IlExp>),
}

impl IlExp {
    pub fn new(kind: IlExpKind, ty: IlType, span: SourceSpan) -> Self {
        IlExp { kind, ty, span }
    }

    /// Sees through casts.
    pub fn uncast(&self) -> &IlExp {
        match &self.kind {
            IlExpKind::Cast(e) => e.uncast(),
            _ => self,
        }
    }

    /// Calls `f` on every subexpression, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a IlExp)) {
        f(self);
        match &self.kind {
            IlExpKind::Var(_) | IlExpKind::Nat(_) | IlExpKind::Epsilon => {}
            IlExpKind::Con(_, es)
            | IlExpKind::Call(_, es)
            | IlExpKind::Seq(es)
            | IlExpKind::Tuple(es)
            | IlExpKind::List(es) => es.iter().for_each(|e| e.walk(f)),
            IlExpKind::Iter(body, it, _) => {
                body.walk(f);
                if let IlIter::Pow(n) = it {
                    n.walk(f);
                }
            }
            IlExpKind::Len(e) | IlExpKind::Cast(e) | IlExpKind::OptSome(e) => e.walk(f),
        }
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Ident> {
        let mut out: Vec<Ident> = Vec::new();
        self.walk(&mut |e| {
            if let IlExpKind::Var(x) = &e.kind {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
        });
        out
    }

    pub fn calls(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let IlExpKind::Call(f, _) = &e.kind {
                out.push(f.clone());
            }
        });
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IlPremise {
    If {
        lhs: IlExp,
        op: CmpOp,
        rhs: IlExp,
        span: SourceSpan,
    },
    Else {
        span: SourceSpan,
    },
    Iter {
        body: Box<IlPremise>,
        iter: IlIter,
        vars: Vec<Ident>,
        span: SourceSpan,
    },
}

impl IlPremise {
    pub fn span(&self) -> SourceSpan {
        match self {
            IlPremise::If { span, .. } | IlPremise::Else { span } | IlPremise::Iter { span, .. } => *span,
        }
    }

    pub fn walk_exps<'a>(&'a self, f: &mut dyn FnMut(&'a IlExp)) {
        match self {
            IlPremise::If { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            IlPremise::Else { .. } => {}
            IlPremise::Iter { body, iter, .. } => {
                body.walk_exps(f);
                if let IlIter::Pow(n) = iter {
                    n.walk(f);
                }
            }
        }
    }

    pub fn free_vars(&self) -> Vec<Ident> {
        let mut out: Vec<Ident> = Vec::new();
        self.walk_exps(&mut |e| {
            if let IlExpKind::Var(x) = &e.kind {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
        });
        out
    }
}

impl IlRule {
    /// All top-level expressions of the rule body.
    pub fn body_exps(&self) -> Vec<&IlExp> {
        match &self.body {
            IlRuleBody::Reduction {
                state,
                lhs,
                rhs_state,
                rhs,
            } => state.iter().chain([lhs]).chain(rhs_state.iter()).chain([rhs]).collect(),
            IlRuleBody::Typing { context, subject, ty } => vec![context, subject, ty],
        }
    }
}

impl IlScript {
    /// Finds the syntax declaring constructor `con`, with the case's argument types.
    pub fn constructor(&self, con: &str) -> Option<(&IlSyntax, &[IlType])> {
        self.syntaxes.values().find_map(|s| {
            s.cases.iter().find_map(|c| match c {
                IlCase::Con { name, args } if name == con => Some((s, args.as_slice())),
                _ => None,
            })
        })
    }

    /// True when `sub` is listed as an include case of syntax `sup`.
    pub fn includes(&self, sup: &str, sub: &IlType) -> bool {
        self.syntaxes
            .get(sup)
            .is_some_and(|s| s.cases.iter().any(|c| matches!(c, IlCase::Include(t) if t == sub)))
    }

    /// Reduction rules of every relation, in source order.
    pub fn reduction_rules(&self) -> impl Iterator<Item = &IlRule> {
        self.relations
            .values()
            .filter(|r| matches!(r.shape, IlShape::Reduction { .. }))
            .flat_map(|r| r.rules.iter())
    }
}

impl fmt::Display for IlExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, es: &[IlExp], sep: &str) -> fmt::Result {
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{e}")?;
            }
            Ok(())
        }
        match &self.kind {
            IlExpKind::Var(x) => write!(f, "{x}"),
            IlExpKind::Nat(n) => write!(f, "{n}"),
            IlExpKind::Epsilon => f.write_str("epsilon"),
            IlExpKind::Con(c, args) if args.is_empty() => f.write_str(c),
            IlExpKind::Con(c, args) => {
                write!(f, "({c} ")?;
                list(f, args, " ")?;
                f.write_str(")")
            }
            IlExpKind::Call(c, args) => {
                write!(f, "{c}(")?;
                list(f, args, ", ")?;
                f.write_str(")")
            }
            IlExpKind::Seq(es) => {
                f.write_str("(")?;
                list(f, es, " ")?;
                f.write_str(")")
            }
            IlExpKind::Tuple(es) => {
                f.write_str("(")?;
                list(f, es, ", ")?;
                f.write_str(")")
            }
            IlExpKind::Iter(body, it, _) => match it {
                IlIter::List => write!(f, "{body}*"),
                IlIter::Opt => write!(f, "{body}?"),
                IlIter::Pow(n) => write!(f, "{body}^{n}"),
            },
            IlExpKind::List(es) => {
                f.write_str("[")?;
                list(f, es, " ")?;
                f.write_str("]")
            }
            IlExpKind::Len(e) => write!(f, "|{e}|"),
            IlExpKind::Cast(e) | IlExpKind::OptSome(e) => write!(f, "{e}"),
        }
    }
}

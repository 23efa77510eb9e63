//! EL to IL: name resolution, bidirectional type checking, multiplicity
//! inference and explicit casts.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::el::ast::*;
use crate::il::ast::*;
use crate::il::deps::dependency_groups;
use crate::il::types::{IlType, IterKind, PrimType};
use crate::span::SourceSpan;

/// A successfully elaborated script together with any warnings.
#[derive(Clone, Debug)]
pub struct Elaboration {
    pub script: IlScript,
    pub warnings: Vec<Diagnostic>,
}

/// Elaborates `script`. On failure every diagnostic (errors and warnings) is
/// returned, sorted by position.
pub fn elaborate(script: &ElScript) -> Result<Elaboration, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let decls = collect(script, &mut diags);

    let mut clauses: Vec<(String, IlClause)> = Vec::new();
    let mut rules: Vec<IlRule> = Vec::new();
    let mut seen_rules: HashMap<(&str, &str), SourceSpan> = HashMap::new();
    for def in &script.defs {
        match def {
            ElDef::FuncClause {
                name,
                args,
                result,
                premises,
                span,
            } => {
                if decls.poisoned.contains(name) {
                    continue;
                }
                let Some(func) = decls.il.funcs.get(name) else {
                    diags.push(Diagnostic::error(
                        codes::UNDEF,
                        *span,
                        format!("clause for undeclared function `{name}`"),
                    ));
                    continue;
                };
                if let Some(c) = elab_clause(&decls, func, args, result, premises, *span, &mut diags) {
                    clauses.push((name.clone(), c));
                }
            }
            ElDef::Rule {
                relation,
                id,
                body,
                premises,
                span,
            } => {
                if let Some(prev) = seen_rules.insert((relation, id), *span) {
                    diags.push(
                        Diagnostic::error(codes::DUP, *span, format!("duplicate rule `{relation}/{id}`"))
                            .with_note(prev, "first defined here"),
                    );
                    continue;
                }
                if decls.poisoned.contains(relation) {
                    continue;
                }
                let Some(rel) = decls.il.relations.get(relation) else {
                    diags.push(Diagnostic::error(
                        codes::UNDEF,
                        *span,
                        format!("rule for undeclared relation `{relation}`"),
                    ));
                    continue;
                };
                if let Some(r) = elab_rule(&decls, rel, id, body, premises, *span, &mut diags) {
                    rules.push(r);
                }
            }
            _ => {}
        }
    }

    sort_diagnostics(&mut diags);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(diags);
    }
    let mut il = decls.il;
    for (name, c) in clauses {
        il.funcs[&name].clauses.push(c);
    }
    for r in rules {
        il.relations[&r.relation].rules.push(r);
    }
    il.recursion_groups = dependency_groups(&il);
    Ok(Elaboration {
        script: il,
        warnings: diags,
    })
}

/// Declaration tables from the first pass.
struct Decls {
    il: IlScript,
    cons: HashMap<String, String>,
    /// Names whose declaration failed; uses of them are not reported again.
    poisoned: HashSet<String>,
}

impl Decls {
    fn from_il(il: &IlScript) -> Self {
        let mut cons = HashMap::new();
        for s in il.syntaxes.values() {
            for c in &s.cases {
                if let IlCase::Con { name, .. } = c {
                    cons.insert(name.clone(), s.name.clone());
                }
            }
        }
        Decls {
            il: il.clone(),
            cons,
            poisoned: HashSet::new(),
        }
    }

    fn resolve_type(&self, t: &ElType) -> Result<IlType, Diagnostic> {
        let mut ty = match PrimType::from_name(&t.name) {
            Some(p) => IlType::Prim(p),
            None if self.il.syntaxes.contains_key(&t.name) => IlType::Syn(t.name.clone()),
            None => {
                return Err(Diagnostic::error(
                    codes::UNDEF,
                    t.span,
                    format!("unknown type `{}`", t.name),
                ))
            }
        };
        for it in &t.iters {
            ty = ty.iter(match it {
                TypeIter::List => IterKind::List,
                TypeIter::Opt => IterKind::Opt,
            });
        }
        if !ty.is_well_formed() {
            return Err(Diagnostic::error(
                codes::MULT,
                t.span,
                format!("doubly optional type `{ty}`"),
            ));
        }
        Ok(ty)
    }
}

fn is_con_name(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_uppercase())
        && name
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_' || c == '.')
}

fn collect(script: &ElScript, diags: &mut Vec<Diagnostic>) -> Decls {
    let mut decls = Decls {
        il: IlScript::default(),
        cons: HashMap::new(),
        poisoned: HashSet::new(),
    };
    let mut first_span: HashMap<String, SourceSpan> = HashMap::new();
    let mut dup = |name: &str, span: SourceSpan, what: &str, diags: &mut Vec<Diagnostic>| -> bool {
        if let Some(prev) = first_span.get(name) {
            diags.push(
                Diagnostic::error(codes::DUP, span, format!("duplicate {what} `{name}`"))
                    .with_note(*prev, "first defined here"),
            );
            true
        } else {
            first_span.insert(name.to_string(), span);
            false
        }
    };

    // Syntax names first, so that types resolve regardless of definition order.
    for def in &script.defs {
        if let ElDef::Syntax { name, span, .. } = def {
            if PrimType::from_name(name).is_some() {
                diags.push(Diagnostic::error(
                    codes::DUP,
                    *span,
                    format!("`{name}` is a primitive type"),
                ));
            } else if !dup(name, *span, "syntax", diags) {
                decls.il.syntaxes.insert(
                    name.clone(),
                    IlSyntax {
                        name: name.clone(),
                        cases: Vec::new(),
                        span: *span,
                    },
                );
            }
        }
    }

    let mut con_spans: HashMap<String, SourceSpan> = HashMap::new();
    for def in &script.defs {
        match def {
            ElDef::Syntax { name, cases, span } => {
                if decls.il.syntaxes.get(name).map(|s| s.span) != Some(*span) {
                    continue;
                }
                let mut out = Vec::new();
                for case in cases {
                    match case {
                        SyntaxCase::Con { name: con, args, span } => {
                            if !is_con_name(con) {
                                diags.push(Diagnostic::error(
                                    codes::NAME,
                                    *span,
                                    format!("constructor `{con}` must be upper case"),
                                ));
                            }
                            if let Some(prev) = con_spans.get(con) {
                                diags.push(
                                    Diagnostic::error(codes::DUP, *span, format!("duplicate constructor `{con}`"))
                                        .with_note(*prev, "first defined here"),
                                );
                                continue;
                            }
                            con_spans.insert(con.clone(), *span);
                            let mut tys = Vec::new();
                            for a in args {
                                match decls.resolve_type(a) {
                                    Ok(t) => tys.push(t),
                                    Err(d) => {
                                        diags.push(d);
                                        decls.poisoned.insert(con.clone());
                                    }
                                }
                            }
                            decls.cons.insert(con.clone(), name.clone());
                            out.push(IlCase::Con {
                                name: con.clone(),
                                args: tys,
                            });
                        }
                        SyntaxCase::Include { name: inc, span } => {
                            let t = ElType {
                                name: inc.clone(),
                                iters: Vec::new(),
                                span: *span,
                            };
                            match decls.resolve_type(&t) {
                                Ok(t) => out.push(IlCase::Include(t)),
                                Err(d) => diags.push(d),
                            }
                        }
                    }
                }
                decls.il.syntaxes[name].cases = out;
            }
            ElDef::Var { name, ty, span } => {
                if dup(&format!("var {name}"), *span, "variable declaration", diags) {
                    continue;
                }
                match decls.resolve_type(ty) {
                    Ok(t) => {
                        decls.il.vars.insert(name.clone(), t);
                    }
                    Err(d) => {
                        diags.push(d);
                        decls.poisoned.insert(format!("var {name}"));
                    }
                }
            }
            ElDef::FuncDecl {
                name,
                params,
                result,
                span,
            } => {
                if dup(name, *span, "function", diags) {
                    continue;
                }
                let params: Vec<_> = params.iter().map(|p| decls.resolve_type(p)).collect();
                let result = decls.resolve_type(result);
                let mut ok = true;
                for r in params.iter().chain([&result]) {
                    if let Err(d) = r {
                        diags.push(d.clone());
                        ok = false;
                    }
                }
                if !ok {
                    decls.poisoned.insert(name.clone());
                    continue;
                }
                decls.il.funcs.insert(
                    name.clone(),
                    IlFunc {
                        name: name.clone(),
                        params: params.into_iter().map(Result::unwrap).collect(),
                        result: result.unwrap(),
                        clauses: Vec::new(),
                        span: *span,
                    },
                );
            }
            ElDef::Relation { name, shape, span } => {
                if dup(name, *span, "relation", diags) {
                    continue;
                }
                let mut errs = Vec::new();
                let mut res = |t: &ElType| match decls.resolve_type(t) {
                    Ok(t) => t,
                    Err(d) => {
                        errs.push(d);
                        IlType::Tuple(Vec::new())
                    }
                };
                let shape = match shape {
                    RelShape::Reduction {
                        state,
                        lhs,
                        rhs_state,
                        rhs,
                    } => IlShape::Reduction {
                        state: state.as_ref().map(&mut res),
                        lhs: res(lhs),
                        rhs_state: rhs_state.as_ref().map(&mut res),
                        rhs: res(rhs),
                    },
                    RelShape::Typing { context, subject, ty } => IlShape::Typing {
                        context: res(context),
                        subject: res(subject),
                        ty: res(ty),
                    },
                };
                if !errs.is_empty() {
                    diags.extend(errs);
                    decls.poisoned.insert(name.clone());
                    continue;
                }
                decls.il.relations.insert(
                    name.clone(),
                    IlRelation {
                        name: name.clone(),
                        shape,
                        rules: Vec::new(),
                        span: *span,
                    },
                );
            }
            ElDef::FuncClause { .. } | ElDef::Rule { .. } => {}
        }
    }
    decls
}

/// One occurrence of a metavariable with its enclosing iterators, outermost first.
struct Occurrence {
    var: Ident,
    iters: Vec<IterKind>,
    span: SourceSpan,
    in_premise: bool,
}

fn iter_kind(it: &ElIter) -> IterKind {
    match it {
        ElIter::Opt => IterKind::Opt,
        ElIter::List | ElIter::Pow(_) => IterKind::List,
    }
}

fn collect_exp(e: &ElExp, stack: &mut Vec<IterKind>, in_premise: bool, out: &mut Vec<Occurrence>) {
    match &e.kind {
        ElExpKind::Var(x) => out.push(Occurrence {
            var: x.clone(),
            iters: stack.clone(),
            span: e.span,
            in_premise,
        }),
        ElExpKind::Nat(_) | ElExpKind::Epsilon => {}
        ElExpKind::Con(_, es)
        | ElExpKind::Call(_, es)
        | ElExpKind::Seq(es)
        | ElExpKind::Tuple(es)
        | ElExpKind::List(es) => es.iter().for_each(|e| collect_exp(e, stack, in_premise, out)),
        ElExpKind::Iter(body, it) => {
            if let ElIter::Pow(n) = it {
                collect_exp(n, stack, in_premise, out);
            }
            stack.push(iter_kind(it));
            collect_exp(body, stack, in_premise, out);
            stack.pop();
        }
        ElExpKind::Len(e) => collect_exp(e, stack, in_premise, out),
    }
}

fn collect_premise(p: &ElPremise, stack: &mut Vec<IterKind>, out: &mut Vec<Occurrence>) {
    match p {
        ElPremise::If { lhs, rhs, .. } => {
            collect_exp(lhs, stack, true, out);
            collect_exp(rhs, stack, true, out);
        }
        ElPremise::Else { .. } => {}
        ElPremise::Iter { body, iter, .. } => {
            if let ElIter::Pow(n) = iter {
                collect_exp(n, stack, true, out);
            }
            stack.push(iter_kind(iter));
            collect_premise(body, stack, out);
            stack.pop();
        }
    }
}

/// Typing scope of one rule or clause.
struct Typer<'a> {
    decls: &'a Decls,
    /// Full types: the base type wrapped in the variable's iterators.
    vars: IndexMap<Ident, IlType>,
    /// Number of iterator layers each variable is bound under.
    dims: HashMap<Ident, usize>,
    diags: &'a mut Vec<Diagnostic>,
}

fn base_type(decls: &Decls, x: &Ident, env: Option<&IndexMap<Ident, IlType>>) -> Option<IlType> {
    if let Some(t) = env.and_then(|env| env.get(x)) {
        return Some(t.clone());
    }
    if let Some(t) = decls.il.vars.get(&x.base) {
        return Some(t.clone());
    }
    if decls.il.syntaxes.contains_key(&x.base) {
        return Some(IlType::Syn(x.base.clone()));
    }
    PrimType::from_name(&x.base).map(IlType::Prim)
}

impl<'a> Typer<'a> {
    /// Assigns types and multiplicities to every variable that occurs.
    fn new(
        decls: &'a Decls,
        occs: &[Occurrence],
        env: Option<&IndexMap<Ident, IlType>>,
        diags: &'a mut Vec<Diagnostic>,
    ) -> Self {
        let mut by_var: IndexMap<&Ident, Vec<&Occurrence>> = IndexMap::new();
        for o in occs {
            by_var.entry(&o.var).or_default().push(o);
        }
        let mut vars = IndexMap::new();
        let mut dims = HashMap::new();
        for (x, os) in by_var {
            let Some(base) = base_type(decls, x, env) else {
                if !decls.poisoned.contains(&format!("var {}", x.base)) {
                    diags.push(Diagnostic::error(
                        codes::UNDEF,
                        os[0].span,
                        format!("unknown metavariable `{x}`"),
                    ));
                }
                continue;
            };
            let shortest = os.iter().min_by_key(|o| o.iters.len()).unwrap();
            let dim = &shortest.iters;
            if let Some(bad) = os.iter().find(|o| !o.iters.starts_with(dim)) {
                let show = |its: &[IterKind]| -> String {
                    if its.is_empty() {
                        "no iterator".to_string()
                    } else {
                        its.iter()
                            .map(|k| format!("`{}`", k.suffix()))
                            .collect::<Vec<_>>()
                            .join(", ")
                    }
                };
                diags.push(
                    Diagnostic::error(
                        codes::MULT,
                        bad.span,
                        format!(
                            "`{x}` is used under {} here but under {} elsewhere",
                            show(&bad.iters),
                            show(dim)
                        ),
                    )
                    .with_note(shortest.span, "other use"),
                );
                continue;
            }
            let mut full = base;
            for k in dim.iter().rev() {
                full = full.iter(*k);
            }
            if !full.is_well_formed() {
                diags.push(Diagnostic::error(
                    codes::MULT,
                    os[0].span,
                    format!("`{x}` would have doubly optional type `{full}`"),
                ));
                continue;
            }
            if os.len() == 1 && os[0].in_premise && dim.is_empty() && env.is_none() {
                diags.push(Diagnostic::warning(
                    codes::UNUSED,
                    os[0].span,
                    format!("`{x}` occurs only once, in a premise"),
                ));
            }
            dims.insert(x.clone(), dim.len());
            vars.insert(x.clone(), full);
        }
        Typer {
            decls,
            vars,
            dims,
            diags,
        }
    }

    fn err(&mut self, code: &'static str, span: SourceSpan, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn includes(&self, sup: &IlType, sub: &IlType) -> bool {
        matches!(sup, IlType::Syn(s) if self.decls.il.includes(s, sub))
    }

    fn try_coerce(&self, e: IlExp, want: &IlType) -> Result<IlExp, IlExp> {
        if &e.ty == want {
            return Ok(e);
        }
        let span = e.span;
        if self.includes(want, &e.ty) {
            return Ok(IlExp::new(IlExpKind::Cast(Box::new(e)), want.clone(), span));
        }
        match (want, &e.ty) {
            (IlType::Iter(u, k), IlType::Iter(t, k2)) if k == k2 && self.includes(u, t) => {
                Ok(IlExp::new(IlExpKind::Cast(Box::new(e)), want.clone(), span))
            }
            (IlType::Iter(u, IterKind::Opt), t) if !t.is_iter() => self
                .try_coerce(e, u)
                .map(|x| IlExp::new(IlExpKind::OptSome(Box::new(x)), want.clone(), span)),
            (IlType::Iter(u, IterKind::List), t) if !t.is_iter() => self
                .try_coerce(e, u)
                .map(|x| IlExp::new(IlExpKind::List(vec![x]), want.clone(), span)),
            _ => Err(e),
        }
    }

    fn coerce(&mut self, e: IlExp, want: &IlType) -> Option<IlExp> {
        match self.try_coerce(e, want) {
            Ok(e) => Some(e),
            Err(e) => {
                let code = if e.ty.is_iter() != want.is_iter() {
                    codes::MULT
                } else {
                    codes::TYPE
                };
                self.err(code, e.span, format!("expected `{want}`, found `{}`", e.ty));
                None
            }
        }
    }

    fn literal(&mut self, n: u64, want: &IlType, span: SourceSpan) -> Option<IlExp> {
        match want {
            IlType::Prim(p) if p.admits_literal() => {
                let fits = match p {
                    PrimType::Int32 => n <= u32::MAX as u64,
                    _ => true,
                };
                if !fits {
                    self.err(codes::TYPE, span, format!("literal {n} does not fit `{want}`"));
                    return None;
                }
                Some(IlExp::new(IlExpKind::Nat(n), want.clone(), span))
            }
            IlType::Syn(s) => {
                let inc = self.decls.il.syntaxes.get(s).and_then(|syn| {
                    syn.cases.iter().find_map(|c| match c {
                        IlCase::Include(t @ IlType::Prim(p)) if p.admits_literal() => Some(t.clone()),
                        _ => None,
                    })
                });
                match inc {
                    Some(t) => {
                        let lit = self.literal(n, &t, span)?;
                        Some(IlExp::new(IlExpKind::Cast(Box::new(lit)), want.clone(), span))
                    }
                    None => {
                        self.err(codes::TYPE, span, format!("numeric literal where `{want}` expected"));
                        None
                    }
                }
            }
            IlType::Iter(u, IterKind::Opt) => {
                let x = self.literal(n, u, span)?;
                Some(IlExp::new(IlExpKind::OptSome(Box::new(x)), want.clone(), span))
            }
            _ => {
                self.err(codes::TYPE, span, format!("numeric literal where `{want}` expected"));
                None
            }
        }
    }

    fn var_type(&self, x: &Ident, depth: usize) -> Option<IlType> {
        let full = self.vars.get(x)?;
        Some(full.strip(depth.min(self.dims[x])).clone())
    }

    /// Variables iterated by an iterator node at `depth` over `body`.
    fn iterated(&self, body: &IlExp, depth: usize) -> Vec<Ident> {
        body.free_vars()
            .into_iter()
            .filter(|x| self.dims.get(x).is_some_and(|&d| d > depth))
            .collect()
    }

    fn args(
        &mut self,
        what: &str,
        args: &[ElExp],
        params: &[IlType],
        span: SourceSpan,
        depth: usize,
    ) -> Option<Vec<IlExp>> {
        let checked: Vec<Option<IlExp>> = args.iter().zip(params).map(|(a, p)| self.check(a, p, depth)).collect();
        if args.len() != params.len() {
            self.err(
                codes::ARITY,
                span,
                format!(
                    "{what} expects {} argument{}, found {}",
                    params.len(),
                    if params.len() == 1 { "" } else { "s" },
                    args.len()
                ),
            );
            return None;
        }
        checked.into_iter().collect()
    }

    fn con(&mut self, c: &str, args: &[ElExp], span: SourceSpan, depth: usize) -> Option<(IlExp, String)> {
        let Some(owner) = self.decls.cons.get(c) else {
            self.err(codes::UNDEF, span, format!("unknown constructor `{c}`"));
            return None;
        };
        if self.decls.poisoned.contains(c) {
            return None;
        }
        let sig = self
            .decls
            .il
            .constructor(c)
            .map(|(_, a)| a.to_vec())
            .unwrap_or_default();
        let args = self.args(&format!("constructor `{c}`"), args, &sig, span, depth)?;
        Some((
            IlExp::new(IlExpKind::Con(c.to_string(), args), IlType::Syn(owner.clone()), span),
            owner.clone(),
        ))
    }

    fn synth(&mut self, e: &ElExp, depth: usize) -> Option<IlExp> {
        let span = e.span;
        match &e.kind {
            ElExpKind::Var(x) => {
                let ty = self.var_type(x, depth)?;
                Some(IlExp::new(IlExpKind::Var(x.clone()), ty, span))
            }
            ElExpKind::Nat(n) => Some(IlExp::new(IlExpKind::Nat(*n), IlType::Prim(PrimType::Nat), span)),
            ElExpKind::Epsilon => {
                self.err(codes::TYPE, span, "cannot infer the type of `epsilon` here");
                None
            }
            ElExpKind::Con(c, args) => self.con(c, args, span, depth).map(|(e, _)| e),
            ElExpKind::Call(f, args) => {
                if self.decls.poisoned.contains(f) {
                    return None;
                }
                let Some(func) = self.decls.il.funcs.get(f) else {
                    self.err(codes::UNDEF, span, format!("unknown function `{f}`"));
                    return None;
                };
                let (params, result) = (func.params.clone(), func.result.clone());
                let args = self.args(&format!("`{f}`"), args, &params, span, depth)?;
                Some(IlExp::new(IlExpKind::Call(f.clone(), args), result, span))
            }
            ElExpKind::Seq(items) => {
                let first = self.synth(&items[0], depth)?;
                let elem = match first.ty.as_iter() {
                    Some((t, _)) => t.clone(),
                    None => first.ty.clone(),
                };
                self.check(e, &elem.list(), depth)
            }
            ElExpKind::Tuple(items) => {
                let items: Vec<Option<IlExp>> = items.iter().map(|i| self.synth(i, depth)).collect();
                let items: Vec<IlExp> = items.into_iter().collect::<Option<_>>()?;
                let ty = IlType::Tuple(items.iter().map(|i| i.ty.clone()).collect());
                Some(IlExp::new(IlExpKind::Tuple(items), ty, span))
            }
            ElExpKind::Iter(body, it) => {
                let iter = self.iter(it, depth)?;
                let body = self.synth(body, depth + 1)?;
                self.finish_iter(body, iter, span, depth)
            }
            ElExpKind::List(items) => {
                let Some(first) = items.first() else {
                    self.err(codes::TYPE, span, "cannot infer the type of an empty list");
                    return None;
                };
                let first = self.synth(first, depth)?;
                self.check(e, &first.ty.clone().list(), depth)
            }
            ElExpKind::Len(inner) => {
                let inner = self.synth(inner, depth)?;
                if !inner.ty.is_iter() {
                    self.err(codes::TYPE, span, format!("length of non-sequence type `{}`", inner.ty));
                    return None;
                }
                Some(IlExp::new(
                    IlExpKind::Len(Box::new(inner)),
                    IlType::Prim(PrimType::Nat),
                    span,
                ))
            }
        }
    }

    fn iter(&mut self, it: &ElIter, depth: usize) -> Option<IlIter> {
        Some(match it {
            ElIter::List => IlIter::List,
            ElIter::Opt => IlIter::Opt,
            ElIter::Pow(n) => IlIter::Pow(Box::new(self.check(n, &IlType::Prim(PrimType::Nat), depth)?)),
        })
    }

    fn finish_iter(&mut self, body: IlExp, iter: IlIter, span: SourceSpan, depth: usize) -> Option<IlExp> {
        let vars = self.iterated(&body, depth);
        if vars.is_empty() && !matches!(iter, IlIter::Pow(_)) {
            self.err(
                codes::MULT,
                span,
                "iteration over an expression with no iterated variable",
            );
            return None;
        }
        let ty = body.ty.clone().iter(iter.kind());
        if !ty.is_well_formed() {
            self.err(codes::MULT, span, format!("doubly optional type `{ty}`"));
            return None;
        }
        Some(IlExp::new(IlExpKind::Iter(Box::new(body), iter, vars), ty, span))
    }

    fn seq_item(&mut self, e: &ElExp, elem: &IlType, depth: usize) -> Option<IlExp> {
        match &e.kind {
            ElExpKind::Iter(_, ElIter::Opt) => self.check(e, &elem.clone().opt(), depth),
            ElExpKind::Iter(..) | ElExpKind::Epsilon | ElExpKind::List(_) | ElExpKind::Seq(_) => {
                self.check(e, &elem.clone().list(), depth)
            }
            ElExpKind::Con(..) | ElExpKind::Nat(_) => self.check(e, elem, depth),
            _ => {
                let x = self.synth(e, depth)?;
                let want = match x.ty.as_iter() {
                    Some((_, k)) => elem.clone().iter(k),
                    None => elem.clone(),
                };
                self.coerce(x, &want)
            }
        }
    }

    fn check(&mut self, e: &ElExp, want: &IlType, depth: usize) -> Option<IlExp> {
        let span = e.span;
        match (&e.kind, want) {
            (ElExpKind::Seq(items), IlType::Iter(t, IterKind::List)) => {
                let items: Vec<Option<IlExp>> = items.iter().map(|i| self.seq_item(i, t, depth)).collect();
                let items = items.into_iter().collect::<Option<Vec<_>>>()?;
                Some(IlExp::new(IlExpKind::Seq(items), want.clone(), span))
            }
            (ElExpKind::Seq(_), _) => {
                self.err(codes::TYPE, span, format!("sequence where `{want}` expected"));
                None
            }
            (ElExpKind::Epsilon, IlType::Iter(..)) => Some(IlExp::new(IlExpKind::Epsilon, want.clone(), span)),
            (ElExpKind::Epsilon, _) => {
                self.err(codes::MULT, span, format!("`epsilon` where `{want}` expected"));
                None
            }
            (ElExpKind::Iter(body, it), IlType::Iter(t, k)) => {
                if iter_kind(it) != *k {
                    self.err(
                        codes::MULT,
                        span,
                        format!("iterator `{}` where `{want}` expected", iter_kind(it).suffix()),
                    );
                    return None;
                }
                let iter = self.iter(it, depth);
                let body = self.check(body, t, depth + 1)?;
                self.finish_iter(body, iter?, span, depth)
            }
            (ElExpKind::Iter(..), _) => {
                self.err(
                    codes::MULT,
                    span,
                    format!("iterated expression where `{want}` expected"),
                );
                None
            }
            (ElExpKind::List(items), IlType::Iter(t, IterKind::List)) => {
                let items: Vec<Option<IlExp>> = items.iter().map(|i| self.check(i, t, depth)).collect();
                let items = items.into_iter().collect::<Option<Vec<_>>>()?;
                Some(IlExp::new(IlExpKind::List(items), want.clone(), span))
            }
            (ElExpKind::List(_), _) => {
                self.err(codes::TYPE, span, format!("list where `{want}` expected"));
                None
            }
            (_, IlType::Iter(t, IterKind::List)) => {
                let x = self.seq_item(e, t, depth)?;
                if &x.ty == want {
                    Some(x)
                } else {
                    Some(IlExp::new(IlExpKind::Seq(vec![x]), want.clone(), span))
                }
            }
            (ElExpKind::Nat(n), _) => self.literal(*n, want, span),
            (ElExpKind::Con(c, args), IlType::Syn(s)) => {
                let (x, owner) = self.con(c, args, span, depth)?;
                if &owner == s {
                    Some(x)
                } else {
                    self.coerce(x, want)
                }
            }
            (ElExpKind::Con(..), IlType::Iter(t, IterKind::Opt)) => {
                let x = self.check(e, t, depth)?;
                Some(IlExp::new(IlExpKind::OptSome(Box::new(x)), want.clone(), span))
            }
            (ElExpKind::Tuple(items), IlType::Tuple(ts)) if items.len() == ts.len() => {
                let items: Vec<Option<IlExp>> = items.iter().zip(ts).map(|(i, t)| self.check(i, t, depth)).collect();
                let items = items.into_iter().collect::<Option<Vec<_>>>()?;
                Some(IlExp::new(IlExpKind::Tuple(items), want.clone(), span))
            }
            _ => {
                let x = self.synth(e, depth)?;
                self.coerce(x, want)
            }
        }
    }

    fn premise(&mut self, p: &ElPremise, depth: usize) -> Option<IlPremise> {
        match p {
            ElPremise::If { lhs, op, rhs, span } => {
                fn rank(e: &ElExp) -> u8 {
                    match e.kind {
                        ElExpKind::Epsilon | ElExpKind::List(_) | ElExpKind::Seq(_) => 0,
                        ElExpKind::Nat(_) => 1,
                        _ => 2,
                    }
                }
                let (l, r) = if rank(rhs) > rank(lhs) {
                    let r = self.synth(rhs, depth)?;
                    let l = self.check(lhs, &r.ty, depth)?;
                    (l, r)
                } else {
                    let l = self.synth(lhs, depth)?;
                    let r = self.check(rhs, &l.ty, depth)?;
                    (l, r)
                };
                Some(IlPremise::If {
                    lhs: l,
                    op: *op,
                    rhs: r,
                    span: *span,
                })
            }
            ElPremise::Else { span } => Some(IlPremise::Else { span: *span }),
            ElPremise::Iter { body, iter, span } => {
                let iter = self.iter(iter, depth);
                let body = self.premise(body, depth + 1)?;
                let iter = iter?;
                let vars: Vec<Ident> = body
                    .free_vars()
                    .into_iter()
                    .filter(|x| self.dims.get(x).is_some_and(|&d| d > depth))
                    .collect();
                if vars.is_empty() && !matches!(iter, IlIter::Pow(_)) {
                    self.err(codes::MULT, *span, "iterated premise with no iterated variable");
                    return None;
                }
                Some(IlPremise::Iter {
                    body: Box::new(body),
                    iter,
                    vars,
                    span: *span,
                })
            }
        }
    }

    fn premises(&mut self, ps: &[ElPremise]) -> Option<Vec<IlPremise>> {
        if ps.len() > 1 {
            for p in ps {
                if let ElPremise::Else { span } = p {
                    self.err(codes::TYPE, *span, "`otherwise` must be the only premise");
                }
            }
        }
        let out: Vec<Option<IlPremise>> = ps.iter().map(|p| self.premise(p, 0)).collect();
        out.into_iter().collect()
    }
}

fn elab_clause(
    decls: &Decls,
    func: &IlFunc,
    args: &[ElExp],
    result: &ElExp,
    premises: &[ElPremise],
    span: SourceSpan,
    diags: &mut Vec<Diagnostic>,
) -> Option<IlClause> {
    let mut occs = Vec::new();
    for a in args.iter().chain([result]) {
        collect_exp(a, &mut Vec::new(), false, &mut occs);
    }
    for p in premises {
        collect_premise(p, &mut Vec::new(), &mut occs);
    }
    let mut t = Typer::new(decls, &occs, None, diags);
    let args = t.args(&format!("`{}`", func.name), args, &func.params, span, 0);
    let result = t.check(result, &func.result, 0);
    let premises = t.premises(premises);
    Some(IlClause {
        args: args?,
        result: result?,
        premises: premises?,
        vars: t.vars,
        span,
    })
}

fn elab_rule(
    decls: &Decls,
    rel: &IlRelation,
    id: &str,
    body: &RuleBody,
    premises: &[ElPremise],
    span: SourceSpan,
    diags: &mut Vec<Diagnostic>,
) -> Option<IlRule> {
    let mut occs = Vec::new();
    match body {
        RuleBody::Reduction {
            state,
            lhs,
            rhs_state,
            rhs,
        } => {
            for e in state.iter().chain([lhs]).chain(rhs_state.iter()).chain([rhs]) {
                collect_exp(e, &mut Vec::new(), false, &mut occs);
            }
        }
        RuleBody::Typing { context, subject, ty } => {
            for e in [context, subject, ty] {
                collect_exp(e, &mut Vec::new(), false, &mut occs);
            }
        }
    }
    for p in premises {
        collect_premise(p, &mut Vec::new(), &mut occs);
    }
    let mut t = Typer::new(decls, &occs, None, diags);

    let body = match (body, &rel.shape) {
        (
            RuleBody::Reduction {
                state,
                lhs,
                rhs_state,
                rhs,
            },
            IlShape::Reduction {
                state: state_ty,
                lhs: lhs_ty,
                rhs_state: rhs_state_ty,
                rhs: rhs_ty,
            },
        ) => {
            let side = |t: &mut Typer, e: &Option<ElExp>, ty: &Option<IlType>| -> Option<Option<IlExp>> {
                match (e, ty) {
                    (None, None) => Some(None),
                    (Some(e), Some(ty)) => t.check(e, ty, 0).map(Some),
                    (Some(e), None) => {
                        t.err(
                            codes::TYPE,
                            e.span,
                            format!("relation `{}` has no state here", rel.name),
                        );
                        None
                    }
                    (None, Some(ty)) => {
                        t.err(
                            codes::TYPE,
                            span,
                            format!("relation `{}` expects a state of type `{ty}`", rel.name),
                        );
                        None
                    }
                }
            };
            let state = side(&mut t, state, state_ty);
            let lhs = t.check(lhs, lhs_ty, 0);
            let rhs_state = side(&mut t, rhs_state, rhs_state_ty);
            let rhs = t.check(rhs, rhs_ty, 0);
            let premises = t.premises(premises);
            (
                IlRuleBody::Reduction {
                    state: state?,
                    lhs: lhs?,
                    rhs_state: rhs_state?,
                    rhs: rhs?,
                },
                premises,
            )
        }
        (
            RuleBody::Typing { context, subject, ty },
            IlShape::Typing {
                context: c_ty,
                subject: s_ty,
                ty: t_ty,
            },
        ) => {
            let c = t.check(context, c_ty, 0);
            let s = t.check(subject, s_ty, 0);
            let ty = t.check(ty, t_ty, 0);
            let premises = t.premises(premises);
            (
                IlRuleBody::Typing {
                    context: c?,
                    subject: s?,
                    ty: ty?,
                },
                premises,
            )
        }
        _ => {
            t.err(
                codes::TYPE,
                span,
                format!("rule shape does not match relation `{}`", rel.name),
            );
            return None;
        }
    };
    let (body, premises) = body;
    let premises = premises?;

    let mut lhs_vars: Vec<Ident> = Vec::new();
    let bound: Vec<&IlExp> = match &body {
        IlRuleBody::Reduction { state, lhs, .. } => state.iter().chain([lhs]).collect(),
        IlRuleBody::Typing { context, subject, .. } => vec![context, subject],
    };
    for e in bound {
        for x in e.free_vars() {
            if !lhs_vars.contains(&x) {
                lhs_vars.push(x);
            }
        }
    }
    Some(IlRule {
        relation: rel.name.clone(),
        id: id.to_string(),
        body,
        premises,
        vars: t.vars,
        lhs_vars,
        span,
    })
}

/// Infers the type of `exp` against the declarations of `il`.
///
/// `env` overrides the scalar type of individual variables; everything else is
/// looked up through variable declarations. Multiplicities come from the
/// iterators each variable occurs under.
pub fn infer_multiplicity(
    il: &IlScript,
    exp: &ElExp,
    env: &IndexMap<Ident, IlType>,
    expected: Option<&IlType>,
) -> Result<IlType, Vec<Diagnostic>> {
    let decls = Decls::from_il(il);
    let mut occs = Vec::new();
    collect_exp(exp, &mut Vec::new(), false, &mut occs);
    let mut diags = Vec::new();
    let mut t = Typer::new(&decls, &occs, Some(env), &mut diags);
    let res = match expected {
        Some(ty) => t.check(exp, ty, 0),
        None => t.synth(exp, 0),
    };
    match res {
        Some(e) if diags.is_empty() => Ok(e.ty),
        _ => {
            sort_diagnostics(&mut diags);
            Err(diags)
        }
    }
}
